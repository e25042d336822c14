//! Exact Haar integrals over `Z_p²` of products `Π_i φ_i(F_i(x))`, where each weight `φ_i`
//! depends only on the valuation of its argument and, at `p = 2`, on the odd part mod 4.
//!
//! The domain is split into balls `x0 + p^j Z_p²`. On such a ball each form is either
//! constant for the weight, or an affine-uniform map onto `F(x0) + p^M Z_p` with a leading
//! vector mod `p`. When the non-constant forms have independent leading vectors their
//! values are jointly uniform, so the integral factors into one-dimensional fiber averages.
//! Otherwise the ball is split into `p²` children.

use crate::arith::valuation;
use crate::forms::Form;
use crate::Error;

/// A weight on `Z_p`, as a function of the valuation `v` and (for `p = 2`) the odd part mod 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `[v ≥ e]`.
    AtLeast(u32),
    /// `[v ≡ r mod 2]`.
    Parity(u32),
    /// `p = 2`: the value lies in `unit · 𝓔`, i.e. its odd part is `≡ unit mod 4`.
    InE { unit: u8 },
    /// `[v ≥ μ] · lim_m p^{−m−λ} S_λ(a / unit; p^m)`.
    Squares { lambda: u32, mu: u32, unit: u8 },
    /// `p = 2`: `a mod 2^level` lies in `unit · 𝓔_{2^level}`.
    LevelE { unit: u8, level: u32 },
    /// `[p^μ | a mod p^level] · p^{−level−λ} S_λ(a / unit; p^level)`.
    LevelSquares { lambda: u32, mu: u32, unit: u8, level: u32 },
}

impl Weight {
    fn unit_dependent(&self, p: u64) -> bool {
        p == 2
            && matches!(
                self,
                Weight::InE { .. } | Weight::Squares { .. } | Weight::LevelE { .. } | Weight::LevelSquares { .. }
            )
    }

    /// Weight of `a` with valuation `v` and odd part `≡ u4 mod 4` (ignored for odd `p`).
    pub fn value(&self, p: u64, v: u32, u4: u8) -> f64 {
        match *self {
            Weight::AtLeast(e) => (v >= e) as u8 as f64,
            Weight::Parity(r) => (v % 2 == r % 2) as u8 as f64,
            Weight::InE { unit } => ((u4 * unit) % 4 == 1) as u8 as f64,
            Weight::Squares { lambda, mu, unit } => {
                if v < lambda.max(mu) {
                    return 0.0;
                }
                let pf = p as f64;
                let w = v - lambda;
                if p == 2 {
                    2.0 * ((u4 * unit) % 4 == 1) as u8 as f64
                } else if p % 4 == 1 {
                    (1 + w) as f64 * (1.0 - 1.0 / pf)
                } else if w.is_multiple_of(2) {
                    1.0 + 1.0 / pf
                } else {
                    0.0
                }
            }
            Weight::LevelE { unit, level } => (v + 1 >= level || (u4 * unit) % 4 == 1) as u8 as f64,
            Weight::LevelSquares { lambda, mu, unit, level } => {
                let v = v.min(level);
                if v < mu {
                    return 0.0;
                }
                let a = if v >= level { 0 } else { (p as i128).pow(v) * (u4 * unit) as i128 };
                let count = crate::localcount::s_alpha(lambda, a, p, level).unwrap_or(0);
                count as f64 / (p as f64).powi((level + lambda) as i32)
            }
        }
    }

    fn unit_average(&self, p: u64, v: u32) -> f64 {
        if self.unit_dependent(p) {
            0.5 * (self.value(p, v, 1) + self.value(p, v, 3))
        } else {
            self.value(p, v, 1)
        }
    }

    // Average over the fiber c + p^m Z_p of a ↦ φ(p^shift a).
    fn fiber_average(&self, p: u64, c: i128, m: u32, shift: u32) -> f64 {
        let pm = (p as i128).pow(m);
        let c = c.rem_euclid(pm);
        if c != 0 {
            let v = valuation(c, p);
            if !self.unit_dependent(p) {
                return self.value(p, v + shift, 1);
            }
            if m - v >= 2 {
                return self.value(p, v + shift, ((c >> v) & 3) as u8);
            }
            return self.unit_average(p, v + shift);
        }
        // The value is p^m times a Haar-random element of Z_p.
        let pf = p as f64;
        let mut total = 0.0;
        let mut mass = 1.0 - 1.0 / pf;
        for j in 0.. {
            total += mass * self.unit_average(p, m + j + shift);
            mass /= pf;
            if mass * (1.0 + (m + j + shift) as f64) < 1e-22 {
                break;
            }
        }
        total
    }

    // The constant value of the weight on c + p^m Z_p, when it is constant there.
    fn constant_on(&self, p: u64, c: i128, m: u32, shift: u32) -> Option<f64> {
        let pm = (p as i128).checked_pow(m)?;
        let c = c.rem_euclid(pm);
        if c == 0 {
            return None;
        }
        let v = valuation(c, p);
        if !self.unit_dependent(p) {
            return Some(self.value(p, v + shift, 1));
        }
        if m - v >= 2 {
            return Some(self.value(p, v + shift, ((c >> v) & 3) as u8));
        }
        None
    }
}

/// Result of a tree integration: the integral over resolved balls and the Haar measure left
/// unresolved at the depth cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub unresolved: f64,
}

enum Behaviour {
    Constant(f64),
    Uniform { lead: (i64, i64), average: f64 },
    Split,
}

fn behaviour(p: u64, f: &Form, w: &Weight, shift: u32, x0: (i128, i128), j: u32) -> Behaviour {
    let c = f.eval(x0.0, x0.1);
    let c_val = valuation(f.content() as i128, p);
    let (g1, g2) = f.gradient(x0.0, x0.1);
    let w_grad = match (g1, g2) {
        (0, 0) => u32::MAX,
        (0, g) | (g, 0) => valuation(g, p),
        (a, b) => valuation(a, p).min(valuation(b, p)),
    };
    let (uniform, m) = match f {
        Form::Linear(_) => (true, j + w_grad),
        Form::Quadratic(_) => {
            let quad = 2 * j + c_val;
            if w_grad != u32::MAX && j + w_grad < quad {
                (true, j + w_grad)
            } else {
                (false, quad)
            }
        }
    };
    if let Some(value) = w.constant_on(p, c, m, shift) {
        return Behaviour::Constant(value);
    }
    if !uniform {
        return Behaviour::Split;
    }
    let pw = (p as i128).pow(w_grad);
    let lead = ((g1 / pw).rem_euclid(p as i128) as i64, (g2 / pw).rem_euclid(p as i128) as i64);
    Behaviour::Uniform { lead, average: w.fiber_average(p, c, m, shift) }
}

/// Largest depth for which ball centres and form values stay well inside `i128`.
pub fn default_depth(p: u64) -> u32 {
    (48.0 / (p as f64).log2()).floor().max(1.0) as u32
}

/// `∫_{x ∈ Z_p², p ∤ x} Π_i φ_i(p^{shift_i} F_i(x)) dx`.
pub fn integrate_primitive(
    p: u64,
    forms: &[Form; 3],
    weights: &[Weight; 3],
    shifts: [u32; 3],
    max_depth: u32,
) -> Result<Integral, Error> {
    if p > 10_000 {
        return Err(Error::Budget(format!("p-adic tree integration at p = {p}")));
    }
    let pi = p as i128;
    let mut value = 0.0;
    let mut unresolved = 0.0;
    let mut stack: Vec<(u32, i128, i128)> = Vec::new();
    for a in 0..pi {
        for b in 0..pi {
            if a != 0 || b != 0 {
                stack.push((1, a, b));
            }
        }
    }
    while let Some((j, x1, x2)) = stack.pop() {
        let mut factor = 1.0;
        let mut leads: Vec<(i64, i64)> = Vec::with_capacity(3);
        let mut split = false;
        for i in 0..3 {
            match behaviour(p, &forms[i], &weights[i], shifts[i], (x1, x2), j) {
                Behaviour::Constant(v) => factor *= v,
                Behaviour::Uniform { lead, average } => {
                    leads.push(lead);
                    factor *= average;
                }
                Behaviour::Split => split = true,
            }
            if factor == 0.0 {
                break;
            }
        }
        let mass = (p as f64).powi(-2 * j as i32);
        if factor == 0.0 {
            continue;
        }
        if !split {
            split = match leads.len() {
                0 | 1 => false,
                2 => (leads[0].0 as i128 * leads[1].1 as i128 - leads[0].1 as i128 * leads[1].0 as i128) % pi == 0,
                _ => true,
            };
        }
        if !split {
            value += mass * factor;
            continue;
        }
        if j >= max_depth {
            unresolved += mass;
            continue;
        }
        let pj = pi.pow(j);
        for a in 0..pi {
            for b in 0..pi {
                stack.push((j + 1, x1 + a * pj, x2 + b * pj));
            }
        }
    }
    Ok(Integral { value, unresolved })
}

/// `∫_{Z_p²} Π_i φ_i(F_i(x)) dx`, as `Σ_k p^{−2k}` times primitive integrals with the
/// valuations shifted by `k · deg F_i`.
pub fn integrate(p: u64, forms: &[Form; 3], weights: &[Weight; 3], max_depth: u32) -> Result<Integral, Error> {
    let mut value = 0.0;
    let mut unresolved = 0.0;
    let pf = p as f64;
    for k in 0u32.. {
        let scale = pf.powi(-2 * k as i32);
        if scale * (1.0 + 2.0 * k as f64).powi(3) < 1e-20 {
            break;
        }
        let shifts = [0, 1, 2].map(|i| k * forms[i].degree());
        let part = integrate_primitive(p, forms, weights, shifts, max_depth)?;
        value += scale * part.value;
        unresolved += scale * part.unresolved;
    }
    Ok(Integral { value, unresolved })
}

//! Local densities: the series `σ_p` and `σ_p(d, D)`, the dyadic density `σ₂` by direct
//! counting and through the `n(k)` decomposition, the densities `ω_{λ,μ}(p)`, `ω_d(2)`,
//! `ω_∞`, the Euler products and the torsor densities `ω_p(ε, m)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{chi, kronecker, valuation, Sieve};
use crate::forms::{Form, SignVector, Surface};
use crate::localcount::{
    count_roots, good_prime_roots, is_good_prime, n_lambda_mu, rho_density, rho_density_good, rho_star_density,
};
use crate::padic::{default_depth, integrate, integrate_primitive, Weight};
use crate::Error;

/// Default exponent cutoff for the `σ_p` series.
pub const DEFAULT_NU_MAX: u32 = 10;
/// Default exponent cutoff for the `ρ*` series of `ω_p`.
pub const DEFAULT_STAR_NU_MAX: u32 = 30;
/// Default dyadic level.
pub const DEFAULT_DYADIC_LEVEL: u32 = 14;
/// Default prime cutoff of Euler products.
pub const DEFAULT_PRIME_CUTOFF: u64 = 10_000;
/// Default number of terms in the partial sums for `L(1, ψ)`.
pub const DEFAULT_L_TERMS: u64 = 1_000_000;

/// `η = 1 − (1 + log log 2)/log 2`, the exponent of the logarithmic saving in the error
/// terms. Informational only.
pub const ETA: f64 = 0.086_071_332_055_934_2;

/// Cutoffs for the global densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoffs {
    pub prime_cutoff: u64,
    pub nu_max: u32,
    pub star_nu_max: u32,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs { prime_cutoff: DEFAULT_PRIME_CUTOFF, nu_max: DEFAULT_NU_MAX, star_nu_max: DEFAULT_STAR_NU_MAX }
    }
}

/// The cutoffs a density value was computed with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Truncation {
    pub prime_cutoff: Option<u64>,
    pub nu_max: Option<u32>,
    pub level: Option<u32>,
}

/// A truncated density with the change observed at its last refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub value: f64,
    pub truncation: Truncation,
    pub stabilization_delta: f64,
}

impl DensityValue {
    /// True when the last refinement moved the value by more than `tol`.
    pub fn flagged(&self, tol: f64) -> bool {
        self.stabilization_delta.is_nan() || self.stabilization_delta > tol || !self.value.is_finite()
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn check_odd_prime(p: u64) -> Result<(), Error> {
    if p < 3 || !crate::arith::is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// Checks `(d, D) ∈ 𝔇`: `d_i | D_i` and `D_i` odd.
pub fn check_pair(d: [u64; 3], big_d: [u64; 3]) -> Result<(), Error> {
    for i in 0..3 {
        if d[i] == 0 || big_d[i] == 0 || !big_d[i].is_multiple_of(d[i]) || big_d[i].is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("(d, D) = ({d:?}, {big_d:?}) is not admissible")));
        }
    }
    Ok(())
}

fn local_density(p: u64, nu: [u32; 3], s: &Surface, good: Option<[u32; 3]>) -> Result<f64, Error> {
    match good {
        Some(roots) => Ok(rho_density_good(p, nu, roots)),
        None => rho_density(p, nu, s),
    }
}

/// `σ_p(d, D)` with `λ_i = ν_p(d_i)`, `μ_i = ν_p(D_i)`, partial sum over `ν_i ≤ nu_max`.
fn sigma_series(p: u64, lambda: [u32; 3], mu: [u32; 3], s: &Surface, nu_max: u32) -> Result<DensityValue, Error> {
    let chi_p = chi(p as i64) as f64;
    let good = is_good_prime(p, s).then(|| good_prime_roots(p, s));
    let mut full = Compensated::default();
    let mut coarse = Compensated::default();
    for a in 0..=nu_max {
        for b in 0..=nu_max {
            for c in 0..=nu_max {
                let nu = [a, b, c];
                let big_n = [0, 1, 2].map(|i| mu[i].max(nu[i] + lambda[i]));
                let sign = if (a + b + c) % 2 == 0 { 1.0 } else { chi_p };
                let term = sign * local_density(p, big_n, s, good)?;
                full.add(term);
                if nu_max > 0 && a < nu_max && b < nu_max && c < nu_max {
                    coarse.add(term);
                }
            }
        }
    }
    let scale = (1.0 - chi_p / p as f64).powi(3);
    let value = scale * full.value();
    Ok(DensityValue {
        value,
        truncation: Truncation { nu_max: Some(nu_max), ..Default::default() },
        stabilization_delta: (value - scale * coarse.value()).abs(),
    })
}

/// `σ_p = (1 − χ(p)/p)³ Σ_ν χ(p)^{|ν|} ρ(p^ν)/p^{2|ν|}`, truncated at `ν_i ≤ nu_max`.
pub fn sigma_p(p: u64, s: &Surface, nu_max: u32) -> Result<DensityValue, Error> {
    check_odd_prime(p)?;
    sigma_series(p, [0; 3], [0; 3], s, nu_max)
}

/// `σ_p(d, D)`, the series with exponents `N_i = max(ν_p(D_i), ν_i + ν_p(d_i))`.
pub fn sigma_p_dd(p: u64, d: [u64; 3], big_d: [u64; 3], s: &Surface, nu_max: u32) -> Result<DensityValue, Error> {
    check_odd_prime(p)?;
    check_pair(d, big_d)?;
    let lambda = d.map(|x| valuation(x as i128, p));
    let mu = big_d.map(|x| valuation(x as i128, p));
    sigma_series(p, lambda, mu, s, nu_max)
}

fn dyadic_units(d: [u64; 3]) -> Result<[u8; 3], Error> {
    if d.iter().any(|&x| x % 2 == 0) {
        return Err(Error::InvalidInput(format!("dyadic densities need odd d, got {d:?}")));
    }
    Ok(d.map(|x| (x % 4) as u8))
}

/// `8 · 2^{−2n} #{x mod 2^n : F_i(x) ∈ d_i 𝓔_{2^n}}`, the level-`n` dyadic count.
pub fn sigma_2_level(d: [u64; 3], s: &Surface, n: u32) -> Result<f64, Error> {
    let units = dyadic_units(d)?;
    let w = units.map(|unit| Weight::LevelE { unit, level: n });
    Ok(8.0 * integrate(2, &s.forms(), &w, n.max(1) + 2)?.value)
}

/// `σ₂(d)` from the counting expression, evaluated at levels `n` and `n + 1`.
pub fn sigma_2(d: [u64; 3], s: &Surface, n: u32) -> Result<DensityValue, Error> {
    let lo = sigma_2_level(d, s, n)?;
    let hi = sigma_2_level(d, s, n + 1)?;
    Ok(DensityValue {
        value: hi,
        truncation: Truncation { level: Some(n + 1), ..Default::default() },
        stabilization_delta: (hi - lo).abs(),
    })
}

/// `σ₂(d)` as the exact limit `8 · vol{x ∈ Z_2² : F_i(x) ∈ d_i 𝓔}`.
pub fn sigma_2_limit(d: [u64; 3], s: &Surface) -> Result<DensityValue, Error> {
    let units = dyadic_units(d)?;
    let w = units.map(|unit| Weight::InE { unit });
    let depth = default_depth(2);
    let r = integrate(2, &s.forms(), &w, depth)?;
    Ok(DensityValue {
        value: 8.0 * r.value,
        truncation: Truncation { level: Some(depth), ..Default::default() },
        stabilization_delta: 8.0 * r.unresolved,
    })
}

/// The surface on which the `n(k)` construction runs: `F1` made primitive (membership in
/// `𝓔` is unchanged by powers of 2) and variables swapped if needed so that `a1` is odd.
fn nk_surface(s: &Surface) -> Result<Surface, Error> {
    let f1 = s.f1.primitive();
    let reduced = Surface::from_coeffs([f1.a, f1.b], [s.f2.a, s.f2.b], [s.f3.a, s.f3.b, s.f3.c])?;
    if f1.a % 2 != 0 {
        Ok(reduced)
    } else {
        Ok(reduced.swapped())
    }
}

/// The data of the change of variables `x1 = c x2 + c′ 2^{k1} x1′` for a given `k1`:
/// coefficients of `F″_2(1, Y)`, `F″_3(1, Y)` (lowest degree first) and `k′_2`, `k′_3`.
struct Substitution {
    f2: Vec<i128>,
    f3: Vec<i128>,
    k2p: u32,
    k3p: u32,
}

fn substitution(s: &Surface, k1: u32) -> Substitution {
    let a1 = s.f1.a as i128;
    let b1 = s.f1.b as i128;
    let m = 1i128 << (k1 + 2);
    let inv = (0..m).step_by(1).find(|x| (x * a1).rem_euclid(m) == 1).expect("a1 is odd");
    let c = (-b1 * inv).rem_euclid(m);
    let cp: i128 = if a1.rem_euclid(4) == 1 { 1 } else { -1 };
    let t = cp << k1;
    let (a2, b2) = (s.f2.a as i128, s.f2.b as i128);
    // F′(X, Y) = F(cY + tX, Y), coefficients of X^d, X^{d−1}Y, ..., Y^d.
    let l2 = [a2 * t, a2 * c + b2];
    let (qa, qb, qc) = (s.f3.a as i128, s.f3.b as i128, s.f3.c as i128);
    let q3 = [qa * t * t, 2 * qa * t * c + qc * t, qa * c * c + qb + qc * c];
    let v2 = l2.iter().filter(|&&x| x != 0).map(|&x| x.trailing_zeros()).min().unwrap();
    let v3 = q3.iter().filter(|&&x| x != 0).map(|&x| x.trailing_zeros()).min().unwrap();
    Substitution {
        f2: l2.iter().map(|&x| x >> v2).collect(),
        f3: q3.iter().map(|&x| x >> v3).collect(),
        k2p: v2,
        k3p: v3,
    }
}

/// `n(k)` together with `max{k″_2, k″_3}`, or `None` when the conditions are incompatible.
fn n_k_with_exponent(s: &Surface, k: [u32; 3]) -> Result<Option<(u128, u32)>, Error> {
    let sub = substitution(s, k[0]);
    if sub.k2p > k[1] || sub.k3p > k[2] {
        return Ok(None);
    }
    let k2 = k[1] - sub.k2p;
    let k3 = k[2] - sub.k3p;
    let big = k2.max(k3);
    let shifted = |poly: &[i128], e: u32| -> Vec<i128> {
        let mut q = poly.to_vec();
        q[0] -= 1i128 << e;
        q
    };
    let mut constraints = vec![(shifted(&sub.f2, k2), k2 + 2), (shifted(&sub.f3, k3), k3 + 2)];
    if k[0] >= 1 {
        constraints.push((vec![-1, 1], 1));
    }
    // Pad the range of α to 2^{K+2}.
    constraints.push((vec![0], big + 2));
    Ok(Some((count_roots(2, &constraints, false)?, big)))
}

/// `n(k)`: the number of `α ∈ [0, 2^{max(k″_2, k″_3)+2})` with
/// `F″_j(1, α) ≡ 2^{k″_j} mod 2^{k″_j + 2}` for `j = 2, 3`, and `α` odd when `k1 ≥ 1`.
pub fn n_k(k: [u32; 3], s: &Surface) -> Result<u128, Error> {
    let t = nk_surface(s)?;
    Ok(n_k_with_exponent(&t, k)?.map_or(0, |x| x.0))
}

/// `n(k)` by enumerating every `α`.
pub fn n_k_brute(k: [u32; 3], s: &Surface) -> Result<u128, Error> {
    let t = nk_surface(s)?;
    let sub = substitution(&t, k[0]);
    if sub.k2p > k[1] || sub.k3p > k[2] {
        return Ok(0);
    }
    let k2 = k[1] - sub.k2p;
    let k3 = k[2] - sub.k3p;
    let big = k2.max(k3);
    let mut n = 0;
    for al in 0..(1i128 << (big + 2)) {
        if k[0] >= 1 && al % 2 == 0 {
            continue;
        }
        let f2 = (sub.f2[0] + sub.f2[1] * al).rem_euclid(1 << (k2 + 2));
        let f3 = (sub.f3[0] + sub.f3[1] * al + sub.f3[2] * al * al).rem_euclid(1 << (k3 + 2));
        if f2 == 1 << k2 && f3 == 1 << k3 {
            n += 1;
        }
    }
    Ok(n)
}

/// Result of the `n(k)` route: the truncated sum, its last shell and the largest `n(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NkSum {
    pub density: DensityValue,
    /// Contribution of the triples with `max k_i = k_max`.
    pub last_shell: f64,
    /// Contribution of the triples with `max k_i = k_max − 1`.
    pub previous_shell: f64,
    pub max_n: u128,
}

/// `σ₂ = (2/3) Σ_k n(k) / 2^{k1 + max(k″_2, k″_3)}`, truncated at `k_i ≤ k_max`.
pub fn sigma_2_via_nk(s: &Surface, k_max: u32) -> Result<NkSum, Error> {
    if k_max < 1 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let t = nk_surface(s)?;
    let mut sum = Compensated::default();
    let mut last = Compensated::default();
    let mut prev = Compensated::default();
    let mut max_n = 0;
    for k1 in 0..=k_max {
        for k2 in 0..=k_max {
            for k3 in 0..=k_max {
                let k = [k1, k2, k3];
                let Some((n, big)) = n_k_with_exponent(&t, k)? else { continue };
                max_n = max_n.max(n);
                if n == 0 {
                    continue;
                }
                let term = n as f64 * 2f64.powi(-((k1 + big) as i32));
                sum.add(term);
                let top = k1.max(k2).max(k3);
                if top == k_max {
                    last.add(term);
                } else if top + 1 == k_max {
                    prev.add(term);
                }
            }
        }
    }
    let f = 2.0 / 3.0;
    Ok(NkSum {
        density: DensityValue {
            value: f * sum.value(),
            truncation: Truncation { level: Some(k_max), ..Default::default() },
            stabilization_delta: f * last.value(),
        },
        last_shell: f * last.value(),
        previous_shell: f * prev.value(),
        max_n,
    })
}

/// `ω_{λ,μ}(p)` at level `n`: `p^{−5n−|λ|} N_{λ,μ}(p^n)`, with the change from level `n − 1`.
pub fn omega_lambda_mu(p: u64, lambda: [u32; 3], mu: [u32; 3], s: &Surface, n: u32) -> Result<DensityValue, Error> {
    check_odd_prime(p)?;
    let at = |n: u32| -> Result<f64, Error> {
        let count = n_lambda_mu(p, n, lambda, mu, s)? as f64;
        Ok(count / (p as f64).powi((5 * n + lambda.iter().sum::<u32>()) as i32))
    };
    let value = at(n)?;
    let min_level = lambda.iter().chain(&mu).copied().max().unwrap().max(1);
    let delta = if n > min_level { (value - at(n - 1)?).abs() } else { f64::NAN };
    Ok(DensityValue {
        value,
        truncation: Truncation { level: Some(n), ..Default::default() },
        stabilization_delta: delta,
    })
}

/// `ω_{λ,μ}(p)` at level `n` through the `p`-adic tree rather than a residue loop.
pub fn omega_lambda_mu_level_tree(p: u64, lambda: [u32; 3], mu: [u32; 3], s: &Surface, n: u32) -> Result<f64, Error> {
    let w = [0, 1, 2].map(|i| Weight::LevelSquares { lambda: lambda[i], mu: mu[i], unit: 1, level: n });
    Ok(integrate(p, &s.forms(), &w, n + 1)?.value)
}

/// The limit `ω_{λ,μ}(p) = lim_n p^{−5n−|λ|} N_{λ,μ}(p^n)`, exactly.
pub fn omega_lambda_mu_limit(p: u64, lambda: [u32; 3], mu: [u32; 3], s: &Surface) -> Result<DensityValue, Error> {
    check_odd_prime(p)?;
    let w = [0, 1, 2].map(|i| Weight::Squares { lambda: lambda[i], mu: mu[i], unit: 1 });
    let depth = default_depth(p);
    let r = integrate(p, &s.forms(), &w, depth)?;
    Ok(DensityValue {
        value: r.value,
        truncation: Truncation { level: Some(depth), ..Default::default() },
        stabilization_delta: r.unresolved,
    })
}

/// `ω_d(2)` at level `n`: `2^{−5n} N_d(2^n)`.
pub fn omega_d2_level(d: [u64; 3], s: &Surface, n: u32) -> Result<f64, Error> {
    let units = dyadic_units(d)?;
    let w = units.map(|unit| Weight::LevelSquares { lambda: 0, mu: 0, unit, level: n });
    Ok(integrate(2, &s.forms(), &w, n + 2)?.value)
}

/// `ω_d(2)` at levels `n` and `n + 1`.
pub fn omega_d2(d: [u64; 3], s: &Surface, n: u32) -> Result<DensityValue, Error> {
    let lo = omega_d2_level(d, s, n)?;
    let hi = omega_d2_level(d, s, n + 1)?;
    Ok(DensityValue {
        value: hi,
        truncation: Truncation { level: Some(n + 1), ..Default::default() },
        stabilization_delta: (hi - lo).abs(),
    })
}

/// The limit `ω_d(2)`, exactly.
pub fn omega_d2_limit(d: [u64; 3], s: &Surface) -> Result<DensityValue, Error> {
    let units = dyadic_units(d)?;
    let w = units.map(|unit| Weight::Squares { lambda: 0, mu: 0, unit });
    let depth = default_depth(2);
    let r = integrate(2, &s.forms(), &w, depth)?;
    Ok(DensityValue {
        value: r.value,
        truncation: Truncation { level: Some(depth), ..Default::default() },
        stabilization_delta: 2.0 * r.unresolved,
    })
}

/// `ω_∞(R^ε) = π³ vol(R^ε(1))`.
pub fn omega_infty(s: &Surface, eps: SignVector) -> f64 {
    PI.powi(3) * s.region_volume(eps)
}

/// Monte-Carlo estimate of the Leray integral over `R^ε(1)`: points are drawn uniformly in
/// `[−1, 1]²` and each form contributes `∫_{−√A}^{√A} ds/√(A − s²)`, evaluated in closed form.
pub fn omega_infty_mc(s: &Surface, eps: SignVector, samples: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forms = s.forms();
    let mut total = Compensated::default();
    for _ in 0..samples {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        let v: f64 = rng.gen_range(-1.0..=1.0);
        if !s.region_contains(eps, 1.0, u, v) {
            continue;
        }
        let mut w = 1.0;
        for (f, e) in forms.iter().zip(eps.0) {
            let a = e as f64 * f.eval_f64(u, v);
            let root = a.sqrt();
            w *= 2.0 * (root / a.sqrt()).asin();
        }
        total.add(w);
    }
    4.0 * total.value() / samples as f64
}

/// `ψ(n) = χ(n) (Δ/n)`, supported on odd `n`.
pub fn psi(delta: i64, n: u64) -> i32 {
    if n.is_multiple_of(2) {
        0
    } else {
        chi(n as i64) * kronecker(delta, n as i64)
    }
}

/// `L(1, ψ)` from partial sums `Σ_{n ≤ N} ψ(n)/n`, averaged over one period of `N` starting
/// at `terms` (capped at `terms` partial sums).
pub fn l_one(delta: i64, terms: u64) -> f64 {
    let period = 4 * delta.unsigned_abs();
    let window = period.min(terms).max(1);
    let mut partial = Compensated::default();
    for n in 1..=terms {
        let c = psi(delta, n);
        if c != 0 {
            partial.add(c as f64 / n as f64);
        }
    }
    let mut avg = Compensated::default();
    let mut running = partial;
    for n in terms + 1..=terms + window {
        avg.add(running.value());
        let c = psi(delta, n);
        if c != 0 {
            running.add(c as f64 / n as f64);
        }
    }
    avg.value() / window as f64
}

fn odd_primes_upto(p_max: u64) -> Vec<u64> {
    let sieve = Sieve::new(p_max as usize);
    (3..=p_max).filter(|&p| sieve.is_prime(p)).collect()
}

fn ordered_product(primes: &[u64], factors: &[f64], checkpoint: u64) -> (f64, f64) {
    let mut prod = 1.0;
    let mut at_checkpoint = 1.0;
    for (&p, &f) in primes.iter().zip(factors) {
        prod *= f;
        if p <= checkpoint {
            at_checkpoint = prod;
        }
    }
    (prod, at_checkpoint)
}

/// `Π_{2<p≤P} σ_p`; with `accelerate`, `L(1, ψ) Π_{2<p≤P} σ_p (1 − ψ(p)/p)`.
pub fn euler_product(s: &Surface, p_max: u64, accelerate: bool, nu_max: u32) -> Result<DensityValue, Error> {
    if p_max < 3 {
        return Err(Error::InvalidInput("prime cutoff must be at least 3".into()));
    }
    let delta = s.invariants().delta as i64;
    let primes = odd_primes_upto(p_max);
    let factors: Vec<f64> = primes
        .par_iter()
        .map(|&p| -> Result<f64, Error> {
            let sp = sigma_p(p, s, nu_max)?.value;
            Ok(if accelerate { sp * (1.0 - psi(delta, p) as f64 / p as f64) } else { sp })
        })
        .collect::<Result<_, _>>()?;
    let (prod, half) = ordered_product(&primes, &factors, p_max / 2);
    let l = if accelerate { l_one(delta, DEFAULT_L_TERMS) } else { 1.0 };
    Ok(DensityValue {
        value: l * prod,
        truncation: Truncation { prime_cutoff: Some(p_max), nu_max: Some(nu_max), level: None },
        stabilization_delta: (l * prod - l * half).abs(),
    })
}

/// `σ₂(d) Π_{p>2} σ_p(d, D)`, the density in the main term of `S(X, d, D)`: the exact
/// dyadic limit times the accelerated Euler product, with the factors at primes dividing
/// `d D` replaced by their shifted series.
pub fn global_density(s: &Surface, d: [u64; 3], big_d: [u64; 3], cutoffs: &Cutoffs) -> Result<DensityValue, Error> {
    check_pair(d, big_d)?;
    let two = sigma_2_limit(d, s)?;
    let odd = euler_product(s, cutoffs.prime_cutoff, true, cutoffs.nu_max)?;
    let mut value = two.value * odd.value;
    let mut delta = two.stabilization_delta * odd.value + two.value * odd.stabilization_delta;
    let mut primes: Vec<u64> = d.iter().chain(&big_d).flat_map(|&x| crate::arith::factorize(x)).map(|f| f.0).collect();
    primes.sort_unstable();
    primes.dedup();
    for p in primes {
        let plain = sigma_p(p, s, cutoffs.nu_max)?;
        let shifted = sigma_p_dd(p, d, big_d, s, cutoffs.nu_max)?;
        if plain.value == 0.0 {
            return Err(Error::InvalidInput(format!("σ_{p} vanishes")));
        }
        value *= shifted.value / plain.value;
        delta += value * (shifted.stabilization_delta / shifted.value.abs().max(f64::MIN_POSITIVE));
    }
    Ok(DensityValue {
        value,
        truncation: Truncation { prime_cutoff: Some(cutoffs.prime_cutoff), nu_max: Some(cutoffs.nu_max), level: None },
        stabilization_delta: delta,
    })
}

/// Which formula evaluates `ω_p(ε, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OmegaBranch {
    /// `p = 2`: primitive points with `F_i ∈ ε_i m_i 𝓔`.
    Dyadic,
    /// `p ≡ 1 mod 4`, or `p ≡ 3 mod 4` prime to the products `Δ_{ij}^{(3)}`: the `ρ*` series.
    Series,
    /// `p ≡ 3 mod 4` dividing some `Δ_{ij}`: primitive points with `ν_p(F_i) ≡ ν_p(m_i) mod 2`.
    Parity,
}

/// The branch used for `ω_p(ε, m)` at `p`.
pub fn omega_branch(p: u64, s: &Surface) -> OmegaBranch {
    let inv = s.invariants();
    if p == 2 {
        OmegaBranch::Dyadic
    } else if p % 4 == 3 && [inv.delta12, inv.delta13, inv.delta23].iter().any(|&x| x % p as i128 == 0) {
        OmegaBranch::Parity
    } else {
        OmegaBranch::Series
    }
}

/// `ω_p` from the `ρ*` series, for the branch where it does not depend on `(ε, m)`.
pub fn omega_p_series(p: u64, s: &Surface, star_nu_max: u32) -> Result<DensityValue, Error> {
    check_odd_prime(p)?;
    let pf = p as f64;
    let chi_p = chi(p as i64) as f64;
    let good = is_good_prime(p, s);
    let big_r = 3.0 + kronecker(s.invariants().delta as i64, p as i64) as f64;
    let mut sum = Compensated::default();
    let mut last = 0.0;
    let mut sign = 1.0;
    for nu in 1..=star_nu_max {
        sign *= chi_p;
        let density = if good { big_r * (1.0 - 1.0 / pf) * pf.powi(-(nu as i32)) } else { rho_star_density(nu, p, s)? };
        last = sign * density;
        sum.add(last);
    }
    let inv2 = 1.0 - 1.0 / (pf * pf);
    let (value, scale) = if p % 4 == 1 {
        let w = (1.0 - 1.0 / pf).powi(2);
        (inv2 * inv2 + w * sum.value(), w)
    } else {
        (inv2 * (inv2 + sum.value()), inv2)
    };
    Ok(DensityValue {
        value,
        truncation: Truncation { nu_max: Some(star_nu_max), ..Default::default() },
        stabilization_delta: (scale * last).abs(),
    })
}

fn unit_mod4(x: i64) -> u8 {
    x.rem_euclid(4) as u8
}

/// `ω_p(ε, m)`, dispatched on the branch.
pub fn omega_p_eps_m(
    p: u64,
    eps: SignVector,
    m: [u64; 3],
    s: &Surface,
    star_nu_max: u32,
) -> Result<DensityValue, Error> {
    let forms: [Form; 3] = s.forms();
    match omega_branch(p, s) {
        OmegaBranch::Series => omega_p_series(p, s, star_nu_max),
        OmegaBranch::Dyadic => {
            if m.iter().any(|&x| x % 2 == 0) {
                return Err(Error::InvalidInput(format!("m = {m:?} must be odd")));
            }
            let w = [0, 1, 2].map(|i| Weight::InE { unit: unit_mod4(eps.0[i] as i64 * m[i] as i64) });
            let depth = default_depth(2);
            let r = integrate_primitive(2, &forms, &w, [0; 3], depth)?;
            Ok(DensityValue {
                value: 2.0 * r.value,
                truncation: Truncation { level: Some(depth), ..Default::default() },
                stabilization_delta: 2.0 * r.unresolved,
            })
        }
        OmegaBranch::Parity => {
            let w = m.map(|x| Weight::Parity(valuation(x as i128, p)));
            let depth = default_depth(p);
            let r = integrate_primitive(p, &forms, &w, [0; 3], depth)?;
            let pf = p as f64;
            let scale = 1.0 - 1.0 / (pf * pf);
            Ok(DensityValue {
                value: scale * r.value,
                truncation: Truncation { level: Some(depth), ..Default::default() },
                stabilization_delta: scale * r.unresolved,
            })
        }
    }
}

/// `Π_{p odd} ω_p` for the branch-independent primes together with the `Parity` primes for
/// the given `m`, accelerated by `(π/4)³ L(1, ψ)`.
pub fn omega_euler_product(m: [u64; 3], s: &Surface, p_max: u64, star_nu_max: u32) -> Result<DensityValue, Error> {
    let delta = s.invariants().delta as i64;
    let primes = odd_primes_upto(p_max);
    let eps = SignVector::positive();
    let factors: Vec<f64> = primes
        .par_iter()
        .map(|&p| -> Result<f64, Error> {
            let w = omega_p_eps_m(p, eps, m, s, star_nu_max)?.value;
            let pf = p as f64;
            Ok(w * (1.0 - chi(p as i64) as f64 / pf).powi(3) * (1.0 - psi(delta, p) as f64 / pf))
        })
        .collect::<Result<_, _>>()?;
    let (prod, half) = ordered_product(&primes, &factors, p_max / 2);
    let l = (PI / 4.0).powi(3) * l_one(delta, DEFAULT_L_TERMS);
    Ok(DensityValue {
        value: l * prod,
        truncation: Truncation { prime_cutoff: Some(p_max), nu_max: Some(star_nu_max), level: None },
        stabilization_delta: (l * prod - l * half).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::samples::*;

    #[test]
    fn sigma_p_stabilizes_at_good_primes() {
        let s = s0();
        let limit = omega_lambda_mu_limit(5, [0; 3], [0; 3], &s).unwrap().value;
        let mut previous = f64::INFINITY;
        for nu_max in [5, 7, 9, 11, 13] {
            let v = sigma_p(5, &s, nu_max).unwrap();
            let err = (v.value - limit).abs();
            assert!(err < previous);
            previous = err;
        }
        assert!(previous < 1e-8);
        let v = sigma_p(7, &s, 10).unwrap();
        assert!(v.stabilization_delta < 1e-7);
        assert!(v.value > 0.0);
    }

    #[test]
    fn sigma_p_linear_slice_is_geometric() {
        // ρ(p^ν, 1, 1) = p^ν, so the slice ν2 = ν3 = 0 sums to (1 − χ(p)/p)^{-1}.
        let s = s1();
        for p in [3u64, 5, 7, 13] {
            let c = chi(p as i64) as f64;
            let mut sum = 0.0;
            for nu in 0..16u32 {
                if nu < 6 {
                    let rho = crate::localcount::rho_prime_power(p, [nu, 0, 0], &s).unwrap();
                    assert_eq!(rho, (p as u128).pow(nu));
                }
                sum += c.powi(nu as i32) * rho_density(p, [nu, 0, 0], &s).unwrap();
            }
            assert!((sum - 1.0 / (1.0 - c / p as f64)).abs() < 1e-7);
        }
    }

    #[test]
    fn sigma_p_dd_reduces_to_sigma_p() {
        let s = s1();
        for p in [3u64, 5, 7, 11] {
            let a = sigma_p(p, &s, 8).unwrap().value;
            let b = sigma_p_dd(p, [1; 3], [1; 3], &s, 8).unwrap().value;
            assert_eq!(a, b);
            let c = sigma_p_dd(p, [1, 1, 1], [19, 1, 1], &s, 8).unwrap().value;
            assert_eq!(a, c);
        }
        assert!(sigma_p_dd(5, [5, 1, 1], [1, 1, 1], &s, 4).is_err());
        assert!(sigma_p_dd(5, [1, 1, 1], [2, 1, 1], &s, 4).is_err());
    }

    #[test]
    fn series_matches_exact_limit() {
        for s in [s0(), s1()] {
            for p in [3u64, 5, 11, 13] {
                for (lambda, mu) in [([0, 0, 0], [0, 0, 0]), ([1, 0, 0], [1, 0, 0]), ([0, 0, 1], [1, 1, 1])] {
                    let d = lambda.map(|l| p.pow(l));
                    let big_d = mu.map(|l| p.pow(l));
                    let series = sigma_p_dd(p, d, big_d, &s, 12).unwrap().value;
                    let limit = omega_lambda_mu_limit(p, lambda, mu, &s).unwrap().value;
                    assert!((series - limit).abs() < 1e-5, "p={p} {lambda:?} {mu:?}: {series} {limit}");
                }
            }
        }
    }

    #[test]
    fn finite_level_omega_two_routes() {
        let s = s0();
        for (p, n) in [(3u64, 2u32), (5, 2)] {
            for (lambda, mu) in [([0, 0, 0], [0, 0, 0]), ([1, 0, 0], [1, 1, 0])] {
                let a = omega_lambda_mu(p, lambda, mu, &s, n).unwrap().value;
                let b = omega_lambda_mu_level_tree(p, lambda, mu, &s, n).unwrap();
                assert!((a - b).abs() < 1e-13, "{a} {b}");
            }
        }
    }

    #[test]
    fn dyadic_level_counts_match_enumeration() {
        let s = s1();
        for d in [[1u64, 1, 1], [5, 3, 1]] {
            for n in [3u32, 6] {
                let m = 1i128 << n;
                let mut hits = 0u64;
                for x1 in 0..m {
                    for x2 in 0..m {
                        let f = s.eval(x1, x2);
                        if (0..3).all(|i| {
                            let inv = (0..m).find(|y| (y * d[i] as i128).rem_euclid(m) == 1).unwrap();
                            crate::arith::is_in_e_mod((f[i] * inv).rem_euclid(m), n)
                        }) {
                            hits += 1;
                        }
                    }
                }
                let direct = 8.0 * hits as f64 / (m * m) as f64;
                assert!((sigma_2_level(d, &s, n).unwrap() - direct).abs() < 1e-13);
            }
            let n = 4;
            let count = crate::localcount::n_d_dyadic(n, d, &s).unwrap() as f64 / 2f64.powi(5 * n as i32);
            assert!((omega_d2_level(d, &s, n).unwrap() - count).abs() < 1e-13);
        }
    }

    #[test]
    fn n_k_matches_enumeration() {
        for s in [s0(), s1(), s2()] {
            for k1 in 0..6 {
                for k2 in 0..6 {
                    for k3 in 0..6 {
                        let k = [k1, k2, k3];
                        assert_eq!(n_k(k, &s).unwrap(), n_k_brute(k, &s).unwrap(), "k={k:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn n_k_small_cases() {
        let s = s0();
        // k = 0 on (u, v, u² + uv + v²): c = 0, F″_2 = Y, F″_3 = X² + XY + Y²; α mod 4
        // with α ≡ 1 and 1 + α + α² ≡ 1 mod 4: only α = 1 fails the second, so none.
        let direct = (0..4i128).filter(|&a| a % 4 == 1 && (1 + a + a * a) % 4 == 1).count() as u128;
        assert_eq!(n_k([0, 0, 0], &s).unwrap(), direct);
    }

    #[test]
    fn nk_route_converges_to_limit() {
        for s in [s0(), s1()] {
            let limit = sigma_2_limit([1; 3], &s).unwrap().value;
            let r = sigma_2_via_nk(&s, 10).unwrap();
            assert!(r.density.value <= limit + 1e-12);
            assert!(limit - r.density.value < 4.0 * r.last_shell + 1e-12);
        }
    }

    #[test]
    fn dyadic_limits_agree() {
        for s in [s0(), s1()] {
            for d in [[1u64, 1, 1], [5, 1, 1]] {
                let a = sigma_2_limit(d, &s).unwrap().value;
                let b = omega_d2_limit(d, &s).unwrap().value;
                assert!((a - b).abs() < 1e-12);
                assert!(a > 0.0 && a <= 8.0);
            }
        }
    }

    #[test]
    fn l_one_known_value() {
        // ψ = (12/·) for Δ = −3: L(1, ψ) = log(2 + √3)/√3.
        let expected = (2.0 + 3f64.sqrt()).ln() / 3f64.sqrt();
        assert!((l_one(-3, 200_000) - expected).abs() < 1e-9);
        assert!(l_one(-8, 200_000) > 0.0);
    }

    #[test]
    fn omega_infty_mc_agrees() {
        let s = s0();
        let eps = SignVector::positive();
        let exact = omega_infty(&s, eps);
        assert!((exact - 31.006_276_680_299_82).abs() < 1e-9);
        let mc = omega_infty_mc(&s, eps, 200_000, 7);
        assert!((mc - exact).abs() / exact < 0.02);
        let empty = SignVector::new(1, -1, -1).unwrap();
        assert_eq!(omega_infty(&s, empty), 0.0);
    }

    #[test]
    fn parity_branch_matches_series_on_overlap() {
        // At p ≡ 3 prime to every Δ_ij, at most one form vanishes mod p at a primitive point,
        // so the parity limit equals the ρ* series.
        let s = s0();
        for p in [3u64, 7, 11] {
            let series = omega_p_series(p, &s, 40).unwrap().value;
            let w = [Weight::Parity(0); 3];
            let prim = integrate_primitive(p, &s.forms(), &w, [0; 3], default_depth(p)).unwrap().value;
            let parity = (1.0 - 1.0 / (p * p) as f64) * prim;
            assert!((series - parity).abs() < 1e-12, "p={p}: {series} {parity}");
        }
    }
}

//! The conjectured leading constant `c_S = α(S) β(S) Σ_{ε, m} ω_∞(ε, m) Π_p ω_p(ε, m)`.

use std::f64::consts::PI;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{chi, divisors, factorize, gcd, is_square, Sieve};
use crate::densities::{
    l_one, omega_branch, omega_p_eps_m, psi, Cutoffs, DensityValue, OmegaBranch, Truncation, DEFAULT_L_TERMS,
};
use crate::forms::{SignVector, Surface};
use crate::Error;

/// `Σ = {ε ∈ {±1}³ : ε1 = 1, ε1 ε2 ε3 = 1}`.
pub fn enumerate_sigma() -> Vec<SignVector> {
    let mut out = Vec::new();
    for e2 in [1i8, -1] {
        for e3 in [1i8, -1] {
            if e2 * e3 == 1 {
                out.push(SignVector([1, e2, e3]));
            }
        }
    }
    out
}

fn squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// True when `m` satisfies every defining condition of `M`.
pub fn is_admissible_m(m: [u64; 3], s: &Surface) -> bool {
    let inv = s.invariants();
    let pair = |i: usize, j: usize| inv.rad3_pair(i, j);
    (0..3).all(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        m[i] >= 1 && squarefree(m[i]) && lcm(pair(i, j), pair(i, k)).is_multiple_of(m[i])
    }) && [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| pair(i, j) % gcd(m[i], m[j]) == 0)
        && is_square((m[0] as i128) * (m[1] as i128) * (m[2] as i128))
}

/// `M`: squarefree triples `m_i | [Δ_ij^(3), Δ_ik^(3)]` with `(m_i, m_j) | Δ_ij^(3)` and
/// `m1 m2 m3` a square.
pub fn enumerate_m(s: &Surface) -> Vec<[u64; 3]> {
    let inv = s.invariants();
    let cands: Vec<Vec<u64>> = (0..3)
        .map(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            divisors(lcm(inv.rad3_pair(i, j), inv.rad3_pair(i, k))).into_iter().filter(|&d| squarefree(d)).collect()
        })
        .collect();
    let mut out = Vec::new();
    for &a in &cands[0] {
        for &b in &cands[1] {
            for &c in &cands[2] {
                if is_admissible_m([a, b, c], s) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// `α(S)` from two generators of the effective cone, written in the basis
/// `(ω^{-1}, [D⁺] + [D⁻])`: the length of `{y ∈ C^∨ : ⟨ω^{-1}, y⟩ = 1}`, with the dual
/// pairing the standard one.
pub fn alpha_s(g1: (i64, i64), g2: (i64, i64)) -> Result<Ratio<i64>, Error> {
    let det = g1.0 * g2.1 - g1.1 * g2.0;
    if det == 0 {
        return Err(Error::InvalidInput("parallel cone generators".into()));
    }
    // y = (1, t) lies in the dual cone iff g.0 + t g.1 ≥ 0 for both generators.
    let mut lo: Option<Ratio<i64>> = None;
    let mut hi: Option<Ratio<i64>> = None;
    for g in [g1, g2] {
        if g.1 == 0 {
            if g.0 < 0 {
                return Ok(Ratio::from_integer(0));
            }
            continue;
        }
        let bound = Ratio::new(-g.0, g.1);
        if g.1 > 0 {
            lo = Some(lo.map_or(bound, |l: Ratio<i64>| l.max(bound)));
        } else {
            hi = Some(hi.map_or(bound, |h: Ratio<i64>| h.min(bound)));
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => Ok((h - l).max(Ratio::from_integer(0))),
        _ => Err(Error::InvalidInput("the slice of the dual cone is unbounded".into())),
    }
}

/// `β(S) = #H¹(Q, Pic S̄) = 2` for this family.
pub fn beta_s() -> u32 {
    2
}

/// Generators of the effective cone for the family, in the basis `(ω^{-1}, [D⁺] + [D⁻])`.
pub const CONE_GENERATORS: [(i64, i64); 2] = [(1, -2), (0, 1)];

/// One term `ω_∞(ε, m) Π_p ω_p(ε, m)` of `c_S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsorTerm {
    pub eps: SignVector,
    pub m: [u64; 3],
    pub vol: f64,
    pub omega_infty: f64,
    pub omega_2: f64,
    pub omega_odd: f64,
    pub value: f64,
    pub stabilization_delta: f64,
    pub flags: Vec<String>,
}

/// `c_S` with the contribution of every `(ε, m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeyreReport {
    pub c_s: DensityValue,
    pub alpha: String,
    pub beta: u32,
    pub terms: Vec<TorsorTerm>,
    pub cutoffs: Cutoffs,
}

// Π over odd primes ≤ P of ω_p (1 − χ(p)/p)³ (1 − ψ(p)/p), split into the factor common to
// every m and the parity primes, whose factors depend on m. Returns (common, common up to
// P/2, parity primes).
fn odd_factors(s: &Surface, cutoffs: &Cutoffs) -> Result<(f64, f64, Vec<u64>), Error> {
    let delta = s.invariants().delta as i64;
    let sieve = Sieve::new(cutoffs.prime_cutoff as usize);
    let primes: Vec<u64> = (3..=cutoffs.prime_cutoff).filter(|&p| sieve.is_prime(p)).collect();
    let parity: Vec<u64> = primes.iter().copied().filter(|&p| omega_branch(p, s) == OmegaBranch::Parity).collect();
    let common: Vec<u64> = primes.iter().copied().filter(|&p| omega_branch(p, s) == OmegaBranch::Series).collect();
    let factors: Vec<f64> = common
        .par_iter()
        .map(|&p| -> Result<f64, Error> {
            let w = omega_p_eps_m(p, SignVector::positive(), [1; 3], s, cutoffs.star_nu_max)?.value;
            Ok(w * convergence_factor(p, delta))
        })
        .collect::<Result<_, _>>()?;
    let mut prod = 1.0;
    let mut half = 1.0;
    for (&p, f) in common.iter().zip(&factors) {
        prod *= f;
        if p <= cutoffs.prime_cutoff / 2 {
            half = prod;
        }
    }
    Ok((prod, half, parity))
}

fn convergence_factor(p: u64, delta: i64) -> f64 {
    let pf = p as f64;
    (1.0 - chi(p as i64) as f64 / pf).powi(3) * (1.0 - psi(delta, p) as f64 / pf)
}

/// `c_S = Σ_{ε ∈ Σ, m ∈ M} 2π vol(R^ε(1)) Π_p ω_p(ε, m)`, with the odd Euler product
/// accelerated by `(π/4)³ L(1, ψ)`.
pub fn c_s(s: &Surface, cutoffs: &Cutoffs) -> Result<PeyreReport, Error> {
    if cutoffs.prime_cutoff < 3 {
        return Err(Error::InvalidInput("prime cutoff must be at least 3".into()));
    }
    let delta = s.invariants().delta as i64;
    let l = (PI / 4.0).powi(3) * l_one(delta, DEFAULT_L_TERMS);
    let (common, common_half, parity) = odd_factors(s, cutoffs)?;
    let alpha = alpha_s(CONE_GENERATORS[0], CONE_GENERATORS[1])?;
    let beta = beta_s();
    let prefactor = *alpha.numer() as f64 * beta as f64 / *alpha.denom() as f64;
    let mut terms = Vec::new();
    for eps in enumerate_sigma() {
        for m in enumerate_m(s) {
            let vol = s.region_volume(eps);
            let omega_infty = 2.0 * PI * vol;
            let mut flags = Vec::new();
            let two = omega_p_eps_m(2, eps, m, s, cutoffs.star_nu_max)?;
            let mut odd = l * common;
            let mut odd_half = l * common_half;
            let mut delta_sum = two.stabilization_delta;
            for &p in &parity {
                let w = omega_p_eps_m(p, eps, m, s, cutoffs.star_nu_max)?;
                let f = w.value * convergence_factor(p, delta);
                odd *= f;
                odd_half *= f;
                delta_sum += w.stabilization_delta;
                if w.flagged(1e-9) {
                    flags.push(format!("omega_{p} not stabilized ({:.1e})", w.stabilization_delta));
                }
            }
            if two.flagged(1e-9) {
                flags.push(format!("omega_2 not stabilized ({:.1e})", two.stabilization_delta));
            }
            let value = prefactor * omega_infty * two.value * odd;
            let stabilization_delta = (prefactor * omega_infty * two.value * (odd - odd_half)).abs()
                + prefactor * omega_infty * odd * delta_sum;
            terms.push(TorsorTerm {
                eps,
                m,
                vol,
                omega_infty,
                omega_2: two.value,
                omega_odd: odd,
                value,
                stabilization_delta,
                flags,
            });
        }
    }
    let value = terms.iter().map(|t| t.value).sum();
    let stabilization_delta = terms.iter().map(|t| t.stabilization_delta).sum();
    Ok(PeyreReport {
        c_s: DensityValue {
            value,
            truncation: Truncation {
                prime_cutoff: Some(cutoffs.prime_cutoff),
                nu_max: Some(cutoffs.star_nu_max),
                level: None,
            },
            stabilization_delta,
        },
        alpha: alpha.to_string(),
        beta,
        terms,
        cutoffs: *cutoffs,
    })
}

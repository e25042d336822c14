//! Global counts: the sums `S(X)` and `S(X, d, D)` of products of representation numbers,
//! and the number `N(B)` of rational points of height at most `B`.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd, Sieve};
use crate::forms::{SignVector, Surface};
use crate::Error;

/// One measured count against its predicted main term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountReport {
    /// `X` or `B`.
    pub parameter: u64,
    pub raw_count: u128,
    pub main_term: f64,
    pub ratio: f64,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

impl CountReport {
    fn new(parameter: u64, raw_count: u128, main_term: f64, start: Instant) -> Self {
        let ratio = if main_term > 0.0 { raw_count as f64 / main_term } else { f64::NAN };
        CountReport { parameter, raw_count, main_term, ratio, elapsed: start.elapsed().as_secs_f64() }
    }
}

// Largest |F_i| on the box |u|, |v| ≤ x.
fn box_bound(s: &Surface, x: u64) -> Result<u64, Error> {
    let x = x as u128;
    let mut bound = 0u128;
    for f in s.forms() {
        let coeffs: u128 = f.coeffs().iter().map(|c| c.unsigned_abs() as u128).sum();
        bound = bound.max(coeffs * x.pow(f.degree()));
    }
    u64::try_from(bound).map_err(|_| Error::Overflow(format!("form values on the box of side {x}")))
}

fn sieve_for(limit: u64) -> Result<Sieve, Error> {
    if limit > 400_000_000 {
        return Err(Error::Budget(format!("factorisation table up to {limit}")));
    }
    Ok(Sieve::new(limit as usize))
}

/// Exact `Σ_{x ∈ Λ(D), |x_i| ≤ X, ε_i F_i(x) > 0} Π_i r(ε_i F_i(x)/d_i)`.
pub fn s_x_dd_count(x: u64, d: [u64; 3], big_d: [u64; 3], s: &Surface, eps: SignVector) -> Result<u128, Error> {
    crate::densities::check_pair(d, big_d)?;
    if x == 0 {
        return Ok(0);
    }
    let sieve = sieve_for(box_bound(s, x)?)?;
    let xi = x as i128;
    let total: u128 = (-xi..=xi)
        .into_par_iter()
        .map(|u| {
            let mut acc = 0u128;
            for v in -xi..=xi {
                if !s.signs_positive(eps, u, v) {
                    continue;
                }
                let f = s.eval(u, v);
                let mut term = 1u128;
                for i in 0..3 {
                    let a = (eps.0[i] as i128 * f[i]) as u64;
                    if !a.is_multiple_of(big_d[i]) {
                        term = 0;
                        break;
                    }
                    term *= 4 * sieve.r0(a / d[i]) as u128;
                    if term == 0 {
                        break;
                    }
                }
                acc += term;
            }
            acc
        })
        .sum();
    Ok(total)
}

/// Exact `S(X) = Σ_{x ∈ Z² ∩ X R^ε(1)} Π_i r(ε_i F_i(x))`.
pub fn s_x_count(x: u64, s: &Surface, eps: SignVector) -> Result<u128, Error> {
    s_x_dd_count(x, [1; 3], [1; 3], s, eps)
}

/// `S(X)` with main term `π³ vol(R) X² σ₂ Π σ_p`, the density being supplied by the caller
/// (see `densities::global_density`).
pub fn s_x(x: u64, s: &Surface, eps: SignVector, density: f64) -> Result<CountReport, Error> {
    let start = Instant::now();
    let count = s_x_count(x, s, eps)?;
    let main = PI.powi(3) * s.region_volume(eps) * (x as f64).powi(2) * density;
    Ok(CountReport::new(x, count, main, start))
}

/// `S(X, d, D)` with main term `π³ vol(R) X² σ₂(d) Π σ_p(d, D)`.
pub fn s_x_dd(
    x: u64,
    d: [u64; 3],
    big_d: [u64; 3],
    s: &Surface,
    eps: SignVector,
    density: f64,
) -> Result<CountReport, Error> {
    let start = Instant::now();
    let count = s_x_dd_count(x, d, big_d, s, eps)?;
    let main = PI.powi(3) * s.region_volume(eps) * (x as f64).powi(2) * density;
    Ok(CountReport::new(x, count, main, start))
}

/// Integers `t ≤ limit` all of whose prime factors are `≡ 1 mod 4`, with those primes.
struct SplitIntegers {
    values: Vec<u32>,
    primes: Vec<Vec<u32>>,
}

impl SplitIntegers {
    fn new(limit: u64, sieve: &Sieve) -> Self {
        let mut values = Vec::new();
        let mut primes = Vec::new();
        for t in 1..=limit {
            let f = sieve.factorize(t);
            if f.iter().all(|&(p, _)| p % 4 == 1) {
                values.push(t as u32);
                primes.push(f.iter().map(|&(p, _)| p as u32).collect());
            }
        }
        SplitIntegers { values, primes }
    }
}

/// `Σ_t r(t² F; t)` over `t ≤ t_max`, where `F = F1 F2 F3` is given by its factorisation.
///
/// For `t` with a prime factor `≡ 3 mod 4` the count is zero. Otherwise a primitive
/// representation of `t² F` is a Gaussian integer coprime to every `p | t`, which leaves two
/// choices at each such `p`: `r(t² F; t) = 4 · 2^{ω(t)} · r0(F′)` with `F′` the part of `F`
/// prime to `t`.
fn torsor_fiber(factors: &[(u64, u32)], t_max: u64, split: &SplitIntegers) -> u128 {
    let mut base = 1u128;
    let mut split_exponents: Vec<(u32, u32)> = Vec::new();
    for &(p, e) in factors {
        match p % 4 {
            1 => {
                base *= e as u128 + 1;
                split_exponents.push((p as u32, e));
            }
            3 if e % 2 == 1 => return 0,
            _ => {}
        }
    }
    let end = split.values.partition_point(|&t| t as u64 <= t_max);
    let mut total = 0u128;
    for k in 0..end {
        let mut r0 = base;
        for &q in &split.primes[k] {
            if let Some(&(_, e)) = split_exponents.iter().find(|&&(p, _)| p == q) {
                r0 /= e as u128 + 1;
            }
        }
        total += 4 * (r0 << split.primes[k].len());
    }
    total
}

fn merge_factors(parts: [Vec<(u64, u32)>; 3]) -> Vec<(u64, u32)> {
    let mut all: Vec<(u64, u32)> = parts.into_iter().flatten().collect();
    all.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::with_capacity(all.len());
    for (p, e) in all {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += e,
            _ => out.push((p, e)),
        }
    }
    out
}

/// Exact `N(B) = ½ #{(y, z, t; u, v) : y² + z² = t² F(u, v), (y, z, t), (u, v) primitive,
/// 0 < max{u², v²} t ≤ B}`.
pub fn n_b_count(b: u64, s: &Surface) -> Result<u128, Error> {
    if b == 0 {
        return Ok(0);
    }
    if b > 50_000_000 {
        return Err(Error::Budget(format!("N(B) for B = {b}")));
    }
    let side = crate::arith::isqrt(b as u128) as u64;
    let sieve = sieve_for(box_bound(s, side)?.max(b))?;
    let split = SplitIntegers::new(b, &sieve);
    let si = side as i128;
    let total: u128 = (-si..=si)
        .into_par_iter()
        .map(|u| {
            let mut acc = 0u128;
            for v in -si..=si {
                if gcd(u.unsigned_abs() as u64, v.unsigned_abs() as u64) != 1 {
                    continue;
                }
                let m = (u * u).max(v * v) as u64;
                let t_max = b / m;
                let f = s.eval(u, v);
                let product: i128 = f.iter().product();
                if product == 0 {
                    // y = z = 0, so primitivity forces t = 1.
                    acc += 1;
                    continue;
                }
                if product < 0 {
                    continue;
                }
                let parts = f.map(|x| sieve.factorize(x.unsigned_abs() as u64));
                acc += torsor_fiber(&merge_factors(parts), t_max, &split);
            }
            acc
        })
        .sum();
    Ok(total / 2)
}

/// `N(B)` against `c_S B log B`.
pub fn n_b(b: u64, s: &Surface, c_s: f64) -> Result<CountReport, Error> {
    let start = Instant::now();
    let count = n_b_count(b, s)?;
    let main = c_s * b as f64 * (b as f64).ln();
    Ok(CountReport::new(b, count, main, start))
}

/// `N(B)` for each `B` in an increasing list.
pub fn verify(b_list: &[u64], s: &Surface, c_s: f64) -> Result<Vec<CountReport>, Error> {
    if b_list.is_empty() {
        return Err(Error::InvalidInput("empty list of bounds".into()));
    }
    if b_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("bounds must be strictly increasing".into()));
    }
    b_list.iter().map(|&b| n_b(b, s, c_s)).collect()
}

/// Writes rows `B,N,main,ratio,seconds`.
pub fn write_csv<W: Write>(out: &mut W, rows: &[CountReport]) -> std::io::Result<()> {
    writeln!(out, "B,N,main,ratio,seconds")?;
    for r in rows {
        writeln!(out, "{},{},{:.6},{:.9},{:.3}", r.parameter, r.raw_count, r.main_term, r.ratio, r.elapsed)?;
    }
    Ok(())
}

/// `N(B)` by enumerating primitive points `x ∈ Z⁵` of the model `x0 x2 = x1²`,
/// `x3² + x4² = Q(x0, x1, x2)` with `Q(v², uv, u²) = F(u, v)`, of height at most `B`,
/// counted up to sign. Only for small `B`.
pub fn n_b_brute(b: u64, s: &Surface) -> Result<u64, Error> {
    if b > 200 {
        return Err(Error::Budget(format!("direct point enumeration for B = {b}")));
    }
    let f = quartic_coeffs(s);
    let bi = b as i64;
    let bound = crate::arith::isqrt(s.invariants().height_radicand as u128 * (b as u128).pow(2)) as i64;
    let mut count = 0u64;
    for x0 in -bi..=bi {
        for x2 in -bi..=bi {
            let prod = x0 * x2;
            if prod < 0 {
                continue;
            }
            let r = crate::arith::isqrt(prod as u128) as i64;
            if r * r != prod {
                continue;
            }
            let x1s: &[i64] = if r == 0 { &[0] } else { &[r, -r] };
            for &x1 in x1s {
                if x0 == 0 && x1 == 0 && x2 == 0 {
                    continue;
                }
                let q = f[0] as i128 * (x0 * x0) as i128
                    + f[1] as i128 * (x0 * x1) as i128
                    + f[2] as i128 * (x1 * x1) as i128
                    + f[3] as i128 * (x1 * x2) as i128
                    + f[4] as i128 * (x2 * x2) as i128;
                if q < 0 {
                    continue;
                }
                for x3 in -bound..=bound {
                    let rest = q - (x3 as i128) * (x3 as i128);
                    if rest < 0 {
                        continue;
                    }
                    let x4 = crate::arith::isqrt(rest as u128) as i64;
                    if (x4 as i128) * (x4 as i128) != rest {
                        continue;
                    }
                    for y in if x4 == 0 { vec![0] } else { vec![x4, -x4] } {
                        let x = [x0, x1, x2, x3, y];
                        let g = x.iter().fold(0u64, |g, &c| gcd(g, c.unsigned_abs()));
                        if g == 1 && s.height_le(x, b) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(count / 2)
}

// Coefficients f_k of u^k v^{4−k} in F1 F2 F3.
fn quartic_coeffs(s: &Surface) -> [i64; 5] {
    // Linear form a u + b v has coefficients (of v, u) = (b, a); the quadratic a u² + b v² + c uv
    // has (v², uv, u²) = (b, c, a).
    let l1 = [s.f1.b, s.f1.a];
    let l2 = [s.f2.b, s.f2.a];
    let q = [s.f3.b, s.f3.c, s.f3.a];
    let mut out = [0i64; 5];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..3 {
                out[i + j + k] += l1[i] * l2[j] * q[k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::samples::*;

    fn r_lattice(n: i128) -> u128 {
        if n < 0 {
            return 0;
        }
        let m = crate::arith::isqrt(n as u128) as i128;
        let mut c = 0;
        for a in -m..=m {
            for b in -m..=m {
                if a * a + b * b == n {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn s_x_matches_lattice_counts() {
        for s in [s0(), s1(), s2()] {
            for eps in [SignVector::positive(), SignVector::new(1, -1, -1).unwrap()] {
                for x in [0u64, 3, 10] {
                    let xi = x as i128;
                    let mut naive = 0u128;
                    for u in -xi..=xi {
                        for v in -xi..=xi {
                            let f = s.eval(u, v);
                            if (0..3).all(|i| eps.0[i] as i128 * f[i] > 0) {
                                naive += (0..3).map(|i| r_lattice(eps.0[i] as i128 * f[i])).product::<u128>();
                            }
                        }
                    }
                    assert_eq!(s_x_count(x, &s, eps).unwrap(), naive);
                }
            }
        }
    }

    #[test]
    fn s_x_dd_matches_naive_sum() {
        let s = s0();
        let eps = SignVector::positive();
        let (d, big_d) = ([5u64, 1, 1], [5u64, 1, 1]);
        let x = 60i128;
        let mut naive = 0u128;
        for u in -x..=x {
            for v in -x..=x {
                let f = s.eval(u, v);
                if f.iter().all(|&a| a > 0) && (0..3).all(|i| f[i] % big_d[i] as i128 == 0) {
                    naive += (0..3).map(|i| r_lattice(f[i] / d[i] as i128)).product::<u128>();
                }
            }
        }
        assert_eq!(s_x_dd_count(60, d, big_d, &s, eps).unwrap(), naive);
        assert_eq!(s_x_dd_count(40, [1; 3], [1; 3], &s, eps).unwrap(), s_x_count(40, &s, eps).unwrap());
    }

    #[test]
    fn torsor_fiber_matches_mobius_route() {
        let sieve = Sieve::new(10_000);
        let split = SplitIntegers::new(400, &sieve);
        for n in [1u64, 2, 5, 9, 25, 45, 65, 125, 130, 325, 21, 1105] {
            let f = sieve.factorize(n);
            let mut expected = 0u128;
            for t in 1..=400u64 {
                expected += crate::arith::r_coprime(t * t * n, t).unwrap() as u128;
            }
            assert_eq!(torsor_fiber(&f, 400, &split), expected, "n={n}");
        }
    }

    #[test]
    fn n_b_matches_point_enumeration() {
        for s in [s0(), s1(), s2()] {
            for b in [1u64, 2, 7, 20, 50] {
                assert_eq!(n_b_count(b, &s).unwrap(), n_b_brute(b, &s).unwrap() as u128, "B={b}");
            }
        }
    }

    #[test]
    fn n_b_is_monotone() {
        let s = s0();
        let mut last = 0;
        for b in [1u64, 10, 100, 1000, 5000] {
            let n = n_b_count(b, &s).unwrap();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn reflected_region_gives_same_sum() {
        // (u, v) ↦ (−u, −v) flips both linear forms and fixes the quadratic one.
        let s = s1();
        let a = s_x_count(30, &s, SignVector::positive()).unwrap();
        let b = s_x_count(30, &s, SignVector::positive().reflected()).unwrap();
        let refl = SignVector::new(-1, -1, 1).unwrap();
        assert_eq!(a, s_x_count(30, &s, refl).unwrap());
        assert_eq!(b, a);
    }

    #[test]
    fn csv_rows() {
        let rows = vec![CountReport { parameter: 10, raw_count: 5, main_term: 4.0, ratio: 1.25, elapsed: 0.0 }];
        let mut out = Vec::new();
        write_csv(&mut out, &rows).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "B,N,main,ratio,seconds\n10,5,4.000000,1.250000000,0.000\n");
    }
}

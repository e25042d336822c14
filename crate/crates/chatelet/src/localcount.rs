//! Congruence counts: `ρ(d)`, polynomial root counts, primitive variants, the closed forms
//! for `S_α(A; p^n)` and the solution counts `N_{λ,μ}(p^n)`.
//!
//! Brute-force counters loop over canonical residues and are bounded by explicit budgets.
//! The fast counters split `x` by its `p`-adic valuation, reduce the primitive part to
//! points of `P¹(Z/p^m)`, and count roots of the dehomogenised forms by Hensel lifting.

use crate::arith::{factorize, valuation};
use crate::forms::{Form, Surface};
use crate::Error;

/// Largest modulus accepted by two-dimensional brute-force loops.
pub const BRUTE_MODULUS_BUDGET: u64 = 1_000_000;
/// Largest modulus accepted by the eight-dimensional oracle loop.
pub const ORACLE_MODULUS_BUDGET: u64 = 9;

fn budget_err(what: &str, m: u128, limit: u64) -> Error {
    Error::Budget(format!("{what}: modulus {m} exceeds {limit}"))
}

pub(crate) fn checked_pow(p: u64, e: u32) -> Result<u128, Error> {
    (p as u128).checked_pow(e).ok_or_else(|| Error::Overflow(format!("{p}^{e} does not fit in 128 bits")))
}

fn modulus(p: u64, e: u32, limit: u64, what: &str) -> Result<u64, Error> {
    let m = checked_pow(p, e)?;
    if m > limit as u128 {
        return Err(budget_err(what, m, limit));
    }
    Ok(m as u64)
}

fn primes_of(d: &[u64; 3]) -> Vec<u64> {
    let mut ps: Vec<u64> = d.iter().filter(|&&x| x > 1).flat_map(|&x| factorize(x)).map(|(p, _)| p).collect();
    ps.sort_unstable();
    ps.dedup();
    ps
}

fn check_triple(d: &[u64; 3]) -> Result<(), Error> {
    if d.contains(&0) {
        return Err(Error::InvalidInput(format!("divisor triple entries must be ≥ 1, got {d:?}")));
    }
    Ok(())
}

/// `ρ(d)` by direct enumeration of `x ∈ [0, d1 d2 d3)²`.
pub fn rho_brute(d: [u64; 3], s: &Surface) -> Result<u64, Error> {
    check_triple(&d)?;
    let m = d.iter().map(|&x| x as u128).product::<u128>();
    if m > BRUTE_MODULUS_BUDGET as u128 {
        return Err(budget_err("rho_brute", m, BRUTE_MODULUS_BUDGET));
    }
    let m = m as i128;
    let forms = s.forms();
    let mut count = 0u64;
    // Along each row x1 every form is a polynomial of degree ≤ 2 in x2, stepped by finite
    // differences modulo d_i.
    let modulus = d.map(|x| x as i64);
    for x1 in 0..m {
        let mut val = [0i64; 3];
        let mut step = [0i64; 3];
        let mut second = [0i64; 3];
        for i in 0..3 {
            let f = [0, 1, 2].map(|x2| forms[i].eval(x1, x2));
            let md = modulus[i] as i128;
            val[i] = f[0].rem_euclid(md) as i64;
            step[i] = (f[1] - f[0]).rem_euclid(md) as i64;
            second[i] = (f[2] - 2 * f[1] + f[0]).rem_euclid(md) as i64;
        }
        for _ in 0..m {
            if val == [0; 3] {
                count += 1;
            }
            for i in 0..3 {
                val[i] += step[i];
                if val[i] >= modulus[i] {
                    val[i] -= modulus[i];
                }
                step[i] += second[i];
                if step[i] >= modulus[i] {
                    step[i] -= modulus[i];
                }
            }
        }
    }
    Ok(count)
}

/// `ρ(1, 1, p^ν) = φ(p^ν)(1 + (disc F3 / p))⌈ν/2⌉ + p^{2(ν − ⌈ν/2⌉)}` for odd `p ∤ disc F3`,
/// `F3` primitive.
pub fn rho_quadratic_closed_form(p: u64, nu: u32, s: &Surface) -> Result<u128, Error> {
    let disc = s.f3.disc();
    if p == 2 || disc % p as i128 == 0 || s.f3.content().is_multiple_of(p) {
        return Err(Error::InvalidInput(format!("closed form needs p ∤ 2 disc(F3) and F3 primitive at p = {p}")));
    }
    if nu == 0 {
        return Ok(1);
    }
    let roots = (1 + crate::arith::kronecker((disc % p as i128) as i64, p as i64)) as u128;
    let half = nu.div_ceil(2);
    let phi = checked_pow(p, nu)? - checked_pow(p, nu - 1)?;
    Ok(phi * roots * half as u128 + checked_pow(p, 2 * (nu - half))?)
}

// Dehomogenisations F(1, t) and F(s, 1), coefficients lowest degree first.
fn affine_chart(f: &Form) -> Vec<i128> {
    f.coeffs().iter().map(|&c| c as i128).collect()
}

fn infinity_chart(f: &Form) -> Vec<i128> {
    f.coeffs().iter().rev().map(|&c| c as i128).collect()
}

fn eval_mod(poly: &[i128], t: u128, m: u128) -> u128 {
    let mut acc = 0u128;
    for &c in poly.iter().rev() {
        let c = c.rem_euclid(m as i128) as u128;
        acc = (acc * t % m + c) % m;
    }
    acc
}

/// Number of `t mod p^E` with `p^{e_k} | f_k(t)` for every constraint, where
/// `E = max e_k`; with `restrict_zero`, only `t ≡ 0 mod p` is counted.
pub(crate) fn count_roots(p: u64, constraints: &[(Vec<i128>, u32)], restrict_zero: bool) -> Result<u128, Error> {
    let e_max = constraints.iter().map(|c| c.1).max().unwrap_or(0);
    if e_max == 0 {
        return Ok(1);
    }
    let top = checked_pow(p, e_max)?;
    if top > u64::MAX as u128 {
        return Err(Error::Overflow(format!("root count modulo {p}^{e_max}")));
    }
    let mut count = 0u128;
    let mut stack: Vec<(u32, u128)> = vec![(0, 0)];
    while let Some((j, r)) = stack.pop() {
        if j == e_max {
            count += 1;
            continue;
        }
        let pj = (p as u128).pow(j);
        let next = pj * p as u128;
        let digits = if j == 0 && restrict_zero { 1 } else { p };
        for a in 0..digits {
            let t = r + a as u128 * pj;
            let ok = constraints.iter().filter(|c| c.1 > j).all(|c| eval_mod(&c.0, t, next) == 0);
            if ok {
                stack.push((j + 1, t));
            }
        }
    }
    Ok(count)
}

// Points of P¹(Z/p^E) at which each F_i has valuation ≥ e_i, for primitive forms.
fn projective_roots(p: u64, forms: &[Form], e: &[u32]) -> Result<u128, Error> {
    let affine: Vec<(Vec<i128>, u32)> = forms.iter().zip(e).map(|(f, &k)| (affine_chart(f), k)).collect();
    let infinity: Vec<(Vec<i128>, u32)> = forms.iter().zip(e).map(|(f, &k)| (infinity_chart(f), k)).collect();
    Ok(count_roots(p, &affine, false)? + count_roots(p, &infinity, true)?)
}

struct Reduced {
    forms: [Form; 3],
    nu: [u32; 3],
    /// Σν − Σν′, the exponent removed by the content reduction.
    removed: u32,
}

fn reduce_contents(p: u64, nu: [u32; 3], s: &Surface) -> Reduced {
    let forms = s.forms();
    let mut reduced = nu;
    for i in 0..3 {
        let v = valuation(forms[i].content() as i128, p);
        reduced[i] = nu[i] - nu[i].min(v);
    }
    Reduced {
        forms: forms.map(|f| f.primitive()),
        nu: reduced,
        removed: nu.iter().sum::<u32>() - reduced.iter().sum::<u32>(),
    }
}

fn strata_exponents(nu: &[u32; 3], forms: &[Form; 3], k: u32) -> [u32; 3] {
    [0, 1, 2].map(|i| nu[i].saturating_sub(k * forms[i].degree()))
}

fn strata_count(nu: &[u32; 3], forms: &[Form; 3]) -> u32 {
    (0..3).map(|i| nu[i].div_ceil(forms[i].degree())).max().unwrap()
}

/// `ρ(p^{ν1}, p^{ν2}, p^{ν3})`, exactly.
pub fn rho_prime_power(p: u64, nu: [u32; 3], s: &Surface) -> Result<u128, Error> {
    let red = reduce_contents(p, nu, s);
    let n_red: u32 = red.nu.iter().sum();
    let k0 = strata_count(&red.nu, &red.forms);
    let overflow = || Error::Overflow(format!("rho({p}^{nu:?})"));
    let mut total = checked_pow(p, 2 * (n_red - k0))?;
    for k in 0..k0 {
        let e = strata_exponents(&red.nu, &red.forms, k);
        let e_max = *e.iter().max().unwrap();
        let m = n_red - k;
        let roots = projective_roots(p, &red.forms, &e)?;
        let units = checked_pow(p, m)? - checked_pow(p, m - 1)?;
        let c =
            units.checked_mul(checked_pow(p, m - e_max)?).and_then(|x| x.checked_mul(roots)).ok_or_else(overflow)?;
        total = total.checked_add(c).ok_or_else(overflow)?;
    }
    total.checked_mul(checked_pow(p, 2 * red.removed)?).ok_or_else(overflow)
}

/// `ρ(p^ν)/p^{2|ν|}`, the Haar measure of `{x ∈ Z_p² : p^{ν_i} | F_i(x)}`.
pub fn rho_density(p: u64, nu: [u32; 3], s: &Surface) -> Result<f64, Error> {
    let red = reduce_contents(p, nu, s);
    let k0 = strata_count(&red.nu, &red.forms);
    let pf = p as f64;
    let mut total = pf.powi(-2 * k0 as i32);
    for k in 0..k0 {
        let e = strata_exponents(&red.nu, &red.forms, k);
        let e_max = *e.iter().max().unwrap();
        let roots = projective_roots(p, &red.forms, &e)? as f64;
        total += (1.0 - 1.0 / pf) * roots * pf.powi(-(e_max as i32) - 2 * k as i32);
    }
    Ok(total)
}

/// Numbers of roots of `F1, F2, F3` in `P¹(F_p)` at a prime of good reduction.
pub fn good_prime_roots(p: u64, s: &Surface) -> [u32; 3] {
    let k = crate::arith::kronecker(s.invariants().delta as i64, p as i64);
    [1, 1, (1 + k) as u32]
}

/// True when `p` is odd and divides none of `Δ*` and the contents.
pub fn is_good_prime(p: u64, s: &Surface) -> bool {
    let inv = s.invariants();
    p != 2 && inv.delta_star % p as i128 != 0 && inv.contents.iter().all(|&c| c % p != 0)
}

/// `ρ(p^ν)/p^{2|ν|}` at a prime of good reduction, in closed form: the zeros of the forms
/// modulo `p` are simple and pairwise distinct, so a primitive point lies near at most one.
pub fn rho_density_good(p: u64, nu: [u32; 3], roots: [u32; 3]) -> f64 {
    let deg = [1u32, 1, 2];
    let k0 = (0..3).map(|i| nu[i].div_ceil(deg[i])).max().unwrap();
    let pf = p as f64;
    let mut total = pf.powi(-2 * k0 as i32);
    for k in 0..k0 {
        let e: Vec<u32> = (0..3).map(|i| nu[i].saturating_sub(k * deg[i])).collect();
        let active: Vec<usize> = (0..3).filter(|&i| e[i] > 0).collect();
        if active.len() == 1 {
            let i = active[0];
            total += roots[i] as f64 * (1.0 - 1.0 / pf) * pf.powi(-(e[i] as i32) - 2 * k as i32);
        }
    }
    total
}

/// `ρ(d)` via CRT multiplicativity over the primes dividing `d1 d2 d3`.
pub fn rho(d: [u64; 3], s: &Surface) -> Result<u128, Error> {
    check_triple(&d)?;
    let mut acc = 1u128;
    for p in primes_of(&d) {
        let nu = d.map(|x| if x > 1 { valuation(x as i128, p) } else { 0 });
        let block = rho_prime_power(p, nu, s)?;
        acc = acc.checked_mul(block).ok_or_else(|| Error::Overflow(format!("rho({d:?})")))?;
    }
    Ok(acc)
}

/// Roots of a univariate integer polynomial (lowest degree first) modulo `n`.
pub fn rho_g(g: &[i64], n: u64) -> Result<u128, Error> {
    if n == 0 {
        return Err(Error::InvalidInput("rho_g: n must be positive".into()));
    }
    let poly: Vec<i128> = g.iter().map(|&c| c as i128).collect();
    let mut acc = 1u128;
    for (p, e) in factorize(n) {
        if poly.iter().all(|&c| c % p as i128 == 0) {
            return Err(Error::InvalidInput(format!("rho_g: polynomial vanishes identically mod {p}")));
        }
        acc *= count_roots(p, &[(poly.clone(), e)], false)?;
    }
    Ok(acc)
}

/// Root count modulo `n` by enumeration.
pub fn rho_g_brute(g: &[i64], n: u64) -> u64 {
    let poly: Vec<i128> = g.iter().map(|&c| c as i128).collect();
    (0..n).filter(|&t| eval_mod(&poly, t as u128, n as u128) == 0).count() as u64
}

fn product_form_dehomogenised(forms: &[Form; 3], infinity: bool) -> Vec<i128> {
    let mut acc = vec![1i128];
    for f in forms {
        let q = if infinity { infinity_chart(f) } else { affine_chart(f) };
        let mut next = vec![0i128; acc.len() + q.len() - 1];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in q.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

fn star_threshold(p: u64, nu: u32, s: &Surface) -> u32 {
    let c: u32 = s.forms().iter().map(|f| valuation(f.content() as i128, p)).sum();
    nu.saturating_sub(c)
}

fn star_projective_roots(p: u64, e: u32, s: &Surface) -> Result<u128, Error> {
    let prim = s.forms().map(|f| f.primitive());
    let affine = product_form_dehomogenised(&prim, false);
    let infinity = product_form_dehomogenised(&prim, true);
    Ok(count_roots(p, &[(affine, e)], false)? + count_roots(p, &[(infinity, e)], true)?)
}

/// `ρ*(p^ν) = #{x mod p^ν : p^ν | F1 F2 F3(x), p ∤ x}`.
pub fn rho_star(nu: u32, p: u64, s: &Surface) -> Result<u128, Error> {
    if nu == 0 {
        return Ok(1);
    }
    let e = star_threshold(p, nu, s);
    let units = checked_pow(p, nu)? - checked_pow(p, nu - 1)?;
    let points = if e == 0 {
        checked_pow(p, nu)? + checked_pow(p, nu - 1)?
    } else {
        checked_pow(p, nu - e)? * star_projective_roots(p, e, s)?
    };
    units.checked_mul(points).ok_or_else(|| Error::Overflow(format!("rho_star({p}^{nu})")))
}

/// `ρ*(p^ν)/p^{2ν}`.
pub fn rho_star_density(nu: u32, p: u64, s: &Surface) -> Result<f64, Error> {
    let pf = p as f64;
    if nu == 0 {
        return Ok(1.0);
    }
    let e = star_threshold(p, nu, s);
    if e == 0 {
        return Ok(1.0 - 1.0 / (pf * pf));
    }
    Ok((1.0 - 1.0 / pf) * star_projective_roots(p, e, s)? as f64 * pf.powi(-(e as i32)))
}

/// `ρ*` by enumeration of `[0, p^ν)²`.
pub fn rho_star_brute(nu: u32, p: u64, s: &Surface) -> Result<u64, Error> {
    let m = modulus(p, nu, BRUTE_MODULUS_BUDGET, "rho_star")? as i128;
    let pi = p as i128;
    let mut count = 0;
    for x1 in 0..m {
        for x2 in 0..m {
            if nu > 0 && x1 % pi == 0 && x2 % pi == 0 {
                continue;
            }
            let f: i128 = s.eval(x1, x2).iter().map(|v| v.rem_euclid(m)).fold(1 % m, |a, b| a * b % m);
            if f == 0 {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn exact_valuation_mod(x: i128, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    valuation(x, p).min(cap)
}

/// `ρ†(p^{a1}, p^{a2}, p^{a3}) = #{x mod p^{|a|+1} : p^{a_i} ∥ F_i(x), p ∤ x}`.
pub fn rho_dagger(a: [u32; 3], p: u64, s: &Surface) -> Result<u64, Error> {
    let n = a.iter().sum::<u32>() + 1;
    let m = modulus(p, n, BRUTE_MODULUS_BUDGET, "rho_dagger")? as i128;
    let pi = p as i128;
    let mut count = 0;
    for x1 in 0..m {
        for x2 in 0..m {
            if x1 % pi == 0 && x2 % pi == 0 {
                continue;
            }
            let f = s.eval(x1, x2);
            if (0..3).all(|i| exact_valuation_mod(f[i].rem_euclid(m), p, n) == a[i]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `ρ̃(p^{N1}, p^{N2}, p^{N3}) = #{x mod p^{|N|+1} : p^{N_i} | F_i(x), p ∤ x}`.
pub fn rho_tilde(big_n: [u32; 3], p: u64, s: &Surface) -> Result<u64, Error> {
    let n = big_n.iter().sum::<u32>() + 1;
    let m = modulus(p, n, BRUTE_MODULUS_BUDGET, "rho_tilde")? as i128;
    let pi = p as i128;
    let divs = big_n.map(|e| (p as i128).pow(e));
    let mut count = 0;
    for x1 in 0..m {
        for x2 in 0..m {
            if x1 % pi == 0 && x2 % pi == 0 {
                continue;
            }
            let f = s.eval(x1, x2);
            if (0..3).all(|i| f[i] % divs[i] == 0) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `S_0(A; p^n) = #{(x, y) mod p^n : x² + y² ≡ A}` in closed form.
pub fn s_zero(a: i128, p: u64, n: u32) -> Result<u128, Error> {
    if n == 0 {
        return Ok(1);
    }
    let m = checked_pow(p, n)? as i128;
    let a = a.rem_euclid(m);
    let v = if a == 0 { n } else { valuation(a, p).min(n) };
    let pn = checked_pow(p, n)?;
    let pn1 = pn / p as u128;
    Ok(if p == 2 {
        if v + 1 >= n {
            pn
        } else if (a >> v) % 4 == 1 {
            2 * pn
        } else {
            0
        }
    } else if p % 4 == 1 {
        if v >= n {
            pn + n as u128 * (pn - pn1)
        } else {
            (1 + v as u128) * (pn - pn1)
        }
    } else if v >= n {
        checked_pow(p, 2 * (n / 2))?
    } else if v % 2 == 0 {
        pn + pn1
    } else {
        0
    })
}

/// `S_α(A; p^n) = #{(x, y) mod p^n : p^α (x² + y²) ≡ A}`.
pub fn s_alpha(alpha: u32, a: i128, p: u64, n: u32) -> Result<u128, Error> {
    if alpha > n {
        return Err(Error::InvalidInput(format!("s_alpha: alpha {alpha} exceeds n {n}")));
    }
    let m = checked_pow(p, n)? as i128;
    let a = a.rem_euclid(m);
    let v = if a == 0 { n } else { valuation(a, p) };
    if v < alpha {
        return Ok(0);
    }
    let pa = (p as i128).pow(alpha);
    Ok(checked_pow(p, 2 * alpha)? * s_zero(a / pa, p, n - alpha)?)
}

/// `S_α(A; p^n)` by enumeration.
pub fn s_alpha_brute(alpha: u32, a: i128, p: u64, n: u32) -> Result<u64, Error> {
    let m = modulus(p, n, BRUTE_MODULUS_BUDGET, "s_alpha_brute")? as i128;
    let pa = (p as i128).pow(alpha);
    let a = a.rem_euclid(m);
    let mut count = 0;
    for x in 0..m {
        for y in 0..m {
            if (pa * (x * x + y * y)).rem_euclid(m) == a {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn check_levels(lambda: &[u32; 3], mu: &[u32; 3], n: u32) -> Result<(), Error> {
    if lambda.iter().chain(mu).any(|&x| x > n) {
        return Err(Error::InvalidInput(format!("lambda {lambda:?} and mu {mu:?} must not exceed the level {n}")));
    }
    Ok(())
}

/// `N_{λ,μ}(p^n)` as `Σ_x Π_i S_{λ_i}(F_i(x); p^n)` over `x mod p^n` with `p^{μ_i} | F_i(x)`.
pub fn n_lambda_mu(p: u64, n: u32, lambda: [u32; 3], mu: [u32; 3], s: &Surface) -> Result<u128, Error> {
    check_levels(&lambda, &mu, n)?;
    let m = modulus(p, n, BRUTE_MODULUS_BUDGET, "n_lambda_mu")?;
    let units = [1i128; 3];
    sum_over_residues(p, n, m, &lambda, &mu, &units, s)
}

fn sum_over_residues(
    p: u64,
    n: u32,
    m: u64,
    lambda: &[u32; 3],
    mu: &[u32; 3],
    units: &[i128; 3],
    s: &Surface,
) -> Result<u128, Error> {
    let mi = m as i128;
    let mut tables: Vec<Vec<u128>> = Vec::new();
    for i in 0..3 {
        let mut t = Vec::with_capacity(m as usize);
        for a in 0..mi {
            let value = (a * units[i]).rem_euclid(mi);
            let divisible = value == 0 || valuation(value, p) >= mu[i];
            t.push(if divisible { s_alpha(lambda[i], value, p, n)? } else { 0 });
        }
        tables.push(t);
    }
    let forms = s.forms();
    let mut total = 0u128;
    for x1 in 0..mi {
        for x2 in 0..mi {
            let mut prod = 1u128;
            for i in 0..3 {
                let a = forms[i].eval(x1, x2).rem_euclid(mi) as usize;
                prod *= tables[i][a];
                if prod == 0 {
                    break;
                }
            }
            total += prod;
        }
    }
    Ok(total)
}

/// Direct eight-fold enumeration of `N_{λ,μ}(p^n)`; `p` may be 2 when `units` encodes `d_i^{-1}`.
pub fn n_lambda_mu_oracle(
    p: u64,
    n: u32,
    lambda: [u32; 3],
    mu: [u32; 3],
    units: [i128; 3],
    s: &Surface,
) -> Result<u128, Error> {
    check_levels(&lambda, &mu, n)?;
    let m = modulus(p, n, ORACLE_MODULUS_BUDGET, "n_lambda_mu_oracle")? as i128;
    let forms = s.forms();
    let pl = lambda.map(|l| (p as i128).pow(l));
    let pm = mu.map(|l| (p as i128).pow(l));
    let sq: Vec<i128> = (0..m).map(|x| x * x).collect();
    let mut total = 0u128;
    for x1 in 0..m {
        for x2 in 0..m {
            let f = [0, 1, 2].map(|i| (forms[i].eval(x1, x2) * units[i]).rem_euclid(m));
            if (0..3).any(|i| f[i] % pm[i] != 0) {
                continue;
            }
            let mut per = [0u128; 3];
            for s1 in 0..m as usize {
                for t1 in 0..m as usize {
                    let q = sq[s1] + sq[t1];
                    for i in 0..3 {
                        if (pl[i] * q - f[i]).rem_euclid(m) == 0 {
                            per[i] += 1;
                        }
                    }
                }
            }
            total += per[0] * per[1] * per[2];
        }
    }
    Ok(total)
}

fn odd_inverse_mod_pow2(d: i128, n: u32) -> i128 {
    let m = 1i128 << n.max(1);
    let d = d.rem_euclid(m);
    (0..m).find(|&x| (x * d).rem_euclid(m) == 1 % m).unwrap_or(1)
}

/// `N_d(2^n) = #{(x, s, t) mod 2^n : F_i(x) ≡ d_i (s_i² + t_i²)}` for odd `d_i`.
pub fn n_d_dyadic(n: u32, d: [u64; 3], s: &Surface) -> Result<u128, Error> {
    if d.iter().any(|&x| x % 2 == 0) {
        return Err(Error::InvalidInput(format!("n_d_dyadic needs odd d, got {d:?}")));
    }
    let m = modulus(2, n, BRUTE_MODULUS_BUDGET, "n_d_dyadic")?;
    let units = d.map(|x| odd_inverse_mod_pow2(x as i128, n));
    sum_over_residues(2, n, m, &[0; 3], &[0; 3], &units, s)
}

/// `(M_ν(p^n), M′_ν(p^n))`: counts of `x mod p^n` with `ν_p(F_i(x)) = ν_i`, resp. `≥ ν_i`.
pub fn m_nu_counts(p: u64, n: u32, nu: [u32; 3], s: &Surface) -> Result<(i128, u128), Error> {
    if nu.iter().sum::<u32>() > n || nu.iter().any(|&v| v + 1 > n) {
        return Err(Error::InvalidInput(format!("m_nu_counts: level {n} too small for {nu:?}")));
    }
    let m = modulus(p, n, BRUTE_MODULUS_BUDGET, "m_nu_counts")? as i128;
    let forms = s.forms();
    // Histogram of capped valuations, then cumulative counts.
    let cap = n as usize;
    let mut hist = vec![0u128; (cap + 1).pow(3)];
    for x1 in 0..m {
        for x2 in 0..m {
            let v = [0, 1, 2].map(|i| exact_valuation_mod(forms[i].eval(x1, x2).rem_euclid(m), p, n) as usize);
            hist[(v[0] * (cap + 1) + v[1]) * (cap + 1) + v[2]] += 1;
        }
    }
    let at_least = |t: [u32; 3]| -> u128 {
        let mut c = 0;
        for a in t[0] as usize..=cap {
            for b in t[1] as usize..=cap {
                for e in t[2] as usize..=cap {
                    c += hist[(a * (cap + 1) + b) * (cap + 1) + e];
                }
            }
        }
        c
    };
    let primed = at_least(nu);
    let mut exact = 0i128;
    for mask in 0..8u32 {
        let e = [mask & 1, mask >> 1 & 1, mask >> 2 & 1];
        let sign = if e.iter().sum::<u32>() % 2 == 0 { 1 } else { -1 };
        exact += sign * at_least([nu[0] + e[0], nu[1] + e[1], nu[2] + e[2]]) as i128;
    }
    Ok((exact, primed))
}

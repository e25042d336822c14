//! Elementary arithmetic: factorisation, characters, sums of two squares.

use num_rational::Ratio;

use crate::Error;

/// The non-trivial character modulo 4.
pub fn chi(n: i64) -> i32 {
    match n.rem_euclid(4) {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// Kronecker symbol `(a/n)` for arbitrary integers.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a as i128;
    let mut n = n as i128;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= twos;
    }
    // Jacobi symbol for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// Brent's variant of Pollard rho; n must be an odd composite.
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g, mut q) = (2u64, 2u64, 1u64, 1u64);
        let mut r = 1u64;
        let mut ys = 0u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(r - k).min(128) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factorisation as sorted `(prime, exponent)` pairs. `factorize(1)` is empty.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factorize(0)");
    let mut n = n;
    let mut primes = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while n.is_multiple_of(p) {
            primes.push(p);
            n /= p;
        }
    }
    factor_into(n, &mut primes);
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Smallest-prime-factor table for fast factorisation of many small integers.
#[derive(Clone, Debug)]
pub struct Sieve {
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(2);
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Sieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Factorisation of `n`, falling back to trial-free rho beyond the table.
    pub fn factorize(&self, n: u64) -> Vec<(u64, u32)> {
        if n > self.limit() {
            return factorize(n);
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut n = n as usize;
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        out
    }

    /// `r0(n) = r(n)/4`, read directly off the table.
    pub fn r0(&self, n: u64) -> u64 {
        if n > self.limit() {
            return r0(n);
        }
        let mut n = n as usize;
        let mut acc = 1u64;
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0u64;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            match p % 4 {
                1 => acc *= e + 1,
                3 if e % 2 == 1 => return 0,
                _ => {}
            }
        }
        acc
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit() && self.spf[n as usize] as u64 == n
    }
}

/// Möbius function.
pub fn mobius(n: u64) -> i32 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Number of distinct prime factors.
pub fn omega(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        factorize(n).len() as u32
    }
}

/// `r0(n) = Σ_{d|n} χ(d)`, the number of representations divided by four.
pub fn r0(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    r0_from_factors(&factorize(n))
}

pub fn r0_from_factors(f: &[(u64, u32)]) -> u64 {
    let mut acc = 1u64;
    for &(p, e) in f {
        match p % 4 {
            1 => acc *= e as u64 + 1,
            3 if e % 2 == 1 => return 0,
            _ => {}
        }
    }
    acc
}

/// Number of `(a, b) ∈ Z²` with `a² + b² = n`.
pub fn r(n: u64) -> u64 {
    if n == 0 {
        1
    } else {
        4 * r0(n)
    }
}

/// Number of `(a, b)` with `a² + b² = n` and `gcd(m, a, b) = 1`.
///
/// `r_coprime(0, m)` is `1` when `m = 1` (the pair `(0, 0)`) and `0` otherwise.
pub fn r_coprime(n: u64, m: u64) -> Result<u64, Error> {
    if m == 0 {
        return Err(Error::InvalidInput("r_coprime: m must be positive".into()));
    }
    if n == 0 {
        return Ok((m == 1) as u64);
    }
    let primes: Vec<u64> = factorize(m).into_iter().map(|(p, _)| p).collect();
    let mut total: i64 = 0;
    for mask in 0u32..(1 << primes.len()) {
        let mut k = 1u64;
        let mut sign = 1i64;
        let mut ok = true;
        for (i, &p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                k = match k.checked_mul(p) {
                    Some(k) => k,
                    None => {
                        ok = false;
                        break;
                    }
                };
                sign = -sign;
            }
        }
        if !ok {
            continue;
        }
        match k.checked_mul(k) {
            Some(k2) if n.is_multiple_of(k2) => total += sign * r(n / k2) as i64,
            _ => {}
        }
    }
    Ok(total as u64)
}

/// Membership in the multiplicative set of integers all of whose prime factors are `≡ 1 mod 4`.
pub fn is_in_d(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(p, _)| p % 4 == 1)
}

/// Odd part of a nonzero integer.
pub fn odd_part(n: i128) -> i128 {
    n >> n.trailing_zeros()
}

/// Membership in the set of positive integers whose odd part is `≡ 1 mod 4`.
pub fn is_in_e(n: i64) -> bool {
    n > 0 && odd_part(n as i128) % 4 == 1
}

/// Membership of the residue `k mod 2^n` in the reduction of that set modulo `2^n`.
pub fn is_in_e_mod(k: i128, n: u32) -> bool {
    if n <= 1 {
        return true;
    }
    let m = 1i128 << n;
    let k = k.rem_euclid(m);
    if k == 0 {
        return true;
    }
    let v = k.trailing_zeros();
    v + 1 >= n || (k >> v) % 4 == 1
}

/// `r_Δ(ℓ) = Σ_{k|ℓ} (Δ/k)`.
pub fn r_delta(l: u64, delta: i64) -> i64 {
    if l == 0 {
        return 0;
    }
    divisors(l).into_iter().map(|k| kronecker(delta, k as i64) as i64).sum()
}

/// All positive divisors, sorted.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// `p`-adic valuation of a nonzero integer.
pub fn valuation(n: i128, p: u64) -> u32 {
    debug_assert!(n != 0);
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn gcd_many(xs: &[u64]) -> u64 {
    xs.iter().fold(0, |a, &b| gcd(a, b))
}

fn omega_gcd(xs: &[u64]) -> u32 {
    omega(gcd_many(xs))
}

// Product over primes p ≡ 3 (mod 4) with odd valuation in n_i but even valuation in n1 n2 n3.
fn c_three(i: usize, n: &[u64; 3]) -> u64 {
    let mut out = 1u64;
    for (p, e) in factorize(n[i]) {
        if p % 4 != 3 || e % 2 == 0 {
            continue;
        }
        let total: u32 = n.iter().map(|&x| valuation(x as i128, p)).sum();
        if total.is_multiple_of(2) {
            out *= p;
        }
    }
    out
}

fn squarefree_d_divisors(n: u64) -> Vec<u64> {
    divisors(n).into_iter().filter(|&d| mobius(d) != 0 && is_in_d(d)).collect()
}

/// Right-hand side of the splitting identity expressing `r0(n0 n1 n2 n3)` through
/// sums over `𝒟`-divisors of the four factors. It equals `r0(n0 n1 n2 n3)` whenever
/// `n0 ∈ 𝒟`.
pub fn eclatement_rhs(n0: u64, n1: u64, n2: u64, n3: u64) -> Result<Ratio<i128>, Error> {
    if !is_in_d(n0) || n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::InvalidInput(format!(
            "eclatement_rhs needs n0 in D and positive n_i, got ({n0}, {n1}, {n2}, {n3})"
        )));
    }
    let n = [n1, n2, n3];
    let mut total = Ratio::from_integer(0i128);
    let cands: Vec<Vec<u64>> = n.iter().map(|&x| squarefree_d_divisors(x)).collect();
    let m_cands: Vec<Vec<u64>> = (0..3).map(|i| divisors(c_three(i, &n))).collect();
    for &d1 in &cands[0] {
        for &d2 in &cands[1] {
            for &d3 in &cands[2] {
                let d = d1 * d2 * d3;
                if !n0.is_multiple_of(d) {
                    continue;
                }
                let mu_d = mobius(d);
                if mu_d == 0 {
                    continue;
                }
                let nd = [n1 / d1, n2 / d2, n3 / d3];
                let c = 3i128.pow(omega_gcd(&[d, n1, n2, n3]))
                    * 2i128.pow(
                        omega_gcd(&[d, n1, n2]) + omega_gcd(&[d, n1, n3]) + omega_gcd(&[d, n2, n3])
                            - 3 * omega_gcd(&[d, n1, n2, n3]),
                    );
                let r_head = r0(n0 / d) as i128;
                if r_head == 0 {
                    continue;
                }
                for &e1 in &cands[1] {
                    if !nd[1].is_multiple_of(e1) || !nd[2].is_multiple_of(e1) {
                        continue;
                    }
                    for &e2 in &cands[0] {
                        if !nd[0].is_multiple_of(e2) || !nd[2].is_multiple_of(e1 * e2) {
                            continue;
                        }
                        let mu12 = mobius(e1 * e2);
                        if mu12 == 0 {
                            continue;
                        }
                        for &e3 in &cands[0] {
                            if !nd[0].is_multiple_of(e2 * e3) || !nd[1].is_multiple_of(e1 * e3) {
                                continue;
                            }
                            let mu3 = mobius(e3);
                            let denom = c * 2i128.pow(omega_gcd(&[e1 * e2, nd[0], nd[1]]));
                            let mut prod = r_head * (mu_d * mu12 * mu3) as i128;
                            let quot = [nd[0] / (e2 * e3), nd[1] / (e1 * e3), nd[2] / (e1 * e2)];
                            let mut inner = 0i128;
                            for &m1 in &m_cands[0] {
                                for &m2 in &m_cands[1] {
                                    for &m3 in &m_cands[2] {
                                        let ms = [m1, m2, m3];
                                        let mut t = 1i128;
                                        for i in 0..3 {
                                            if !quot[i].is_multiple_of(ms[i]) {
                                                t = 0;
                                                break;
                                            }
                                            t *= r0(quot[i] / ms[i]) as i128;
                                        }
                                        inner += t;
                                    }
                                }
                            }
                            prod *= inner;
                            total += Ratio::new(prod, denom);
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Resultant of two univariate integer polynomials (coefficients lowest degree first),
/// via fraction-free elimination of the Sylvester matrix.
pub fn resultant(f: &[i128], g: &[i128]) -> i128 {
    let f = trim(f);
    let g = trim(g);
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    if size == 0 {
        return 1;
    }
    let mut a = vec![vec![0i128; size]; size];
    for i in 0..n {
        for (j, &c) in f.iter().rev().enumerate() {
            a[i][i + j] = c;
        }
    }
    for i in 0..m {
        for (j, &c) in g.iter().rev().enumerate() {
            a[n + i][i + j] = c;
        }
    }
    bareiss_det(a)
}

fn trim(f: &[i128]) -> Vec<i128> {
    let mut v = f.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
    v
}

fn bareiss_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Discriminant of a univariate polynomial of degree `d ≥ 1`:
/// `(-1)^{d(d-1)/2} Res(g, g') / lead(g)`.
pub fn discriminant(g: &[i128]) -> i128 {
    let g = trim(g);
    let d = g.len() - 1;
    if d == 0 {
        return 0;
    }
    let deriv: Vec<i128> = (1..=d).map(|i| i as i128 * g[i]).collect();
    let res = resultant(&g, &deriv);
    let sign = if (d * (d - 1) / 2).is_multiple_of(2) { 1 } else { -1 };
    sign * res / g[d]
}

/// Perfect-square test for nonnegative integers.
pub fn is_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let s = isqrt(n as u128);
    s * s == n as u128
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Radical of a positive integer restricted to primes in the given class mod 4.
pub fn radical_mod4(n: u64, class: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    factorize(n).into_iter().filter(|&(p, _)| p % 4 == class).map(|(p, _)| p).product()
}

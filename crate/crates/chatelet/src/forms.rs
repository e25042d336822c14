//! Binary forms, surface invariants, admissibility checks, the counting regions and the height.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{is_square, radical_mod4, resultant};
use crate::Error;

fn gcd_i(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn gcd_u(a: u64, b: u64) -> u64 {
    gcd_i(a as i64, b as i64) as u64
}

/// `a x1 + b x2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearForm {
    pub a: i64,
    pub b: i64,
}

impl LinearForm {
    pub fn new(a: i64, b: i64) -> Self {
        LinearForm { a, b }
    }

    pub fn eval(&self, x1: i128, x2: i128) -> i128 {
        self.a as i128 * x1 + self.b as i128 * x2
    }

    pub fn eval_f64(&self, x1: f64, x2: f64) -> f64 {
        self.a as f64 * x1 + self.b as f64 * x2
    }

    pub fn content(&self) -> u64 {
        gcd_i(self.a, self.b) as u64
    }

    pub fn primitive(&self) -> LinearForm {
        let c = self.content() as i64;
        LinearForm::new(self.a / c, self.b / c)
    }
}

/// `a x1² + b x2² + c x1 x2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadraticForm { a, b, c }
    }

    pub fn eval(&self, x1: i128, x2: i128) -> i128 {
        self.a as i128 * x1 * x1 + self.b as i128 * x2 * x2 + self.c as i128 * x1 * x2
    }

    pub fn eval_f64(&self, x1: f64, x2: f64) -> f64 {
        self.a as f64 * x1 * x1 + self.b as f64 * x2 * x2 + self.c as f64 * x1 * x2
    }

    pub fn disc(&self) -> i128 {
        self.c as i128 * self.c as i128 - 4 * self.a as i128 * self.b as i128
    }

    pub fn content(&self) -> u64 {
        gcd_i(gcd_i(self.a, self.b), self.c) as u64
    }

    pub fn primitive(&self) -> QuadraticForm {
        let g = self.content() as i64;
        QuadraticForm::new(self.a / g, self.b / g, self.c / g)
    }
}

/// One of the three forms, viewed uniformly as a binary form of degree 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Linear(LinearForm),
    Quadratic(QuadraticForm),
}

impl Form {
    pub fn degree(&self) -> u32 {
        match self {
            Form::Linear(_) => 1,
            Form::Quadratic(_) => 2,
        }
    }

    pub fn eval(&self, x1: i128, x2: i128) -> i128 {
        match self {
            Form::Linear(l) => l.eval(x1, x2),
            Form::Quadratic(q) => q.eval(x1, x2),
        }
    }

    pub fn eval_f64(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Form::Linear(l) => l.eval_f64(x1, x2),
            Form::Quadratic(q) => q.eval_f64(x1, x2),
        }
    }

    /// Coefficients of `F(x1, x2)` listed as `[x1^d, x1^{d-1} x2, ..., x2^d]`.
    pub fn coeffs(&self) -> Vec<i64> {
        match self {
            Form::Linear(l) => vec![l.a, l.b],
            Form::Quadratic(q) => vec![q.a, q.c, q.b],
        }
    }

    pub fn content(&self) -> u64 {
        match self {
            Form::Linear(l) => l.content(),
            Form::Quadratic(q) => q.content(),
        }
    }

    pub fn primitive(&self) -> Form {
        match self {
            Form::Linear(l) => Form::Linear(l.primitive()),
            Form::Quadratic(q) => Form::Quadratic(q.primitive()),
        }
    }

    /// Coefficients of the bilinear part `F(x + h) - F(x) - F(h)` as a linear form in `h`.
    pub fn gradient(&self, x1: i128, x2: i128) -> (i128, i128) {
        match self {
            Form::Linear(l) => (l.a as i128, l.b as i128),
            Form::Quadratic(q) => (2 * q.a as i128 * x1 + q.c as i128 * x2, q.c as i128 * x1 + 2 * q.b as i128 * x2),
        }
    }
}

/// Sign vector `(ε1, ε2, ε3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignVector(pub [i8; 3]);

impl SignVector {
    pub fn new(e1: i8, e2: i8, e3: i8) -> Result<Self, Error> {
        for e in [e1, e2, e3] {
            if e != 1 && e != -1 {
                return Err(Error::InvalidInput(format!("sign entries must be ±1, got {e}")));
            }
        }
        Ok(SignVector([e1, e2, e3]))
    }

    pub fn positive() -> Self {
        SignVector([1, 1, 1])
    }

    pub fn product(&self) -> i8 {
        self.0[0] * self.0[1] * self.0[2]
    }

    /// `(−ε1, −ε2, ε3)`, the image under `(u, v) ↦ (−u, −v)`.
    pub fn reflected(&self) -> Self {
        SignVector([-self.0[0], -self.0[1], self.0[2]])
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// The JSON shape `{"f1":[a,b],"f2":[a,b],"f3":[a,b,c]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub f1: [i64; 2],
    pub f2: [i64; 2],
    pub f3: [i64; 3],
}

/// A surface `y² + z² = F1 F2 F3` together with its exact invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub f1: LinearForm,
    pub f2: LinearForm,
    pub f3: QuadraticForm,
    inv: Invariants,
}

/// Resultants, discriminant, contents and the height scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Invariants {
    pub delta: i128,
    pub delta12: i128,
    pub delta13: i128,
    pub delta23: i128,
    pub delta_star: i128,
    pub contents: [u64; 3],
    /// `δ²`, an integer.
    pub height_radicand: u64,
    pub l_infinity: u64,
    /// Radicals of `Δ12, Δ13, Δ23` over primes `≡ 1 mod 4`.
    pub rad1: [u64; 3],
    /// Radicals of `Δ12, Δ13, Δ23` over primes `≡ 3 mod 4`.
    pub rad3: [u64; 3],
}

impl Invariants {
    pub fn delta_height(&self) -> f64 {
        (self.height_radicand as f64).sqrt()
    }

    /// `Δ_ij^(3)` for `1 ≤ i < j ≤ 3`.
    pub fn rad3_pair(&self, i: usize, j: usize) -> u64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.rad3[0],
            (0, 2) => self.rad3[1],
            (1, 2) => self.rad3[2],
            _ => 1,
        }
    }
}

/// Outcome of the admissibility check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NhReport {
    pub passed: bool,
    pub failures: Vec<String>,
}

pub const CLAUSE_PROPORTIONAL: &str = "proportional-linear-forms";
pub const CLAUSE_DEGENERATE: &str = "degenerate-quadratic";
pub const CLAUSE_REDUCIBLE: &str = "reducible-over-Q(i)";

/// Checks non-proportionality of the linear forms and irreducibility of `F3` over `Q(i)`.
pub fn validate_nh(f1: LinearForm, f2: LinearForm, f3: QuadraticForm) -> NhReport {
    let mut failures = Vec::new();
    if f1.a as i128 * f2.b as i128 - f2.a as i128 * f1.b as i128 == 0 {
        failures.push(CLAUSE_PROPORTIONAL.to_string());
    }
    let delta = f3.disc();
    if delta == 0 {
        failures.push(CLAUSE_DEGENERATE.to_string());
    } else if is_square(delta) || is_square(-delta) {
        failures.push(CLAUSE_REDUCIBLE.to_string());
    }
    NhReport { passed: failures.is_empty(), failures }
}

impl Surface {
    /// Builds a surface, rejecting zero forms and surfaces failing the admissibility check.
    pub fn new(f1: LinearForm, f2: LinearForm, f3: QuadraticForm) -> Result<Self, Error> {
        if (f1.a, f1.b) == (0, 0) || (f2.a, f2.b) == (0, 0) {
            return Err(Error::InvalidInput("linear forms must be nonzero".into()));
        }
        let bound = 1i64 << 20;
        for c in [f1.a, f1.b, f2.a, f2.b, f3.a, f3.b, f3.c] {
            if c.abs() > bound {
                return Err(Error::InvalidInput(format!("coefficient {c} exceeds 2^20")));
            }
        }
        let report = validate_nh(f1, f2, f3);
        if !report.passed {
            return Err(Error::NotAdmissible(report.failures.join(",")));
        }
        let inv = compute_invariants(f1, f2, f3);
        Ok(Surface { f1, f2, f3, inv })
    }

    pub fn from_coeffs(f1: [i64; 2], f2: [i64; 2], f3: [i64; 3]) -> Result<Self, Error> {
        Surface::new(
            LinearForm::new(f1[0], f1[1]),
            LinearForm::new(f2[0], f2[1]),
            QuadraticForm::new(f3[0], f3[1], f3[2]),
        )
    }

    pub fn from_file(file: &SurfaceFile) -> Result<Self, Error> {
        Surface::from_coeffs(file.f1, file.f2, file.f3)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: SurfaceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("surface JSON: {e}")))?;
        Surface::from_file(&file)
    }

    pub fn to_file(&self) -> SurfaceFile {
        SurfaceFile { f1: [self.f1.a, self.f1.b], f2: [self.f2.a, self.f2.b], f3: [self.f3.a, self.f3.b, self.f3.c] }
    }

    pub fn invariants(&self) -> &Invariants {
        &self.inv
    }

    pub fn forms(&self) -> [Form; 3] {
        [Form::Linear(self.f1), Form::Linear(self.f2), Form::Quadratic(self.f3)]
    }

    pub fn eval(&self, u: i128, v: i128) -> [i128; 3] {
        [self.f1.eval(u, v), self.f2.eval(u, v), self.f3.eval(u, v)]
    }

    /// The surface with `(x1, x2)` exchanged in every form.
    pub fn swapped(&self) -> Surface {
        let f1 = LinearForm::new(self.f1.b, self.f1.a);
        let f2 = LinearForm::new(self.f2.b, self.f2.a);
        let f3 = QuadraticForm::new(self.f3.b, self.f3.a, self.f3.c);
        let inv = compute_invariants(f1, f2, f3);
        Surface { f1, f2, f3, inv }
    }

    /// Membership in `R^ε(T)`: `|u|, |v| ≤ √T` and `ε_i F_i(u, v) > 0`.
    pub fn region_contains(&self, eps: SignVector, t: f64, u: f64, v: f64) -> bool {
        let r = t.sqrt();
        if u.abs() > r || v.abs() > r {
            return false;
        }
        self.forms().iter().zip(eps.0).all(|(f, e)| e as f64 * f.eval_f64(u, v) > 0.0)
    }

    /// Exact sign of `ε_i F_i` at an integer point, all three strictly positive.
    pub fn signs_positive(&self, eps: SignVector, u: i128, v: i128) -> bool {
        self.eval(u, v).iter().zip(eps.0).all(|(&f, e)| e as i128 * f > 0)
    }

    /// Area of `R^ε(1)`.
    ///
    /// The sign conditions are homogeneous, so the region is a union of angular sectors of
    /// the square `[-1,1]²`; each sector's area is integrated in closed form.
    pub fn region_volume(&self, eps: SignVector) -> f64 {
        let mut angles = vec![0.0];
        let mut push_dir = |x: f64, y: f64| {
            let t = y.atan2(x).rem_euclid(2.0 * PI);
            angles.push(t);
            angles.push((t + PI).rem_euclid(2.0 * PI));
        };
        for l in [self.f1, self.f2] {
            push_dir(-(l.b as f64), l.a as f64);
        }
        let q = self.f3;
        let disc = q.disc();
        if disc > 0 {
            let sd = (disc as f64).sqrt();
            if q.a != 0 {
                for s in [-1.0, 1.0] {
                    push_dir((-(q.c as f64) + s * sd) / (2.0 * q.a as f64), 1.0);
                }
            } else {
                push_dir(1.0, 0.0);
                push_dir(-(q.b as f64), q.c as f64);
            }
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        angles.push(2.0 * PI);
        let mut total = 0.0;
        for w in angles.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo < 1e-15 {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let (x, y) = (mid.cos(), mid.sin());
            let inside = self.forms().iter().zip(eps.0).all(|(f, e)| e as f64 * f.eval_f64(x, y) > 0.0);
            if inside {
                total += square_sector_area(hi) - square_sector_area(lo);
            }
        }
        total
    }

    /// Midpoint-rule estimate of the same area on an `n × n` grid, with the
    /// Richardson-extrapolated value from the `n/2` grid.
    pub fn region_volume_grid(&self, eps: SignVector, n: usize) -> (f64, f64) {
        let count = |n: usize| -> f64 {
            let h = 2.0 / n as f64;
            let mut hits = 0u64;
            for i in 0..n {
                let u = -1.0 + (i as f64 + 0.5) * h;
                for j in 0..n {
                    let v = -1.0 + (j as f64 + 0.5) * h;
                    if self.region_contains(eps, 1.0, u, v) {
                        hits += 1;
                    }
                }
            }
            hits as f64 * h * h
        };
        let fine = count(n);
        let coarse = count(n / 2);
        (fine, 2.0 * fine - coarse)
    }

    /// `max{|x0|, |x1|, |x2|, |x3|/δ, |x4|/δ}`.
    pub fn height(&self, x: [i64; 5]) -> Result<f64, Error> {
        if x.iter().all(|&c| c == 0) {
            return Err(Error::InvalidInput("height of the zero vector".into()));
        }
        let d = self.inv.delta_height();
        let a = x[..3].iter().map(|c| c.unsigned_abs() as f64).fold(0.0, f64::max);
        let b = x[3].unsigned_abs().max(x[4].unsigned_abs()) as f64 / d;
        Ok(a.max(b))
    }

    /// Exact test `height(x) ≤ bound`.
    pub fn height_le(&self, x: [i64; 5], bound: u64) -> bool {
        let b = bound as u128;
        x[..3].iter().all(|c| c.unsigned_abs() as u128 <= b)
            && x[3..].iter().all(|c| {
                let c = c.unsigned_abs() as u128;
                c * c <= self.inv.height_radicand as u128 * b * b
            })
    }

    /// `a(D, Δ) = (D1, Δ12Δ13)(D2, Δ12Δ23)(D3, Δ(Δ13, Δ23))`.
    pub fn a_factor(&self, d: [u64; 3]) -> u64 {
        let i = &self.inv;
        a_factor_raw(d, i.delta, i.delta12, i.delta13, i.delta23)
    }

    /// The same product applied to `D'_i = D_i/(D_i, ℓ_i)` and the content-reduced resultants.
    pub fn a_factor_reduced(&self, d: [u64; 3]) -> u64 {
        let i = &self.inv;
        let l = i.contents.map(|c| c as i128);
        let dp = [0, 1, 2].map(|k| d[k] / gcd_u(d[k], i.contents[k]));
        a_factor_raw(
            dp,
            i.delta / (l[2] * l[2]),
            i.delta12 / (l[0] * l[1]),
            i.delta13 / (l[0] * l[0] * l[2]),
            i.delta23 / (l[1] * l[1] * l[2]),
        )
    }
}

fn a_factor_raw(d: [u64; 3], delta: i128, d12: i128, d13: i128, d23: i128) -> u64 {
    let g = |x: u64, y: i128| -> u64 { gcd_i128(x as i128, y) as u64 };
    g(d[0], d12 * d13) * g(d[1], d12 * d23) * g(d[2], delta * gcd_i128(d13, d23))
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// Area of [-1,1]² swept by polar angles in [0, θ], θ ∈ [0, 2π].
fn square_sector_area(theta: f64) -> f64 {
    let quarters = (theta / FRAC_PI_2).floor().min(3.0);
    let phi = theta - quarters * FRAC_PI_2;
    let partial = if phi <= FRAC_PI_4 { phi.tan() / 2.0 } else { 1.0 - (FRAC_PI_2 - phi).tan() / 2.0 };
    quarters + partial
}

fn compute_invariants(f1: LinearForm, f2: LinearForm, f3: QuadraticForm) -> Invariants {
    let delta = f3.disc();
    let delta12 = f1.a as i128 * f2.b as i128 - f2.a as i128 * f1.b as i128;
    let delta13 = f3.eval(-(f1.b as i128), f1.a as i128);
    let delta23 = f3.eval(-(f2.b as i128), f2.a as i128);
    let abs = |x: i64| x.unsigned_abs();
    let height_radicand = (abs(f1.a) + abs(f1.b)) * (abs(f2.a) + abs(f2.b)) * (abs(f3.a) + abs(f3.b) + abs(f3.c));
    let l_infinity = [f1.a, f1.b, f2.a, f2.b, f3.a, f3.b, f3.c].iter().map(|&c| abs(c)).max().unwrap();
    let res = [delta12, delta13, delta23];
    Invariants {
        delta,
        delta12,
        delta13,
        delta23,
        delta_star: delta12 * delta13 * delta23 * delta,
        contents: [f1.content(), f2.content(), f3.content()],
        height_radicand,
        l_infinity,
        rad1: res.map(|r| radical_mod4(r.unsigned_abs() as u64, 1)),
        rad3: res.map(|r| radical_mod4(r.unsigned_abs() as u64, 3)),
    }
}

/// Resultant of two binary forms given by coefficient lists `[x1^d, ..., x2^d]`.
pub fn form_resultant(f: &[i64], g: &[i64]) -> i128 {
    // Res(F, G) for binary forms equals the univariate resultant of F(x, 1), G(x, 1)
    // taken with formal degrees; coefficients are passed lowest degree first.
    let fl: Vec<i128> = f.iter().rev().map(|&c| c as i128).collect();
    let gl: Vec<i128> = g.iter().rev().map(|&c| c as i128).collect();
    formal_resultant(&fl, &gl)
}

fn formal_resultant(f: &[i128], g: &[i128]) -> i128 {
    let m = f.len() - 1;
    let n = g.len() - 1;
    if f[m] == 0 || g[n] == 0 {
        // Leading coefficient vanishes: build the Sylvester matrix with formal degrees.
        let size = m + n;
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
        return det_small(a);
    }
    resultant(f, g)
}

fn det_small(a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut total = 0i128;
    for col in 0..n {
        if a[0][col] == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(j, _)| j != col).map(|(_, &v)| v).collect())
            .collect();
        let sign = if col % 2 == 0 { 1 } else { -1 };
        total += sign * a[0][col] * det_small(minor);
    }
    total
}

/// Sample surfaces used throughout the tests and the CLI documentation.
pub mod samples {
    use super::Surface;

    /// `(u, v, u² + uv + v²)`.
    pub fn s0() -> Surface {
        Surface::from_coeffs([1, 0], [0, 1], [1, 1, 1]).unwrap()
    }

    /// `(u, u + 3v, u² + 2v²)`.
    pub fn s1() -> Surface {
        Surface::from_coeffs([1, 0], [1, 3], [1, 2, 0]).unwrap()
    }

    /// `(2u + v, u − v, u² + 3v²)`.
    pub fn s2() -> Surface {
        Surface::from_coeffs([2, 1], [1, -1], [1, 3, 0]).unwrap()
    }
}

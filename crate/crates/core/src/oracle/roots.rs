//! Aberth–Ehrlich simultaneous root iteration.

use num_complex::Complex64;
use serde::Serialize;

use crate::charpoly::CharPoly;

pub const MAX_ITERATIONS: usize = 200;
pub const CORRECTION_REL: f64 = 1e-12;
/// Roots whose normwise backward error exceeds this are not accepted.
pub const BACKWARD_ERROR_MAX: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// `|P(z)|` at each root.
    pub residuals: Vec<f64>,
    /// `|P(z)| / Σ|aᵢ||z|ⁱ` at each root.
    pub backward_errors: Vec<f64>,
    pub max_real: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl RootSet {
    /// Converged, with every root a near-exact root of a nearby polynomial.
    pub fn accepted(&self) -> bool {
        self.converged && self.backward_errors.iter().all(|&e| e <= BACKWARD_ERROR_MAX)
    }

    /// Smallest pairwise distance between roots (infinite for one root).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.roots.iter().enumerate() {
            for b in &self.roots[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// Ascending coefficients `a₀..aₙ` of a monic polynomial given as `c₁..cₙ`.
fn ascending(c: &CharPoly<f64>) -> Vec<f64> {
    let mut a: Vec<f64> = c.coeffs().iter().rev().copied().collect();
    a.push(1.0);
    a
}

/// Double-double value `hi + lo`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }

    fn renorm(s: f64, e: f64) -> Self {
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::renorm(s, err + self.lo + o.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::renorm(p, e + self.lo * b)
    }
}

#[derive(Clone, Copy)]
struct DdComplex {
    re: Dd,
    im: Dd,
}

impl DdComplex {
    fn zero() -> Self {
        DdComplex { re: Dd::new(0.0), im: Dd::new(0.0) }
    }

    fn mul_add(self, z: Complex64, c: DdComplex) -> Self {
        DdComplex {
            re: self.re.mul_f64(z.re).add(self.im.mul_f64(z.im).neg()).add(c.re),
            im: self.re.mul_f64(z.im).add(self.im.mul_f64(z.re)).add(c.im),
        }
    }

    fn value(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

/// `P(z)` and `P'(z)` by Horner's rule in double-double arithmetic. Near a
/// multiple root this shrinks the region where both are lost to roundoff.
fn eval_compensated(a: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let (mut p, mut dp) = (DdComplex::zero(), DdComplex::zero());
    for &coef in a.iter().rev() {
        dp = dp.mul_add(z, p);
        let c = DdComplex { re: Dd::new(coef), im: Dd::new(0.0) };
        p = p.mul_add(z, c);
    }
    (p.value(), dp.value())
}

fn abs_eval(a: &[f64], r: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &coef| acc * r + coef.abs())
}

/// Starting points on circles whose radii come from the upper convex hull
/// of `(i, ln|aᵢ|)`, so roots of very different magnitudes get matching
/// initial guesses.
fn initial_guesses(a: &[f64]) -> Vec<Complex64> {
    let n = a.len() - 1;
    let pts: Vec<(usize, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (i, c.abs().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(n);
    let offset = 0.7;
    for pair in hull.windows(2) {
        let ((i0, y0), (i1, y1)) = (pair[0], pair[1]);
        let count = i1 - i0;
        let radius = ((y0 - y1) / count as f64).exp();
        for k in 0..count {
            let theta = std::f64::consts::TAU * (k as f64 / count as f64 + i1 as f64 / n as f64) + offset;
            z.push(Complex64::from_polar(radius, theta));
        }
    }
    z
}

/// All complex roots of `λⁿ + c₁λⁿ⁻¹ + … + cₙ`.
pub fn poly_roots(c: &CharPoly<f64>) -> RootSet {
    let full = ascending(c);
    // Exact zero roots are split off so the hull starts at a nonzero a₀.
    let zeros = full.iter().take_while(|&&x| x == 0.0).count();
    let a = &full[zeros..];
    let degree = a.len() - 1;

    let mut z = initial_guesses(a);
    let mut done = vec![false; degree];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|d| !d) {
        iterations += 1;
        for i in 0..degree {
            if done[i] {
                continue;
            }
            let (p, dp) = eval_compensated(a, z[i]);
            let bound = abs_eval(a, z[i].norm());
            if p.norm() <= 4.0 * f64::EPSILON * f64::EPSILON * bound {
                // At roundoff level; further corrections are noise.
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !w.is_finite() {
                continue;
            }
            z[i] -= w;
            if w.norm() <= CORRECTION_REL * z[i].norm() {
                done[i] = true;
            }
        }
    }
    let converged = done.iter().all(|&d| d);

    z.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
    let (residuals, backward_errors): (Vec<f64>, Vec<f64>) = z
        .iter()
        .map(|&r| {
            let p = eval_compensated(&full, r).0.norm();
            let scale = abs_eval(&full, r.norm());
            (p, if scale > 0.0 { p / scale } else { 0.0 })
        })
        .unzip();
    let max_real = z.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
    RootSet {
        roots: z,
        residuals,
        backward_errors,
        max_real,
        converged,
        iterations,
    }
}

/// Coefficients `c₁..cₙ` of `Π(λ − rᵢ)`; imaginary parts are dropped.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (k, &v) in acc.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v * r;
        }
        acc = next;
    }
    acc[1..].iter().map(|v| v.re).collect()
}

//! Small dense matrices over a scalar ring and their characteristic
//! polynomials.
//!
//! The coefficients of `P(λ) = λⁿ + c₁λⁿ⁻¹ + … + cₙ` are obtained from sums of
//! principal minors, `c_m = (−1)^m Σ_{|K|=m} J_K`. Real matrices also have a
//! Faddeev–LeVerrier implementation so the two routes can check each other.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{GammaPoly, GammaRatio};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

/// LU pivots below this fraction of the largest entry count as zero.
pub const LU_PIVOT_REL: f64 = 1e-13;

/// Commutative ring with identity. Division is not required.
pub trait Ring:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;

    /// Determinant of a row-major `n × n` block (`n ≥ 1`).
    fn det_dense(n: usize, entries: &[Self]) -> Self {
        det_expansion(n, entries)
    }
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn det_dense(n: usize, entries: &[Self]) -> Self {
        lu_det(n, entries)
    }
}

impl Ring for GammaPoly {
    fn zero() -> Self {
        GammaPoly::zero()
    }

    fn one() -> Self {
        GammaPoly::constant(1.0)
    }
}

impl Ring for GammaRatio {
    fn zero() -> Self {
        GammaPoly::zero().into()
    }

    fn one() -> Self {
        GammaPoly::constant(1.0).into()
    }
}

/// Division-free Laplace expansion, memoized over column subsets.
///
/// `minor[mask]` holds the determinant of the leading `popcount(mask)` rows
/// restricted to the columns in `mask`; the full determinant is
/// `minor[2ⁿ − 1]`. Costs `O(n 2ⁿ)` ring multiplications.
fn det_expansion<S: Ring>(n: usize, a: &[S]) -> S {
    let full = (1usize << n) - 1;
    let mut minor: Vec<Option<S>> = vec![None; full + 1];
    minor[0] = Some(S::one());
    for mask in 1..=full {
        let k = mask.count_ones() as usize;
        let row = k - 1;
        let mut acc: Option<S> = None;
        let mut pos = 0;
        for col in 0..n {
            if mask & (1 << col) == 0 {
                continue;
            }
            let rest = minor[mask & !(1 << col)].as_ref().expect("smaller masks done first");
            let term = a[row * n + col].clone() * rest.clone();
            let negative = (row + pos) % 2 == 1;
            acc = Some(match (acc, negative) {
                (None, false) => term,
                (None, true) => -term,
                (Some(s), false) => s + term,
                (Some(s), true) => s - term,
            });
            pos += 1;
        }
        minor[mask] = acc;
    }
    minor[full].take().expect("nonempty mask")
}

fn lu_factor(n: usize, a: &mut [f64]) -> Option<(Vec<usize>, bool)> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tiny = LU_PIVOT_REL * scale;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, a[i * n + k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty range");
        if pivot < tiny {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            odd = !odd;
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            a[i * n + k] = f;
            for j in k + 1..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    Some((perm, odd))
}

/// Determinant by LU with partial pivoting; numerically singular gives 0.
pub fn lu_det(n: usize, entries: &[f64]) -> f64 {
    let mut a = entries.to_vec();
    match lu_factor(n, &mut a) {
        None => 0.0,
        Some((_, odd)) => {
            let d: f64 = (0..n).map(|i| a[i * n + i]).product();
            if odd {
                -d
            } else {
                d
            }
        }
    }
}

/// Solves `A x = b` for row-major `A`; `None` if `A` is numerically singular.
pub fn lu_solve(n: usize, entries: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let mut a = entries.to_vec();
    let (perm, _) = lu_factor(n, &mut a)?;
    let mut x: Vec<f64> = perm.iter().map(|&p| rhs[p]).collect();
    for i in 0..n {
        for j in 0..i {
            x[i] -= a[i * n + j] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            x[i] -= a[i * n + j] * x[j];
        }
        x[i] /= a[i * n + i];
    }
    Some(x)
}

/// Square matrix of dimension 2..=8, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Ring> SquareMatrix<S> {
    pub fn new(n: usize, entries: Vec<S>) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::Dimension(n));
        }
        if entries.len() != n * n {
            return Err(Error::EntryCount {
                n,
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::EntryCount {
                n,
                expected: n * n,
                got: n * (n - 1) + bad.len(),
            });
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { S::one() } else { S::zero() })
            .collect();
        Self::new(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.entries.chunks(self.n)
    }

    pub fn map<T: Ring>(&self, f: impl Fn(&S) -> T) -> SquareMatrix<T> {
        SquareMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let entries = (0..n * n)
            .map(|k| self.entries[(k % n) * n + k / n].clone())
            .collect();
        Self { n, entries }
    }

    pub fn trace(&self) -> S {
        (1..self.n).fold(self.get(0, 0).clone(), |acc, i| acc + self.get(i, i).clone())
    }

    /// Principal submatrix on the index set `idx` (rows and columns).
    fn principal_block(&self, idx: &[usize]) -> Vec<S> {
        idx.iter()
            .flat_map(|&i| idx.iter().map(move |&j| self.get(i, j).clone()))
            .collect()
    }
}

/// LU for reals; division-free expansion for polynomial scalars.
pub fn det<S: Ring>(m: &SquareMatrix<S>) -> S {
    S::det_dense(m.n, &m.entries)
}

/// `Σ_{|K|=order} J_K`, subsets enumerated in lexicographic order.
pub fn principal_minor_sum<S: Ring>(m: &SquareMatrix<S>, order: usize) -> Result<S> {
    if order == 0 || order > m.n {
        return Err(Error::MinorOrder { order, n: m.n });
    }
    let sum = (0..m.n)
        .combinations(order)
        .map(|k| S::det_dense(order, &m.principal_block(&k)))
        .reduce(|a, b| a + b)
        .expect("at least one subset");
    Ok(sum)
}

/// Monic characteristic polynomial, stored as `c₁..cₙ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharPoly<S> {
    coeffs: Vec<S>,
}

impl<S: Ring> CharPoly<S> {
    /// `coeffs` are `c₁..cₙ`; the leading 1 is implicit.
    pub fn new(coeffs: Vec<S>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Degree {
                got: 0,
                expected: ">= 1",
            });
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `c_m` for `1 ≤ m ≤ n`.
    pub fn c(&self, m: usize) -> &S {
        &self.coeffs[m - 1]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// `[1, c₁, …, cₙ]`.
    pub fn monic_coeffs(&self) -> Vec<S> {
        std::iter::once(S::one())
            .chain(self.coeffs.iter().cloned())
            .collect()
    }

    pub fn map<T: Ring>(&self, f: impl Fn(&S) -> T) -> CharPoly<T> {
        CharPoly {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }
}

impl CharPoly<f64> {
    pub fn eval(&self, lambda: f64) -> f64 {
        self.coeffs.iter().fold(1.0, |acc, c| acc * lambda + c)
    }
}

/// Characteristic polynomial from sums of principal minors.
pub fn charpoly_minors<S: Ring>(m: &SquareMatrix<S>) -> CharPoly<S> {
    let coeffs = (1..=m.n)
        .map(|order| {
            let s = principal_minor_sum(m, order).expect("order in range");
            if order % 2 == 1 {
                -s
            } else {
                s
            }
        })
        .collect();
    CharPoly { coeffs }
}

/// Characteristic polynomial by the Faddeev–LeVerrier recursion
/// `M₁ = I`, `c_k = −tr(A M_k)/k`, `M_{k+1} = A M_k + c_k I`.
pub fn charpoly_leverrier(m: &SquareMatrix<f64>) -> CharPoly<f64> {
    let n = m.n;
    let a = &m.entries;
    let mut mk = vec![0.0; n * n];
    for i in 0..n {
        mk[i * n + i] = 1.0;
    }
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..=n {
        let mut am = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let ail = a[i * n + l];
                if ail == 0.0 {
                    continue;
                }
                for j in 0..n {
                    am[i * n + j] += ail * mk[l * n + j];
                }
            }
        }
        let tr: f64 = (0..n).map(|i| am[i * n + i]).sum();
        let ck = -tr / k as f64;
        coeffs.push(ck);
        for i in 0..n {
            am[i * n + i] += ck;
        }
        mk = am;
    }
    CharPoly { coeffs }
}

//! Routh arrays and stability verdicts.
//!
//! Rows one and two hold `1, c₂, c₄, …` and `c₁, c₃, …`; every later entry is
//! `R[i][j] = (R[i−1][1]·R[i−2][j+1] − R[i−2][1]·R[i−1][j+1]) / R[i−1][1]`.
//! All roots lie in the open left half-plane iff the first column is
//! positive.
//!
//! Arrays can be built over reals or over [`GammaRatio`], in which case the
//! verdict reads the sign of each entry's leading coefficient in `Γ`.

use std::fmt;
use std::ops::Div;

use serde::Serialize;

use crate::charpoly::{CharPoly, Ring};
use crate::error::{Error, Result};
use crate::gamma::{GammaPoly, GammaRatio};

/// A computed real entry is zero when it is at most this fraction of the
/// larger of the two products it was formed from.
pub const ROUTH_ZERO_REL: f64 = 1e-9;

/// Scalars a Routh array can be built over.
pub trait RouthScalar: Ring + Div<Output = Self> {
    /// Whether `diff = t1 − t2` is a cancellation to zero.
    fn cancels(t1: &Self, t2: &Self, diff: &Self) -> bool;
    fn is_zero_value(&self) -> bool;
    /// Sign as `Γ → ∞` for Γ-ratios; ordinary sign for reals.
    fn sign(&self) -> f64;
    /// Real value, or the leading coefficient for Γ-ratios.
    fn margin_value(&self) -> f64;
}

impl RouthScalar for f64 {
    fn cancels(t1: &f64, t2: &f64, diff: &f64) -> bool {
        diff.abs() <= ROUTH_ZERO_REL * t1.abs().max(t2.abs())
    }

    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }

    fn sign(&self) -> f64 {
        if *self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }

    fn margin_value(&self) -> f64 {
        *self
    }
}

impl RouthScalar for GammaRatio {
    fn cancels(_: &Self, _: &Self, diff: &Self) -> bool {
        diff.is_zero()
    }

    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }

    fn sign(&self) -> f64 {
        self.leading().signum()
    }

    fn margin_value(&self) -> f64 {
        self.leading().k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Indeterminate,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Indeterminate => "indeterminate",
        })
    }
}

/// Stability verdict plus the smallest first-column value (real arrays) or
/// smallest leading coefficient (Γ arrays).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub stability: Stability,
    pub margin: f64,
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RouthArray<S> {
    degree: usize,
    rows: Vec<Vec<S>>,
    /// The final first-column entry cancelled to zero.
    last_vanishes: bool,
}

impl<S: RouthScalar> RouthArray<S> {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// All `n + 1` rows, each padded with zeros to the same width.
    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    /// `R[i][j]`, 1-based as in the usual tabulation.
    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.rows[i - 1][j - 1]
    }

    pub fn first_column(&self) -> Vec<S> {
        self.rows.iter().map(|r| r[0].clone()).collect()
    }
}

struct Partial<S> {
    rows: Vec<Vec<S>>,
    /// Row whose first entry is zero while a later row still needs it.
    zero_pivot: Option<usize>,
    last_vanishes: bool,
}

fn build<S: RouthScalar>(p: &CharPoly<S>) -> Partial<S> {
    let n = p.degree();
    let width = n / 2 + 1;
    let monic = p.monic_coeffs();
    let seed = |offset: usize| -> Vec<S> {
        (0..width)
            .map(|j| monic.get(offset + 2 * j).cloned().unwrap_or_else(S::zero))
            .collect()
    };
    let mut rows = vec![seed(0), seed(1)];
    if rows[1][0].is_zero_value() {
        return Partial {
            rows,
            zero_pivot: Some(2),
            last_vanishes: false,
        };
    }
    let mut last_vanishes = false;
    for i in 3..=n + 1 {
        let prev = &rows[i - 2];
        let older = &rows[i - 3];
        let pivot = prev[0].clone();
        let at = |r: &Vec<S>, j: usize| r.get(j).cloned().unwrap_or_else(S::zero);
        let mut row = Vec::with_capacity(width);
        let mut vanished = false;
        for j in 0..width {
            let t1 = pivot.clone() * at(older, j + 1);
            let t2 = older[0].clone() * at(prev, j + 1);
            let diff = t1.clone() - t2.clone();
            if S::cancels(&t1, &t2, &diff) {
                vanished |= j == 0;
                row.push(S::zero());
            } else {
                row.push(diff / pivot.clone());
            }
        }
        rows.push(row);
        if vanished {
            if i <= n {
                return Partial {
                    rows,
                    zero_pivot: Some(i),
                    last_vanishes: false,
                };
            }
            last_vanishes = true;
        }
    }
    Partial {
        rows,
        zero_pivot: None,
        last_vanishes,
    }
}

/// Builds the full Routh array; a vanishing first-column entry that would
/// be divided by is reported as [`Error::ZeroPivot`].
pub fn build_routh<S: RouthScalar>(p: &CharPoly<S>) -> Result<RouthArray<S>> {
    let partial = build(p);
    if let Some(row) = partial.zero_pivot {
        return Err(Error::ZeroPivot { row });
    }
    Ok(RouthArray {
        degree: p.degree(),
        rows: partial.rows,
        last_vanishes: partial.last_vanishes,
    })
}

fn judge<S: RouthScalar>(first_column: impl Iterator<Item = S>, degenerate: bool) -> Verdict {
    let mut margin = f64::INFINITY;
    let mut negative = false;
    for v in first_column {
        margin = margin.min(v.margin_value());
        negative |= v.sign() < 0.0;
    }
    // A strictly negative entry means some Hurwitz determinant is negative,
    // which rules out stability even if the array breaks down later.
    let stability = if negative {
        Stability::Unstable
    } else if degenerate {
        Stability::Indeterminate
    } else {
        Stability::Stable
    };
    Verdict { stability, margin }
}

/// Verdict from the first column of a real array.
pub fn verdict(a: &RouthArray<f64>) -> Verdict {
    judge(a.rows.iter().map(|r| r[0]), a.last_vanishes)
}

/// Verdict from the signs of the leading Γ-coefficients of the first column.
pub fn verdict_leading(a: &RouthArray<GammaRatio>) -> Verdict {
    judge(a.rows.iter().map(|r| r[0].clone()), a.last_vanishes)
}

/// Builds and judges in one step; zero pivots become `Indeterminate`
/// unless an earlier entry is already negative.
pub fn routh_verdict<S: RouthScalar>(p: &CharPoly<S>) -> Verdict {
    let partial = build(p);
    judge(
        partial.rows.iter().map(|r| r[0].clone()),
        partial.zero_pivot.is_some() || partial.last_vanishes,
    )
}

/// Lifts a Γ-polynomial characteristic polynomial into the ratio field.
pub fn gamma_charpoly_to_ratio(p: &CharPoly<GammaPoly>) -> CharPoly<GammaRatio> {
    p.map(|c| GammaRatio::from(c.clone()))
}

fn cancelled_difference(t1: f64, t2: f64) -> f64 {
    let diff = t1 - t2;
    if f64::cancels(&t1, &t2, &diff) {
        0.0
    } else {
        diff
    }
}

/// The four degree-4 conditions `c₁, c₄, q₁, q₂ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Deg4Conditions {
    pub c1: f64,
    pub c4: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Deg4Conditions {
    pub fn verdict(&self) -> Verdict {
        let values = [self.c1, self.c4, self.q1, self.q2];
        let margin = values.iter().copied().fold(f64::INFINITY, f64::min);
        let stability = if values.iter().any(|&v| v < 0.0) {
            Stability::Unstable
        } else if values.contains(&0.0) {
            Stability::Indeterminate
        } else {
            Stability::Stable
        };
        Verdict { stability, margin }
    }
}

/// `q₁ = c₁c₂ − c₃`, `q₂ = c₃q₁ − c₁²c₄`.
pub fn rh_conditions_deg4(c: &CharPoly<f64>) -> Result<Deg4Conditions> {
    if c.degree() != 4 {
        return Err(Error::Degree {
            got: c.degree(),
            expected: "4",
        });
    }
    let (c1, c2, c3, c4) = (*c.c(1), *c.c(2), *c.c(3), *c.c(4));
    let q1 = cancelled_difference(c1 * c2, c3);
    let q2 = cancelled_difference(c3 * q1, c1 * c1 * c4);
    Ok(Deg4Conditions { c1, c4, q1, q2 })
}

/// Degree-5 quantities from the successive formulas
/// `q₁ = c₁c₂ − c₃`, `q₃ = c₁c₄ − c₅`, `q₂ = c₃q₁ − c₁q₃`,
/// `q₄ = q₂q₃ − c₅q₁²`.
///
/// The first column of the array is `1, c₁, q₁/c₁, q₂/q₁, q₄/(c₁q₂), c₅`.
/// With `c₅ = 0`, `q₂` reduces to the degree-4 form `c₃q₁ − c₁²c₄`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deg5Quantities<S> {
    pub q1: S,
    pub q2: S,
    pub q3: S,
    pub q4: S,
}

fn expect_degree5<S: Ring>(c: &CharPoly<S>) -> Result<[S; 5]> {
    if c.degree() != 5 {
        return Err(Error::Degree {
            got: c.degree(),
            expected: "5",
        });
    }
    Ok([1, 2, 3, 4, 5].map(|m| c.c(m).clone()))
}

pub fn deg5_quantities<S: Ring>(c: &CharPoly<S>) -> Result<Deg5Quantities<S>> {
    let [c1, c2, c3, c4, c5] = expect_degree5(c)?;
    let q1 = c1.clone() * c2 - c3.clone();
    let q3 = c1.clone() * c4 - c5.clone();
    let q2 = c3 * q1.clone() - c1 * q3.clone();
    let q4 = q2.clone() * q3.clone() - c5 * q1.clone() * q1.clone();
    Ok(Deg5Quantities { q1, q2, q3, q4 })
}

/// The fully expanded fifth-row quantity
/// `c₁[c₁c₂c₃c₄ + c₂c₃c₅ + 2c₁c₄c₅ − c₃²c₄ − c₁²c₄² − c₁c₂²c₅ − c₅²]`.
pub fn q4_full<S: Ring>(c: &CharPoly<S>) -> Result<S> {
    let [c1, c2, c3, c4, c5] = expect_degree5(c)?;
    let t = |xs: &[&S]| {
        xs.iter()
            .skip(1)
            .fold(xs[0].clone(), |acc, x| acc * (*x).clone())
    };
    let c1c4c5 = t(&[&c1, &c4, &c5]);
    let bracket = t(&[&c1, &c2, &c3, &c4]) + t(&[&c2, &c3, &c5]) + c1c4c5.clone() + c1c4c5
        - t(&[&c3, &c3, &c4])
        - t(&[&c1, &c1, &c4, &c4])
        - t(&[&c1, &c2, &c2, &c5])
        - t(&[&c5, &c5]);
    Ok(c1 * bracket)
}

impl fmt::Display for RouthArray<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.6e}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

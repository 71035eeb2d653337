//! Polynomials in the large parameter `Γ = 1/ε`.
//!
//! Jacobians of two-time-scale models carry whole rows with a factor of `Γ`.
//! [`GammaPoly`] keeps every power of `Γ` that arises, so lower-order terms
//! are only discarded when [`GammaPoly::leading`] is asked for the dominant
//! term. Additions prune terms that cancel to within floating-point dust.
//!
//! [`GammaRatio`] is the field of fractions used for Routh arrays, whose
//! entries are rational in `Γ`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A summed coefficient is dropped when its magnitude is at most this
/// fraction of the largest magnitude that contributed to it.
pub const CANCELLATION_REL: f64 = 1e-10;

/// Dominant term `k Γ^p` of a Γ-polynomial or Γ-ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeadingTerm {
    pub k: f64,
    pub p: i32,
}

impl LeadingTerm {
    /// Sentinel returned for the zero polynomial.
    pub const ZERO: LeadingTerm = LeadingTerm { k: 0.0, p: 0 };

    pub fn is_zero(&self) -> bool {
        self.k == 0.0
    }

    pub fn signum(&self) -> f64 {
        if self.k == 0.0 {
            0.0
        } else {
            self.k.signum()
        }
    }
}

impl fmt::Display for LeadingTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            0 => write!(f, "{}", self.k),
            1 => write!(f, "{}*G", self.k),
            p => write!(f, "{}*G^{}", self.k, p),
        }
    }
}

/// Polynomial in `Γ` with real coefficients and nonnegative integer exponents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GammaPoly {
    terms: BTreeMap<u32, f64>,
}

impl GammaPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(k: f64) -> Self {
        Self::monomial(k, 0)
    }

    /// `k Γ^p`.
    pub fn monomial(k: f64, p: u32) -> Self {
        let mut terms = BTreeMap::new();
        if k != 0.0 {
            terms.insert(p, k);
        }
        Self { terms }
    }

    /// `Γ` itself.
    pub fn gamma() -> Self {
        Self::monomial(1.0, 1)
    }

    /// Builds from `(coefficient, exponent)` pairs, summing repeated exponents.
    pub fn from_terms<I: IntoIterator<Item = (f64, u32)>>(terms: I) -> Self {
        terms
            .into_iter()
            .fold(Self::zero(), |acc, (k, p)| acc + Self::monomial(k, p))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `Γ^p` (zero when absent).
    pub fn coeff(&self, p: u32) -> f64 {
        self.terms.get(&p).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    fn min_exponent(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    /// `(exponent, coefficient)` pairs in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.terms.iter().map(|(&p, &k)| (p, k))
    }

    pub fn is_constant(&self) -> bool {
        self.degree().is_none_or(|d| d == 0)
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        // Horner from the top exponent down, skipping gaps with powi.
        let mut acc = 0.0;
        let mut prev: Option<u32> = None;
        for (&p, &k) in self.terms.iter().rev() {
            if let Some(q) = prev {
                acc *= gamma.powi((q - p) as i32);
            }
            acc += k;
            prev = Some(p);
        }
        match prev {
            Some(p) => acc * gamma.powi(p as i32),
            None => 0.0,
        }
    }

    /// Highest surviving power, or [`LeadingTerm::ZERO`].
    pub fn leading(&self) -> LeadingTerm {
        match self.terms.iter().next_back() {
            Some((&p, &k)) => LeadingTerm { k, p: p as i32 },
            None => LeadingTerm::ZERO,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&p, &k)| (p, k * s)).collect(),
        }
    }

    /// Multiplies by `Γ^-shift`; every exponent must be at least `shift`.
    fn shift_down(&self, shift: u32) -> Self {
        Self {
            terms: self.terms.iter().map(|(&p, &k)| (p - shift, k)).collect(),
        }
    }

    fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, k| m.max(k.abs()))
    }
}

fn keep(sum: f64, largest: f64) -> bool {
    sum != 0.0 && sum.abs() > CANCELLATION_REL * largest
}

impl Add for &GammaPoly {
    type Output = GammaPoly;

    fn add(self, rhs: &GammaPoly) -> GammaPoly {
        let mut terms = self.terms.clone();
        for (&p, &k) in &rhs.terms {
            match terms.get(&p).copied() {
                Some(a) => {
                    let sum = a + k;
                    if keep(sum, a.abs().max(k.abs())) {
                        terms.insert(p, sum);
                    } else {
                        terms.remove(&p);
                    }
                }
                None => {
                    terms.insert(p, k);
                }
            }
        }
        GammaPoly { terms }
    }
}

impl Mul for &GammaPoly {
    type Output = GammaPoly;

    fn mul(self, rhs: &GammaPoly) -> GammaPoly {
        let mut acc: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for (&p, &a) in &self.terms {
            for (&q, &b) in &rhs.terms {
                let prod = a * b;
                let e = acc.entry(p + q).or_insert((0.0, 0.0));
                e.0 += prod;
                e.1 = e.1.max(prod.abs());
            }
        }
        GammaPoly {
            terms: acc
                .into_iter()
                .filter(|&(_, (sum, largest))| keep(sum, largest))
                .map(|(p, (sum, _))| (p, sum))
                .collect(),
        }
    }
}

impl Neg for &GammaPoly {
    type Output = GammaPoly;

    fn neg(self) -> GammaPoly {
        self.scale(-1.0)
    }
}

impl Sub for &GammaPoly {
    type Output = GammaPoly;

    fn sub(self, rhs: &GammaPoly) -> GammaPoly {
        self + &(-rhs)
    }
}

macro_rules! forward_owned {
    ($ty:ty: $($tr:ident $m:ident),*) => {$(
        impl $tr for $ty {
            type Output = $ty;
            fn $m(self, rhs: $ty) -> $ty {
                (&self).$m(&rhs)
            }
        }
    )*};
}

forward_owned!(GammaPoly: Add add, Sub sub, Mul mul);

impl Neg for GammaPoly {
    type Output = GammaPoly;

    fn neg(self) -> GammaPoly {
        -&self
    }
}

impl From<f64> for GammaPoly {
    fn from(k: f64) -> Self {
        Self::constant(k)
    }
}

fn write_coeff_term(f: &mut fmt::Formatter<'_>, k: f64, p: u32) -> fmt::Result {
    match p {
        0 => write!(f, "{k}"),
        1 => write!(f, "{k}*G"),
        _ => write!(f, "{k}*G^{p}"),
    }
}

/// Text form `k*G^p + ...`, highest power first.
impl fmt::Display for GammaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (&p, &k)) in self.terms.iter().rev().enumerate() {
            if i == 0 {
                write_coeff_term(f, k, p)?;
            } else if k < 0.0 {
                write!(f, " - ")?;
                write_coeff_term(f, -k, p)?;
            } else {
                write!(f, " + ")?;
                write_coeff_term(f, k, p)?;
            }
        }
        Ok(())
    }
}

impl Serialize for GammaPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn parse_term(term: &str, negative: bool, whole: &str) -> Result<(f64, u32)> {
    let bad = || Error::Parse(format!("malformed Γ-polynomial term {term:?} in {whole:?}"));
    let sign = if negative { -1.0 } else { 1.0 };
    let term = term.trim();
    if term.is_empty() {
        return Err(bad());
    }
    match term.split_once(['G', 'g']) {
        Some((coef, power)) => {
            let coef = coef.trim();
            let coef = coef.strip_suffix('*').unwrap_or(coef).trim();
            let k = if coef.is_empty() {
                1.0
            } else {
                coef.parse::<f64>().map_err(|_| bad())?
            };
            let power = power.trim();
            let p = if power.is_empty() {
                1
            } else {
                power
                    .strip_prefix('^')
                    .ok_or_else(bad)?
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| bad())?
            };
            Ok((sign * k, p))
        }
        None => Ok((sign * term.parse::<f64>().map_err(|_| bad())?, 0)),
    }
}

/// Parses `a+b*G^p` style text. `G` (or `g`) stands for `Γ`; a bare `G`
/// means `1*G^1`.
impl FromStr for GammaPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pieces: Vec<(bool, &str)> = Vec::new();
        let mut start = 0;
        let mut negative = false;
        let mut prev: Option<char> = None;
        for (i, ch) in s.char_indices() {
            if (ch == '+' || ch == '-') && !matches!(prev, Some('e' | 'E' | '^')) {
                pieces.push((negative, &s[start..i]));
                negative = ch == '-';
                start = i + 1;
            }
            if !ch.is_whitespace() {
                prev = Some(ch);
            }
        }
        pieces.push((negative, &s[start..]));
        // A leading sign leaves an empty first piece.
        if pieces.len() > 1 && pieces[0].1.trim().is_empty() {
            pieces.remove(0);
        }
        let terms = pieces
            .into_iter()
            .map(|(neg, chunk)| parse_term(chunk, neg, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(terms))
    }
}

/// Ratio of two Γ-polynomials; the denominator is never zero.
///
/// Stored with the denominator's leading coefficient scaled to one and any
/// common power of `Γ` removed. No polynomial gcd is taken.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRatio {
    num: GammaPoly,
    den: GammaPoly,
}

impl GammaRatio {
    /// Returns `None` when `den` is the zero polynomial.
    pub fn new(num: GammaPoly, den: GammaPoly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        Some(Self::normalized(num, den))
    }

    fn normalized(num: GammaPoly, den: GammaPoly) -> Self {
        if num.is_zero() {
            return Self {
                num,
                den: GammaPoly::constant(1.0),
            };
        }
        let shift = num
            .min_exponent()
            .unwrap_or(0)
            .min(den.min_exponent().unwrap_or(0));
        let (num, den) = if shift > 0 {
            (num.shift_down(shift), den.shift_down(shift))
        } else {
            (num, den)
        };
        let lead = den.leading().k;
        Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        }
    }

    pub fn numerator(&self) -> &GammaPoly {
        &self.num
    }

    pub fn denominator(&self) -> &GammaPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Leading behaviour as `Γ → ∞`; the exponent may be negative.
    pub fn leading(&self) -> LeadingTerm {
        let n = self.num.leading();
        if n.is_zero() {
            return LeadingTerm::ZERO;
        }
        let d = self.den.leading();
        LeadingTerm {
            k: n.k / d.k,
            p: n.p - d.p,
        }
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        self.num.eval(gamma) / self.den.eval(gamma)
    }

    /// Magnitude scale of the numerator, used when printing.
    pub fn numerator_scale(&self) -> f64 {
        self.num.max_abs()
    }
}

impl From<GammaPoly> for GammaRatio {
    fn from(num: GammaPoly) -> Self {
        Self::normalized(num, GammaPoly::constant(1.0))
    }
}

impl Add for &GammaRatio {
    type Output = GammaRatio;

    fn add(self, rhs: &GammaRatio) -> GammaRatio {
        if self.den == rhs.den {
            return GammaRatio::normalized(&self.num + &rhs.num, self.den.clone());
        }
        GammaRatio::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Neg for &GammaRatio {
    type Output = GammaRatio;

    fn neg(self) -> GammaRatio {
        GammaRatio {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Sub for &GammaRatio {
    type Output = GammaRatio;

    fn sub(self, rhs: &GammaRatio) -> GammaRatio {
        self + &(-rhs)
    }
}

impl Mul for &GammaRatio {
    type Output = GammaRatio;

    fn mul(self, rhs: &GammaRatio) -> GammaRatio {
        GammaRatio::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

/// Panics if `rhs` is zero; callers check pivots first.
impl Div for &GammaRatio {
    type Output = GammaRatio;

    fn div(self, rhs: &GammaRatio) -> GammaRatio {
        assert!(!rhs.is_zero(), "division by a zero Γ-ratio");
        GammaRatio::normalized(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

forward_owned!(GammaRatio: Add add, Sub sub, Mul mul, Div div);

impl Neg for GammaRatio {
    type Output = GammaRatio;

    fn neg(self) -> GammaRatio {
        -&self
    }
}

impl fmt::Display for GammaRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == GammaPoly::constant(1.0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl Serialize for GammaRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Orders leading terms by asymptotic magnitude, then coefficient.
pub fn compare_leading(a: &LeadingTerm, b: &LeadingTerm) -> Ordering {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => a.p.cmp(&b.p).then(a.k.abs().total_cmp(&b.k.abs())),
    }
}

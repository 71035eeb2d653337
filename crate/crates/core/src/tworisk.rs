//! Five-state SEIR model with a protected and an unprotected susceptible
//! group, in the rescaled two-time-scale form
//!
//! ```text
//! εX' = −(ρ+ε)X + bQY/N
//! εY' = ρX − Y
//!  S' = 1 − S − bQY/N
//!  U' = f + ψS − Σ̄U − bUY/N
//!  N' = 1 − N − mY
//! ```
//!
//! with `Q = (1−σ)U + σS`, `Σ = ψ + ω` and `Σ̄ = Σ + 1`. Latent and
//! infectious classes are `E = εX`, `I = εY`; recovered is
//! `R = N − S − εX − εY`.

use serde::{Deserialize, Serialize};

use crate::charpoly::{charpoly_minors, SquareMatrix};
use crate::error::{Error, Result};
use crate::gamma::GammaPoly;
use crate::oracle;
use crate::routh::{Stability, Verdict};

/// Rates in units of 1/time, plus the susceptibility factor and recruitment split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimParams {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub mu: f64,
    #[serde(rename = "Psi")]
    pub psi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub sigma: f64,
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub epsilon: f64,
    pub b: f64,
    pub m: f64,
    pub rho: f64,
    pub psi: f64,
    pub omega: f64,
    pub sigma: f64,
    pub f: f64,
}

/// Values derived from [`Params`], embedded in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    #[serde(rename = "Sigma")]
    pub sigma_total: f64,
    #[serde(rename = "Sigma_bar")]
    pub sigma_bar: f64,
    pub kappa: f64,
    pub h: f64,
    pub c: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub z_hat: f64,
}

pub const EPS_REGIME_MAX: f64 = 0.1;

impl Params {
    /// Checks the admissible ranges; returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        let all = [
            self.epsilon,
            self.b,
            self.m,
            self.rho,
            self.psi,
            self.omega,
            self.sigma,
            self.f,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.m) {
            return bad("m must lie in [0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("sigma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.f) {
            return bad("f must lie in [0, 1]");
        }
        if self.psi < 0.0 || self.omega < 0.0 {
            return bad("psi and omega must be nonnegative");
        }
        if self.b <= 0.0 || self.rho <= 0.0 {
            return bad("b and rho must be positive");
        }
        let mut warnings = Vec::new();
        if self.epsilon > EPS_REGIME_MAX {
            warnings.push(format!(
                "epsilon = {} is outside the asymptotic regime (> {EPS_REGIME_MAX})",
                self.epsilon
            ));
        }
        Ok(warnings)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }

    pub fn sigma_total(&self) -> f64 {
        self.psi + self.omega
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_total() + 1.0
    }

    pub fn kappa(&self) -> f64 {
        self.sigma * self.b
    }

    pub fn h(&self) -> f64 {
        (1.0 - self.sigma) * self.b
    }

    pub fn r0(&self) -> f64 {
        let sb = self.sigma_bar();
        (self.h() * (self.psi + self.f) + self.kappa() * sb) / sb
    }

    pub fn bifurcation_c(&self) -> f64 {
        self.h() * (self.psi + self.f) - (1.0 - self.kappa()) * self.sigma_bar()
    }

    /// Largest `z` with `p ≥ 0`.
    pub fn z_hat(&self) -> f64 {
        (self.b - 1.0) / (1.0 - self.m)
    }

    pub fn derived(&self) -> Derived {
        Derived {
            sigma_total: self.sigma_total(),
            sigma_bar: self.sigma_bar(),
            kappa: self.kappa(),
            h: self.h(),
            c: self.bifurcation_c(),
            r0: self.r0(),
            z_hat: self.z_hat(),
        }
    }
}

pub fn nondimensionalize(d: &DimParams) -> Result<Params> {
    let rates = [d.beta, d.gamma, d.delta, d.eta, d.mu, d.psi, d.omega];
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidParameter(
            "rates must be finite and nonnegative".into(),
        ));
    }
    if d.mu <= 0.0 {
        return Err(Error::InvalidParameter("mu must be positive".into()));
    }
    let fast = d.gamma + d.delta + d.mu;
    let p = Params {
        epsilon: d.mu / fast,
        b: d.beta / fast,
        m: d.delta / fast,
        rho: d.eta / fast,
        psi: d.psi / d.mu,
        omega: d.omega / d.mu,
        sigma: d.sigma,
        f: d.f,
    };
    p.validate()?;
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

impl State {
    pub fn to_array(&self) -> [f64; 5] {
        [self.x, self.y, self.s, self.u, self.n]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        let [x, y, s, u, n] = a;
        Self { x, y, s, u, n }
    }

    pub fn recovered(&self, eps: f64) -> f64 {
        self.n - self.s - eps * (self.x + self.y)
    }
}

pub fn dfe(p: &Params) -> State {
    State {
        x: 0.0,
        y: 0.0,
        s: 1.0,
        u: (p.psi + p.f) / p.sigma_bar(),
        n: 1.0,
    }
}

/// Eigenvalue verdict for the disease-free equilibrium at finite ε.
pub fn dfe_stability(p: &Params, eps: f64) -> Verdict {
    let rs = oracle::eigvals(&exact_jacobian(p, eps, &dfe(p)));
    oracle::eigen_verdict(&rs)
}

/// Coefficients `(a₂, a₁, a₀)` of the endemic quadratic `G(z)`; `a₀ = −c`.
pub fn ede_quadratic(p: &Params) -> [f64; 3] {
    let (m, s, k) = (p.m, p.sigma, p.kappa());
    let a2 = (1.0 - m) * s;
    let a1 = (1.0 - k) + (1.0 - m) * s * p.sigma_bar() + (1.0 - m) * (1.0 - s) * p.psi
        - (1.0 - s) * m * p.f;
    [a2, a1, -p.bifurcation_c()]
}

/// Per-capita endemic quantities, to leading order in ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdeState {
    pub z: f64,
    pub y: f64,
    pub s: f64,
    pub u: f64,
    pub p: f64,
    pub q: f64,
    pub v: f64,
    pub r: f64,
    pub w: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

impl EdeState {
    pub fn from_z(p: &Params, z: f64) -> Self {
        let y = z / p.b;
        let inv_n = 1.0 + p.m * y;
        let s = 1.0 - (1.0 - p.m) * y;
        let u = (p.psi * s + p.f * inv_n) / (p.sigma_bar() + z);
        Self {
            z,
            y,
            s,
            u,
            p: s - u,
            q: p.sigma * s + (1.0 - p.sigma) * u,
            v: p.kappa() * y,
            r: p.h() * y,
            w: p.sigma_total() + z,
            n: 1.0 / inv_n,
        }
    }

    /// Leading-order state with `X = Y/ρ`.
    pub fn to_state(&self, p: &Params) -> State {
        let y = self.y * self.n;
        State {
            x: y / p.rho,
            y,
            s: self.s * self.n,
            u: self.u * self.n,
            n: self.n,
        }
    }
}

pub const Z_HAT_TOL: f64 = 1e-9;

/// Positive admissible roots of `G`, ascending.
pub fn solve_ede(p: &Params) -> Vec<EdeState> {
    let [a2, a1, a0] = ede_quadratic(p);
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    let t = -0.5 * (a1 + a1.signum() * disc.sqrt());
    let mut roots = if t == 0.0 {
        vec![0.0]
    } else if disc == 0.0 {
        vec![t / a2]
    } else {
        vec![t / a2, a0 / t]
    };
    roots.sort_by(f64::total_cmp);
    let z_max = p.z_hat() + Z_HAT_TOL;
    roots
        .into_iter()
        .filter(|&z| z > 0.0 && z <= z_max)
        .map(|z| EdeState::from_z(p, z))
        .collect()
}

/// The Γ-Jacobian at an endemic equilibrium, rows and columns ordered
/// `X, Y, S, U, N`.
pub fn jacobian_gamma(p: &Params, e: &EdeState) -> SquareMatrix<GammaPoly> {
    let g = GammaPoly::monomial;
    let k = GammaPoly::constant;
    let rows = vec![
        vec![
            GammaPoly::from_terms([(-p.rho, 1), (-1.0, 0)]),
            g(1.0, 1),
            g(e.v, 1),
            g(e.r, 1),
            g(-e.y, 1),
        ],
        vec![g(p.rho, 1), g(-1.0, 1), k(0.0), k(0.0), k(0.0)],
        vec![k(0.0), k(-1.0), k(-(e.v + 1.0)), k(-e.r), k(e.y)],
        vec![k(0.0), k(-p.b * e.u), k(p.psi), k(-(e.w + 1.0)), k(e.u * e.z)],
        vec![k(0.0), k(-p.m), k(0.0), k(0.0), k(-1.0)],
    ];
    SquareMatrix::from_rows(rows).expect("5x5")
}

/// Jacobian of the true right-hand side at finite ε.
pub fn exact_jacobian(p: &Params, eps: f64, st: &State) -> SquareMatrix<f64> {
    let mut j = scaled_jacobian(p, eps, st);
    for v in &mut j[..10] {
        *v /= eps;
    }
    SquareMatrix::new(5, j).expect("5x5")
}

/// Jacobian of [`scaled_residual`], row-major.
pub fn scaled_jacobian(p: &Params, eps: f64, st: &State) -> Vec<f64> {
    let State { y, s, u, n, .. } = *st;
    let (b, k, h) = (p.b, p.kappa(), p.h());
    let q = (1.0 - p.sigma) * u + p.sigma * s;
    let yn = y / n;
    let t_y = b * q / n;
    let t_n = -b * q * y / (n * n);
    vec![
        -(p.rho + eps), t_y, k * yn, h * yn, t_n,
        p.rho, -1.0, 0.0, 0.0, 0.0,
        0.0, -t_y, -1.0 - k * yn, -h * yn, -t_n,
        0.0, -b * u / n, p.psi, -p.sigma_bar() - b * yn, b * u * y / (n * n),
        0.0, -p.m, 0.0, 0.0, -1.0,
    ]
}

/// Right-hand side with the two fast equations multiplied by ε.
pub fn scaled_residual(p: &Params, eps: f64, st: &State) -> [f64; 5] {
    let State { x, y, s, u, n } = *st;
    let force = p.b * ((1.0 - p.sigma) * u + p.sigma * s) * y / n;
    [
        -(p.rho + eps) * x + force,
        p.rho * x - y,
        1.0 - s - force,
        p.f + p.psi * s - p.sigma_bar() * u - p.b * u * y / n,
        1.0 - n - p.m * y,
    ]
}

/// Time derivative of the rescaled state.
pub fn rescaled_rhs(p: &Params, eps: f64, st: &State) -> [f64; 5] {
    let mut d = scaled_residual(p, eps, st);
    d[0] /= eps;
    d[1] /= eps;
    d
}

/// Leading terms `kᵢΓ^{pᵢ}` of the characteristic coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeadingCharPoly {
    pub k: [f64; 5],
    pub p: [i32; 5],
}

/// Leading terms from principal minors of [`jacobian_gamma`].
pub fn leading_charpoly(p: &Params, e: &EdeState) -> LeadingCharPoly {
    let cp = charpoly_minors(&jacobian_gamma(p, e));
    let mut out = LeadingCharPoly {
        k: [0.0; 5],
        p: [0; 5],
    };
    for i in 0..5 {
        let lt = cp.c(i + 1).leading();
        out.k[i] = lt.k;
        out.p[i] = lt.p;
    }
    out
}

fn abc_terms(p: &Params, e: &EdeState) -> [Vec<f64>; 3] {
    let (k, h, m, b) = (p.kappa(), p.h(), p.m, p.b);
    let a_terms = vec![k - m, b * h * e.u];
    let a: f64 = a_terms.iter().sum();
    let b_terms = vec![a, (k - m) * e.w, m * h * e.u * e.z, h * p.psi];
    let bb: f64 = b_terms.iter().sum();
    let rb = p.rho + 1.0;
    let c_terms = vec![
        rb * a,
        rb * rb * a * (e.v + 1.0),
        rb * rb * a * (e.w + 1.0),
        -rb * rb * bb,
        -p.rho * e.y * a * a,
    ];
    [a_terms, b_terms, c_terms]
}

/// `k₁..k₅` from their closed forms.
pub fn closed_form_k(p: &Params, e: &EdeState) -> [f64; 5] {
    let [a, b, _] = abc_terms(p, e).map(|t| t.iter().sum::<f64>());
    let k1 = p.rho + 1.0;
    let k2 = 1.0 + k1 + k1 * (e.v + 1.0 + e.w + 1.0);
    let k3 = p.rho * e.y * a;
    let k5 = p.rho * e.y * b;
    [k1, k2, k3, k3 + k5, k5]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityConditions {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub k: [f64; 5],
    pub q: [f64; 2],
    /// Each of A, B, C divided by the sum of magnitudes of its terms.
    pub normalized: [f64; 3],
}

/// Normalized values at or below this are treated as zero.
pub const CONDITION_ZERO_REL: f64 = 1e-9;

impl StabilityConditions {
    pub fn q1(&self) -> f64 {
        self.q[0]
    }

    pub fn q2(&self) -> f64 {
        self.q[1]
    }

    pub fn min_normalized(&self) -> f64 {
        self.normalized.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn verdict(&self) -> Verdict {
        let margin = self.min_normalized();
        let stability = if margin > CONDITION_ZERO_REL {
            Stability::Stable
        } else if margin < -CONDITION_ZERO_REL {
            Stability::Unstable
        } else {
            Stability::Indeterminate
        };
        Verdict { stability, margin }
    }
}

pub fn stability_conditions(p: &Params, e: &EdeState) -> StabilityConditions {
    let terms = abc_terms(p, e);
    let [a, b, c] = terms.clone().map(|t| t.iter().sum::<f64>());
    let normalized = terms.map(|t| {
        let total: f64 = t.iter().sum();
        let scale: f64 = t.iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            0.0
        } else {
            total / scale
        }
    });
    let k = closed_form_k(p, e);
    let q1 = k[0] * k[1] - k[2];
    let q2 = k[2] * q1 - k[0] * k[0] * k[3];
    StabilityConditions {
        a,
        b,
        c,
        k,
        q: [q1, q2],
        normalized,
    }
}

/// Whether the parameters fall under the hypothesis `m ≤ κ or m ≤ 0.75`.
pub fn mild_mortality(p: &Params) -> bool {
    p.m <= p.kappa() || p.m <= 0.75
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop1Report {
    /// `R₀ ≤ 1`, so any endemic equilibrium is a backward-bifurcation branch.
    pub applies: bool,
    pub ede_count: usize,
    pub m_gt_kappa: bool,
    pub m_gt_075: bool,
    pub counterexample: bool,
}

/// Endemic equilibria with `R₀ ≤ 1` must have `m > κ` and `m > 0.75`.
pub fn check_prop1(p: &Params) -> Prop1Report {
    let applies = p.bifurcation_c() <= 0.0;
    let ede_count = if applies { solve_ede(p).len() } else { 0 };
    let m_gt_kappa = p.m > p.kappa();
    let m_gt_075 = p.m > 0.75;
    Prop1Report {
        applies,
        ede_count,
        m_gt_kappa,
        m_gt_075,
        counterexample: ede_count > 0 && !(m_gt_kappa && m_gt_075),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> Params {
        Params {
            epsilon: 1e-3,
            b: 2.0,
            m: 0.0,
            rho: 1.0,
            psi: 0.0,
            omega: 0.0,
            sigma: 0.5,
            f: 1.0,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn nondimensional_example() {
        let d = DimParams {
            beta: 0.3,
            gamma: 0.09,
            delta: 0.01,
            eta: 0.2,
            mu: 0.0001,
            psi: 0.0,
            omega: 0.0,
            sigma: 0.5,
            f: 1.0,
        };
        let p = nondimensionalize(&d).unwrap();
        let t = 0.1001;
        assert!(close(p.epsilon, 0.0001 / t, 1e-14));
        assert!(close(p.b, 0.3 / t, 1e-14));
        assert!(close(p.m, 0.01 / t, 1e-14));
        assert!(close(p.rho, 0.2 / t, 1e-14));
        assert_eq!((p.psi, p.omega, p.sigma_bar()), (0.0, 0.0, 1.0));
        assert_eq!(nondimensionalize(&DimParams { delta: 0.0, ..d }).unwrap().m, 0.0);
        assert!(nondimensionalize(&DimParams { mu: 0.0, ..d }).is_err());
    }

    #[test]
    fn validation() {
        let p = worked();
        assert!(p.validate().unwrap().is_empty());
        assert_eq!(p.with_epsilon(0.5).validate().unwrap().len(), 1);
        assert!(Params { m: 1.0, ..p }.validate().is_err());
        assert!(Params { sigma: 0.0, ..p }.validate().is_err());
        assert!(Params { epsilon: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn worked_point_thresholds() {
        let p = worked();
        assert_eq!((p.kappa(), p.h(), p.sigma_bar()), (1.0, 1.0, 1.0));
        assert_eq!((p.r0(), p.bifurcation_c()), (2.0, 1.0));
        let s1 = Params { sigma: 1.0, ..p };
        assert_eq!((s1.h(), s1.r0()), (0.0, 2.0));
        let u = dfe(&p);
        assert_eq!((u.u, u.s, u.n, u.x, u.y), (1.0, 1.0, 1.0, 0.0, 0.0));
        let lim = dfe(&Params { psi: 1e3, f: 0.0, ..p });
        assert!((lim.u - 1.0).abs() < 1e-3);
        assert_eq!(dfe(&Params { f: 0.0, omega: 2.0, ..p }).u, 0.0);
    }

    #[test]
    fn worked_point_quadratic_and_ede() {
        let p = worked();
        assert_eq!(ede_quadratic(&p), [0.5, 0.5, -1.0]);
        let ede = solve_ede(&p);
        assert_eq!(ede.len(), 1);
        let e = ede[0];
        for (got, want) in [
            (e.z, 1.0),
            (e.y, 0.5),
            (e.s, 0.5),
            (e.u, 0.5),
            (e.p, 0.0),
            (e.q, 0.5),
            (e.n, 1.0),
            (e.v, 0.5),
            (e.r, 0.5),
            (e.w, 1.0),
        ] {
            assert!(close(got, want, 1e-14), "{e:?}");
        }
        assert!(solve_ede(&Params { b: 0.5, ..p }).is_empty());
    }

    #[test]
    fn worked_point_jacobian() {
        let p = worked();
        let e = solve_ede(&p)[0];
        let j = jacobian_gamma(&p, &e);
        for c in 0..4 {
            assert!(j.get(4, c).is_zero());
        }
        assert_eq!(j.trace().to_string(), "-2*G - 5.5");
        let minor12 = j.get(0, 0) * j.get(1, 1) - j.get(0, 1) * j.get(1, 0);
        assert_eq!(minor12.to_string(), "1*G");
    }

    #[test]
    fn worked_point_conditions() {
        let p = worked();
        let e = solve_ede(&p)[0];
        let sc = stability_conditions(&p, &e);
        assert!(close(sc.a, 2.0, 1e-14) && close(sc.b, 3.0, 1e-14) && close(sc.c, 18.0, 1e-14));
        let want = [2.0, 10.0, 1.0, 2.5, 1.5];
        for (g, w) in sc.k.iter().zip(want) {
            assert!(close(*g, w, 1e-14));
        }
        assert!(close(sc.q1(), 19.0, 1e-14) && close(sc.q2(), 9.0, 1e-14));
        assert!(close(p.rho * e.y * sc.c, sc.q2(), 1e-12));
        assert_eq!(sc.verdict().stability, Stability::Stable);

        let lc = leading_charpoly(&p, &e);
        assert_eq!(lc.p, [1, 1, 2, 2, 2]);
        for (g, w) in lc.k.iter().zip(want) {
            assert!(close(*g, w, 1e-12), "{lc:?}");
        }
        let c1 = charpoly_minors(&jacobian_gamma(&p, &e));
        assert_eq!(c1.c(1).to_string(), "2*G + 5.5");
    }

    #[test]
    fn a_at_m_equals_kappa() {
        let p = Params { m: 0.5, sigma: 0.25, ..worked() };
        let e = solve_ede(&p)[0];
        let sc = stability_conditions(&p, &e);
        assert!(close(sc.a, p.b * p.h() * e.u, 1e-14));
        assert!(sc.a > 0.0);
    }

    #[test]
    fn exact_jacobian_matches_finite_differences() {
        let p = Params { m: 0.3, psi: 0.7, omega: 1.1, f: 0.4, ..worked() };
        let st = State { x: 0.3, y: 0.4, s: 0.6, u: 0.2, n: 0.9 };
        let eps = 0.01;
        let j = exact_jacobian(&p, eps, &st);
        let base = st.to_array();
        for col in 0..5 {
            let h = 1e-6;
            let mut up = base;
            let mut dn = base;
            up[col] += h;
            dn[col] -= h;
            let fu = rescaled_rhs(&p, eps, &State::from_array(up));
            let fd = rescaled_rhs(&p, eps, &State::from_array(dn));
            for row in 0..5 {
                let fd_val = (fu[row] - fd[row]) / (2.0 * h);
                assert!(close(*j.get(row, col), fd_val, 1e-6), "({row},{col})");
            }
        }
    }

    #[test]
    fn prop1_report() {
        let p = Params { b: 3.0, sigma: 1.0 / 6.0, m: 0.95, psi: 0.0, f: 1.0, omega: 4.2, ..worked() };
        assert!(p.bifurcation_c() < 0.0);
        let r = check_prop1(&p);
        assert_eq!(r.ede_count, 2);
        assert!(r.applies && !r.counterexample);
        assert!(!check_prop1(&Params { b: 0.5, ..worked() }).counterexample);
    }
}

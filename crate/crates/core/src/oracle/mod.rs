//! Independent numeric checks: polynomial roots, eigenvalues, equilibrium
//! refinement at finite ε, and time integration.

mod integrate;
mod newton;
mod roots;

pub use integrate::{simulate, simulate_with_recovered, Trajectory, MIN_SIM_EPS};
pub use newton::{newton_refine, MAX_ITERATIONS as NEWTON_MAX_ITERATIONS, RESIDUAL_TOL};
pub use roots::{poly_from_roots, poly_roots, RootSet, BACKWARD_ERROR_MAX};

use serde::Serialize;

use crate::charpoly::{charpoly_minors, SquareMatrix};
use crate::error::Result;
use crate::routh::{Stability, Verdict};
use crate::tworisk::{exact_jacobian, EdeState, Params, State};

/// Eigenvalues with `|Re λ|` at or below this are treated as marginal.
pub const EIGEN_MARGIN: f64 = 1e-8;
/// Root sets tighter than this are excluded from verdict comparisons.
pub const MIN_ROOT_SEPARATION: f64 = 1e-4;

pub fn eigvals(m: &SquareMatrix<f64>) -> RootSet {
    poly_roots(&charpoly_minors(m))
}

/// Stable iff the largest real part is below `−EIGEN_MARGIN`; the margin
/// reported is `−max Re λ`.
pub fn eigen_verdict(rs: &RootSet) -> Verdict {
    let stability = if rs.max_real < -EIGEN_MARGIN {
        Stability::Stable
    } else if rs.max_real > EIGEN_MARGIN {
        Stability::Unstable
    } else {
        Stability::Indeterminate
    };
    Verdict {
        stability,
        margin: -rs.max_real,
    }
}

/// Numeric verdict at a finite-ε equilibrium refined from a leading-order one.
#[derive(Clone, Debug, Serialize)]
pub struct NumericCheck {
    pub eps: f64,
    pub refined: State,
    /// Max-norm distance between the refined and leading-order states.
    pub displacement: f64,
    pub max_real: f64,
    pub verdict: Verdict,
    /// Root finder converged with small backward errors.
    pub roots_accepted: bool,
    /// Two eigenvalues closer than [`MIN_ROOT_SEPARATION`].
    pub clustered: bool,
    /// Accepted and not clustered, so fit for verdict comparisons.
    pub reliable: bool,
}

pub fn state_distance(a: &State, b: &State) -> f64 {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn equilibrium_check(p: &Params, eps: f64, guess: &State) -> Result<NumericCheck> {
    let refined = newton_refine(p, eps, guess)?;
    let rs = eigvals(&exact_jacobian(p, eps, &refined));
    let roots_accepted = rs.accepted();
    let clustered = rs.min_separation() < MIN_ROOT_SEPARATION;
    Ok(NumericCheck {
        eps,
        refined,
        displacement: state_distance(&refined, guess),
        max_real: rs.max_real,
        verdict: eigen_verdict(&rs),
        roots_accepted,
        clustered,
        reliable: roots_accepted && !clustered,
    })
}

pub fn ede_check(p: &Params, eps: f64, e: &EdeState) -> Result<NumericCheck> {
    equilibrium_check(p, eps, &e.to_state(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::principal_minor_sum;
    use crate::tworisk::{closed_form_k, dfe, dfe_stability, scaled_residual, solve_ede};

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

    fn sorted_re(rs: &RootSet) -> Vec<f64> {
        let mut v: Vec<f64> = rs.roots.iter().map(|r| r.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn eigvals_examples() {
        let d = SquareMatrix::from_rows(vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -2.0, 0.0],
            vec![0.0, 0.0, -3.0],
        ])
        .unwrap();
        let re = sorted_re(&eigvals(&d));
        for (g, w) in re.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((g - w).abs() < 1e-12);
        }
        let c = SquareMatrix::from_rows(vec![vec![0.0, 1.0], vec![-2.0, -3.0]]).unwrap();
        let re = sorted_re(&eigvals(&c));
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn worked_point_refines_and_is_stable() {
        let p = worked();
        let e = solve_ede(&p)[0];
        let chk = ede_check(&p, 1e-3, &e).unwrap();
        let res = scaled_residual(&p, 1e-3, &chk.refined);
        assert!(res.iter().all(|r| r.abs() <= RESIDUAL_TOL));
        assert!(chk.max_real < 0.0);
        assert_eq!(chk.verdict.stability, Stability::Stable);
        assert!(chk.reliable);
    }

    #[test]
    fn displacement_is_linear_in_eps() {
        let p = worked();
        let e = solve_ede(&p)[0];
        let d2 = ede_check(&p, 1e-2, &e).unwrap().displacement;
        let d3 = ede_check(&p, 1e-3, &e).unwrap().displacement;
        let ratio = d2 / d3;
        assert!((5.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn dfe_is_a_fixed_point() {
        let p = worked();
        let st = dfe(&p);
        assert_eq!(newton_refine(&p, 1e-3, &st).unwrap(), st);
    }

    #[test]
    fn exact_pair_minor_is_subdominant() {
        // At the finite-ε equilibrium the (1,2) entry is Γ + 1/ρ, so that
        // 2×2 minor carries no Γ term and c₂/Γ tends to k₂ − 1.
        let p = worked();
        let e = solve_ede(&p)[0];
        let k2 = closed_form_k(&p, &e)[1];
        for eps in [1e-4, 1e-5] {
            let st = newton_refine(&p, eps, &e.to_state(&p)).unwrap();
            let j = exact_jacobian(&p, eps, &st);
            let c2 = principal_minor_sum(&j, 2).unwrap();
            assert!((c2 * eps - (k2 - 1.0)).abs() < 1e-2, "{}", c2 * eps);
        }
    }

    #[test]
    fn dfe_verdicts() {
        let p = worked();
        let unstable = eigen_verdict(&eigvals(&exact_jacobian(&p, 1e-3, &dfe(&p))));
        assert_eq!(unstable.stability, Stability::Unstable);
        let q = Params { b: 0.5, ..p };
        let stable = eigen_verdict(&eigvals(&exact_jacobian(&q, 1e-3, &dfe(&q))));
        assert_eq!(stable.stability, Stability::Stable);
    }

    #[test]
    fn dfe_boundary_by_bisection() {
        // At finite ε the DFE loses stability at R₀ = 1 + ε/ρ rather than at
        // c = 0, so the boundary is located on the eigenvalues directly.
        let p = worked();
        let max_real = |b: f64| {
            let q = Params { b, ..p };
            eigvals(&exact_jacobian(&q, 1e-3, &dfe(&q))).max_real
        };
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if max_real(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = Params { b: lo, ..p };
        assert_eq!(dfe_stability(&q, 1e-3).stability, Stability::Indeterminate);
        assert!((q.r0() - (1.0 + 1e-3 / q.rho)).abs() < 1e-9);
    }
}

use crate::charpoly::lu_solve;
use crate::error::{Error, Result};
use crate::tworisk::{scaled_jacobian, scaled_residual, Params, State};

pub const MAX_ITERATIONS: usize = 50;
pub const RESIDUAL_TOL: f64 = 1e-12;

fn residual_norm(r: &[f64; 5]) -> f64 {
    r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Newton iteration on the equilibrium equations with the fast rows
/// multiplied by ε, so the system stays well scaled as ε → 0.
pub fn newton_refine(p: &Params, eps: f64, guess: &State) -> Result<State> {
    let mut x = guess.to_array();
    let mut res = scaled_residual(p, eps, guess);
    for _ in 0..MAX_ITERATIONS {
        if residual_norm(&res) <= RESIDUAL_TOL {
            return Ok(State::from_array(x));
        }
        let st = State::from_array(x);
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let Some(dx) = lu_solve(5, &scaled_jacobian(p, eps, &st), &rhs) else {
            break;
        };
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        res = scaled_residual(p, eps, &State::from_array(x));
    }
    let residual = residual_norm(&res);
    if residual <= RESIDUAL_TOL {
        return Ok(State::from_array(x));
    }
    Err(Error::NewtonDiverged {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

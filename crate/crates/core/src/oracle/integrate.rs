//! Dormand–Prince 5(4) with PI step-size control.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tworisk::{rescaled_rhs, Params, State};

/// Smallest ε accepted for time integration.
pub const MIN_SIM_EPS: f64 = 1e-6;
/// A trial step with any component below this is rejected.
pub const NEGATIVE_TOL: f64 = -1e-9;

const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Integrates `y' = f(y)` over `[0, t_end]`, recording every accepted step.
fn dopri5<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    y0: [f64; D],
    t_end: f64,
    tol: f64,
    h0: f64,
) -> Result<(Vec<f64>, Vec<[f64; D]>)> {
    let mut times = vec![0.0];
    let mut ys = vec![y0];
    let mut t = 0.0;
    let mut y = y0;
    let mut k = [[0.0; D]; 7];
    k[0] = f(&y);
    let mut h = h0.min(t_end);
    let mut err_old: f64 = 1e-4;
    let expo = 0.2 - 0.75 * BETA;

    while t < t_end {
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for s in 0..6 {
            let mut yi = y;
            for (j, a) in A[s].iter().enumerate() {
                for d in 0..D {
                    yi[d] += h * a * k[j][d];
                }
            }
            k[s + 1] = f(&yi);
            if s == 5 {
                // The last stage point is the fifth-order solution.
                let y_new = yi;
                let mut acc = 0.0;
                for d in 0..D {
                    let e: f64 = (0..7).map(|j| E[j] * k[j][d]).sum::<f64>() * h;
                    let sc = tol + tol * y[d].abs().max(y_new[d].abs());
                    acc += (e / sc).powi(2);
                }
                let err = (acc / D as f64).sqrt();
                let negative = y_new.iter().any(|&v| v < NEGATIVE_TOL);
                let fac11 = err.powf(expo);
                if err <= 1.0 && !negative && err.is_finite() {
                    let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                    err_old = err.max(1e-4);
                    t = if last { t_end } else { t + h };
                    y = y_new;
                    k[0] = k[6];
                    times.push(t);
                    ys.push(y);
                    h /= fac;
                } else if negative || !err.is_finite() {
                    h *= 0.5;
                } else {
                    h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                }
            }
        }
    }
    Ok((times, ys))
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub eps: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Co-integrated `R`, when requested.
    pub recovered: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// One row per accepted step; an `R` column is added when recovered
    /// was co-integrated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t", "X", "Y", "S", "U", "N"];
        if self.recovered.is_some() {
            header.push("R");
        }
        w.write_record(&header)?;
        for (i, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row: Vec<String> = std::iter::once(*t)
                .chain(s.to_array())
                .map(|v| v.to_string())
                .collect();
            if let Some(r) = &self.recovered {
                row.push(r[i].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_inputs(eps: f64, init: &State, t_end: f64, tol: f64) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidParameter(m));
    if !(eps >= MIN_SIM_EPS) {
        return bad(format!("simulation requires eps >= {MIN_SIM_EPS}"));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return bad("t_end must be finite and nonnegative".into());
    }
    if !(tol > 0.0) {
        return bad("tol must be positive".into());
    }
    if init.to_array().iter().any(|v| !(*v >= 0.0)) {
        return bad("initial state must be nonnegative".into());
    }
    if init.n <= 0.0 {
        return bad("initial N must be positive".into());
    }
    Ok(())
}

fn initial_step(eps: f64, t_end: f64) -> f64 {
    (1e-3 * eps).min(t_end.max(f64::MIN_POSITIVE))
}

pub fn simulate(p: &Params, eps: f64, init: &State, t_end: f64, tol: f64) -> Result<Trajectory> {
    check_inputs(eps, init, t_end, tol)?;
    let f = |y: &[f64; 5]| rescaled_rhs(p, eps, &State::from_array(*y));
    let (times, ys) = dopri5(f, init.to_array(), t_end, tol, initial_step(eps, t_end))?;
    Ok(Trajectory {
        eps,
        times,
        states: ys.into_iter().map(State::from_array).collect(),
        recovered: None,
    })
}

/// As [`simulate`], also integrating `R' = (1 − m − ε)Y − R` from
/// `R(0) = N − S − εX − εY`.
pub fn simulate_with_recovered(
    p: &Params,
    eps: f64,
    init: &State,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_inputs(eps, init, t_end, tol)?;
    let f = |y: &[f64; 6]| {
        let st = State::from_array([y[0], y[1], y[2], y[3], y[4]]);
        let [a, b, c, d, e] = rescaled_rhs(p, eps, &st);
        [a, b, c, d, e, (1.0 - p.m - eps) * y[1] - y[5]]
    };
    let a = init.to_array();
    let y0 = [a[0], a[1], a[2], a[3], a[4], init.recovered(eps)];
    let (times, ys) = dopri5(f, y0, t_end, tol, initial_step(eps, t_end))?;
    Ok(Trajectory {
        eps,
        times,
        states: ys
            .iter()
            .map(|y| State::from_array([y[0], y[1], y[2], y[3], y[4]]))
            .collect(),
        recovered: Some(ys.iter().map(|y| y[5]).collect()),
    })
}

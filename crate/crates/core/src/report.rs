//! Input file formats and per-point reports.

use serde::{Deserialize, Serialize};

use crate::charpoly::{charpoly_minors, SquareMatrix};
use crate::error::{Error, Result};
use crate::gamma::GammaPoly;
use crate::oracle::{ede_check, equilibrium_check, NumericCheck};
use crate::routh::{gamma_charpoly_to_ratio, routh_verdict, Stability, Verdict};
use crate::sweep::NEAR_MARGIN;
use crate::tworisk::{
    dfe, dfe_stability, jacobian_gamma, leading_charpoly, nondimensionalize, solve_ede,
    stability_conditions, DimParams, EdeState, LeadingCharPoly, Params, State,
    StabilityConditions,
};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum ParamsFile {
    Dimensionless(Params),
    Dimensional(DimParams),
}

/// Parses and validates a parameter file; returns the parameters and any
/// advisory warnings.
pub fn parse_params(text: &str) -> Result<(Params, Vec<String>)> {
    let p = match serde_json::from_str::<ParamsFile>(text)? {
        ParamsFile::Dimensionless(p) => p,
        ParamsFile::Dimensional(d) => nondimensionalize(&d)?,
    };
    let warnings = p.validate()?;
    Ok((p, warnings))
}

pub fn parse_state(text: &str) -> Result<State> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    n: usize,
    entries: Vec<Vec<Entry>>,
}

#[derive(Clone, Debug)]
pub enum MatrixInput {
    Real(SquareMatrix<f64>),
    Gamma(SquareMatrix<GammaPoly>),
}

/// Matrix JSON with numeric entries, or Γ-polynomial strings such as
/// `"-2*G + 1"`; one string entry makes the whole matrix polynomial.
pub fn parse_matrix(text: &str) -> Result<MatrixInput> {
    let file: MatrixFile = serde_json::from_str(text)?;
    if file.entries.len() != file.n || file.entries.iter().any(|r| r.len() != file.n) {
        return Err(Error::EntryCount {
            n: file.n,
            expected: file.n * file.n,
            got: file.entries.iter().map(Vec::len).sum(),
        });
    }
    let flat: Vec<Entry> = file.entries.into_iter().flatten().collect();
    if flat.iter().all(|e| matches!(e, Entry::Real(_))) {
        let vals = flat
            .into_iter()
            .map(|e| match e {
                Entry::Real(v) => v,
                Entry::Text(_) => unreachable!(),
            })
            .collect();
        return Ok(MatrixInput::Real(SquareMatrix::new(file.n, vals)?));
    }
    let vals = flat
        .into_iter()
        .map(|e| match e {
            Entry::Real(v) => Ok(GammaPoly::constant(v)),
            Entry::Text(s) => s.parse::<GammaPoly>(),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixInput::Gamma(SquareMatrix::new(file.n, vals)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct DfeReport {
    pub state: State,
    /// Eigenvalue verdict at the parameter file's ε.
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdeReport {
    pub state: EdeState,
    pub conditions: StabilityConditions,
    pub leading: LeadingCharPoly,
    /// From the signs of A, B, C.
    pub verdict: Verdict,
    /// From the leading-order Routh array of the Γ-Jacobian.
    pub routh_leading: Verdict,
    pub numeric: Option<NumericCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub dfe: Stability,
    pub ede: Vec<Stability>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub params: Params,
    pub derived: crate::tworisk::Derived,
    pub warnings: Vec<String>,
    pub r0: f64,
    pub c: f64,
    pub dfe: DfeReport,
    pub ede: Vec<EdeReport>,
    pub verdicts: Verdicts,
}

impl AnalyzeReport {
    pub fn any_indeterminate(&self) -> bool {
        self.verdicts.dfe == Stability::Indeterminate
            || self.verdicts.ede.contains(&Stability::Indeterminate)
    }
}

pub fn analyze(p: &Params) -> Result<AnalyzeReport> {
    let mut warnings = p.validate()?;
    let dfe_verdict = dfe_stability(p, p.epsilon);
    let mut ede = Vec::new();
    for e in solve_ede(p) {
        let conditions = stability_conditions(p, &e);
        let cp = charpoly_minors(&jacobian_gamma(p, &e));
        let numeric = match ede_check(p, p.epsilon, &e) {
            Ok(c) => Some(c),
            Err(err) => {
                warnings.push(format!("numeric check at z = {}: {err}", e.z));
                None
            }
        };
        ede.push(EdeReport {
            state: e,
            verdict: conditions.verdict(),
            conditions,
            leading: leading_charpoly(p, &e),
            routh_leading: routh_verdict(&gamma_charpoly_to_ratio(&cp)),
            numeric,
        });
    }
    let verdicts = Verdicts {
        dfe: dfe_verdict.stability,
        ede: ede.iter().map(|e| e.verdict.stability).collect(),
    };
    Ok(AnalyzeReport {
        params: *p,
        derived: p.derived(),
        warnings,
        r0: p.r0(),
        c: p.bifurcation_c(),
        dfe: DfeReport {
            state: dfe(p),
            verdict: dfe_verdict,
        },
        ede,
        verdicts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub eps: f64,
    /// `"dfe"` or `"ede1"`, `"ede2"`, … in ascending `z`.
    pub equilibrium: String,
    pub asymptotic: Stability,
    /// Normalized margin of the asymptotic conditions.
    pub margin: f64,
    pub near_margin: bool,
    pub max_real: Option<f64>,
    pub numeric: Option<Stability>,
    pub agree: Option<bool>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub params: Params,
    pub warnings: Vec<String>,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn any_indeterminate(&self) -> bool {
        self.rows.iter().any(|r| {
            r.asymptotic == Stability::Indeterminate || r.numeric == Some(Stability::Indeterminate)
        })
    }
}

/// DFE verdict from the sign of `c`, with `c` normalized by its terms.
fn dfe_asymptotic(p: &Params) -> Verdict {
    let gain = p.h() * (p.psi + p.f);
    let loss = (1.0 - p.kappa()) * p.sigma_bar();
    let scale = gain.abs() + loss.abs();
    let margin = if scale == 0.0 { 0.0 } else { -(gain - loss) / scale };
    let stability = if margin > 1e-9 {
        Stability::Stable
    } else if margin < -1e-9 {
        Stability::Unstable
    } else {
        Stability::Indeterminate
    };
    Verdict { stability, margin }
}

fn verify_row(
    eps: f64,
    equilibrium: String,
    asym: Verdict,
    check: Result<NumericCheck>,
) -> VerifyRow {
    let near_margin = asym.margin.abs() < NEAR_MARGIN;
    let mut row = VerifyRow {
        eps,
        equilibrium,
        asymptotic: asym.stability,
        margin: asym.margin,
        near_margin,
        max_real: None,
        numeric: None,
        agree: None,
        status: if near_margin { "near-margin" } else { "ok" }.to_string(),
    };
    match check {
        Ok(c) => {
            row.max_real = Some(c.max_real);
            row.numeric = Some(c.verdict.stability);
            row.agree = Some(c.verdict.stability == asym.stability);
            if !c.reliable {
                row.status = "unreliable-roots".into();
            }
        }
        Err(e) => row.status = format!("skipped: {e}"),
    }
    row
}

/// Asymptotic against numeric verdicts for every equilibrium at each ε.
pub fn verify(p: &Params, eps_list: &[f64]) -> Result<VerifyReport> {
    let mut warnings = p.validate()?;
    let ede = solve_ede(p);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let pe = p.with_epsilon(eps);
        warnings.extend(pe.validate()?);
        rows.push(verify_row(
            eps,
            "dfe".into(),
            dfe_asymptotic(p),
            equilibrium_check(p, eps, &dfe(p)),
        ));
        for (i, e) in ede.iter().enumerate() {
            let asym = stability_conditions(p, e).verdict();
            rows.push(verify_row(
                eps,
                format!("ede{}", i + 1),
                asym,
                ede_check(p, eps, e),
            ));
        }
    }
    warnings.dedup();
    Ok(VerifyReport {
        params: *p,
        warnings,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{"dimensionless": {"epsilon": 0.001, "b": 2, "m": 0, "rho": 1,
        "psi": 0, "omega": 0, "sigma": 0.5, "f": 1}}"#;

    #[test]
    fn params_round_trip() {
        let (p, w) = parse_params(WORKED).unwrap();
        assert!(w.is_empty());
        assert_eq!(p.b, 2.0);
        assert!(parse_params(r#"{"dimensionless": {"b": 2}}"#).is_err());
        assert!(parse_params(r#"{"other": {}}"#).is_err());
        let dim = r#"{"dimensional": {"beta": 0.3, "gamma": 0.09, "delta": 0.01, "eta": 0.2,
            "mu": 0.0001, "Psi": 0, "Omega": 0, "sigma": 0.5, "f": 1}}"#;
        assert!((parse_params(dim).unwrap().0.b - 0.3 / 0.1001).abs() < 1e-12);
    }

    #[test]
    fn matrix_formats() {
        let real = parse_matrix(r#"{"n": 2, "entries": [[0, 1], [-2, -3]]}"#).unwrap();
        assert!(matches!(real, MatrixInput::Real(_)));
        let g = parse_matrix(r#"{"n": 2, "entries": [["-1*G - 1", "G"], [1, -1]]}"#).unwrap();
        let MatrixInput::Gamma(m) = g else { panic!() };
        assert_eq!(m.get(0, 0).to_string(), "-1*G - 1");
        assert!(parse_matrix(r#"{"n": 2, "entries": [[1, 2]]}"#).is_err());
        assert!(parse_matrix(r#"{"n": 1, "entries": [[1]]}"#).is_err());
    }

    #[test]
    fn analyze_worked_point() {
        let (p, _) = parse_params(WORKED).unwrap();
        let r = analyze(&p).unwrap();
        assert_eq!((r.r0, r.c), (2.0, 1.0));
        assert_eq!(r.ede.len(), 1);
        let sc = &r.ede[0].conditions;
        assert!((sc.a - 2.0).abs() < 1e-12 && (sc.b - 3.0).abs() < 1e-12 && (sc.c - 18.0).abs() < 1e-12);
        assert_eq!(r.verdicts.ede, vec![Stability::Stable]);
        assert_eq!(r.ede[0].routh_leading.stability, Stability::Stable);
        assert_eq!(r.verdicts.dfe, Stability::Unstable);
        assert!(!r.any_indeterminate());

        let low = analyze(&Params { b: 0.5, ..p }).unwrap();
        assert!(low.ede.is_empty());
        assert_eq!(low.verdicts.dfe, Stability::Stable);
    }

    #[test]
    fn verify_worked_point() {
        let (p, _) = parse_params(WORKED).unwrap();
        let v = verify(&p, &[1e-3, 0.5]).unwrap();
        let ede = v.rows.iter().find(|r| r.eps == 1e-3 && r.equilibrium == "ede1").unwrap();
        assert_eq!(ede.agree, Some(true));
        assert_eq!(v.warnings.len(), 1);
        assert_eq!(v.rows.len(), 4);
    }
}

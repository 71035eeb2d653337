//! Seeded parameter sampling and sweep evaluation.
//!
//! Sample `i` draws from its own ChaCha stream, so results depend only on
//! `(seed, i)` and never on thread count or scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::ede_check;
use crate::routh::Stability;
use crate::tworisk::{mild_mortality, solve_ede, stability_conditions, EdeState, Params};

pub const DEFAULT_SEED: u64 = 42;
/// Rows whose smallest normalized condition falls below this are flagged.
pub const NEAR_MARGIN: f64 = 0.05;

/// Sampling box. `b` is log-uniform; the rest are uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ranges {
    pub b: [f64; 2],
    pub sigma: [f64; 2],
    pub m: [f64; 2],
    pub rho: [f64; 2],
    pub psi: [f64; 2],
    pub omega: [f64; 2],
    pub f: [f64; 2],
    pub epsilon: f64,
}

impl Default for Ranges {
    fn default() -> Self {
        Self {
            b: [1.1, 20.0],
            sigma: [0.0, 1.0],
            m: [0.0, 0.75],
            rho: [0.1, 10.0],
            psi: [0.0, 10.0],
            omega: [0.0, 10.0],
            f: [0.0, 1.0],
            epsilon: 1e-3,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

impl Ranges {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("sweep ranges: {m}")));
        let all = [self.b, self.sigma, self.m, self.rho, self.psi, self.omega, self.f];
        if all.iter().any(|[lo, hi]| !(lo <= hi && lo.is_finite() && hi.is_finite())) {
            return bad("every range needs finite lo <= hi");
        }
        if self.b[0] <= 0.0 || self.rho[0] <= 0.0 {
            return bad("b and rho must be positive");
        }
        if self.sigma[0] < 0.0 || self.sigma[1] > 1.0 || self.sigma[1] <= 0.0 {
            return bad("sigma must lie in (0, 1]");
        }
        if self.m[0] < 0.0 || self.m[1] >= 1.0 {
            return bad("m must lie in [0, 1)");
        }
        if self.f[0] < 0.0 || self.f[1] > 1.0 || self.psi[0] < 0.0 || self.omega[0] < 0.0 {
            return bad("f must lie in [0, 1]; psi and omega must be nonnegative");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    pub fn sample(&self, seed: u64, index: u64) -> Params {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let b = uniform(&mut rng, [self.b[0].ln(), self.b[1].ln()]).exp();
        let sigma = loop {
            let s = uniform(&mut rng, self.sigma);
            if s > 0.0 {
                break s;
            }
        };
        Params {
            epsilon: self.epsilon,
            b,
            sigma,
            m: uniform(&mut rng, self.m),
            rho: uniform(&mut rng, self.rho),
            psi: uniform(&mut rng, self.psi),
            omega: uniform(&mut rng, self.omega),
            f: uniform(&mut rng, self.f),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    #[default]
    None,
    /// `R₀ > 1`.
    Endemic,
    /// `c ≤ 0` with `m ≤ κ` or `m ≤ 0.75`.
    Prop1,
    /// `c > 0`.
    Prop2,
    /// `R₀ > 1` and `m ≤ 0.75`.
    Prop4,
}

impl Filter {
    pub fn accepts(&self, p: &Params) -> bool {
        match self {
            Filter::None => true,
            Filter::Endemic => p.r0() > 1.0,
            Filter::Prop1 => p.bifurcation_c() <= 0.0 && mild_mortality(p),
            Filter::Prop2 => p.bifurcation_c() > 0.0,
            Filter::Prop4 => p.r0() > 1.0 && p.m <= 0.75,
        }
    }
}

const CHUNK: u64 = 4096;

/// The first `count` accepted samples in index order, drawing at most
/// `max_draws` candidates.
pub fn collect_filtered(
    ranges: &Ranges,
    seed: u64,
    count: usize,
    max_draws: u64,
    accept: impl Fn(&Params) -> bool + Sync,
) -> Vec<(u64, Params)> {
    let mut out = Vec::with_capacity(count);
    let mut start = 0;
    while out.len() < count && start < max_draws {
        let end = (start + CHUNK).min(max_draws);
        let chunk: Vec<(u64, Params)> = (start..end)
            .into_par_iter()
            .filter_map(|i| {
                let p = ranges.sample(seed, i);
                accept(&p).then_some((i, p))
            })
            .collect();
        out.extend(chunk.into_iter().take(count - out.len()));
        start = end;
    }
    out
}

/// Runs `f` on a pool of `jobs` workers.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Rows wanted after filtering.
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ranges: Ranges,
    #[serde(default)]
    pub filter: Filter,
    /// When set, each endemic row is also checked numerically at this ε.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Candidate draws allowed; defaults to 1000 per requested row.
    #[serde(default)]
    pub max_draws: Option<u64>,
}

/// One CSV row. Condition columns describe the endemic equilibrium with
/// the smallest normalized margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: u64,
    pub epsilon: f64,
    pub b: f64,
    pub m: f64,
    pub rho: f64,
    pub psi: f64,
    pub omega: f64,
    pub sigma: f64,
    pub f: f64,
    pub c: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub n_ede: usize,
    pub z: Option<f64>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b_cond: Option<f64>,
    #[serde(rename = "C")]
    pub c_cond: Option<f64>,
    pub margin: Option<f64>,
    pub asymptotic: Option<Stability>,
    pub numeric_eps: Option<f64>,
    pub max_real: Option<f64>,
    pub numeric: Option<Stability>,
    pub agree: Option<bool>,
    pub status: &'static str,
}

/// The endemic equilibrium with the smallest normalized condition margin.
pub fn worst_ede(p: &Params) -> Option<EdeState> {
    solve_ede(p).into_iter().min_by(|a, b| {
        let ma = stability_conditions(p, a).min_normalized();
        let mb = stability_conditions(p, b).min_normalized();
        ma.total_cmp(&mb)
    })
}

pub fn evaluate_sample(index: u64, p: &Params, eps: Option<f64>) -> SweepRow {
    let ede = solve_ede(p);
    let mut row = SweepRow {
        index,
        epsilon: p.epsilon,
        b: p.b,
        m: p.m,
        rho: p.rho,
        psi: p.psi,
        omega: p.omega,
        sigma: p.sigma,
        f: p.f,
        c: p.bifurcation_c(),
        r0: p.r0(),
        n_ede: ede.len(),
        z: None,
        a: None,
        b_cond: None,
        c_cond: None,
        margin: None,
        asymptotic: None,
        numeric_eps: None,
        max_real: None,
        numeric: None,
        agree: None,
        status: "no-ede",
    };
    let Some(e) = worst_ede(p) else {
        return row;
    };
    let sc = stability_conditions(p, &e);
    let verdict = sc.verdict();
    row.z = Some(e.z);
    row.a = Some(sc.a);
    row.b_cond = Some(sc.b);
    row.c_cond = Some(sc.c);
    row.margin = Some(verdict.margin);
    row.asymptotic = Some(verdict.stability);
    row.status = if verdict.margin < NEAR_MARGIN {
        "near-margin"
    } else {
        "ok"
    };
    if let Some(eps) = eps {
        row.numeric_eps = Some(eps);
        match ede_check(p, eps, &e) {
            Ok(chk) => {
                row.max_real = Some(chk.max_real);
                row.numeric = Some(chk.verdict.stability);
                row.agree = Some(chk.verdict.stability == verdict.stability);
                if !chk.reliable {
                    row.status = "unreliable-roots";
                }
            }
            Err(_) => row.status = "newton-failed",
        }
    }
    row
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.ranges.validate()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let max_draws = cfg.max_draws.unwrap_or(cfg.samples as u64 * 1000);
    let picked = collect_filtered(&cfg.ranges, seed, cfg.samples, max_draws, |p| {
        cfg.filter.accepts(p)
    });
    Ok(picked
        .par_iter()
        .map(|(i, p)| evaluate_sample(*i, p, cfg.eps))
        .collect())
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameter sets with `R₀ ≤ 1` and two admissible endemic equilibria.
#[derive(Clone, Debug, Serialize)]
pub struct BackwardInstance {
    pub params: Params,
    pub ede: Vec<EdeState>,
}

/// Grid over the region most favorable to backward bifurcation (`ψ = 0`,
/// `f = 1`, small `κ`, large `m`), in a fixed order.
pub fn backward_bifurcation_search(epsilon: f64, m_values: &[f64]) -> Vec<BackwardInstance> {
    let b_values = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
    let sigma_values = [0.02, 0.05, 0.1, 1.0 / 6.0, 0.2, 0.25, 0.3];
    let mut found = Vec::new();
    for &b in &b_values {
        for &sigma in &sigma_values {
            for &m in m_values {
                for step in 0..=100 {
                    let p = Params {
                        epsilon,
                        b,
                        m,
                        rho: 1.0,
                        psi: 0.0,
                        omega: step as f64 * 0.1,
                        sigma,
                        f: 1.0,
                    };
                    if p.bifurcation_c() > 0.0 {
                        continue;
                    }
                    let ede = solve_ede(&p);
                    if ede.len() == 2 {
                        found.push(BackwardInstance { params: p, ede });
                    }
                }
            }
        }
    }
    found
}

pub const BACKWARD_M_VALUES: [f64; 6] = [0.8, 0.85, 0.9, 0.95, 0.97, 0.99];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let r = Ranges::default();
        assert_eq!(r.sample(7, 3), r.sample(7, 3));
        assert_ne!(r.sample(7, 3), r.sample(7, 4));
        for i in 0..200 {
            let p = r.sample(1, i);
            p.validate().unwrap();
            assert!((1.1..=20.0).contains(&p.b) && p.sigma > 0.0 && p.m <= 0.75);
        }
    }

    #[test]
    fn filtered_collection_ignores_thread_count() {
        let r = Ranges::default();
        let a = with_jobs(1, || collect_filtered(&r, 5, 300, 100_000, |p| Filter::Prop2.accepts(p))).unwrap();
        let b = with_jobs(4, || collect_filtered(&r, 5, 300, 100_000, |p| Filter::Prop2.accepts(p))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(serde_json::from_str::<SweepConfig>(r#"{"samples": 3, "bogus": 1}"#).is_err());
        let cfg: SweepConfig =
            serde_json::from_str(r#"{"samples": 3, "filter": "prop4", "ranges": {"m": [0, 0.5]}}"#).unwrap();
        assert_eq!(cfg.filter, Filter::Prop4);
        assert_eq!(cfg.ranges.b, [1.1, 20.0]);
    }

    #[test]
    fn search_finds_backward_instances_only_above_three_quarters() {
        let hits = backward_bifurcation_search(1e-3, &BACKWARD_M_VALUES);
        assert!(!hits.is_empty());
        for h in &hits {
            assert!(h.params.m > 0.75 && h.params.m > h.params.kappa());
        }
        assert!(backward_bifurcation_search(1e-3, &[0.75]).is_empty());
    }
}

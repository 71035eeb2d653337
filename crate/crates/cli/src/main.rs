use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use tssa_core::charpoly::{charpoly_leverrier, charpoly_minors};
use tssa_core::gamma::{GammaPoly, GammaRatio};
use tssa_core::oracle::{newton_refine, simulate};
use tssa_core::report::{analyze, parse_matrix, parse_params, parse_state, verify, MatrixInput};
use tssa_core::routh::{build_routh, routh_verdict, RouthScalar, Stability, Verdict};
use tssa_core::sweep::{run_sweep, with_jobs, write_rows, SweepConfig, DEFAULT_SEED};
use tssa_core::tworisk::{dfe, solve_ede};
use tssa_core::{CharPoly, Error as CoreError};

const EXIT_INVALID: u8 = 1;
const EXIT_INTEGRATOR: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;

/// Local stability analysis for two-time-scale systems.
#[derive(Parser, Debug)]
#[command(name = "tssa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Characteristic polynomial of a matrix via principal minors.
    Charpoly {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Routh array and verdict for `1,c1,...,cn` (entries may be Γ-polynomials in G).
    Routh {
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// DFE, endemic equilibria, stability conditions and verdicts.
    Analyze {
        #[arg(long)]
        params: PathBuf,
        /// Overrides epsilon from the parameter file.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic against numeric verdicts at each epsilon.
    Verify {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded parameter sweep, one CSV row per sample.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Takes precedence over the config file and TSSA_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrates the rescaled model; trajectory CSV plus a JSON summary.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        /// Initial state JSON; defaults to the DFE with Y = 0.01.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Trajectory CSV destination; the summary then goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn warn(messages: &[String]) {
    for m in messages {
        eprintln!("warning: {m}");
    }
}

fn code_for(indeterminate: bool) -> u8 {
    if indeterminate {
        EXIT_INDETERMINATE
    } else {
        0
    }
}

fn cmd_charpoly(matrix: &Path, out: &Option<PathBuf>) -> Result<u8> {
    let report = match parse_matrix(&read(matrix)?)? {
        MatrixInput::Real(m) => {
            let cp = charpoly_minors(&m);
            json!({
                "n": m.dim(),
                "coeffs": cp.coeffs(),
                "leverrier": charpoly_leverrier(&m).coeffs(),
            })
        }
        MatrixInput::Gamma(m) => {
            let cp = charpoly_minors(&m);
            let coeffs: Vec<String> = cp.coeffs().iter().map(ToString::to_string).collect();
            let leading: Vec<_> = cp.coeffs().iter().map(GammaPoly::leading).collect();
            json!({"n": m.dim(), "coeffs": coeffs, "leading": leading})
        }
    };
    emit_json(out, &report)?;
    Ok(0)
}

fn routh_report<S: RouthScalar>(p: &CharPoly<S>, entry: impl Fn(&S) -> Value) -> (Value, Verdict) {
    let verdict = routh_verdict(p);
    let body = match build_routh(p) {
        Ok(a) => {
            let rows: Vec<Vec<Value>> =
                a.rows().iter().map(|r| r.iter().map(&entry).collect()).collect();
            let first: Vec<Value> = a.first_column().iter().map(&entry).collect();
            json!({"degree": p.degree(), "rows": rows, "first_column": first, "verdict": verdict})
        }
        Err(CoreError::ZeroPivot { row }) => {
            json!({"degree": p.degree(), "rows": null, "zero_pivot_row": row, "verdict": verdict})
        }
        Err(e) => json!({"error": e.to_string()}),
    };
    (body, verdict)
}

fn cmd_routh(coeffs: &str, out: &Option<PathBuf>) -> Result<u8> {
    let parts: Vec<&str> = coeffs.split(',').map(str::trim).collect();
    if parts.len() < 2 {
        bail!("need at least `1,c1`");
    }
    let (body, verdict) = if parts.iter().any(|s| s.contains('G')) {
        let polys = parts
            .iter()
            .map(|s| s.parse::<GammaPoly>())
            .collect::<Result<Vec<_>, _>>()?;
        if polys[0] != GammaPoly::constant(1.0) {
            bail!("leading coefficient must be 1");
        }
        let cp = CharPoly::new(polys[1..].iter().cloned().map(GammaRatio::from).collect())?;
        routh_report(&cp, |v: &GammaRatio| {
            json!({
                "num": v.numerator().to_string(),
                "den": v.denominator().to_string(),
                "leading": v.leading(),
            })
        })
    } else {
        let vals = parts
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| anyhow!("bad coefficient {s:?}: {e}")))
            .collect::<Result<Vec<_>>>()?;
        let lead = vals[0];
        if lead == 0.0 || !lead.is_finite() {
            bail!("leading coefficient must be nonzero");
        }
        let cp = CharPoly::new(vals[1..].iter().map(|v| v / lead).collect())?;
        routh_report(&cp, |v: &f64| json!(v))
    };
    emit_json(out, &body)?;
    Ok(code_for(verdict.stability == Stability::Indeterminate))
}

fn cmd_analyze(params: &Path, eps: Option<f64>, out: &Option<PathBuf>) -> Result<u8> {
    let (mut p, _) = parse_params(&read(params)?)?;
    if let Some(e) = eps {
        p = p.with_epsilon(e);
    }
    let report = analyze(&p)?;
    warn(&report.warnings);
    emit_json(out, &report)?;
    Ok(code_for(report.any_indeterminate()))
}

fn cmd_verify(params: &Path, eps: &[f64], format: Format, out: &Option<PathBuf>) -> Result<u8> {
    let (p, _) = parse_params(&read(params)?)?;
    let report = verify(&p, eps)?;
    warn(&report.warnings);
    match format {
        Format::Json => emit_json(out, &report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(out)?);
            for r in &report.rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(code_for(report.any_indeterminate()))
}

fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var("TSSA_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| anyhow!("TSSA_SEED={v:?} is not an unsigned integer: {e}")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn cmd_sweep(
    config: &Path,
    seed: Option<u64>,
    jobs: u64,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<u8> {
    let mut cfg: SweepConfig = serde_json::from_str(&read(config)?)
        .with_context(|| format!("parsing {}", config.display()))?;
    cfg.seed = Some(resolve_seed(seed, cfg.seed)?);
    let rows = with_jobs(jobs as usize, || run_sweep(&cfg))??;
    match format {
        Format::Csv => write_rows(&rows, sink(out)?)?,
        Format::Json => emit_json(out, &rows)?,
    }
    Ok(0)
}

fn cmd_simulate(
    params: &Path,
    eps: Option<f64>,
    t_end: f64,
    init: &Option<PathBuf>,
    tol: f64,
    out: &Option<PathBuf>,
) -> Result<u8> {
    let (p, warnings) = parse_params(&read(params)?)?;
    warn(&warnings);
    let eps = eps.unwrap_or(p.epsilon);
    let start = match init {
        Some(path) => parse_state(&read(path)?)?,
        None => {
            let mut s = dfe(&p);
            s.y = 1e-2;
            s
        }
    };
    let traj = simulate(&p, eps, &start, t_end, tol)?;
    let last = traj.final_state();
    let fraction = eps * last.y / last.n;
    let predicted: Vec<Value> = solve_ede(&p)
        .iter()
        .map(|e| {
            let refined = newton_refine(&p, eps, &e.to_state(&p))
                .ok()
                .map(|r| eps * r.y / r.n);
            json!({"z": e.z, "leading_order": eps * e.y, "refined": refined})
        })
        .collect();
    let summary = json!({
        "eps": eps,
        "t_end": t_end,
        "steps": traj.times.len() - 1,
        "final_state": last,
        "infectious_fraction": fraction,
        "ratio_to_eps": fraction / eps,
        "ede_predictions": predicted,
    });
    match out {
        Some(_) => {
            traj.write_csv(sink(out)?)?;
            emit_json(&None, &summary)?;
        }
        None => {
            traj.write_csv(io::stdout().lock())?;
            eprintln!("{}", serde_json::to_string(&summary)?);
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Charpoly { matrix, out } => cmd_charpoly(&matrix, &out),
        Command::Routh { coeffs, out } => cmd_routh(&coeffs, &out),
        Command::Analyze { params, eps, out } => cmd_analyze(&params, eps, &out),
        Command::Verify {
            params,
            eps,
            format,
            out,
        } => cmd_verify(&params, &eps, format, &out),
        Command::Sweep {
            config,
            seed,
            jobs,
            format,
            out,
        } => cmd_sweep(&config, seed, jobs, format, &out),
        Command::Simulate {
            params,
            eps,
            t_end,
            init,
            tol,
            out,
        } => cmd_simulate(&params, eps, t_end, &init, tol, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let code = match err.downcast_ref::<CoreError>() {
                Some(CoreError::StepUnderflow { .. }) => EXIT_INTEGRATOR,
                _ => EXIT_INVALID,
            };
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("{}", json!({"error": chain.join(": "), "exit_code": code}));
            ExitCode::from(code)
        }
    }
}

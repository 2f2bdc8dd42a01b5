//! Command-line front end. Every subcommand reads JSON and writes one JSON
//! report.
//!
//! Exit codes: 0 on success, 1 when a property check fails, 2 on invalid
//! input.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pdspace_core::diagram::family_diagnostics;
use pdspace_core::frechet::{frechet_mean_with, variance_upper_bound, EmpiricalMeasure, Init};
use pdspace_core::geodesic::geodesic;
use pdspace_core::gh::{quotient_approximation, verify_pair_approximation, ApproxReport, PairApproximation};
use pdspace_core::matching::distance;
use pdspace_core::probe::PROBE_CAP;
use pdspace_core::{Exponent, MetricPair, PairKind};

use crate::json::{self, num, JsonError};
use crate::sweep;

#[derive(Debug, Parser)]
#[command(name = "pdspace", version, about = "Geometry of persistence-diagram spaces over metric pairs")]
pub struct Cli {
    /// Where to write the report; `-` is standard output.
    #[arg(long, short, global = true, default_value = "-")]
    pub output: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance and an optimal matching between two diagrams.
    Dist {
        #[arg(long, default_value = "2")]
        p: Exponent,
        a: PathBuf,
        b: PathBuf,
    },
    /// Points of the convex-combination geodesic at the given times.
    Geodesic {
        #[arg(long, default_value = "2")]
        p: Exponent,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        a: PathBuf,
        b: PathBuf,
    },
    /// Fréchet mean candidate by alternating descent (a local method).
    Mean {
        #[arg(long)]
        input: PathBuf,
        /// largest, medoid, multistart or atom:<index>
        #[arg(long, default_value = "largest")]
        init: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
    /// Splits a diagram at a persistence threshold.
    Parts {
        #[arg(long)]
        alpha: f64,
        sigma: PathBuf,
    },
    /// Quadrilateral inequality sweep on random triples in D_2(R^{2n}, Δ_n).
    CheckCurvature {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        max_points: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Verifies an approximation between metric pairs and its induced maps.
    CheckGh {
        #[arg(long)]
        apx: PathBuf,
        #[arg(long, default_value = "inf")]
        p: Exponent,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_points: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Sorted ray formula and ray-embedding distortion on random ray diagrams.
    ProbeDimension {
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Boundedness, off-diagonal spread and uniformity of a family.
    Diagnostics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "2")]
        p: Exponent,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
        delta: Vec<f64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Json(#[from] JsonError),
    #[error(transparent)]
    Core(#[from] pdspace_core::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

/// A report and whether every property it checks holds.
pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self { report, ok: true }
    }
}

fn read_text(path: &Path) -> Result<(String, String)> {
    let name = path.display().to_string();
    let mut text = String::new();
    let res = if name == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    Ok((text, name))
}

fn read_json(path: &Path) -> Result<Value> {
    let (text, name) = read_text(path)?;
    Ok(json::parse(&text, &name)?)
}

/// Writes next to the destination and renames, so readers never see a
/// partial report.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file = path.file_name().ok_or_else(|| io::Error::other("output path has no file name"))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(file);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = dir.join(tmp_name);
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res
}

fn parse_init(s: &str) -> Result<Init> {
    match s {
        "largest" => Ok(Init::Largest),
        "medoid" => Ok(Init::Medoid),
        "multistart" => Ok(Init::MultiStart),
        _ => s
            .strip_prefix("atom:")
            .and_then(|i| i.parse().ok())
            .map(Init::Atom)
            .ok_or_else(|| CliError::Usage(format!("unknown --init `{s}`"))),
    }
}

fn workers(w: Option<usize>) -> usize {
    w.unwrap_or_else(sweep::default_workers)
}

fn approx_report_json(r: &ApproxReport) -> Value {
    json!({
        "eps": num(r.eps),
        "max_distortion": num(r.max_distortion),
        "hausdorff_gap": num(r.hausdorff_gap),
        "coverage_slack": num(r.coverage_slack),
        "measured_eps": num(r.measured_eps()),
        "pass_distortion": r.pass_distortion,
        "pass_hausdorff": r.pass_hausdorff,
        "pass_coverage": r.pass_coverage,
        "exhaustive": r.exhaustive,
        "passed": r.passed(),
    })
}

fn is_finite_pair(pair: &MetricPair) -> bool {
    matches!(pair.kind(), PairKind::Finite(_))
}

fn check_gh(apx: &PairApproximation, p: Exponent, trials: usize, max_points: usize, seed: u64, w: usize) -> Result<Outcome> {
    let base = verify_pair_approximation(apx)?;
    let quotient = if is_finite_pair(&apx.source) && is_finite_pair(&apx.target) {
        Some(verify_pair_approximation(&quotient_approximation(apx)?)?)
    } else {
        None
    };
    let dist = sweep::distortion_sweep(apx, p, trials, max_points, seed, w)?;
    let ok = base.passed() && quotient.as_ref().is_none_or(ApproxReport::passed) && dist.pass() != Some(false);
    Ok(Outcome {
        report: json!({
            "approximation": approx_report_json(&base),
            "quotient": quotient.as_ref().map_or(Value::Null, approx_report_json),
            "distortion": {
                "p": json::exponent_to_json(dist.p),
                "trials": dist.trials,
                "sup_distortion": num(dist.sup_distortion),
                "bound": dist.bound.map_or(Value::Null, num),
                "pass": dist.pass(),
            },
            "passed": ok,
        }),
        ok,
    })
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Dist { p, a, b } => {
            let sigma = json::diagram_from_json(&read_json(a)?)?;
            let tau = json::diagram_from_json(&read_json(b)?)?;
            let (d, m) = distance(&sigma, &tau, *p)?;
            Ok(Outcome::ok(json!({
                "distance": num(d),
                "p": json::exponent_to_json(*p),
                "matching": json::matching_to_json(&m),
                "sigma": json::diagram_points_json(&sigma),
                "tau": json::diagram_points_json(&tau),
            })))
        }
        Command::Geodesic { p, t, a, b } => {
            let sigma = json::diagram_from_json(&read_json(a)?)?;
            let tau = json::diagram_from_json(&read_json(b)?)?;
            let path = geodesic(&sigma, &tau, *p)?;
            let out = t
                .iter()
                .map(|&t| Ok(json::diagram_to_json(&path.evaluate(t)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(Value::Array(out)))
        }
        Command::Mean {
            input,
            init,
            tol,
            max_iters,
        } => {
            let doc = read_json(input)?;
            let pair = Arc::new(json::pair_from_json(doc.get("pair").ok_or_else(|| usage("mean input: missing \"pair\""))?)?);
            let atoms = doc
                .get("atoms")
                .and_then(Value::as_array)
                .ok_or_else(|| usage("mean input: \"atoms\" must be an array"))?;
            let mut weighted = Vec::with_capacity(atoms.len());
            for (k, a) in atoms.iter().enumerate() {
                let what = format!("atom {k}");
                let pts = a.get("points").ok_or_else(|| usage(format!("{what}: missing \"points\"")))?;
                let w = a.get("weight").map(|w| json::real(w, "weight")).transpose()?.unwrap_or(1.0);
                weighted.push((json::points_from_json(&pair, pts, &what)?, w));
            }
            let mu = EmpiricalMeasure::new(weighted)?;
            let r = frechet_mean_with(&mu, parse_init(init)?, *max_iters, *tol)?;
            let vb = variance_upper_bound(&mu, Some(&r.candidate))?;
            Ok(Outcome::ok(json!({
                "candidate": json::diagram_to_json(&r.candidate),
                "value": num(r.value),
                "trace": r.trace.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                "iterations": r.iterations,
                "converged": r.converged,
                "start": r.start,
                "variance_bound": {
                    "bound": num(vb.bound),
                    "best_atom": vb.best_atom,
                    "best_atom_value": num(vb.best_atom_value),
                    "candidate_value": vb.candidate_value.map_or(Value::Null, num),
                },
            })))
        }
        Command::Parts { alpha, sigma } => {
            let sigma = json::diagram_from_json(&read_json(sigma)?)?;
            Ok(Outcome::ok(json!({
                "alpha": num(*alpha),
                "upper": json::diagram_to_json(&sigma.upper_part(*alpha)?),
                "lower": json::diagram_to_json(&sigma.lower_part(*alpha)?),
            })))
        }
        Command::CheckCurvature {
            trials,
            seed,
            n,
            max_points,
            tol,
            workers: w,
        } => {
            let s = sweep::curvature_sweep(*n, *max_points, *trials, *seed, workers(*w), *tol)?;
            Ok(Outcome {
                ok: s.passed(),
                report: json!({
                    "trials": s.trials,
                    "min_slack": num(s.min_slack),
                    "failures": s.failures,
                    "worst_trial": s.worst_trial,
                    "max_angle_at_empty": num(s.max_angle),
                    "tol": num(s.tol),
                    "seed": seed,
                }),
            })
        }
        Command::CheckGh {
            apx,
            p,
            trials,
            seed,
            max_points,
            workers: w,
        } => {
            let apx = json::approximation_from_json(&read_json(apx)?)?;
            check_gh(&apx, *p, *trials, *max_points, *seed, workers(*w))
        }
        Command::ProbeDimension {
            n_max,
            trials,
            seed,
            tol,
            workers: w,
        } => {
            if *n_max > PROBE_CAP {
                return Err(pdspace_core::Error::SizeCapExceeded {
                    total: *n_max,
                    cap: PROBE_CAP,
                }
                .into());
            }
            let r = sweep::probe_sweep(*n_max, *trials, *seed, workers(*w), *tol)?;
            Ok(Outcome {
                ok: r.passed(),
                report: json!({
                    "n_max": r.n_max,
                    "trials": r.trials,
                    "max_sorted_gap": num(r.max_sorted_gap),
                    "ratio_min": num(r.ratio_min),
                    "ratio_max": num(r.ratio_max),
                    "ratio_bounds": [num(std::f64::consts::FRAC_1_SQRT_2), num(std::f64::consts::SQRT_2)],
                    "degenerate": r.degenerate,
                    "sorted_ok": r.sorted_ok(),
                    "ratios_ok": r.ratios_ok(),
                    "tol": num(r.tol),
                    "seed": seed,
                }),
            })
        }
        Command::Diagnostics { input, p, eps, delta } => {
            let doc = read_json(input)?;
            let pair = Arc::new(json::pair_from_json(
                doc.get("pair").ok_or_else(|| usage("diagnostics input: missing \"pair\""))?,
            )?);
            let family = doc
                .get("diagrams")
                .and_then(Value::as_array)
                .ok_or_else(|| usage("diagnostics input: \"diagrams\" must be an array"))?
                .iter()
                .enumerate()
                .map(|(k, d)| Ok(json::points_from_json(&pair, d, &format!("diagram {k}"))?))
                .collect::<Result<Vec<_>>>()?;
            let r = family_diagnostics(&family, *p, eps, delta)?;
            let rows = |v: &[(f64, f64)]| v.iter().map(|&(a, b)| json!([num(a), num(b)])).collect::<Vec<_>>();
            Ok(Outcome::ok(json!({
                "bound": num(r.bound),
                "bounded": r.bounded,
                "offdiag_radius": rows(&r.offdiag_radius),
                "uniformity_profile": rows(&r.uniformity_profile),
                "p": json::exponent_to_json(*p),
            })))
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut text = json::to_string(&outcome.report);
    text.push('\n');
    let written = if cli.output.as_os_str() == "-" {
        io::stdout().lock().write_all(text.as_bytes())
    } else {
        write_atomic(&cli.output, &text)
    };
    if let Err(e) = written {
        eprintln!("error: {}: {e}", cli.output.display());
        return 2;
    }
    if outcome.ok {
        0
    } else {
        eprintln!("property check failed");
        1
    }
}

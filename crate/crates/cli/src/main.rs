use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use qspace::algebra::{dirichlet, lp_norm, tensor_sum, BranchedCurve, NormOrder};
use qspace::calculus::{
    continuous_selection, differentiable_selection, quotient_limit, subtract, AffineCheck, Probe, QuotientSchedule,
    SampledCurve, Selection,
};
use qspace::exec::Execution;
use qspace::geodesy::{geodesic, Geodesic};
use qspace::metric::{distance, distance_bruteforce};
use qspace::strata::{enumerate_decompositions, signature};
use qspace::tangent::{exp, tangent_distance, tangent_distance_limit, TangentVector};
use qspace::verify::{run_suite, Suite, SuiteConfig};
use qspace::{QError, QPoint};

/// Distances, geodesics, strata, tangent cones and multiple-valued calculus
/// on Q-point multisets, over JSON files.
#[derive(Parser, Debug)]
#[command(name = "qspace", version)]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the command's numeric tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// G distance between two multisets.
    Distance {
        a: PathBuf,
        b: PathBuf,
        /// Exhaustive search over permutations instead of the Hungarian solver.
        #[arg(long)]
        oracle: bool,
    },
    /// Samples of the geodesic from A to B.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated times in [0, 1].
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        t: Vec<f64>,
        #[arg(long)]
        oracle: bool,
    },
    /// Signature (J; k_1..k_J) of a multiset.
    Signature { p: PathBuf },
    /// All signatures for a given Q.
    Decompositions { q: usize },
    /// Cone distance between two tangent vectors at the same base.
    TangentDist {
        u: PathBuf,
        v: PathBuf,
        /// Time for the geodesic quotient G(gamma_u(t), gamma_v(t)) / t.
        #[arg(long, default_value_t = 1e-6)]
        t: f64,
    },
    /// Exponential map of a tangent vector at its base.
    Exp { v: PathBuf },
    /// Tensor sum of two branched curves.
    TensorSum { f: PathBuf, g: PathBuf },
    /// Dirichlet energy of a branched curve.
    Dirichlet { f: PathBuf },
    /// L^k norm of a branched curve; k may be `inf`.
    LpNorm {
        f: PathBuf,
        #[arg(long, default_value = "2")]
        k: NormOrder,
    },
    /// z (-) q for z near q.
    Subtract {
        z: PathBuf,
        q: PathBuf,
        /// Neighborhood radius; must be below half the minimal support gap of q.
        #[arg(long)]
        r: f64,
    },
    /// Quotient derivative of a sampled curve at a grid node.
    Derivative {
        f: PathBuf,
        #[arg(long)]
        at: f64,
    },
    /// Continuous selection of a sampled curve; with --at, regrouped around
    /// that node with per-branch derivatives.
    Select {
        f: PathBuf,
        #[arg(long)]
        at: Option<f64>,
    },
    /// Run a seeded property suite.
    Verify {
        suite: String,
        #[arg(long, env = "QSPACE_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

enum Failure {
    Usage(String),
    Domain(QError),
    Invariant,
}

impl From<QError> for Failure {
    fn from(e: QError) -> Self {
        match e {
            QError::Malformed(m) => Failure::Usage(m),
            other => Failure::Domain(other),
        }
    }
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matched_geodesic(a: &QPoint, b: &QPoint, oracle: bool) -> Result<Geodesic, QError> {
    if oracle {
        let d = distance_bruteforce(a, b)?;
        Geodesic::along(a.clone(), b.clone(), d.witness)
    } else {
        geodesic(a, b)
    }
}

fn selection_function(sel: &Selection) -> impl Fn(f64) -> QPoint + '_ {
    move |x| sel.eval(x).expect("probe inside the interval")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Distance { a, b, oracle } => {
            let (a, b): (QPoint, QPoint) = (read(&a)?, read(&b)?);
            let d = if oracle { distance_bruteforce(&a, &b)? } else { distance(&a, &b)? };
            emit(out, &d)
        }
        Command::Geodesic { a, b, t, oracle } => {
            let (a, b): (QPoint, QPoint) = (read(&a)?, read(&b)?);
            if let Some(bad) = t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(Failure::Domain(QError::OutOfRange(format!("t = {bad} outside [0, 1]"))));
            }
            let g = matched_geodesic(&a, &b, oracle)?;
            let samples: Vec<Value> = t.iter().map(|&t| json!({"t": t, "point": g.eval(t)})).collect();
            let mut speeds = Vec::new();
            for w in t.windows(2) {
                if w[1] != w[0] {
                    speeds.push(distance(&g.eval(w[0]), &g.eval(w[1]))?.g / (w[1] - w[0]).abs());
                }
            }
            let deviation = speeds.iter().map(|s| (s - g.length).abs()).fold(0.0, f64::max);
            emit(
                out,
                &json!({
                    "length": g.length,
                    "matching": g.matching,
                    "samples": samples,
                    "speeds": speeds,
                    "max_speed_deviation": deviation,
                }),
            )
        }
        Command::Signature { p } => {
            let p: QPoint = read(&p)?;
            let s = signature(&p, cli.tol.unwrap_or(0.0))?;
            emit(
                out,
                &json!({
                    "J": s.j(),
                    "k": s.multiplicities(),
                    "supports": s.supports(),
                    "groups": s.groups(),
                }),
            )
        }
        Command::Decompositions { q } => emit(out, &enumerate_decompositions(q)?),
        Command::TangentDist { u, v, t } => {
            let (u, v): (TangentVector, TangentVector) = (read(&u)?, read(&v)?);
            let d = tangent_distance(&u, &v)?;
            let quotient = tangent_distance_limit(&u, &v, &[t])?;
            emit(out, &json!({"d": d, "d_squared": d * d, "t": t, "quotient": quotient}))
        }
        Command::Exp { v } => {
            let v: TangentVector = read(&v)?;
            emit(out, &exp(v.base(), &v)?)
        }
        Command::TensorSum { f, g } => {
            let (f, g): (BranchedCurve, BranchedCurve) = (read(&f)?, read(&g)?);
            emit(out, &tensor_sum(&f, &g)?)
        }
        Command::Dirichlet { f } => {
            let f: BranchedCurve = read(&f)?;
            emit(out, &json!({"dirichlet": dirichlet(&f)?}))
        }
        Command::LpNorm { f, k } => {
            let f: BranchedCurve = read(&f)?;
            emit(out, &lp_norm(&f, k))
        }
        Command::Subtract { z, q, r } => {
            let (z, q): (QPoint, QPoint) = (read(&z)?, read(&q)?);
            emit(out, &subtract(&z, &q, r)?)
        }
        Command::Derivative { f, at } => {
            let f: SampledCurve = read(&f)?;
            let k0 = f.node_index(at)?;
            if k0 == 0 || k0 + 1 == f.len() {
                return Err(Failure::Domain(QError::OutOfRange(format!("x0 = {at} must be an interior node"))));
            }
            let sel = continuous_selection(&f)?;
            let eval = selection_function(&sel);
            let x0 = f.x(k0);
            let (a, b) = f.interval();
            let step = (b - a) / (f.len() - 1) as f64;
            let schedule = QuotientSchedule {
                h0: 0.5 * step,
                tol: cli.tol.unwrap_or(QuotientSchedule::default().tol),
                ..QuotientSchedule::default()
            };
            let probes = schedule.steps().map(|h| {
                let (xr, xl) = ((x0 + h).min(b), (x0 - h).max(a));
                Probe {
                    h_right: xr - x0,
                    right: eval(xr),
                    h_left: xl - x0,
                    left: eval(xl),
                }
            });
            emit(out, &quotient_limit(f.sample(k0), probes, schedule.tol)?)
        }
        Command::Select { f, at } => {
            let f: SampledCurve = read(&f)?;
            let sel = continuous_selection(&f)?;
            match at {
                None => emit(out, &sel),
                Some(x0) => {
                    let (a, b) = f.interval();
                    let step = (b - a) / (f.len() - 1) as f64;
                    let mut check = AffineCheck::default();
                    check.schedule.h0 = 0.5 * step;
                    if let Some(t) = cli.tol {
                        check.schedule.tol = t;
                    }
                    let d = differentiable_selection(selection_function(&sel), a, b, f.len(), x0, &check)?;
                    emit(out, &d)
                }
            }
        }
        Command::Verify {
            suite,
            seed,
            trials,
            sequential,
        } => {
            let suite: Suite = suite.parse()?;
            let mut cfg = SuiteConfig::new(suite, seed);
            cfg.tol = cli.tol;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if sequential {
                cfg.exec = Execution::Sequential;
            }
            let start = Instant::now();
            let report = run_suite(suite, &cfg);
            eprintln!(
                "{}: {} trials in {:.3} s",
                suite,
                cfg.trials,
                start.elapsed().as_secs_f64()
            );
            emit(out, &report)?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Invariant)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

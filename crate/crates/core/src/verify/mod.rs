//! Seeded property suites. Every suite runs a fixed number of independent
//! trials (each with its own random stream) and reports, per invariant, the
//! number of checks, the failures and the worst observed margin. Reports
//! carry no timing, so a fixed seed reproduces them exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::algebra::{
    dirichlet, dirichlet_sum_identity, tensor_sum, weighted_minkowski_check, weighted_triangle_check, BranchedCurve,
    NormOrder,
};
use crate::calculus::{
    affine_approx_error, check_selection, continuous_selection, derivative, differentiable_selection, subtract,
    AffineCheck, AffineMap, QuotientSchedule, SampledCurve,
};
use crate::error::QError;
use crate::exec::{run_trials, trial_rng, Execution};
use crate::geodesy::{geodesic, pc_comparison, flatness_check_1d};
use crate::metric::{distance, distance_bruteforce, optimal_matchings, sorted_matching_distance_1d};
use crate::point::QPoint;
use crate::strata::{enumerate_decompositions, lex_embedding, signature, stratum_local_geodesic_check, stratum_radius};
use crate::tangent::{exp, exp_isometry_radius, tangent_distance, tangent_distance_limit, TangentVector};

pub mod gen;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Pc,
    Flat1d,
    Oracle,
    Minkowski,
    Tangent,
    Selection,
    Strata,
    WorkedExamples,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Pc,
        Suite::Flat1d,
        Suite::Oracle,
        Suite::Minkowski,
        Suite::Tangent,
        Suite::Selection,
        Suite::Strata,
        Suite::WorkedExamples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pc => "pc",
            Suite::Flat1d => "flat1d",
            Suite::Oracle => "oracle",
            Suite::Minkowski => "minkowski",
            Suite::Tangent => "tangent",
            Suite::Selection => "selection",
            Suite::Strata => "strata",
            Suite::WorkedExamples => "paper-examples",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Pc | Suite::Flat1d | Suite::Minkowski => 10_000,
            Suite::Oracle | Suite::Tangent | Suite::Strata => 1_000,
            Suite::Selection => 50,
            Suite::WorkedExamples => 1,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self, QError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                QError::Malformed(format!("unknown suite {s:?}; known: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub exec: Execution,
    /// Replaces the magnitude of every numeric bound when set.
    pub tol: Option<f64>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        SuiteConfig {
            seed,
            trials: suite.default_trials(),
            exec: Execution::Parallel,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    /// Smallest observed margin; a check passes when margin >= bound.
    pub worst: Option<f64>,
    pub bound: Option<f64>,
    pub first_failure: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub invariants: Vec<InvariantReport>,
}

/// A single observation for one invariant.
#[derive(Debug, Clone)]
pub enum Obs {
    Margin(f64),
    Flag(bool),
    Error(String),
}

impl<E: fmt::Display> From<Result<f64, E>> for Obs {
    fn from(r: Result<f64, E>) -> Self {
        match r {
            Ok(v) => Obs::Margin(v),
            Err(e) => Obs::Error(e.to_string()),
        }
    }
}

struct Tally {
    reports: Vec<InvariantReport>,
}

impl Tally {
    fn new(specs: &[(&str, Option<f64>)], tol: Option<f64>) -> Self {
        let reports = specs
            .iter()
            .map(|&(name, bound)| InvariantReport {
                name: name.to_string(),
                checks: 0,
                failures: 0,
                worst: None,
                bound: bound.map(|b| tol.map_or(b, |t| -t.abs())),
                first_failure: None,
                passed: true,
            })
            .collect();
        Tally { reports }
    }

    fn absorb(&mut self, trial: Option<usize>, slot: usize, obs: Obs) {
        let r = &mut self.reports[slot];
        r.checks += 1;
        let failure = match obs {
            Obs::Margin(v) => {
                r.worst = Some(r.worst.map_or(v, |w: f64| if v < w || v.is_nan() { v } else { w }));
                let ok = r.bound.map_or(true, |b| v >= b);
                (!ok).then(|| format!("margin {v:e}"))
            }
            Obs::Flag(ok) => (!ok).then(|| "check failed".to_string()),
            Obs::Error(e) => Some(format!("error: {e}")),
        };
        if let Some(msg) = failure {
            r.failures += 1;
            r.passed = false;
            if r.first_failure.is_none() {
                r.first_failure = Some(match trial {
                    Some(t) => format!("trial {t}: {msg}"),
                    None => msg,
                });
            }
        }
    }

    fn finish(self, suite: Suite, cfg: &SuiteConfig, trials: usize) -> SuiteReport {
        SuiteReport {
            suite: suite.name().to_string(),
            seed: cfg.seed,
            trials,
            passed: self.reports.iter().all(|r| r.passed),
            invariants: self.reports,
        }
    }
}

type TrialFn = dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<(usize, Obs)> + Sync + Send;

fn run(
    suite: Suite,
    cfg: &SuiteConfig,
    specs: &[(&str, Option<f64>)],
    trial: &TrialFn,
    fixed: Vec<(usize, Obs)>,
) -> SuiteReport {
    let mut tally = Tally::new(specs, cfg.tol);
    let outcomes = run_trials(cfg.exec, cfg.trials, |i| trial(&mut trial_rng(cfg.seed, i as u64)));
    for (i, obs) in outcomes.into_iter().enumerate() {
        for (slot, o) in obs {
            tally.absorb(Some(i), slot, o);
        }
    }
    for (slot, o) in fixed {
        tally.absorb(None, slot, o);
    }
    tally.finish(suite, cfg, cfg.trials)
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> SuiteReport {
    match suite {
        Suite::Pc => pc(cfg),
        Suite::Flat1d => flat1d(cfg),
        Suite::Oracle => oracle(cfg),
        Suite::Minkowski => minkowski(cfg),
        Suite::Tangent => tangent(cfg),
        Suite::Selection => selection(cfg),
        Suite::Strata => strata(cfg),
        Suite::WorkedExamples => worked_examples(cfg),
    }
}

/// `|x - y| / max(|x|, |y|)`, zero when both vanish.
pub fn rel_diff(x: f64, y: f64) -> f64 {
    let s = x.abs().max(y.abs());
    if s == 0.0 {
        0.0
    } else {
        (x - y).abs() / s
    }
}

fn pc(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [("pc_slack", Some(-1e-9)), ("hungarian_vs_bruteforce", Some(-1e-12))];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let q = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=3);
        let a = gen::uniform_point(rng, q, n);
        let b = gen::uniform_point(rng, q, n);
        let c = gen::uniform_point(rng, q, n);
        let t = rng.gen_range(0.0..=1.0);
        let mut out = vec![(0, pc_comparison(&a, &b, &c, t).map(|r| r.slack).into())];
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            let o = distance(x, y).and_then(|h| Ok(rel_diff(h.g_squared, distance_bruteforce(x, y)?.g_squared)));
            out.push((1, o.map(|d| -d).into()));
        }
        out
    };
    run(Suite::Pc, cfg, &specs, &trial, Vec::new())
}

fn flat1d(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [("flat_abs_slack", Some(-1e-9)), ("sorted_vs_bruteforce", Some(-1e-12))];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let q = rng.gen_range(2..=6);
        let a = gen::uniform_point(rng, q, 1);
        let b = gen::uniform_point(rng, q, 1);
        let c = gen::uniform_point(rng, q, 1);
        let t = rng.gen_range(0.0..=1.0);
        let mut out = vec![(0, flatness_check_1d(&a, &b, &c, t).map(|r| -r.slack.abs()).into())];
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
            let o = sorted_matching_distance_1d(x, y)
                .and_then(|s| Ok(rel_diff(s.g_squared, distance_bruteforce(x, y)?.g_squared)));
            out.push((1, o.map(|d| -d).into()));
        }
        out
    };
    run(Suite::Flat1d, cfg, &specs, &trial, Vec::new())
}

fn oracle(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [("hungarian_vs_bruteforce_q2_to_q7", Some(-1e-12))];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        (2..=7)
            .map(|q| {
                let n = rng.gen_range(1..=3);
                let a = gen::uniform_point(rng, q, n);
                let b = gen::uniform_point(rng, q, n);
                let o = distance(&a, &b)
                    .and_then(|h| Ok(rel_diff(h.g_squared, distance_bruteforce(&a, &b)?.g_squared)));
                (0, o.map(|d| -d).into())
            })
            .collect()
    };
    run(Suite::Oracle, cfg, &specs, &trial, Vec::new())
}

const NORM_ORDERS: [NormOrder; 5] = [
    NormOrder::Finite(0.5),
    NormOrder::Finite(1.0),
    NormOrder::Finite(2.0),
    NormOrder::Finite(3.0),
    NormOrder::Infinity,
];

fn minkowski(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [
        ("weighted_triangle_pointwise", Some(-1e-12)),
        ("weighted_minkowski", Some(-1e-9)),
        ("dirichlet_sum_identity", Some(-1e-12)),
        ("eta_additivity", Some(-1e-15)),
    ];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let n = rng.gen_range(1..=2);
        let (p, q) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let f = gen::random_polyline(rng, p, n, 17);
        let g = gen::random_polyline(rng, q, n, 17);
        let node = rng.gen_range(0..17);
        let mut out = vec![(0, weighted_triangle_check(&f, &g, node).map(|r| r.slack).into())];
        for k in NORM_ORDERS {
            out.push((1, weighted_minkowski_check(&f, &g, k).map(|r| r.slack).into()));
        }
        out.push((2, dirichlet_sum_identity(&f, &g).map(|r| -r.relative_error).into()));
        out.push((3, eta_defect(&f, &g).map(|d| -d).into()));
        out
    };
    run(Suite::Minkowski, cfg, &specs, &trial, Vec::new())
}

/// Largest `|eta(f (+) g) - eta(f) - eta(g)|` over the grid.
fn eta_defect(f: &BranchedCurve, g: &BranchedCurve) -> Result<f64, QError> {
    let s = tensor_sum(f, g)?;
    let mut worst = 0.0f64;
    for k in 0..s.samples() {
        let (es, ef, eg) = (s.eta_at(k), f.eta_at(k), g.eta_at(k));
        for d in 0..es.len() {
            worst = worst.max((es[d] - ef[d] - eg[d]).abs());
        }
    }
    Ok(worst)
}

/// A base point with separated supports and two tangent vectors at it,
/// both strictly inside the isometry ball.
pub fn tangent_trial_inputs<R: Rng>(rng: &mut R) -> (QPoint, TangentVector, TangentVector) {
    let q = rng.gen_range(2..=5);
    let n = rng.gen_range(1..=2);
    let mult = gen::multiplicities(rng, q);
    let base = gen::stratified_point(rng, &mult, n, 0.2);
    let eps = exp_isometry_radius(&base).min(1.0);
    let (ru, rv) = (eps * rng.gen_range(0.1..0.9), eps * rng.gen_range(0.1..0.9));
    let u = gen::tangent_of_norm(rng, &base, ru);
    let v = gen::tangent_of_norm(rng, &base, rv);
    (base, u, v)
}

fn tangent(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [
        ("block_formula_vs_quotient", Some(-1e-6)),
        ("exp_isometry", Some(-1e-12)),
        ("scaling_exact", None),
        ("product_metric_vs_bruteforce", Some(-1e-12)),
    ];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let (base, u, v) = tangent_trial_inputs(rng);
        let lambda = rng.gen_range(0.0..1.0f64).max(1e-3);
        let mut out = Vec::new();
        let d = match tangent_distance(&u, &v) {
            Ok(d) => d,
            Err(e) => return vec![(0, Obs::Error(e.to_string()))],
        };
        out.push((0, tangent_distance_limit(&u, &v, &[1e-6]).map(|l| -rel_diff(l, d)).into()));
        let iso = exp(&base, &u)
            .and_then(|eu| Ok(distance(&eu, &exp(&base, &v)?)?.g))
            .map(|g| -rel_diff(g, d));
        out.push((1, iso.into()));
        let scaled = u.scaled(lambda).and_then(|s| exp(&base, &s));
        out.push((
            2,
            match scaled {
                Ok(p) => Obs::Flag(p == u.geodesic_at(lambda)),
                Err(e) => Obs::Error(e.to_string()),
            },
        ));
        let brute: Result<f64, QError> = u
            .blocks()
            .iter()
            .zip(v.blocks())
            .map(|(x, y)| distance_bruteforce(x, y).map(|r| r.g_squared))
            .sum();
        out.push((3, brute.map(|b| -rel_diff(b, d * d)).into()));
        out
    };
    run(Suite::Tangent, cfg, &specs, &trial, Vec::new())
}

/// Curves with known refinement behavior, as `(f, a, b)`.
pub fn refinement_corpus() -> Vec<(Box<dyn Fn(f64) -> QPoint + Send + Sync>, f64, f64)> {
    fn s(v: &[f64]) -> QPoint {
        QPoint::from_scalars(v).expect("finite")
    }
    vec![
        (Box::new(|x| s(&[x, x + 3.0])), 0.0, 1.0),
        (Box::new(|x| s(&[x, -x])), -1.0, 1.0),
        (Box::new(|_| s(&[0.5, 0.5, -2.0])), 0.0, 1.0),
        (Box::new(|x| s(&[x.sin(), (2.0 * x).cos(), x * x - 0.5])), 0.0, 3.0),
        (Box::new(|x| s(&[x - 0.5, 0.5 - x, 0.25 * (6.0 * x).sin()])), 0.0, 1.0),
        (
            Box::new(|x| {
                QPoint::new(2, vec![vec![x.cos(), x.sin()], vec![-x.cos(), -x.sin()], vec![0.0, x]]).expect("finite")
            }),
            0.0,
            2.0,
        ),
    ]
}

/// `max jump on the 2x refined grid - max jump on the coarse grid`.
pub fn refinement_excess(f: &(dyn Fn(f64) -> QPoint + Send + Sync), a: f64, b: f64, samples: usize) -> Result<f64, QError> {
    let coarse = continuous_selection(&SampledCurve::from_fn(a, b, samples, f)?)?;
    let fine = continuous_selection(&SampledCurve::from_fn(a, b, 2 * samples - 1, f)?)?;
    Ok(fine.max_jump() - coarse.max_jump())
}

fn selection(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [
        ("multiset_reproduced_exactly", None),
        ("jump_within_step_distance", Some(-1e-12)),
        ("refinement_stability", Some(0.0)),
    ];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let q = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=2);
        let f = gen::crossing_curve(rng, q, n, 41);
        match continuous_selection(&f).and_then(|sel| check_selection(&sel, &f)) {
            Ok(r) => vec![(0, Obs::Flag(r.exact)), (1, Obs::Margin(-r.worst_jump_excess))],
            Err(e) => vec![(0, Obs::Error(e.to_string()))],
        }
    };
    let fixed = refinement_corpus()
        .iter()
        .flat_map(|(f, a, b)| {
            [11, 21, 41]
                .into_iter()
                .map(|m| (2, refinement_excess(f.as_ref(), *a, *b, m).map(|e| -e).into()))
                .collect::<Vec<_>>()
        })
        .collect();
    run(Suite::Selection, cfg, &specs, &trial, fixed)
}

/// `p(0..=max)` by Euler's pentagonal number recurrence.
pub fn partition_numbers(max: usize) -> Vec<u64> {
    let mut p = vec![0i64; max + 1];
    p[0] = 1;
    for m in 1..=max {
        let mut acc = 0i64;
        for k in 1.. {
            let k = k as i64;
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += sign * p[m - g1];
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= m {
                acc += sign * p[m - g2];
            }
        }
        p[m] = acc;
    }
    p.into_iter().map(|x| x as u64).collect()
}

/// `A_eps`, `B_eps` whose lexicographic embeddings stay `sqrt 2` apart while
/// `G(A_eps, B_eps) = sqrt 2 eps`.
pub fn lex_pair(eps: f64) -> (QPoint, QPoint) {
    let a = QPoint::new(2, vec![vec![1.0, 1.0], vec![1.0 + eps, 2.0]]).expect("finite");
    let b = QPoint::new(2, vec![vec![1.0 + eps, 1.0], vec![1.0, 2.0]]).expect("finite");
    (a, b)
}

pub fn lex_ratio(eps: f64) -> Result<f64, QError> {
    let (a, b) = lex_pair(eps);
    let (pa, pb) = (lex_embedding(&a), lex_embedding(&b));
    let num = pa.iter().zip(&pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(num / distance(&a, &b)?.g)
}

/// A point with separated supports and a same-signature neighbor whose
/// supports each moved by less than `delta / 4^Q`.
pub fn stratum_pair<R: Rng>(rng: &mut R) -> (QPoint, QPoint) {
    let q = rng.gen_range(2..=5);
    let n = rng.gen_range(1..=2);
    let mult = gen::multiplicities(rng, q);
    let a = gen::stratified_point(rng, &mult, n, 0.2);
    let bound = stratum_radius(&a).min(1.0) / 4f64.powi(q as i32);
    let sig = signature(&a, 0.0).expect("exact grouping");
    let rows = sig
        .supports()
        .iter()
        .zip(sig.multiplicities())
        .flat_map(|(s, &k)| {
            let len = bound * rng.gen_range(0.0..0.99);
            let shift = gen::vector_of_length(rng, n, len);
            let moved: Vec<f64> = s.iter().zip(&shift).map(|(x, d)| x + d).collect();
            std::iter::repeat(moved).take(k)
        })
        .collect();
    (a, QPoint::new(n, rows).expect("finite"))
}

fn strata(cfg: &SuiteConfig) -> SuiteReport {
    let specs = [
        ("geodesic_stays_in_stratum", None),
        ("signature_reproduces_multiplicities", None),
        ("lower_semicontinuity", None),
        ("decomposition_count_is_partition_number", None),
        ("lex_embedding_ratio_is_inverse_eps", Some(-1e-9)),
    ];
    let trial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let (a, b) = stratum_pair(rng);
        let mut out = vec![(
            0,
            match stratum_local_geodesic_check(&a, &b) {
                Ok(c) => Obs::Flag(c.stays_in_stratum),
                Err(e) => Obs::Error(e.to_string()),
            },
        )];

        let q = rng.gen_range(1..=6);
        let mut mult = gen::multiplicities(rng, q);
        let dim = rng.gen_range(1..=3);
        let p = gen::stratified_point(rng, &mult, dim, 0.05);
        mult.sort_unstable();
        let ok = signature(&p, 0.0).map(|s| s.multiplicities() == mult.as_slice());
        out.push((1, ok.map_or_else(|e| Obs::Error(e.to_string()), Obs::Flag)));

        // anything closer than delta has at least as many support points
        let delta = stratum_radius(&p).min(1.0);
        let z = QPoint::from_flat(
            p.n(),
            p.coords().iter().map(|x| x + delta * 0.9 * rng.gen_range(-1.0..=1.0) / (p.q() * p.n()) as f64).collect(),
        )
        .expect("finite");
        let lsc = distance(&p, &z).and_then(|d| {
            Ok(d.g >= stratum_radius(&p) || signature(&z, 0.0)?.j() >= signature(&p, 0.0)?.j())
        });
        out.push((2, lsc.map_or_else(|e| Obs::Error(e.to_string()), Obs::Flag)));
        out
    };
    let oracle = partition_numbers(20);
    let mut fixed: Vec<(usize, Obs)> = (1..=20)
        .map(|q| {
            (
                3,
                match enumerate_decompositions(q) {
                    Ok(d) => Obs::Flag(d.len() as u64 == oracle[q]),
                    Err(e) => Obs::Error(e.to_string()),
                },
            )
        })
        .collect();
    for eps in [1e-1, 1e-2, 1e-3] {
        fixed.push((4, lex_ratio(eps).map(|r| -rel_diff(r, 1.0 / eps)).into()));
    }
    run(Suite::Strata, cfg, &specs, &trial, fixed)
}

/// The worked example triple in the plane.
pub fn worked_example() -> (QPoint, QPoint, QPoint) {
    let p = |rows: [[f64; 2]; 2]| QPoint::new(2, rows.iter().map(|r| r.to_vec()).collect()).expect("finite");
    (
        p([[0.0, 1.0], [0.0, 0.0]]),
        p([[0.0, 0.0], [1.0, -0.5]]),
        p([[0.0, 0.0], [-1.0, -1.0]]),
    )
}

/// `G^2(gamma(t), C)` along the worked example geodesic, in closed form.
pub fn worked_example_profile(t: f64) -> f64 {
    let first = 9.0 * t * t / 4.0 - t + 3.0;
    let second = 9.0 * t * t / 4.0 - 4.0 * t + 5.0;
    first.min(second)
}

fn worked_examples(cfg: &SuiteConfig) -> SuiteReport {
    let names = [
        "worked_example_distances",
        "worked_example_profile",
        "worked_example_geodesic_midpoint",
        "worked_example_pc_strict",
        "two_geodesics_between_one_pair",
        "disconnected_stratum",
        "lex_embedding_not_lipschitz",
        "exp_of_zero",
        "tensor_sum_of_minimizers",
        "eta_additivity",
        "dirichlet_of_matched_path",
        "subtraction_from_vertex",
        "cross_quotient_derivative",
        "cross_not_strongly_approximatable",
        "cross_selection_rejected_and_continuous",
    ];
    let specs: Vec<(&str, Option<f64>)> = names.iter().map(|n| (*n, None)).collect();
    let mut tally = Tally::new(&specs, None);
    for (slot, check) in example_checks().into_iter().enumerate() {
        let obs = match check() {
            Ok(b) => Obs::Flag(b),
            Err(e) => Obs::Error(e.to_string()),
        };
        tally.absorb(None, slot, obs);
    }
    tally.finish(Suite::WorkedExamples, cfg, 1)
}

type Check = Box<dyn Fn() -> Result<bool, QError>>;

fn example_checks() -> Vec<Check> {
    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() <= 1e-12
    }
    fn s(v: &[f64]) -> QPoint {
        QPoint::from_scalars(v).expect("finite")
    }
    vec![
        Box::new(|| {
            let (a, b, c) = worked_example();
            Ok(close(distance(&a, &b)?.g_squared, 2.25)
                && close(distance(&a, &c)?.g_squared, 3.0)
                && close(distance(&b, &c)?.g_squared, 3.25))
        }),
        Box::new(|| {
            let (a, b, c) = worked_example();
            let g = geodesic(&a, &b)?;
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                if !close(distance(&g.eval(t), &c)?.g_squared, worked_example_profile(t)) {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        Box::new(|| {
            let (a, b, _) = worked_example();
            let want = QPoint::new(2, vec![vec![0.0, 0.5], vec![0.5, -0.25]])?;
            Ok(distance(&geodesic(&a, &b)?.eval(0.5), &want)?.g <= 1e-12)
        }),
        Box::new(|| {
            let (a, b, c) = worked_example();
            Ok(close(pc_comparison(&a, &b, &c, 1.0 / 3.0)?.slack, 1.0 / 3.0))
        }),
        Box::new(|| {
            let a = QPoint::new(2, vec![vec![0.0, 1.0], vec![0.0, -1.0]])?;
            let b = QPoint::new(2, vec![vec![-1.0, 0.0], vec![1.0, 0.0]])?;
            let g = geodesic(&a, &b)?;
            Ok(optimal_matchings(&a, &b, 1e-12)?.len() == 2 && close(g.length, distance(&a, &b)?.g))
        }),
        Box::new(|| {
            let a = s(&[1.0, 2.0, 2.0]);
            let b = s(&[2.0, 1.0, 1.0]);
            let same = signature(&a, 0.0)?.multiplicities() == [1, 2] && signature(&b, 0.0)?.multiplicities() == [1, 2];
            let refused = matches!(stratum_local_geodesic_check(&a, &b), Err(QError::Precondition(_)));
            let leaves = signature(&geodesic(&a, &b)?.eval(0.5), 0.0)?.j() != 2;
            Ok(same && refused && leaves)
        }),
        Box::new(|| {
            let (a, b) = lex_pair(0.1);
            let (pa, pb) = (lex_embedding(&a), lex_embedding(&b));
            let lex = pa.iter().zip(&pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            Ok(close(distance(&a, &b)?.g, 2f64.sqrt() * 0.1) && close(lex, 2f64.sqrt()))
        }),
        Box::new(|| {
            let (a, _, _) = worked_example();
            Ok(exp(&a, &TangentVector::zero(a.clone())?)? == a)
        }),
        Box::new(|| {
            let f = BranchedCurve::from_fns(0.0, 1.0, 11, &[&|x| vec![x], &|_| vec![-1.0]])?;
            let g = BranchedCurve::from_fns(0.0, 1.0, 11, &[&|x| vec![1.0 - x], &|_| vec![-1.0]])?;
            let sum = tensor_sum(&f, &g)?;
            for k in 0..11 {
                let x = sum.x(k);
                if distance(&sum.value_at(k), &s(&[1.0, x - 1.0, -x, -2.0]))?.g > 1e-15 {
                    return Ok(false);
                }
            }
            // branches x - 1 and -x change order at x = 1/2
            let diff = |k: usize| sum.branch_at(1, k)[0] - sum.branch_at(2, k)[0];
            Ok(diff(0) < 0.0 && diff(5) == 0.0 && diff(10) > 0.0)
        }),
        Box::new(|| {
            let f = BranchedCurve::from_fns(0.0, 1.0, 11, &[&|x| vec![x], &|_| vec![-1.0]])?;
            let g = BranchedCurve::from_fns(0.0, 1.0, 11, &[&|x| vec![1.0 - x], &|_| vec![-1.0]])?;
            Ok(eta_defect(&f, &g)? <= 1e-15)
        }),
        Box::new(|| {
            let (a, b, _) = worked_example();
            let g = geodesic(&a, &b)?;
            let (sa, sb) = (g.start.to_rows(), g.end.to_rows());
            let fns: Vec<Box<dyn Fn(f64) -> Vec<f64>>> = g
                .matching
                .sigma
                .iter()
                .enumerate()
                .map(|(i, &j)| {
                    let (p, q) = (sa[i].clone(), sb[j].clone());
                    Box::new(move |t: f64| p.iter().zip(&q).map(|(x, y)| (1.0 - t) * x + t * y).collect())
                        as Box<dyn Fn(f64) -> Vec<f64>>
                })
                .collect();
            let refs: Vec<&dyn Fn(f64) -> Vec<f64>> = fns.iter().map(|f| f.as_ref()).collect();
            let curve = BranchedCurve::from_fns(0.0, 1.0, 9, &refs)?;
            Ok(close(dirichlet(&curve)?, 2.25))
        }),
        Box::new(|| {
            let q = QPoint::repeated(3, &[1.0, -1.0])?;
            let z = QPoint::new(2, vec![vec![5.0, 0.0], vec![1.0, 1.0], vec![-3.0, 2.0]])?;
            let want = QPoint::new(2, vec![vec![4.0, 1.0], vec![0.0, 2.0], vec![-4.0, 3.0]])?;
            Ok(subtract(&z, &q, 0.0)? == want)
        }),
        Box::new(|| {
            let d = derivative(|x| s(&[x, -x]), 0.0, &QuotientSchedule::default())?;
            Ok(d.value == s(&[-1.0, 1.0]))
        }),
        Box::new(|| {
            let candidate = vec![AffineMap::new(vec![0.0], vec![1.0])?, AffineMap::new(vec![0.0], vec![-1.0])?];
            let r = affine_approx_error(|x| s(&[x, -x]), 0.0, &candidate, &AffineCheck::default())?;
            Ok(r.approximatable && !r.strong_condition)
        }),
        Box::new(|| {
            let rejected = matches!(
                differentiable_selection(|x| s(&[x, -x]), -1.0, 1.0, 21, 0.0, &AffineCheck::default()),
                Err(QError::NotStronglyApproximatable(_))
            );
            let f = SampledCurve::from_fn(-1.0, 1.0, 21, |x| s(&[x, -x]))?;
            let r = check_selection(&continuous_selection(&f)?, &f)?;
            Ok(rejected && r.holds(1e-12))
        }),
    ]
}

//! Splitting a sampled Q-valued curve into Q continuous branches, and
//! regrouping those branches around a point where the curve is strongly
//! affinely approximatable.

use serde::{Deserialize, Serialize};

use super::{affine_approx_error, AffineApproxReport, AffineCheck, AffineMap, NeighborhoodSpec, QuotientSchedule};
use crate::algebra::{check_grid, grid, grid_node, BranchedCurve};
use crate::assignment::{all_optimal, hungarian, lex_min_optimal, CostMatrix};
use crate::error::{QError, Result};
use crate::metric::{distance, BRUTE_FORCE_CAP};
use crate::point::{lex_cmp, sq_dist, QPoint, QPointRepr};
use crate::strata::{signature, stratum_radius};

/// A Q-valued curve known only at the nodes of a uniform grid on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRepr", into = "SampledRepr")]
pub struct SampledCurve {
    a: f64,
    b: f64,
    samples: Vec<QPoint>,
}

/// JSON shape: `{"a": 0, "b": 1, "samples": [QPoint, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledRepr {
    pub a: f64,
    pub b: f64,
    pub samples: Vec<QPointRepr>,
}

impl TryFrom<SampledRepr> for SampledCurve {
    type Error = QError;

    fn try_from(r: SampledRepr) -> Result<Self> {
        let samples = r.samples.into_iter().map(QPoint::try_from).collect::<Result<Vec<_>>>()?;
        SampledCurve::new(r.a, r.b, samples)
    }
}

impl From<SampledCurve> for SampledRepr {
    fn from(c: SampledCurve) -> Self {
        SampledRepr {
            a: c.a,
            b: c.b,
            samples: c.samples.into_iter().map(Into::into).collect(),
        }
    }
}

impl SampledCurve {
    pub fn new(a: f64, b: f64, samples: Vec<QPoint>) -> Result<Self> {
        check_grid(a, b, samples.len())?;
        for s in &samples[1..] {
            samples[0].compatible(s)?;
        }
        Ok(SampledCurve { a, b, samples })
    }

    /// Samples `f` at `samples` uniform nodes.
    pub fn from_fn(a: f64, b: f64, samples: usize, f: impl Fn(f64) -> QPoint) -> Result<Self> {
        check_grid(a, b, samples)?;
        Self::new(a, b, grid(a, b, samples).into_iter().map(f).collect())
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn q(&self) -> usize {
        self.samples[0].q()
    }

    pub fn n(&self) -> usize {
        self.samples[0].n()
    }

    pub fn x(&self, k: usize) -> f64 {
        grid_node(self.a, self.b, self.samples.len(), k)
    }

    pub fn sample(&self, k: usize) -> &QPoint {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[QPoint] {
        &self.samples
    }

    /// Index of the grid node equal to `x0` up to `1e-12 (b - a)`.
    pub fn node_index(&self, x0: f64) -> Result<usize> {
        let m = self.samples.len() - 1;
        let pos = (x0 - self.a) / (self.b - self.a) * m as f64;
        let k = pos.round();
        if !(0.0..=m as f64).contains(&k) || (self.x(k as usize) - x0).abs() > 1e-12 * (self.b - self.a) {
            return Err(QError::OutOfRange(format!("x0 = {x0} is not a grid node of [{}, {}]", self.a, self.b)));
        }
        Ok(k as usize)
    }
}

/// Q single-valued branches whose multiset union is the sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection {
    curve: BranchedCurve,
}

impl Selection {
    pub fn curve(&self) -> &BranchedCurve {
        &self.curve
    }

    pub fn into_curve(self) -> BranchedCurve {
        self.curve
    }

    /// Value at `x` of the polyline interpolation of every branch.
    pub fn eval(&self, x: f64) -> Result<QPoint> {
        let c = &self.curve;
        let (a, b) = c.interval();
        if !(a..=b).contains(&x) {
            return Err(QError::OutOfRange(format!("x = {x} outside [{a}, {b}]")));
        }
        let m = c.samples() - 1;
        let mut k = (((x - a) / (b - a) * m as f64).floor() as usize).min(m - 1);
        if k + 1 < m && x >= c.x(k + 1) {
            k += 1;
        } else if k > 0 && x < c.x(k) {
            k -= 1;
        }
        if x == c.x(k + 1) {
            return Ok(c.value_at(k + 1));
        }
        let (x0, x1) = (c.x(k), c.x(k + 1));
        let w = (x - x0) / (x1 - x0);
        let mut coords = Vec::with_capacity(c.p() * c.n());
        for i in 0..c.p() {
            let (u, v) = (c.branch_at(i, k), c.branch_at(i, k + 1));
            coords.extend(u.iter().zip(v).map(|(p, q)| p + w * (q - p)));
        }
        QPoint::from_flat(c.n(), coords)
    }

    /// `max_i |f_i(x_{k+1}) - f_i(x_k)|` for each step `k`.
    pub fn step_jumps(&self) -> Vec<f64> {
        let c = &self.curve;
        (0..c.samples() - 1)
            .map(|k| {
                (0..c.p())
                    .map(|i| sq_dist(c.branch_at(i, k), c.branch_at(i, k + 1)).sqrt())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn max_jump(&self) -> f64 {
        self.step_jumps().into_iter().fold(0.0, f64::max)
    }
}

/// Postcondition check of a selection against the curve it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// `sum_i [[f_i(x_k)]] == f(x_k)` at every node, bit for bit.
    pub exact: bool,
    /// Largest `max_i |jump_i| - G(f(x_k), f(x_{k+1}))` over all steps.
    pub worst_jump_excess: f64,
    pub max_jump: f64,
    pub steps: usize,
}

impl SelectionReport {
    /// Exact reproduction and jumps within `rel` of the step distance.
    pub fn holds(&self, rel: f64) -> bool {
        self.exact && self.worst_jump_excess <= rel * self.max_jump.max(f64::MIN_POSITIVE)
    }
}

pub fn check_selection(sel: &Selection, f: &SampledCurve) -> Result<SelectionReport> {
    let c = &sel.curve;
    if c.samples() != f.len() || c.interval() != f.interval() || c.p() != f.q() {
        return Err(QError::Mismatch("selection and curve have different grids".into()));
    }
    let exact = (0..f.len()).all(|k| c.value_at(k) == *f.sample(k));
    let jumps = sel.step_jumps();
    let mut worst = f64::NEG_INFINITY;
    for (k, jump) in jumps.iter().enumerate() {
        let g = distance(f.sample(k), f.sample(k + 1))?.g;
        worst = worst.max(jump - g);
    }
    Ok(SelectionReport {
        exact,
        worst_jump_excess: worst,
        max_jump: sel.max_jump(),
        steps: jumps.len(),
    })
}

/// Greedy branch tracking: each step extends the branches along the
/// lexicographically smallest optimal matching between consecutive samples.
pub fn continuous_selection(f: &SampledCurve) -> Result<Selection> {
    let q = f.q();
    // current[i] is the latest value of branch i
    let mut current: Vec<Vec<f64>> = f.sample(0).to_rows();
    let mut branches: Vec<Vec<Vec<f64>>> = current.iter().map(|p| vec![p.clone()]).collect();
    for k in 0..f.len() - 1 {
        let target = f.sample(k + 1);
        let costs = CostMatrix::from_fn(q, |i, j| sq_dist(&current[i], target.point(j)));
        let optimum = costs.cost_of(&hungarian(&costs));
        let tol = 1e-12 * optimum;
        let sigma = lex_min_optimal(&costs, tol);

        let step = optimum.sqrt();
        let delta = stratum_radius(target);
        if step > delta && ambiguous(&costs, &current, target, tol) {
            return Err(QError::GridTooCoarse {
                index: k + 1,
                step_distance: step,
            });
        }
        for (i, &j) in sigma.iter().enumerate() {
            current[i] = target.point(j).to_vec();
            branches[i].push(current[i].clone());
        }
    }
    let (a, b) = f.interval();
    Ok(Selection {
        curve: BranchedCurve::new(a, b, f.len(), branches)?,
    })
}

/// Whether two optimal matchings pair sources with targets differently as
/// value pairs. Ties between coincident sources or coincident targets are
/// harmless and do not count.
fn ambiguous(costs: &CostMatrix, sources: &[Vec<f64>], target: &QPoint, tol: f64) -> bool {
    let q = costs.size();
    let pairs = |sigma: &[usize]| -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = sigma
            .iter()
            .enumerate()
            .map(|(i, &j)| sources[i].iter().chain(target.point(j)).copied().collect())
            .collect();
        v.sort_by(|x, y| lex_cmp(x, y));
        v
    };
    if q <= BRUTE_FORCE_CAP {
        let optima = all_optimal(costs, tol);
        let first = pairs(&optima[0]);
        return optima[1..].iter().any(|s| pairs(s) != first);
    }
    // large Q: look for an equally cheap transposition
    let sigma = hungarian(costs);
    let bound = costs.cost_of(&sigma) + tol;
    let base = pairs(&sigma);
    for i in 0..q {
        for i2 in i + 1..q {
            let mut s = sigma.clone();
            s.swap(i, i2);
            if costs.cost_of(&s) <= bound && pairs(&s) != base {
                return true;
            }
        }
    }
    false
}

/// A selection regrouped at `x0` with one derivative per branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentiableSelection {
    pub selection: Selection,
    pub x0: f64,
    /// `f_i'(x0)`: the slope of the affine map of the branch's group.
    pub derivatives: Vec<Vec<f64>>,
    /// `groups[i]` lists the branch indices agreeing at `x0`.
    pub groups: Vec<Vec<usize>>,
    /// Central grid difference quotient of each branch at `x0` (one-sided
    /// at an endpoint).
    pub grid_quotients: Vec<Vec<f64>>,
    pub affine: AffineApproxReport,
}

/// Per-group slopes of `f` at `x0`: least squares fit of the group mean
/// displacement on the symmetric window `+-h*j/W`, `j = 1..=W`, shrinking
/// `h` along `schedule` until three successive fits agree within
/// `schedule.tol`.
pub fn fit_group_slopes(f: &impl Fn(f64) -> QPoint, x0: f64, schedule: &QuotientSchedule) -> Result<Vec<Vec<f64>>> {
    const WINDOW: usize = 4;
    let base = f(x0);
    let sig = signature(&base, 0.0)?;
    let n = base.n();
    let spec = if sig.j() == 1 {
        None
    } else {
        Some(NeighborhoodSpec::new(base.clone(), 0.5 * stratum_radius(&base))?)
    };
    let group_means = |x: f64| -> Result<Vec<Vec<f64>>> {
        let z = f(x);
        let groups: Vec<Vec<Vec<f64>>> = match &spec {
            None => vec![z.to_rows()],
            Some(s) => {
                let m = s.membership(&z)?;
                if !m.inside {
                    return Err(QError::OutsideNeighborhood(format!("f({x}) leaves P(f(x0); r)")));
                }
                m.groups
            }
        };
        Ok(groups
            .iter()
            .zip(sig.supports())
            .map(|(g, s)| {
                (0..n)
                    .map(|d| g.iter().map(|p| p[d] - s[d]).sum::<f64>() / g.len() as f64)
                    .collect()
            })
            .collect())
    };

    let mut history: Vec<Vec<Vec<f64>>> = Vec::new();
    for h in schedule.steps() {
        let mut num = vec![vec![0.0; n]; sig.j()];
        let mut den = 0.0;
        let mut usable = true;
        for j in 1..=WINDOW {
            for sign in [1.0, -1.0] {
                let x = x0 + sign * h * j as f64 / WINDOW as f64;
                let dx = x - x0;
                let means = match group_means(x) {
                    Ok(m) => m,
                    Err(QError::OutsideNeighborhood(_)) => {
                        usable = false;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                for (acc, m) in num.iter_mut().zip(&means) {
                    for (a, v) in acc.iter_mut().zip(m) {
                        *a += dx * v;
                    }
                }
                den += dx * dx;
            }
            if !usable {
                break;
            }
        }
        if !usable {
            history.clear();
            continue;
        }
        let slopes: Vec<Vec<f64>> = num.into_iter().map(|v| v.into_iter().map(|a| a / den).collect()).collect();
        history.push(slopes);
        if history.len() >= 3 {
            let w = &history[history.len() - 3..];
            let spread = (0..3)
                .flat_map(|a| (a + 1..3).map(move |b| (a, b)))
                .map(|(a, b)| {
                    w[a].iter()
                        .zip(&w[b])
                        .map(|(u, v)| sq_dist(u, v))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            if spread <= schedule.tol {
                return Ok(history.pop().expect("nonempty"));
            }
        }
    }
    Err(QError::NotDifferentiable(format!(
        "group slopes at x0 = {x0} did not settle within {:e}",
        schedule.tol
    )))
}

/// Continuous selection on the grid, regrouped so that branches agreeing at
/// `x0` are contiguous, with each branch assigned its group's slope. Fails
/// unless the fitted per-group affine maps approximate `f` at `x0`.
pub fn differentiable_selection(
    f: impl Fn(f64) -> QPoint,
    a: f64,
    b: f64,
    samples: usize,
    x0: f64,
    check: &AffineCheck,
) -> Result<DifferentiableSelection> {
    let sampled = SampledCurve::from_fn(a, b, samples, &f)?;
    let k0 = sampled.node_index(x0)?;
    let x0 = sampled.x(k0);
    let base = f(x0);
    let sig = signature(&base, 0.0)?;

    let slopes = fit_group_slopes(&f, x0, &check.schedule)?;
    let mut candidate = Vec::with_capacity(base.q());
    for (g, (support, slope)) in sig.supports().iter().zip(&slopes).enumerate() {
        for _ in 0..sig.multiplicities()[g] {
            candidate.push(AffineMap::through(x0, support, slope)?);
        }
    }
    let affine = affine_approx_error(&f, x0, &candidate, check)?;
    if !affine.strongly_approximatable() {
        let last = affine.quotients.last().map_or(f64::NAN, |p| p.1);
        return Err(QError::NotStronglyApproximatable(format!(
            "best per-group affine fit leaves G(f, A)/|x - x0| = {last:e} at x0 = {x0}"
        )));
    }

    let raw = continuous_selection(&sampled)?.into_curve();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); sig.j()];
    for i in 0..raw.p() {
        let v = raw.branch_at(i, k0);
        let g = sig
            .supports()
            .iter()
            .position(|s| s.as_slice() == v)
            .expect("selection reproduces f(x0)");
        groups[g].push(i);
    }
    let mut rows = Vec::with_capacity(raw.p());
    let mut derivatives = Vec::with_capacity(raw.p());
    let mut new_groups = Vec::with_capacity(sig.j());
    let mut next = 0;
    for (g, members) in groups.iter().enumerate() {
        new_groups.push((next..next + members.len()).collect());
        next += members.len();
        for &i in members {
            rows.push((0..raw.samples()).map(|k| raw.branch_at(i, k).to_vec()).collect());
            derivatives.push(slopes[g].clone());
        }
    }
    let curve = BranchedCurve::new(a, b, samples, rows)?;
    let grid_quotients = (0..curve.p())
        .map(|i| {
            let (lo, hi) = (k0.saturating_sub(1), (k0 + 1).min(samples - 1));
            let dx = curve.x(hi) - curve.x(lo);
            curve
                .branch_at(i, hi)
                .iter()
                .zip(curve.branch_at(i, lo))
                .map(|(u, v)| (u - v) / dx)
                .collect()
        })
        .collect();
    Ok(DifferentiableSelection {
        selection: Selection { curve },
        x0,
        derivatives,
        groups: new_groups,
        grid_quotients,
        affine,
    })
}

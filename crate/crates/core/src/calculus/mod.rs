//! Subtraction near a point and quotient derivatives of multiple-valued
//! functions.
//!
//! Close to `q = sum_i k_i [[q_i]]` every multiset splits into clusters of
//! `k_i` points around each `q_i`, which makes `z (-) q`, the multiset of
//! cluster-wise differences, well defined. Quotients
//! `[f(x) (-) f(x0)] / (x - x0)` then have a componentwise limit.

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::metric::distance;
use crate::point::{sq_dist, QPoint};
use crate::strata::{signature, stratum_radius, Signature};

pub mod selection;

pub use selection::{
    check_selection, continuous_selection, differentiable_selection, fit_group_slopes, DifferentiableSelection,
    SampledCurve, Selection, SelectionReport,
};

/// The neighborhood `P(q; r)` with `r < r0 = half the minimum support
/// separation of q`.
#[derive(Debug, Clone)]
pub struct NeighborhoodSpec {
    center: QPoint,
    signature: Signature,
    radius: f64,
    r0: f64,
}

/// Result of a membership test: `groups[i]` lists the points of `z` in the
/// open ball around the i-th support point of the center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub inside: bool,
    pub groups: Vec<Vec<Vec<f64>>>,
}

impl NeighborhoodSpec {
    pub fn new(center: QPoint, radius: f64) -> Result<Self> {
        let signature = signature(&center, 0.0)?;
        let r0 = stratum_radius(&center);
        if !(radius > 0.0) || radius >= r0 {
            return Err(QError::OutOfRange(format!("need 0 < r < r0 = {r0}, got r = {radius}")));
        }
        Ok(NeighborhoodSpec {
            center,
            signature,
            radius,
            r0,
        })
    }

    pub fn center(&self) -> &QPoint {
        &self.center
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Whether exactly `k_i` points of `z` lie in the open `r`-ball around
    /// each `q_i`.
    pub fn membership(&self, z: &QPoint) -> Result<Membership> {
        self.center.compatible(z)?;
        let r_sq = self.radius * self.radius;
        let supports = self.signature.supports();
        let mut groups: Vec<Vec<Vec<f64>>> = vec![Vec::new(); supports.len()];
        for p in z.points() {
            // balls are disjoint since r < r0
            if let Some(i) = supports.iter().position(|s| sq_dist(s, p) < r_sq) {
                groups[i].push(p.to_vec());
            }
        }
        let inside = groups
            .iter()
            .zip(self.signature.multiplicities())
            .all(|(g, &k)| g.len() == k);
        Ok(Membership { inside, groups })
    }

    /// `z (-) q = sum_i sum_j [[z_j^(i) - q_i]]`, with groups in signature
    /// order.
    pub fn subtract(&self, z: &QPoint) -> Result<GroupedDifference> {
        let m = self.membership(z)?;
        if !m.inside {
            return Err(QError::OutsideNeighborhood(format!(
                "cluster sizes {:?} differ from multiplicities {:?}",
                m.groups.iter().map(Vec::len).collect::<Vec<_>>(),
                self.signature.multiplicities()
            )));
        }
        GroupedDifference::from_groups(self.center.n(), m.groups, self.signature.supports())
    }
}

/// `true` plus the grouping when `z` lies in `spec`.
pub fn in_neighborhood(spec: &NeighborhoodSpec, z: &QPoint) -> Result<Membership> {
    spec.membership(z)
}

/// A difference multiset together with its per-group split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedDifference {
    pub value: QPoint,
    pub grouped: Vec<QPoint>,
}

impl GroupedDifference {
    fn from_groups(n: usize, groups: Vec<Vec<Vec<f64>>>, supports: &[Vec<f64>]) -> Result<Self> {
        let grouped = groups
            .into_iter()
            .zip(supports)
            .map(|(pts, s)| {
                QPoint::new(
                    n,
                    pts.into_iter()
                        .map(|p| p.iter().zip(s).map(|(x, c)| x - c).collect())
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let value = QPoint::from_flat(n, grouped.iter().flat_map(|g| g.coords().iter().copied()).collect())?;
        Ok(GroupedDifference { value, grouped })
    }

    fn scaled(&self, s: f64) -> Result<Self> {
        Ok(GroupedDifference {
            value: self.value.scaled(s)?,
            grouped: self.grouped.iter().map(|g| g.scaled(s)).collect::<Result<_>>()?,
        })
    }
}

/// `z (-) q`. When `q = Q[[q0]]` is a single support point the difference
/// is defined for every `z`, and `r` is ignored.
pub fn subtract(z: &QPoint, q: &QPoint, r: f64) -> Result<QPoint> {
    Ok(subtract_grouped(z, q, r)?.value)
}

/// `q (-) z`, the negation of [`subtract`].
pub fn subtract_from(q: &QPoint, z: &QPoint, r: f64) -> Result<QPoint> {
    subtract(z, q, r)?.scaled(-1.0)
}

pub fn subtract_grouped(z: &QPoint, q: &QPoint, r: f64) -> Result<GroupedDifference> {
    q.compatible(z)?;
    let sig = signature(q, 0.0)?;
    if sig.j() == 1 {
        let groups = vec![z.to_rows()];
        return GroupedDifference::from_groups(q.n(), groups, sig.supports());
    }
    NeighborhoodSpec::new(q.clone(), r)?.subtract(z)
}

/// Convergence rule for quotient limits: `h = h0 * 2^-k`, `k = 0..=max_k`;
/// converged once three successive quotients are pairwise within `tol` in
/// G, and the two one-sided limits must agree within `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientSchedule {
    pub h0: f64,
    pub max_k: u32,
    pub tol: f64,
}

impl Default for QuotientSchedule {
    fn default() -> Self {
        QuotientSchedule {
            h0: 1e-2,
            max_k: 20,
            tol: 1e-7,
        }
    }
}

impl QuotientSchedule {
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.max_k).map(move |k| self.h0 * (-(k as f64)).exp2())
    }
}

/// Evidence that a quotient limit was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Step at which convergence was declared.
    pub h: f64,
    /// Largest pairwise G distance among the last three quotients, per side.
    pub spread_right: f64,
    pub spread_left: f64,
    /// G distance between the one-sided limits.
    pub two_sided_gap: f64,
}

/// A derivative multiset and its split by signature group of `f(x0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeValue {
    pub value: QPoint,
    pub grouped: Vec<QPoint>,
    pub certificate: Certificate,
}

impl DerivativeValue {
    /// `|Df|^2 = sum |L_i|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.value.coords().iter().map(|x| x * x).sum()
    }
}

/// One probe: step `h > 0` and the values at `+h` and `-h`, plus the
/// effective signed offsets actually realized.
pub struct Probe {
    pub h_right: f64,
    pub right: QPoint,
    pub h_left: f64,
    pub left: QPoint,
}

/// Quotient limit of `[z(h) (-) base] / h` from both sides over a sequence
/// of shrinking probes.
pub fn quotient_limit(base: &QPoint, probes: impl IntoIterator<Item = Probe>, tol: f64) -> Result<DerivativeValue> {
    let sig = signature(base, 0.0)?;
    let r = if sig.j() == 1 { f64::INFINITY } else { 0.5 * stratum_radius(base) };
    let quotient = |z: &QPoint, h: f64| -> Result<GroupedDifference> {
        let diff = if sig.j() == 1 {
            subtract_grouped(z, base, r)?
        } else {
            NeighborhoodSpec::new(base.clone(), r)?.subtract(z)?
        };
        diff.scaled(1.0 / h)
    };

    let mut right: Vec<GroupedDifference> = Vec::new();
    let mut left: Vec<GroupedDifference> = Vec::new();
    let mut last_h = f64::NAN;
    let mut outside = 0usize;
    for probe in probes {
        base.compatible(&probe.right)?;
        base.compatible(&probe.left)?;
        last_h = probe.h_right;
        // probes far from x0 may not yet be in P(f(x0); r)
        let (qr, ql) = match (quotient(&probe.right, probe.h_right), quotient(&probe.left, probe.h_left)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(QError::OutsideNeighborhood(_)), _) | (_, Err(QError::OutsideNeighborhood(_))) => {
                outside += 1;
                right.clear();
                left.clear();
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        right.push(qr);
        left.push(ql);
        if right.len() >= 3 {
            let spread_right = spread(&right[right.len() - 3..])?;
            let spread_left = spread(&left[left.len() - 3..])?;
            if spread_right <= tol && spread_left <= tol {
                let r_last = right.last().expect("nonempty");
                let l_last = left.last().expect("nonempty");
                let gap = distance(&r_last.value, &l_last.value)?.g;
                if gap > tol {
                    return Err(QError::NotDifferentiable(format!(
                        "one-sided limits differ by G = {gap:e}"
                    )));
                }
                return Ok(DerivativeValue {
                    value: r_last.value.clone(),
                    grouped: r_last.grouped.clone(),
                    certificate: Certificate {
                        h: probe.h_right,
                        spread_right,
                        spread_left,
                        two_sided_gap: gap,
                    },
                });
            }
        }
    }
    if right.is_empty() && outside > 0 {
        return Err(QError::Precondition(format!(
            "f(x0 +- h) never entered P(f(x0); r) down to h = {last_h:e}"
        )));
    }
    Err(QError::NotDifferentiable(format!(
        "quotients did not settle within {tol:e} down to h = {last_h:e}"
    )))
}

fn spread(window: &[GroupedDifference]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in window.iter().enumerate() {
        for b in &window[i + 1..] {
            worst = worst.max(distance(&a.value, &b.value)?.g);
        }
    }
    Ok(worst)
}

/// Derivative of a Q-valued function of one variable at `x0`.
pub fn derivative(f: impl Fn(f64) -> QPoint, x0: f64, schedule: &QuotientSchedule) -> Result<DerivativeValue> {
    let base = f(x0);
    let probes = schedule.steps().map(|h| {
        let (xr, xl) = (x0 + h, x0 - h);
        Probe {
            h_right: xr - x0,
            right: f(xr),
            h_left: xl - x0,
            left: f(xl),
        }
    });
    quotient_limit(&base, probes, schedule.tol)
}

/// Directional derivative `L(v) = lim_t [f(x0 + t v) (-) f(x0)] / t` of a
/// function on R^m.
pub fn directional_derivative(
    f: impl Fn(&[f64]) -> QPoint,
    x0: &[f64],
    v: &[f64],
    schedule: &QuotientSchedule,
) -> Result<DerivativeValue> {
    if x0.len() != v.len() {
        return Err(QError::Mismatch(format!(
            "point in R^{} but direction in R^{}",
            x0.len(),
            v.len()
        )));
    }
    let base = f(x0);
    let at = |t: f64| -> Vec<f64> { x0.iter().zip(v).map(|(x, d)| x + t * d).collect() };
    let probes = schedule.steps().map(|t| Probe {
        h_right: t,
        right: f(&at(t)),
        h_left: -t,
        left: f(&at(-t)),
    });
    quotient_limit(&base, probes, schedule.tol)
}

/// An affine map `x -> intercept + slope * x` from R to R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub intercept: Vec<f64>,
    pub slope: Vec<f64>,
}

impl AffineMap {
    pub fn new(intercept: Vec<f64>, slope: Vec<f64>) -> Result<Self> {
        if intercept.len() != slope.len() || intercept.is_empty() {
            return Err(QError::Malformed("affine map needs matching, nonempty intercept and slope".into()));
        }
        Ok(AffineMap { intercept, slope })
    }

    /// The map through `value` at `x0` with the given slope.
    pub fn through(x0: f64, value: &[f64], slope: &[f64]) -> Result<Self> {
        Self::new(value.iter().zip(slope).map(|(v, s)| v - s * x0).collect(), slope.to_vec())
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.intercept.iter().zip(&self.slope).map(|(c, s)| c + s * x).collect()
    }

    fn close_to(&self, other: &AffineMap, tol: f64) -> bool {
        sq_dist(&self.intercept, &other.intercept).sqrt() <= tol && sq_dist(&self.slope, &other.slope).sqrt() <= tol
    }
}

fn affine_sum(maps: &[AffineMap], x: f64) -> Result<QPoint> {
    let n = maps[0].slope.len();
    QPoint::from_flat(n, maps.iter().flat_map(|m| m.eval(x)).collect())
}

/// Tolerances for [`affine_approx_error`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineCheck {
    pub schedule: QuotientSchedule,
    /// Largest quotient at the smallest step still called "approximatable".
    pub quotient_tol: f64,
    /// Tolerance for comparing values and maps in the strong condition.
    pub map_tol: f64,
}

impl Default for AffineCheck {
    fn default() -> Self {
        AffineCheck {
            schedule: QuotientSchedule::default(),
            quotient_tol: 1e-6,
            map_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineApproxReport {
    /// `(h, max over both sides of G(f(x0 +- h), sum [[A_i(x0 +- h)]]) / h)`
    pub quotients: Vec<(f64, f64)>,
    pub approximatable: bool,
    /// `A_i = A_j` whenever `A_i(x0) = A_j(x0)`.
    pub strong_condition: bool,
}

impl AffineApproxReport {
    pub fn strongly_approximatable(&self) -> bool {
        self.approximatable && self.strong_condition
    }
}

/// Samples `G(f(x), sum [[A_i(x)]]) / |x - x0|` on shrinking `|x - x0|`.
pub fn affine_approx_error(
    f: impl Fn(f64) -> QPoint,
    x0: f64,
    candidate: &[AffineMap],
    check: &AffineCheck,
) -> Result<AffineApproxReport> {
    let fx0 = f(x0);
    if candidate.len() != fx0.q() {
        return Err(QError::Mismatch(format!(
            "{} affine maps for a {}-valued function",
            candidate.len(),
            fx0.q()
        )));
    }
    if candidate.iter().any(|m| m.slope.len() != fx0.n()) {
        return Err(QError::Mismatch("affine maps have the wrong target dimension".into()));
    }
    let at_x0 = affine_sum(candidate, x0)?;
    let gap = distance(&fx0, &at_x0)?.g;
    let scale = 1.0 + fx0.coords().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if gap > check.map_tol * scale {
        return Err(QError::Mismatch(format!(
            "candidate does not reproduce f(x0): G = {gap:e}"
        )));
    }

    let mut quotients = Vec::new();
    for h in check.schedule.steps() {
        let mut worst = 0.0f64;
        for x in [x0 + h, x0 - h] {
            let d = distance(&f(x), &affine_sum(candidate, x)?)?.g;
            worst = worst.max(d / (x - x0).abs());
        }
        quotients.push((h, worst));
    }
    let approximatable = quotients.last().map_or(false, |&(_, q)| q <= check.quotient_tol);

    let values: Vec<Vec<f64>> = candidate.iter().map(|m| m.eval(x0)).collect();
    let mut strong_condition = true;
    for i in 0..candidate.len() {
        for j in i + 1..candidate.len() {
            let same_value = sq_dist(&values[i], &values[j]).sqrt() <= check.map_tol * scale;
            if same_value && !candidate[i].close_to(&candidate[j], check.map_tol * scale) {
                strong_condition = false;
            }
        }
    }
    Ok(AffineApproxReport {
        quotients,
        approximatable,
        strong_condition,
    })
}

/// Affine candidate induced by a derivative at `x0`: each group's support
/// point with each of the group's derivative components as slope.
pub fn candidate_from_derivative(base: &QPoint, x0: f64, d: &DerivativeValue) -> Result<Vec<AffineMap>> {
    let sig = signature(base, 0.0)?;
    let mut maps = Vec::with_capacity(base.q());
    for (support, block) in sig.supports().iter().zip(&d.grouped) {
        for slope in block.points() {
            maps.push(AffineMap::through(x0, support, slope)?);
        }
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> QPoint {
        QPoint::from_scalars(v).unwrap()
    }

    #[test]
    fn membership_examples() {
        let center = s(&[0.0, 1.0, 1.0]);
        let spec = NeighborhoodSpec::new(center.clone(), 0.1).unwrap();
        let m = in_neighborhood(&spec, &center).unwrap();
        assert!(m.inside);
        assert_eq!(m.groups, vec![vec![vec![0.0]], vec![vec![1.0], vec![1.0]]]);

        let m = in_neighborhood(&spec, &s(&[0.05, 0.95, 1.05])).unwrap();
        assert!(m.inside);
        assert_eq!(m.groups, vec![vec![vec![0.05]], vec![vec![0.95], vec![1.05]]]);

        assert!(!in_neighborhood(&spec, &s(&[0.05, 0.05, 1.05])).unwrap().inside);
        assert!(NeighborhoodSpec::new(center, 0.5).is_err());
    }

    #[test]
    fn subtraction_examples() {
        let q = s(&[0.0, 1.0, 1.0]);
        assert_eq!(subtract(&q, &q, 0.1).unwrap(), QPoint::zero(3, 1).unwrap());

        let z = s(&[0.1, 0.9, 1.2]);
        let d = subtract(&z, &q, 0.3).unwrap();
        let want = s(&[0.1, 0.9 - 1.0, 1.2 - 1.0]);
        assert_eq!(d, want);
        assert!(distance(&d, &s(&[0.1, -0.1, 0.2])).unwrap().g < 1e-15);
        assert_eq!(subtract_from(&q, &z, 0.3).unwrap(), want.scaled(-1.0).unwrap());

        assert!(matches!(
            subtract(&s(&[0.1, 0.2, 1.0]), &q, 0.3),
            Err(QError::OutsideNeighborhood(_))
        ));
    }

    #[test]
    fn subtraction_from_single_support_needs_no_radius() {
        let q = QPoint::repeated(3, &[1.0, -1.0]).unwrap();
        let z = QPoint::new(2, vec![vec![5.0, 0.0], vec![1.0, 1.0], vec![-3.0, 2.0]]).unwrap();
        let d = subtract(&z, &q, 0.0).unwrap();
        let want = QPoint::new(2, vec![vec![4.0, 1.0], vec![0.0, 2.0], vec![-4.0, 3.0]]).unwrap();
        assert_eq!(d, want);
    }

    #[test]
    fn derivative_examples() {
        let sch = QuotientSchedule::default();
        let c = derivative(|_| QPoint::repeated(2, &[3.0, 1.0]).unwrap(), 0.7, &sch).unwrap();
        assert_eq!(c.value, QPoint::zero(2, 2).unwrap());

        let d = derivative(|x| s(&[x, -x]), 0.0, &sch).unwrap();
        assert_eq!(d.value, s(&[-1.0, 1.0]));

        let d = derivative(|x| s(&[x, x * x + 1.0]), 1.0, &sch).unwrap();
        assert!(distance(&d.value, &s(&[1.0, 2.0])).unwrap().g < 1e-6);
        assert_eq!(d.grouped.len(), 2);
    }

    #[test]
    fn derivative_rejects_kinks() {
        let sch = QuotientSchedule::default();
        let r = derivative(|x| s(&[x.abs(), 5.0]), 0.0, &sch);
        assert!(matches!(r, Err(QError::NotDifferentiable(_))), "{r:?}");
    }

    #[test]
    fn directional_examples() {
        let sch = QuotientSchedule::default();
        let f = |x: &[f64]| s(&[x[0] + x[1], 2.0 * x[0]]);
        let d = directional_derivative(f, &[0.3, 0.1], &[1.0, 0.0], &sch).unwrap();
        assert!(distance(&d.value, &s(&[1.0, 2.0])).unwrap().g < 1e-6);
        let z = directional_derivative(f, &[0.3, 0.1], &[0.0, 0.0], &sch).unwrap();
        assert_eq!(z.value, QPoint::zero(2, 1).unwrap());
        let k = directional_derivative(|_: &[f64]| s(&[1.0, 1.0]), &[0.0, 0.0], &[0.5, 0.5], &sch).unwrap();
        assert_eq!(k.value, QPoint::zero(2, 1).unwrap());
        assert!(directional_derivative(f, &[0.0], &[1.0, 0.0], &sch).is_err());
    }

    #[test]
    fn affine_approximation_examples() {
        let chk = AffineCheck::default();
        let maps = vec![
            AffineMap::new(vec![1.0], vec![2.0]).unwrap(),
            AffineMap::new(vec![0.0], vec![-1.0]).unwrap(),
        ];
        let m2 = maps.clone();
        let r = affine_approx_error(move |x| affine_sum(&m2, x).unwrap(), 0.4, &maps, &chk).unwrap();
        assert!(r.quotients.iter().all(|&(_, q)| q == 0.0));
        assert!(r.strongly_approximatable());

        let cross = |x: f64| s(&[x, -x]);
        let tight = vec![
            AffineMap::new(vec![0.0], vec![1.0]).unwrap(),
            AffineMap::new(vec![0.0], vec![-1.0]).unwrap(),
        ];
        let r = affine_approx_error(cross, 0.0, &tight, &chk).unwrap();
        assert!(r.approximatable);
        assert!(!r.strong_condition);

        let loose = vec![
            AffineMap::new(vec![0.0], vec![2.0]).unwrap(),
            AffineMap::new(vec![0.0], vec![-2.0]).unwrap(),
        ];
        let r = affine_approx_error(cross, 0.0, &loose, &chk).unwrap();
        assert!(!r.approximatable);
        assert!(r.quotients.iter().all(|&(_, q)| (q - 2f64.sqrt()).abs() < 1e-12));

        let wrong = vec![AffineMap::new(vec![1.0], vec![0.0]).unwrap(); 2];
        assert!(affine_approx_error(cross, 0.0, &wrong, &chk).is_err());
    }
}

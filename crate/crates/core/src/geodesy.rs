//! Geodesics and Alexandrov comparison quantities.
//!
//! Every geodesic of (Q_Q(R^n), G) is matched-linear: fix an optimal
//! matching sigma and move each `a_i` on a straight line to
//! `b_sigma(i)`. The matching is stored with the geodesic so evaluation
//! never re-solves the assignment.

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::metric::{self, distance, sorted_matching_distance_1d, Matching};
use crate::point::QPoint;

/// Tolerance used by [`pc_comparison_all_geodesics`] to decide that two
/// matchings are equally optimal.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub start: QPoint,
    pub end: QPoint,
    pub matching: Matching,
    pub length: f64,
}

impl Geodesic {
    /// The matched-linear path along an explicit matching. The caller is
    /// responsible for `matching` being optimal if a geodesic is wanted.
    pub fn along(start: QPoint, end: QPoint, matching: Matching) -> Result<Self> {
        start.compatible(&end)?;
        if matching.sigma.len() != start.q() || !crate::assignment::is_permutation(&matching.sigma) {
            return Err(QError::Malformed("matching is not a permutation of 0..Q".into()));
        }
        let length = matching.squared_cost.sqrt();
        Ok(Geodesic {
            start,
            end,
            matching,
            length,
        })
    }

    /// `gamma(t) = sum_i [[(1-t) a_i + t b_sigma(i)]]`, canonicalized.
    pub fn eval(&self, t: f64) -> QPoint {
        let n = self.start.n();
        let mut coords = Vec::with_capacity(self.start.coords().len());
        for (i, &j) in self.matching.sigma.iter().enumerate() {
            let a = self.start.point(i);
            let b = self.end.point(j);
            coords.extend(a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y));
        }
        QPoint::from_flat(n, coords).expect("interpolant of finite points is finite")
    }

    /// The restriction to `[s, t]`, reparametrized on `[0, 1]`.
    pub fn restrict(&self, s: f64, t: f64) -> Result<Geodesic> {
        let from = self.eval(s);
        let to = self.eval(t);
        // canonical re-sorting scrambles indices, so rebuild the pairing
        // from the explicit interpolants
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = self
            .matching
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let a = self.start.point(i);
                let b = self.end.point(j);
                let at = |u: f64| a.iter().zip(b).map(|(x, y)| (1.0 - u) * x + u * y).collect::<Vec<_>>();
                (at(s), at(t))
            })
            .collect();
        let sigma = pair_indices(&from, &to, &pairs);
        let squared_cost = metric::matching_cost(&from, &to, &sigma);
        Geodesic::along(from, to, Matching { sigma, squared_cost })
    }
}

/// Recover a permutation of canonical indices from explicit point pairs.
fn pair_indices(from: &QPoint, to: &QPoint, pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<usize> {
    let mut used_from = vec![false; from.q()];
    let mut used_to = vec![false; to.q()];
    let mut sigma = vec![0usize; from.q()];
    for (p, q) in pairs {
        let i = (0..from.q())
            .find(|&i| !used_from[i] && from.point(i) == p.as_slice())
            .expect("pair source present in canonical start");
        let j = (0..to.q())
            .find(|&j| !used_to[j] && to.point(j) == q.as_slice())
            .expect("pair target present in canonical end");
        used_from[i] = true;
        used_to[j] = true;
        sigma[i] = j;
    }
    sigma
}

/// A geodesic from `a` to `b` along the solver's optimal matching.
pub fn geodesic(a: &QPoint, b: &QPoint) -> Result<Geodesic> {
    let d = distance(a, b)?;
    Geodesic::along(a.clone(), b.clone(), d.witness)
}

/// The unique 1-D geodesic, matching components in order of height.
pub fn geodesic_1d(a: &QPoint, b: &QPoint) -> Result<Geodesic> {
    let d = sorted_matching_distance_1d(a, b)?;
    Geodesic::along(a.clone(), b.clone(), d.witness)
}

/// Both sides of the positive-curvature comparison at `gamma(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `G^2(gamma(t), C)`
    pub lhs: f64,
    /// `(1-t) G^2(A,C) + t G^2(B,C) - t(1-t) G^2(A,B)`
    pub rhs: f64,
    pub slack: f64,
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(QError::OutOfRange(format!("t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// Comparison along the solver-returned geodesic from `a` to `b`.
pub fn pc_comparison(a: &QPoint, b: &QPoint, c: &QPoint, t: f64) -> Result<ComparisonReport> {
    check_t(t)?;
    a.compatible(c)?;
    let g = geodesic(a, b)?;
    pc_comparison_along(&g, c, t)
}

/// Comparison along a caller-chosen geodesic.
pub fn pc_comparison_along(g: &Geodesic, c: &QPoint, t: f64) -> Result<ComparisonReport> {
    check_t(t)?;
    g.start.compatible(c)?;
    let ab = g.length * g.length;
    let ac = distance(&g.start, c)?.g_squared;
    let bc = distance(&g.end, c)?.g_squared;
    let lhs = distance(&g.eval(t), c)?.g_squared;
    let rhs = (1.0 - t) * ac + t * bc - t * (1.0 - t) * ab;
    Ok(ComparisonReport {
        lhs,
        rhs,
        slack: lhs - rhs,
    })
}

/// Comparison for every optimal geodesic between `a` and `b`
/// (exhaustive; small Q only).
pub fn pc_comparison_all_geodesics(
    a: &QPoint,
    b: &QPoint,
    c: &QPoint,
    t: f64,
) -> Result<Vec<ComparisonReport>> {
    check_t(t)?;
    metric::optimal_matchings(a, b, TIE_TOL)?
        .into_iter()
        .map(|m| pc_comparison_along(&Geodesic::along(a.clone(), b.clone(), m)?, c, t))
        .collect()
}

/// The 1-D comparison, where equality holds.
pub fn flatness_check_1d(a: &QPoint, b: &QPoint, c: &QPoint, t: f64) -> Result<ComparisonReport> {
    check_t(t)?;
    if a.n() != 1 {
        return Err(QError::Mismatch(format!("flatness check needs n = 1, got n = {}", a.n())));
    }
    a.compatible(c)?;
    pc_comparison_along(&geodesic_1d(a, b)?, c, t)
}

/// Comparison cosine `alpha(A; B, C)`, clamped to [-1, 1].
pub fn alpha(a: &QPoint, b: &QPoint, c: &QPoint) -> Result<f64> {
    let ab = distance(a, b)?;
    let ac = distance(a, c)?;
    let bc = distance(b, c)?;
    if ab.g_squared == 0.0 || ac.g_squared == 0.0 {
        return Err(QError::Degenerate("alpha(A; B, C) needs B != A and C != A".into()));
    }
    let cos = (ab.g_squared + ac.g_squared - bc.g_squared) / (2.0 * ab.g * ac.g);
    Ok(cos.clamp(-1.0, 1.0))
}

/// Sampling schedule for [`angle`]: `t = s = 2^-k` for `k = 1..=max_k`,
/// stopping once successive cosines differ by less than `stop_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSchedule {
    pub max_k: u32,
    pub stop_tol: f64,
    /// Largest tolerated increase of the cosine as `t` shrinks.
    pub monotone_tol: f64,
}

impl Default for AngleSchedule {
    fn default() -> Self {
        AngleSchedule {
            max_k: 30,
            stop_tol: 1e-10,
            monotone_tol: 1e-12,
        }
    }
}

/// Angle between two geodesics leaving the same point: the arccos of the
/// limit of `alpha(A; g1(t), g2(t))` as `t` shrinks along the schedule.
/// The sampled cosines must be nonincreasing.
pub fn angle(g1: &Geodesic, g2: &Geodesic, schedule: &AngleSchedule) -> Result<f64> {
    if g1.start != g2.start {
        return Err(QError::Mismatch("geodesics start at different points".into()));
    }
    if g1.length == 0.0 || g2.length == 0.0 {
        return Err(QError::Degenerate("zero-length geodesic has no direction".into()));
    }
    let base = &g1.start;
    let mut previous: Option<f64> = None;
    let mut cos = 1.0;
    for k in 1..=schedule.max_k {
        let t = (-(k as f64)).exp2();
        let current = alpha(base, &g1.eval(t), &g2.eval(t))?;
        if let Some(p) = previous {
            if current > p + schedule.monotone_tol {
                return Err(QError::NonMonotone {
                    step: k as usize,
                    previous: p,
                    current,
                });
            }
            cos = current;
            if (p - current).abs() < schedule.stop_tol {
                break;
            }
        } else {
            cos = current;
        }
        previous = Some(current);
    }
    Ok(cos.clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(rows: &[[f64; 2]]) -> QPoint {
        QPoint::new(2, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn example() -> (QPoint, QPoint, QPoint) {
        (
            pt(&[[0.0, 1.0], [0.0, 0.0]]),
            pt(&[[0.0, 0.0], [1.0, -0.5]]),
            pt(&[[0.0, 0.0], [-1.0, -1.0]]),
        )
    }

    #[test]
    fn worked_example_geodesic() {
        let (a, b, _) = example();
        let g = geodesic(&a, &b).unwrap();
        assert_eq!(g.length, 1.5);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert_eq!(g.eval(t), pt(&[[0.0, 1.0 - t], [t, -t / 2.0]]));
        }
        assert_eq!(g.eval(0.0), a);
        assert_eq!(g.eval(1.0), b);
    }

    #[test]
    fn zero_length_geodesic_is_constant() {
        let (a, _, _) = example();
        let g = geodesic(&a, &a).unwrap();
        assert_eq!(g.length, 0.0);
        assert!((0..=4).all(|k| g.eval(k as f64 / 4.0) == a));
    }

    #[test]
    fn non_unique_geodesic_is_one_of_the_two() {
        let a = pt(&[[0.0, 1.0], [0.0, -1.0]]);
        let b = pt(&[[-1.0, 0.0], [1.0, 0.0]]);
        let g = geodesic(&a, &b).unwrap();
        assert_eq!(g.length, 2.0);
        let t = 0.25;
        let gamma1 = pt(&[[-t, t - 1.0], [t, 1.0 - t]]);
        let gamma2 = pt(&[[-t, 1.0 - t], [t, t - 1.0]]);
        let got = g.eval(t);
        assert!(got == gamma1 || got == gamma2);
        for m in metric::optimal_matchings(&a, &b, TIE_TOL).unwrap() {
            assert_eq!(m.squared_cost, 4.0);
        }
    }

    #[test]
    fn geodesic_1d_sorted_midpoint() {
        let a = QPoint::from_scalars(&[0.0, 1.0]).unwrap();
        let b = QPoint::from_scalars(&[2.0, 3.0]).unwrap();
        assert_eq!(geodesic_1d(&a, &b).unwrap().eval(0.5), QPoint::from_scalars(&[1.0, 2.0]).unwrap());
        assert!(geodesic_1d(&example().0, &example().1).is_err());
    }

    #[test]
    fn pc_worked_example_at_one_third() {
        let (a, b, c) = example();
        let t = 1.0 / 3.0;
        let r = pc_comparison(&a, &b, &c, t).unwrap();
        let lhs = 9.0 * t * t / 4.0 - t + 3.0;
        let rhs = 9.0 * t * t / 4.0 - 2.0 * t + 3.0;
        assert!((r.lhs - lhs).abs() < 1e-12);
        assert!((r.rhs - rhs).abs() < 1e-12);
        assert!((r.slack - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pc_endpoint_slack_is_exactly_zero() {
        let (a, b, c) = example();
        assert_eq!(pc_comparison(&a, &b, &c, 0.0).unwrap().slack, 0.0);
        assert!(pc_comparison(&a, &b, &c, 1.5).is_err());
        assert!(pc_comparison(&a, &b, &c, -0.1).is_err());
    }

    #[test]
    fn flatness_fixed_triple() {
        let a = QPoint::from_scalars(&[1.0, 2.0, 2.0]).unwrap();
        let b = QPoint::from_scalars(&[2.0, 1.0, 1.0]).unwrap();
        let c = QPoint::from_scalars(&[0.0, 0.0, 3.0]).unwrap();
        let r = flatness_check_1d(&a, &b, &c, 0.5).unwrap();
        assert!(r.slack.abs() <= 1e-9, "{r:?}");
        for t in [0.0, 1.0] {
            assert_eq!(flatness_check_1d(&a, &b, &c, t).unwrap().slack, 0.0);
        }
        let (p, q, s) = example();
        assert!(flatness_check_1d(&p, &q, &s, 0.5).is_err());
    }

    #[test]
    fn alpha_examples() {
        let (a, b, c) = example();
        let expected = 2.0 / (3.0 * 3f64.sqrt());
        assert!((alpha(&a, &b, &c).unwrap() - expected).abs() < 1e-12);
        assert_eq!(alpha(&a, &b, &b).unwrap(), 1.0);
        let o = QPoint::from_scalars(&[0.0]).unwrap();
        let p = QPoint::from_scalars(&[1.0]).unwrap();
        let m = QPoint::from_scalars(&[-1.0]).unwrap();
        assert_eq!(alpha(&o, &p, &m).unwrap(), -1.0);
        assert!(matches!(alpha(&a, &a, &b), Err(QError::Degenerate(_))));
    }

    #[test]
    fn angle_examples() {
        let s = AngleSchedule::default();
        let (a, b, _) = example();
        let g = geodesic(&a, &b).unwrap();
        assert!(angle(&g, &g, &s).unwrap().abs() < 1e-7);

        let o = pt(&[[0.0, 0.0]]);
        let g1 = geodesic(&o, &pt(&[[1.0, 0.0]])).unwrap();
        let g2 = geodesic(&o, &pt(&[[0.0, 2.0]])).unwrap();
        assert!((angle(&g1, &g2, &s).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let base = pt(&[[0.0, 0.0], [0.0, 0.0]]);
        let g1 = geodesic(&base, &pt(&[[1.0, 0.0], [-1.0, 0.0]])).unwrap();
        let g2 = geodesic(&base, &pt(&[[0.0, 1.0], [0.0, -1.0]])).unwrap();
        assert!((angle(&g1, &g2, &s).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        assert!(angle(&g1, &geodesic(&a, &b).unwrap(), &s).is_err());
        let still = geodesic(&base, &base).unwrap();
        assert!(matches!(angle(&g1, &still, &s), Err(QError::Degenerate(_))));
    }

    #[test]
    fn restriction_has_proportional_length() {
        let (a, b, _) = example();
        let g = geodesic(&a, &b).unwrap();
        let r = g.restrict(0.25, 0.75).unwrap();
        assert!((r.length - 0.5 * g.length).abs() < 1e-12);
        assert!((distance(&r.start, &r.end).unwrap().g - r.length).abs() < 1e-12);
    }
}

//! Signatures, permissible decompositions and the strata of Q_Q(R^n).

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::geodesy::{geodesic, Geodesic};
use crate::metric::distance;
use crate::point::{lex_cmp, sq_dist, QPoint};

/// Multiplicity profile of a Q-point together with its grouping.
///
/// Groups are ordered by ascending multiplicity, ties broken by the
/// lexicographic order of the support points; `groups[i]` is the group of
/// the i-th canonically stored point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    multiplicities: Vec<usize>,
    groups: Vec<usize>,
    supports: Vec<Vec<f64>>,
}

/// JSON shape of a signature: `{"J": 2, "k": [1, 2]}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermissibleDecomposition {
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "k")]
    pub multiplicities: Vec<usize>,
}

impl PermissibleDecomposition {
    pub fn new(multiplicities: Vec<usize>) -> Result<Self> {
        if multiplicities.is_empty() || multiplicities.contains(&0) {
            return Err(QError::Malformed("multiplicities must be positive".into()));
        }
        if multiplicities.windows(2).any(|w| w[0] > w[1]) {
            return Err(QError::Malformed("multiplicities must be ascending".into()));
        }
        Ok(PermissibleDecomposition {
            j: multiplicities.len(),
            multiplicities,
        })
    }

    pub fn q(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

impl Signature {
    /// `J`, the number of distinct support points.
    pub fn j(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// Support point of each group, in group order.
    pub fn supports(&self) -> &[Vec<f64>] {
        &self.supports
    }

    /// Canonical point indices belonging to group `g`.
    pub fn members(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().enumerate().filter(move |(_, &x)| x == g).map(|(i, _)| i)
    }

    pub fn decomposition(&self) -> PermissibleDecomposition {
        PermissibleDecomposition {
            j: self.j(),
            multiplicities: self.multiplicities.clone(),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            c = std::mem::replace(&mut self.0[c], r);
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Signature of `p`, grouping points by single linkage at distance `tol`.
///
/// With `tol = 0` only exactly equal points are grouped. A group whose
/// diameter exceeds `2 * tol` (long chains) is reported as ambiguous.
pub fn signature(p: &QPoint, tol: f64) -> Result<Signature> {
    if !(tol >= 0.0) {
        return Err(QError::OutOfRange(format!("grouping tolerance {tol} must be >= 0")));
    }
    let q = p.q();
    let tol_sq = tol * tol;
    let mut uf = UnionFind((0..q).collect());
    for i in 0..q {
        for j in i + 1..q {
            let joined = if tol == 0.0 {
                p.point(i) == p.point(j)
            } else {
                sq_dist(p.point(i), p.point(j)) <= tol_sq
            };
            if joined {
                uf.union(i, j);
            }
        }
    }

    let mut roots: Vec<usize> = Vec::new();
    let mut raw = vec![0usize; q];
    for (i, slot) in raw.iter_mut().enumerate() {
        let r = uf.find(i);
        *slot = match roots.iter().position(|&x| x == r) {
            Some(k) => k,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
    }

    let mut clusters: Vec<(usize, Vec<f64>, Vec<usize>)> = (0..roots.len())
        .map(|g| {
            let members: Vec<usize> = (0..q).filter(|&i| raw[i] == g).collect();
            (members.len(), representative(p, &members, tol), members)
        })
        .collect();

    if tol > 0.0 {
        for (_, _, members) in &clusters {
            let mut diam_sq = 0.0f64;
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    diam_sq = diam_sq.max(sq_dist(p.point(i), p.point(j)));
                }
            }
            if diam_sq > 4.0 * tol_sq {
                return Err(QError::AmbiguousClustering {
                    diameter: diam_sq.sqrt(),
                    bound: 2.0 * tol,
                });
            }
        }
    }

    clusters.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));
    let mut groups = vec![0usize; q];
    for (g, (_, _, members)) in clusters.iter().enumerate() {
        for &i in members {
            groups[i] = g;
        }
    }
    Ok(Signature {
        multiplicities: clusters.iter().map(|c| c.0).collect(),
        supports: clusters.iter().map(|c| c.1.clone()).collect(),
        groups,
    })
}

fn representative(p: &QPoint, members: &[usize], tol: f64) -> Vec<f64> {
    if tol == 0.0 {
        return p.point(members[0]).to_vec();
    }
    let mut mean = vec![0.0; p.n()];
    for &i in members {
        for (m, x) in mean.iter_mut().zip(p.point(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= members.len() as f64);
    mean
}

/// All permissible decompositions of `q` (the partitions of `q` written
/// with ascending parts), sorted lexicographically by `(J, k_1, ..., k_J)`.
pub fn enumerate_decompositions(q: usize) -> Result<Vec<PermissibleDecomposition>> {
    if q < 1 {
        return Err(QError::OutOfRange("Q must be at least 1".into()));
    }
    fn extend(remaining: usize, min_part: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(parts.clone());
            return;
        }
        for part in min_part..=remaining {
            // the tail must be able to use parts >= `part`
            if remaining - part != 0 && remaining - part < part {
                continue;
            }
            parts.push(part);
            extend(remaining - part, part, parts, out);
            parts.pop();
        }
    }
    let mut raw = Vec::new();
    extend(q, 1, &mut Vec::new(), &mut raw);
    let mut out: Vec<PermissibleDecomposition> = raw
        .into_iter()
        .map(|k| PermissibleDecomposition {
            j: k.len(),
            multiplicities: k,
        })
        .collect();
    out.sort();
    Ok(out)
}

/// `delta`: half the minimum distance between distinct support points.
/// `+inf` when the support is a single point (the infimum over an empty set).
pub fn stratum_radius(p: &QPoint) -> f64 {
    let supports: Vec<&[f64]> = {
        let mut v: Vec<&[f64]> = p.points().collect();
        v.dedup();
        v
    };
    let mut min_sq = f64::INFINITY;
    for (i, a) in supports.iter().enumerate() {
        for b in &supports[i + 1..] {
            min_sq = min_sq.min(sq_dist(a, b));
        }
    }
    0.5 * min_sq.sqrt()
}

/// Outcome of [`stratum_local_geodesic_check`].
#[derive(Debug, Clone)]
pub struct StratumCheck {
    pub geodesic: Geodesic,
    /// Every sampled `gamma(t)` has the signature of the endpoints.
    pub stays_in_stratum: bool,
    pub samples: usize,
}

/// Samples used along the geodesic by [`stratum_local_geodesic_check`].
pub const STRATUM_SAMPLES: usize = 257;

/// Checks that the geodesic between two nearby points of one stratum
/// stays in that stratum. The closeness hypothesis, each support point of
/// `b` within `delta / 4^Q` of the corresponding support point of `a`, is
/// enforced up front.
pub fn stratum_local_geodesic_check(a: &QPoint, b: &QPoint) -> Result<StratumCheck> {
    a.compatible(b)?;
    let sa = signature(a, 0.0)?;
    let sb = signature(b, 0.0)?;
    if sa.multiplicities != sb.multiplicities {
        return Err(QError::Precondition(format!(
            "signatures differ: {:?} vs {:?}",
            sa.multiplicities, sb.multiplicities
        )));
    }
    let delta = stratum_radius(a);
    let bound = delta / 4f64.powi(a.q() as i32);
    let mut used = vec![false; sb.j()];
    for (ga, sup_a) in sa.supports.iter().enumerate() {
        let hit = (0..sb.j()).find(|&gb| {
            !used[gb]
                && sb.multiplicities[gb] == sa.multiplicities[ga]
                && sq_dist(sup_a, &sb.supports[gb]).sqrt() < bound
        });
        match hit {
            Some(gb) => used[gb] = true,
            None => {
                return Err(QError::Precondition(format!(
                    "support point {sup_a:?} has no counterpart within delta/4^Q = {bound}"
                )))
            }
        }
    }

    let g = geodesic(a, b)?;
    let stays = (0..STRATUM_SAMPLES).all(|k| {
        let t = k as f64 / (STRATUM_SAMPLES - 1) as f64;
        signature(&g.eval(t), 0.0).map(|s| s.multiplicities == sa.multiplicities).unwrap_or(false)
    });
    Ok(StratumCheck {
        geodesic: g,
        stays_in_stratum: stays,
        samples: STRATUM_SAMPLES,
    })
}

/// Samples of `gamma(t) = sum [[(1-t) a_i + t b_i]]` with both sides in
/// lexicographic order; the path stays in the top stratum.
pub fn connect_in_top_stratum(a: &QPoint, b: &QPoint, samples: usize) -> Result<Vec<QPoint>> {
    a.compatible(b)?;
    if !a.all_distinct() || !b.all_distinct() {
        return Err(QError::Precondition("both endpoints must have Q distinct points".into()));
    }
    if samples < 2 {
        return Err(QError::OutOfRange("need at least two samples".into()));
    }
    Ok((0..samples)
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            let coords = a
                .coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect();
            QPoint::from_flat(a.n(), coords).expect("finite")
        })
        .collect())
}

/// An isometric chart of a top-stratum point onto a ball in R^{nQ}.
#[derive(Debug, Clone)]
pub struct LocalChart {
    pub center: QPoint,
    /// `delta / 2`
    pub radius: f64,
}

pub fn local_chart(a: &QPoint) -> Result<LocalChart> {
    if !a.all_distinct() {
        return Err(QError::Precondition("chart center must have Q distinct points".into()));
    }
    let radius = if a.q() == 1 { f64::INFINITY } else { stratum_radius(a) / 2.0 };
    Ok(LocalChart {
        center: a.clone(),
        radius,
    })
}

impl LocalChart {
    /// `(b_1, ..., b_Q)` with `b_i` the component matched to the i-th
    /// point of the center.
    pub fn forward(&self, b: &QPoint) -> Result<Vec<f64>> {
        let d = distance(&self.center, b)?;
        if d.g >= self.radius {
            return Err(QError::OutOfRange(format!(
                "G = {} from the chart center, radius {}",
                d.g, self.radius
            )));
        }
        Ok(d.witness.sigma.iter().flat_map(|&j| b.point(j).iter().copied()).collect())
    }

    pub fn backward(&self, v: &[f64]) -> Result<QPoint> {
        if v.len() != self.center.coords().len() {
            return Err(QError::Mismatch(format!(
                "chart vector has {} coordinates, expected {}",
                v.len(),
                self.center.coords().len()
            )));
        }
        if sq_dist(v, self.center.coords()).sqrt() >= self.radius {
            return Err(QError::OutOfRange("vector outside the chart ball".into()));
        }
        QPoint::from_flat(self.center.n(), v.to_vec())
    }
}

/// Coordinates of the canonical (lexicographic) point list, concatenated.
pub fn lex_embedding(p: &QPoint) -> Vec<f64> {
    p.coords().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_examples() {
        let s = signature(&QPoint::repeated(3, &[1.0, 2.0]).unwrap(), 0.0).unwrap();
        assert_eq!((s.j(), s.multiplicities()), (1, &[3][..]));

        let s = signature(&QPoint::from_scalars(&[1.0, 2.0, 2.0]).unwrap(), 0.0).unwrap();
        assert_eq!((s.j(), s.multiplicities()), (2, &[1, 2][..]));
        assert_eq!(s.supports(), &[vec![1.0], vec![2.0]]);
        assert_eq!(s.groups(), &[0, 1, 1]);

        let p = QPoint::new(2, vec![vec![0.1, 0.2], vec![-0.3, 0.9], vec![0.5, 0.5], vec![0.0, -1.0]]).unwrap();
        let s = signature(&p, 0.0).unwrap();
        assert_eq!(s.decomposition(), PermissibleDecomposition::new(vec![1, 1, 1, 1]).unwrap());
    }

    #[test]
    fn signature_with_tolerance_and_ambiguity() {
        let p = QPoint::from_scalars(&[0.0, 0.001, 5.0]).unwrap();
        let s = signature(&p, 0.01).unwrap();
        assert_eq!(s.multiplicities(), &[1, 2]);
        assert!((s.supports()[1][0] - 0.0005).abs() < 1e-15);

        // chain 0 - 0.9 - 1.8 links at tol 1 but spans 1.8 <= 2: accepted
        assert!(signature(&QPoint::from_scalars(&[0.0, 0.9, 1.8]).unwrap(), 1.0).is_ok());
        // chain of four spans 2.7 > 2 * tol
        let chain = QPoint::from_scalars(&[0.0, 0.9, 1.8, 2.7]).unwrap();
        assert!(matches!(signature(&chain, 1.0), Err(QError::AmbiguousClustering { .. })));
        assert!(signature(&chain, -1.0).is_err());
    }

    #[test]
    fn decomposition_lists() {
        let one = enumerate_decompositions(1).unwrap();
        assert_eq!(one, vec![PermissibleDecomposition::new(vec![1]).unwrap()]);
        let four = enumerate_decompositions(4).unwrap();
        let ks: Vec<Vec<usize>> = four.iter().map(|d| d.multiplicities.clone()).collect();
        assert_eq!(ks, vec![vec![4], vec![1, 3], vec![2, 2], vec![1, 1, 2], vec![1, 1, 1, 1]]);
        assert_eq!(enumerate_decompositions(10).unwrap().len(), 42);
        assert!(enumerate_decompositions(0).is_err());
        assert!(four.iter().all(|d| d.q() == 4));
    }

    #[test]
    fn decomposition_json() {
        let d = PermissibleDecomposition::new(vec![1, 2]).unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"J":2,"k":[1,2]}"#);
    }

    #[test]
    fn radius_examples() {
        assert_eq!(stratum_radius(&QPoint::from_scalars(&[0.0, 1.0]).unwrap()), 0.5);
        let p = QPoint::new(2, vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![0.0, 10.0]]).unwrap();
        assert_eq!(stratum_radius(&p), 2.5);
        assert_eq!(stratum_radius(&QPoint::repeated(2, &[1.0, 1.0]).unwrap()), f64::INFINITY);
        // duplicates do not shrink the radius
        assert_eq!(stratum_radius(&QPoint::from_scalars(&[0.0, 1.0, 1.0]).unwrap()), 0.5);
    }

    #[test]
    fn local_geodesic_stays_in_stratum() {
        let a = QPoint::from_scalars(&[0.0, 1.0, 1.0]).unwrap();
        let b = QPoint::from_scalars(&[0.0001, 0.9999, 0.9999]).unwrap();
        let check = stratum_local_geodesic_check(&a, &b).unwrap();
        assert!(check.stays_in_stratum);
        assert!(stratum_local_geodesic_check(&a, &a).unwrap().stays_in_stratum);
    }

    #[test]
    fn far_points_in_same_stratum_fail_hypothesis_and_leave_it() {
        let a = QPoint::from_scalars(&[1.0, 2.0, 2.0]).unwrap();
        let b = QPoint::from_scalars(&[2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(stratum_local_geodesic_check(&a, &b), Err(QError::Precondition(_))));
        let g = geodesic(&a, &b).unwrap();
        let mid = signature(&g.eval(0.5), 0.0).unwrap();
        assert_ne!(mid.j(), 2);
    }

    #[test]
    fn top_stratum_connection() {
        let a = QPoint::from_scalars(&[0.0, 1.0]).unwrap();
        let b = QPoint::from_scalars(&[5.0, 9.0]).unwrap();
        let path = connect_in_top_stratum(&a, &b, 101).unwrap();
        assert!(path.iter().all(QPoint::all_distinct));
        assert_eq!(path[0], a);
        assert_eq!(path[100], b);
        let same = connect_in_top_stratum(&a, &a, 5).unwrap();
        assert!(same.iter().all(|p| *p == a));
        let dup = QPoint::from_scalars(&[1.0, 1.0]).unwrap();
        assert!(connect_in_top_stratum(&a, &dup, 5).is_err());
    }

    #[test]
    fn chart_center_and_roundtrip() {
        let a = QPoint::new(2, vec![vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        let chart = local_chart(&a).unwrap();
        assert_eq!(chart.radius, 2.5);
        assert_eq!(chart.forward(&a).unwrap(), vec![0.0, 0.0, 10.0, 0.0]);
        let b = QPoint::new(2, vec![vec![0.5, -0.3], vec![9.2, 0.4]]).unwrap();
        let v = chart.forward(&b).unwrap();
        assert_eq!(chart.backward(&v).unwrap(), b);
        let far = QPoint::new(2, vec![vec![5.0, 0.0], vec![10.0, 0.0]]).unwrap();
        assert!(chart.forward(&far).is_err());
        assert!(local_chart(&QPoint::repeated(2, &[0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn lex_embedding_is_not_lipschitz() {
        let eps = 0.1;
        let a = QPoint::new(2, vec![vec![1.0, 1.0], vec![1.0 + eps, 2.0]]).unwrap();
        let b = QPoint::new(2, vec![vec![1.0 + eps, 1.0], vec![1.0, 2.0]]).unwrap();
        let g = distance(&a, &b).unwrap().g;
        assert!((g - 2f64.sqrt() * eps).abs() < 1e-12);
        let e = sq_dist(&lex_embedding(&a), &lex_embedding(&b)).sqrt();
        assert!((e - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(lex_embedding(&QPoint::repeated(3, &[2.0]).unwrap()), vec![2.0; 3]);
    }
}

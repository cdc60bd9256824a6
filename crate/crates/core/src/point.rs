//! Q-point multisets in R^n.
//!
//! A [`QPoint`] is always stored in canonical form: its Q vectors sorted
//! lexicographically by coordinate. Structural equality is therefore
//! multiset equality.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};

/// An unordered multiset of `q` points in R^`n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QPointRepr", into = "QPointRepr")]
pub struct QPoint {
    n: usize,
    coords: Vec<f64>,
}

/// JSON shape: `{"n": 2, "points": [[0.0, 1.0], [0.0, 0.0]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QPointRepr {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
}

impl TryFrom<QPointRepr> for QPoint {
    type Error = QError;

    fn try_from(repr: QPointRepr) -> Result<Self> {
        QPoint::new(repr.n, repr.points)
    }
}

impl From<QPoint> for QPointRepr {
    fn from(p: QPoint) -> Self {
        QPointRepr {
            n: p.n,
            points: p.points().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// Lexicographic order on coordinate slices. Coordinates are finite and
/// `-0.0` is normalized away at construction, so `total_cmp` agrees with
/// numeric order and bitwise equality.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl QPoint {
    /// Builds a multiset from `points`, each of dimension `n`.
    pub fn new(n: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(QError::Malformed("ambient dimension n must be positive".into()));
        }
        if points.is_empty() {
            return Err(QError::Malformed("a Q-point needs at least one point".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * n);
        for (i, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(QError::Malformed(format!(
                    "point {i} has dimension {}, expected {n}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(n, coords)
    }

    /// Builds a multiset from row-major coordinates (`q * n` values).
    pub fn from_flat(n: usize, mut coords: Vec<f64>) -> Result<Self> {
        if n == 0 || coords.is_empty() || coords.len() % n != 0 {
            return Err(QError::Malformed(format!(
                "{} coordinates cannot form points of dimension {n}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|x| !x.is_finite()) {
            return Err(QError::Malformed(format!(
                "non-finite coordinate {} at point {}",
                coords[bad],
                bad / n
            )));
        }
        for x in coords.iter_mut() {
            if *x == 0.0 {
                *x = 0.0;
            }
        }
        let mut p = QPoint { n, coords };
        p.sort_in_place();
        Ok(p)
    }

    /// Builds a 1-D multiset from scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    /// `q` copies of the single point `a`, i.e. `q[[a]]`.
    pub fn repeated(q: usize, a: &[f64]) -> Result<Self> {
        if q == 0 {
            return Err(QError::Malformed("multiplicity must be positive".into()));
        }
        Self::from_flat(a.len(), a.repeat(q))
    }

    /// `q[[0]]` in R^n.
    pub fn zero(q: usize, n: usize) -> Result<Self> {
        Self::repeated(q, &vec![0.0; n])
    }

    fn sort_in_place(&mut self) {
        let n = self.n;
        let mut rows: Vec<&[f64]> = self.coords.chunks_exact(n).collect();
        rows.sort_by(|a, b| lex_cmp(a, b));
        self.coords = rows.concat();
    }

    /// Multiplicity Q.
    pub fn q(&self) -> usize {
        self.coords.len() / self.n
    }

    /// Ambient dimension n.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    /// Points in canonical (lexicographic) order.
    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.n)
    }

    /// Row-major coordinates in canonical order.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Same `q` and `n`.
    pub fn compatible(&self, other: &QPoint) -> Result<()> {
        if self.n != other.n || self.q() != other.q() {
            return Err(QError::Mismatch(format!(
                "Q_{}(R^{}) vs Q_{}(R^{})",
                self.q(),
                self.n,
                other.q(),
                other.n
            )));
        }
        Ok(())
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<QPoint> {
        Self::from_flat(self.n, self.coords.iter().map(|x| x * s).collect())
    }

    /// True when all Q points are pairwise distinct (the top stratum).
    pub fn all_distinct(&self) -> bool {
        // canonical order puts equal points next to each other
        self.coords
            .chunks_exact(self.n)
            .zip(self.coords.chunks_exact(self.n).skip(1))
            .all(|(a, b)| lex_cmp(a, b).is_ne())
    }
}

/// Returns the canonical representative of `p`. Storage is canonical
/// already, so this is the identity; it exists as an explicit operation
/// for callers that hold raw point lists (see [`canonicalize_rows`]).
pub fn canonicalize(p: &QPoint) -> QPoint {
    p.clone()
}

/// Canonical representative of an unordered list of points.
pub fn canonicalize_rows(n: usize, points: Vec<Vec<f64>>) -> Result<QPoint> {
    QPoint::new(n, points)
}

/// Arithmetic mean of the Q points, the averaging map η.
pub fn eta(a: &QPoint) -> Vec<f64> {
    let q = a.q() as f64;
    let mut mean = vec![0.0; a.n()];
    for p in a.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= q);
    mean
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    #[test]
    fn canonical_order_is_lexicographic() {
        let p = QPoint::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn constant_multiset_unchanged() {
        let p = QPoint::repeated(3, &[1.5, -2.0]).unwrap();
        assert_eq!(p.q(), 3);
        assert!(p.points().all(|x| x == [1.5, -2.0]));
        assert_eq!(canonicalize(&p), p);
    }

    #[test]
    fn every_input_ordering_gives_same_canonical_form() {
        let rows = vec![
            vec![0.3, -1.0],
            vec![0.3, -2.0],
            vec![-0.7, 4.0],
            vec![2.0, 0.0],
            vec![0.3, -1.0],
        ];
        let reference = canonicalize_rows(2, rows.clone()).unwrap();
        let mut count = 0;
        for perm in (0..rows.len()).permutations(rows.len()) {
            let shuffled = perm.iter().map(|&i| rows[i].clone()).collect();
            assert_eq!(canonicalize_rows(2, shuffled).unwrap(), reference);
            count += 1;
        }
        assert_eq!(count, 120);
    }

    #[test]
    fn signed_zero_is_normalized() {
        let a = QPoint::from_scalars(&[-0.0, 1.0]).unwrap();
        let b = QPoint::from_scalars(&[0.0, 1.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            QPoint::new(2, vec![vec![1.0, 2.0], vec![1.0]]),
            Err(QError::Malformed(_))
        ));
        assert!(QPoint::new(1, vec![vec![f64::NAN]]).is_err());
        assert!(QPoint::new(1, vec![vec![f64::INFINITY]]).is_err());
        assert!(QPoint::new(1, vec![]).is_err());
        assert!(QPoint::new(0, vec![vec![]]).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&QPoint::repeated(2, &[0.0, 1.0]).unwrap()), vec![0.0, 1.0]);
        assert_eq!(eta(&QPoint::from_scalars(&[1.0, -1.0]).unwrap()), vec![0.0]);
        let p = QPoint::new(2, vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(eta(&p), vec![0.0, 0.5]);
    }

    #[test]
    fn json_shape() {
        let p: QPoint = serde_json::from_str(r#"{"n": 2, "points": [[1, 0], [0, 1]]}"#).unwrap();
        assert_eq!(p.point(0), &[0.0, 1.0]);
        let back = serde_json::to_string(&p).unwrap();
        assert_eq!(back, r#"{"n":2,"points":[[0.0,1.0],[1.0,0.0]]}"#);
        assert!(serde_json::from_str::<QPoint>(r#"{"n": 2, "points": [[1]]}"#).is_err());
    }
}

//! Tangent cones and the exponential map.
//!
//! At a base point `A = sum_i k_i [[a_i]]` with signature `(J; k_1..k_J)`
//! the tangent cone is the product `Q_{k_1}(R^n) x ... x Q_{k_J}(R^n)`: a
//! tangent vector is one k_i-point multiset of velocities per support
//! point, and the cone distance is the product metric.

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::metric::distance;
use crate::point::{QPoint, QPointRepr};
use crate::strata::{signature, stratum_radius, Signature};

/// A tangent vector at `base`; `blocks[i]` holds the `k_i` velocities
/// attached to the i-th support point (signature group order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TangentRepr", into = "TangentRepr")]
pub struct TangentVector {
    base: QPoint,
    signature: Signature,
    blocks: Vec<QPoint>,
}

/// JSON shape: `{"base": QPoint, "blocks": [[[f64, ...], ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentRepr {
    pub base: QPointRepr,
    pub blocks: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<TangentRepr> for TangentVector {
    type Error = QError;

    fn try_from(r: TangentRepr) -> Result<Self> {
        let base = QPoint::try_from(r.base)?;
        TangentVector::from_rows(base, r.blocks)
    }
}

impl From<TangentVector> for TangentRepr {
    fn from(v: TangentVector) -> Self {
        TangentRepr {
            base: v.base.into(),
            blocks: v.blocks.iter().map(QPoint::to_rows).collect(),
        }
    }
}

impl TangentVector {
    pub fn new(base: QPoint, blocks: Vec<QPoint>) -> Result<Self> {
        let signature = signature(&base, 0.0)?;
        if blocks.len() != signature.j() {
            return Err(QError::Mismatch(format!(
                "{} blocks for a base with J = {}",
                blocks.len(),
                signature.j()
            )));
        }
        for (i, (block, &k)) in blocks.iter().zip(signature.multiplicities()).enumerate() {
            if block.q() != k || block.n() != base.n() {
                return Err(QError::Mismatch(format!(
                    "block {i} is Q_{}(R^{}), expected Q_{k}(R^{})",
                    block.q(),
                    block.n(),
                    base.n()
                )));
            }
        }
        Ok(TangentVector {
            base,
            signature,
            blocks,
        })
    }

    /// Blocks given as raw velocity lists. An empty list for a block is
    /// read as the zero velocity block.
    pub fn from_rows(base: QPoint, rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let sig = signature(&base, 0.0)?;
        if rows.len() != sig.j() {
            return Err(QError::Mismatch(format!("{} blocks for a base with J = {}", rows.len(), sig.j())));
        }
        let blocks = rows
            .into_iter()
            .zip(sig.multiplicities())
            .map(|(r, &k)| {
                if r.is_empty() {
                    QPoint::zero(k, base.n())
                } else {
                    QPoint::new(base.n(), r)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, blocks)
    }

    /// The zero vector at `base`.
    pub fn zero(base: QPoint) -> Result<Self> {
        let sig = signature(&base, 0.0)?;
        let blocks = sig
            .multiplicities()
            .iter()
            .map(|&k| QPoint::zero(k, base.n()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, blocks)
    }

    pub fn base(&self) -> &QPoint {
        &self.base
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn blocks(&self) -> &[QPoint] {
        &self.blocks
    }

    /// `||v||_A = sqrt(sum_j |v_j|^2)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.coords()).map(|x| x * x).sum()
    }

    /// `lambda * v`, lambda >= 0.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(QError::OutOfRange(format!("cone scaling needs lambda >= 0, got {lambda}")));
        }
        let blocks = self.blocks.iter().map(|b| b.scaled(lambda)).collect::<Result<Vec<_>>>()?;
        Self::new(self.base.clone(), blocks)
    }

    /// The induced geodesic `gamma(t, v) = sum_i sum_{j in block i} [[a_i + t v_j]]`.
    pub fn geodesic_at(&self, t: f64) -> QPoint {
        let n = self.base.n();
        let mut coords = Vec::with_capacity(self.base.coords().len());
        for (support, block) in self.signature.supports().iter().zip(&self.blocks) {
            for v in block.points() {
                coords.extend(support.iter().zip(v).map(|(a, x)| a + t * x));
            }
        }
        QPoint::from_flat(n, coords).expect("finite")
    }

    fn same_base(&self, other: &TangentVector) -> Result<()> {
        if self.base != other.base {
            return Err(QError::Mismatch("tangent vectors live at different base points".into()));
        }
        Ok(())
    }

    /// `<u, v>_A := (||u||^2 + ||v||^2 - d_A(u, v)^2) / 2`.
    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        let d_sq = tangent_distance_sq(self, other)?;
        Ok(0.5 * (self.norm_sq() + other.norm_sq() - d_sq))
    }
}

/// Product-metric distance `d_A(u, v)`: the square root of the sum of
/// block-wise squared G distances.
pub fn tangent_distance(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    Ok(tangent_distance_sq(u, v)?.sqrt())
}

pub fn tangent_distance_sq(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    u.same_base(v)?;
    let mut sum = 0.0;
    for (bu, bv) in u.blocks.iter().zip(&v.blocks) {
        sum += distance(bu, bv)?.g_squared;
    }
    Ok(sum)
}

/// `G(gamma_u(t), gamma_v(t)) / t` at the smallest `t` of `schedule`. For
/// matched-linear geodesics the quotient is exactly constant once `t` is
/// below the separation scale, so no extrapolation is done.
pub fn tangent_distance_limit(u: &TangentVector, v: &TangentVector, schedule: &[f64]) -> Result<f64> {
    u.same_base(v)?;
    let t = schedule
        .iter()
        .copied()
        .filter(|t| *t > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| QError::OutOfRange("schedule has no positive t".into()))?;
    Ok(distance(&u.geodesic_at(t), &v.geodesic_at(t))?.g / t)
}

/// `exp_A(v) = gamma(1, v)`; `exp_A(0) = A`.
pub fn exp(base: &QPoint, v: &TangentVector) -> Result<QPoint> {
    if *base != v.base {
        return Err(QError::Mismatch("tangent vector belongs to another base point".into()));
    }
    Ok(v.geodesic_at(1.0))
}

/// `epsilon = delta / 2`, radius of the ball of tangent vectors on which
/// `exp` is an isometry; `+inf` when the base is a single support point.
pub fn exp_isometry_radius(base: &QPoint) -> f64 {
    stratum_radius(base) / 2.0
}

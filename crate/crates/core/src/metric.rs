//! The metric G on Q_Q(R^n).
//!
//! `G(A, B)^2` is the minimum over permutations sigma of
//! `sum_i |a_i - b_sigma(i)|^2`, computed exactly by min-cost assignment on
//! the squared-Euclidean cost matrix.

use serde::{Deserialize, Serialize};

use crate::assignment::{self, CostMatrix};
use crate::error::{QError, Result};
use crate::point::{sq_dist, QPoint};

/// Default Q bound for [`distance_bruteforce`].
pub const BRUTE_FORCE_CAP: usize = 8;

/// Above this many coordinate terms the squared cost is accumulated with
/// compensated summation.
const KAHAN_THRESHOLD: usize = 64;

/// A pairing of `a_i` with `b_sigma(i)`; indices refer to canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub sigma: Vec<usize>,
    pub squared_cost: f64,
}

impl Matching {
    pub fn identity(q: usize) -> Self {
        Matching {
            sigma: (0..q).collect(),
            squared_cost: 0.0,
        }
    }
}

/// `g = G(a, b)` together with the matching that realizes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub g: f64,
    pub g_squared: f64,
    pub witness: Matching,
}

impl Distance {
    fn from_witness(witness: Matching) -> Self {
        Distance {
            g: witness.squared_cost.sqrt(),
            g_squared: witness.squared_cost,
            witness,
        }
    }
}

/// `sum_i |a_i - b_sigma(i)|^2`.
pub fn matching_cost(a: &QPoint, b: &QPoint, sigma: &[usize]) -> f64 {
    if a.q() * a.n() > KAHAN_THRESHOLD {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (i, &j) in sigma.iter().enumerate() {
            for (x, y) in a.point(i).iter().zip(b.point(j)) {
                let term = (x - y) * (x - y) - comp;
                let t = sum + term;
                comp = (t - sum) - term;
                sum = t;
            }
        }
        sum
    } else {
        sigma
            .iter()
            .enumerate()
            .map(|(i, &j)| sq_dist(a.point(i), b.point(j)))
            .sum()
    }
}

pub(crate) fn cost_matrix(a: &QPoint, b: &QPoint) -> CostMatrix {
    CostMatrix::from_fn(a.q(), |i, j| sq_dist(a.point(i), b.point(j)))
}

fn witness(a: &QPoint, b: &QPoint, sigma: Vec<usize>) -> Matching {
    let squared_cost = matching_cost(a, b, &sigma);
    Matching { sigma, squared_cost }
}

/// `G(a, b)` via the Hungarian algorithm.
pub fn distance(a: &QPoint, b: &QPoint) -> Result<Distance> {
    a.compatible(b)?;
    if a == b {
        return Ok(Distance::from_witness(Matching::identity(a.q())));
    }
    let sigma = assignment::hungarian(&cost_matrix(a, b));
    Ok(Distance::from_witness(witness(a, b, sigma)))
}

/// `G(a, b)` by enumerating all Q! permutations, with the default cap.
pub fn distance_bruteforce(a: &QPoint, b: &QPoint) -> Result<Distance> {
    distance_bruteforce_capped(a, b, BRUTE_FORCE_CAP)
}

/// Exhaustive `G(a, b)`; the witness is the lexicographically smallest
/// optimal permutation.
pub fn distance_bruteforce_capped(a: &QPoint, b: &QPoint, cap: usize) -> Result<Distance> {
    a.compatible(b)?;
    if a.q() > cap {
        return Err(QError::CapExceeded { q: a.q(), cap });
    }
    let (sigma, _) = assignment::brute_force(&cost_matrix(a, b));
    Ok(Distance::from_witness(witness(a, b, sigma)))
}

/// Every optimal matching between `a` and `b` (cost within `tol` of the
/// minimum). Exhaustive, so subject to the brute-force cap.
pub fn optimal_matchings(a: &QPoint, b: &QPoint, tol: f64) -> Result<Vec<Matching>> {
    a.compatible(b)?;
    if a.q() > BRUTE_FORCE_CAP {
        return Err(QError::CapExceeded {
            q: a.q(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    Ok(assignment::all_optimal(&cost_matrix(a, b), tol)
        .into_iter()
        .map(|sigma| witness(a, b, sigma))
        .collect())
}

/// 1-D distance by matching the i-th smallest of `a` with the i-th
/// smallest of `b`. Canonical storage is already sorted, so the witness is
/// the identity.
pub fn sorted_matching_distance_1d(a: &QPoint, b: &QPoint) -> Result<Distance> {
    a.compatible(b)?;
    if a.n() != 1 {
        return Err(QError::Mismatch(format!(
            "sorted matching needs n = 1, got n = {}",
            a.n()
        )));
    }
    Ok(Distance::from_witness(witness(a, b, (0..a.q()).collect())))
}

/// `G(a, Q[[0]])`, i.e. `sqrt(sum_i |a_i|^2)`.
pub fn norm_to_origin(a: &QPoint) -> f64 {
    a.coords().iter().map(|x| x * x).sum::<f64>().sqrt()
}

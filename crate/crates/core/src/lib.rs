//! The metric space of unordered Q-point multisets in R^n under the
//! optimal-matching distance G, and the geometry and calculus built on it.
//!
//! ```
//! use qspace::{distance, QPoint};
//!
//! let a = QPoint::new(2, vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
//! let b = QPoint::new(2, vec![vec![1.0, -0.5], vec![0.0, 0.0]]).unwrap();
//! assert_eq!(distance(&a, &b).unwrap().g_squared, 2.25);
//! ```

pub mod algebra;
pub mod assignment;
pub mod calculus;
pub mod error;
pub mod exec;
pub mod geodesy;
pub mod metric;
pub mod point;
pub mod strata;
pub mod tangent;
pub mod verify;

pub use algebra::{
    dirichlet, dirichlet_sum_identity, eta_cross_energy, lp_norm, tensor_sum, weighted_minkowski_check,
    weighted_triangle_check, BranchedCurve, NormOrder,
};
pub use calculus::{
    affine_approx_error, continuous_selection, derivative, differentiable_selection, directional_derivative,
    in_neighborhood, subtract, AffineMap, DerivativeValue, NeighborhoodSpec, QuotientSchedule, SampledCurve,
    Selection,
};
pub use error::{QError, Result};
pub use geodesy::{angle, geodesic, pc_comparison, Geodesic};
pub use metric::{distance, distance_bruteforce, Distance, Matching};
pub use point::{canonicalize, eta, QPoint};
pub use strata::{enumerate_decompositions, signature, stratum_radius, PermissibleDecomposition, Signature};
pub use tangent::{exp, exp_isometry_radius, tangent_distance, TangentVector};

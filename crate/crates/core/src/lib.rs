//! Unscented Kalman filtering for states on Riemannian manifolds.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter;
pub mod linalg;
pub mod manifold;
pub mod sigma;
pub mod stats;
pub mod system;
pub mod ut;

pub use error::{Error, Result, Stage};
pub use linalg::{Matrix, Vector};
pub use manifold::{
    distance, exp_map, from_coords, log_map, parallel_transport_cov, parallel_transport_vec,
    tangent_basis, to_coords, transport_matrix, Manifold, ManifoldPoint, TangentBasis,
    TangentVector,
};
pub use sigma::{euclidean_sigma, riemannian_sigma, EuclideanSigmaSet, PairWeights, SigmaKind};
pub use stats::{
    karcher_mean, sample_covariance, sample_cross_covariance, sample_moment, KarcherOptions,
    RandomPointEstimate, WeightedSet,
};
pub use ut::{riut1, riut2, transform_set, unscented_transform, PointMap, UtResult};
pub use system::{add_tangent_noise, simulate, Map, Model, NoiseSpec, System, SystemForm, Trajectory};
pub use filter::{
    correct, gain, identity_shortcut, linear_kf_step, lost_positiveness, partially_additive_step, predict,
    riadukf_step, riaukf_step, step, ukfrm_step, FilterOptions, FilterState, KalmanState, LinearModel, Prediction,
};

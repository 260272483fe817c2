//! Estimators for `∫fρ / ∫ρ` with an unnormalized density `ρ`: simple Monte
//! Carlo, the Metropolis ball walk, the adversarial instance families that
//! certify their error rates, closed-form bounds, and a small-state spectral
//! laboratory.

pub mod bounds;
pub mod budget;
pub mod chains;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod instances;
pub mod quad;
pub mod rng;
pub mod spectral;

pub use budget::ChainBudget;
pub use error::{Error, Result};
pub use estimators::{
    delta_star, estimate_mh, estimate_simple, measure_rmse, worst_case_over_family, EstimateReport,
    Estimator, EstimatorSpec,
};
pub use geometry::{ConvexBody, Domain, Packing, Point};
pub use instances::{IntegrandOracle, ProblemInstance, WeightOracle};
pub use rng::RngStream;
pub use spectral::{DiscreteChain, SpectralReport};

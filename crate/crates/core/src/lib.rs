//! Exact mean-interference analysis of RTS/CTS thinning in Poisson bipolar
//! networks, with a Monte Carlo simulator that cross-checks every formula.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the CLI and the experiment harness use.

pub mod analysis;
pub mod experiment;
pub mod geometry;
pub mod oracle;
pub mod params;
pub mod scalar;
pub mod simulator;
pub mod verify;

pub use analysis::{
    beta, intensity, intensity_type1, intensity_type2, k_type1, k_type2, mean_interference,
    optimal_lambda_p_type1, path_loss, retention_probability, AnalysisError, ThinningType,
};
pub use geometry::{
    conflict_events, exclusion_zone_area, lens_area, pair_union_area, union_of_disks_area,
    ConflictEvents, GeometryError,
};
pub use params::ParamError;
pub use scalar::Scalar;
pub use simulator::{
    empirical_intensity, palm_interference, sample_bipolar, thin_type1, thin_type2,
};

pub type Point = geometry::Point<f64>;
pub type Disk = geometry::Disk<f64>;
pub type NetworkParams = params::NetworkParams<f64>;
pub type PathLossModel = params::PathLossModel<f64>;
pub type ExclusionGeometry = geometry::ExclusionGeometry<f64>;
pub type PairConfiguration = geometry::PairConfiguration<f64>;
pub type QuadratureConfig = analysis::QuadratureConfig<f64>;
pub type InterferenceResult = analysis::InterferenceResult<f64>;
pub type TransceiverPair = simulator::TransceiverPair<f64>;
pub type PointConfiguration = simulator::PointConfiguration<f64>;
pub type SimulationConfig = simulator::SimulationConfig<f64>;
pub type EstimateWithCI = simulator::EstimateWithCI<f64>;
pub type PalmEstimate = simulator::PalmEstimate<f64>;

//! Pointwise bounds on the target's outcome probabilities, their
//! extremization over times and measurements, the collective quadratic
//! constraints, the analytic interval and quality factors.

mod interval;
mod overlaps;
mod quadratic;
mod sweep;

pub use interval::{analytic_interval, moment_values, quality_factors, Interval, QualityFactors};
pub use overlaps::{
    pointwise_bounds, povm_pointwise_bounds, EnergyState, Overlaps, PovmOverlap, ProjectiveOverlaps,
};
pub use quadratic::{quadratic_forms, QuadraticConstraint, QuadraticForm};
pub(crate) use sweep::{extremes, join};
pub use sweep::{sweep, sweep_overlaps, uniform_grid, ProbabilityBounds, TargetDynamics};

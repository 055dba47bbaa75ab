//! Bounds on the outcome distribution, mean value and higher moments of a
//! target observable (usually a Hamiltonian) computed only from the outcome
//! statistics of a different measurement.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: dense Hermitian eigendecomposition, states, unitary
//!   evolution and partial traces.
//! * [`models`]: disordered spin-chain Hamiltonians and their symmetry sectors.
//! * [`states`]: ground, pure-thermal and Haar-random initial states.
//! * [`measurements`]: projective bases, POVMs, k-local optimized bases and
//!   outcome probabilities.
//! * [`bounds`]: pointwise probability bounds, time/measurement sweeps,
//!   collective quadratic constraints, the analytic interval and quality
//!   factors.
//! * [`estimator`]: the constrained (non-convex) interval and an independent
//!   linear-program oracle.
//! * [`experiment`]: declarative experiment configs and the runner used by the
//!   command line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod measurements;
pub mod models;
pub mod numeric;
pub mod spectral;
pub mod states;
#[cfg(test)]
pub(crate) mod testutil;

pub use bounds::{
    analytic_interval, pointwise_bounds, povm_pointwise_bounds, quadratic_forms, quality_factors,
    sweep, EnergyState, Interval, Overlaps, ProbabilityBounds, QuadraticConstraint, QualityFactors,
    TargetDynamics,
};
pub use error::{Error, Result};
pub use estimator::{
    constrained_interval, lp_oracle, FeasibleSet, OptimizerSettings, TightInterval,
};
pub use experiment::{run, ExperimentConfig, Summary};
pub use measurements::{Measurement, Povm, ProjectiveBasis};
pub use models::{ModelKind, ModelSpec, SectorKind, SymmetrySector};
pub use numeric::TOL;
pub use spectral::{DensityMatrix, HermitianOperator, Spectrum, State, StateVector, C64};

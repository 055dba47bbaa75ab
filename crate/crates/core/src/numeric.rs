//! Numeric policy shared by every module.

use nalgebra::DMatrix;

use crate::spectral::C64;

/// All tolerances used for validation and numerical decisions.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Elementwise Hermiticity, relative to `max(1, max |entry|)`.
    pub hermiticity: f64,
    /// Orthonormality of eigenvector and basis columns.
    pub orthonormality: f64,
    /// Two-norm of state vectors, trace of density matrices.
    pub norm: f64,
    /// Smallest admissible density-matrix eigenvalue (as a negative number).
    pub positivity: f64,
    /// Normalization of outcome distributions.
    pub probability_sum: f64,
    /// Slack on `sum a <= 1 <= sum b` and `a <= b`.
    pub feasibility: f64,
    /// POVM eigenvalues below this are treated as zero.
    pub povm_cutoff: f64,
    /// Eigenvalues closer than this (relative to the spectral scale) are one
    /// degenerate group when building local bases.
    pub degeneracy: f64,
    /// Projected basis vectors shorter than this are dropped when restricting
    /// a basis to a symmetry sector.
    pub sector_drop: f64,
    /// Guard added before flooring energies into coarse-grained bins.
    pub binning: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermiticity: 1e-12,
    orthonormality: 1e-10,
    norm: 1e-10,
    positivity: 1e-10,
    probability_sum: 1e-8,
    feasibility: 1e-8,
    povm_cutoff: 1e-12,
    degeneracy: 1e-9,
    sector_drop: 1e-8,
    binning: 1e-10,
};

/// Complex product through four real products, which take the blocked
/// real kernel; much faster than the generic complex path for large inputs.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// `a^dagger b`, as [`matmul`].
pub(crate) fn ad_matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = (a.map(|z| z.re).transpose(), a.map(|z| z.im).transpose());
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br + &ai * &bi;
    let im = &ar * &bi - &ai * &br;
    re.zip_map(&im, C64::new)
}

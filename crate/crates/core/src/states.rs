//! Initial states: ground, pure thermal ("cold") and Haar random ("hot").

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Spectrum, StateVector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Ground,
    /// `beta = None` uses `6 / (E_N - E_1)`.
    PureThermal {
        #[serde(default)]
        beta: Option<f64>,
    },
    Haar {
        #[serde(default)]
        seed: Option<u64>,
    },
}

/// Eigenvector of the smallest eigenvalue.
pub fn ground_state(spectrum: &Spectrum) -> Result<StateVector> {
    if spectrum.dim() == 0 {
        return Err(Error::EmptySpectrum);
    }
    StateVector::normalized(spectrum.vectors().column(0).into_owned())
}

pub fn default_beta(spectrum: &Spectrum) -> Result<f64> {
    let width = spectrum.range();
    if !(width > 0.0) {
        return Err(Error::DegenerateSpectrum(spectrum.ground_energy()));
    }
    Ok(6.0 / width)
}

/// `|psi_beta> ∝ sum_E exp(-beta E / 2) |E>`, with real positive amplitudes
/// in the energy basis.
pub fn pure_thermal(spectrum: &Spectrum, beta: Option<f64>) -> Result<StateVector> {
    if spectrum.dim() == 0 {
        return Err(Error::EmptySpectrum);
    }
    let beta = match beta {
        Some(b) if b >= 0.0 && b.is_finite() => b,
        Some(b) => {
            return Err(Error::InvalidState(format!(
                "inverse temperature {b} must be >= 0"
            )))
        }
        None => default_beta(spectrum)?,
    };
    let e1 = spectrum.ground_energy();
    // shifting by E_1 keeps every exponent <= 0
    let weights = DVector::from_iterator(
        spectrum.dim(),
        spectrum
            .values()
            .iter()
            .map(|&e| C64::new((-0.5 * beta * (e - e1)).exp(), 0.0)),
    );
    let coeffs = StateVector::normalized(weights)?;
    StateVector::normalized(spectrum.vectors() * coeffs.amplitudes())
}

/// Haar-random pure state: normalized vector of i.i.d. standard complex
/// Gaussians drawn from a ChaCha8 stream.
pub fn haar_random(dim: usize, seed: u64) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidState("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        }),
    );
    StateVector::normalized(v)
}

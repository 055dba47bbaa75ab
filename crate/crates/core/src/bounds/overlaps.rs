use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measurements::{normalize_check, Measurement, Povm, ProjectiveBasis};
use crate::numeric::{ad_matmul, matmul};
use crate::spectral::{Spectrum, State, C64};
use rayon::prelude::*;

/// Measurement-to-energy overlaps of a complete projective measurement.
#[derive(Debug, Clone)]
pub struct ProjectiveOverlaps {
    /// `(i, l) = <i|E_l>`
    amplitudes: DMatrix<C64>,
    /// `(i, l) = |<i|E_l>|`
    magnitudes: DMatrix<f64>,
    squared: DMatrix<f64>,
}

impl ProjectiveOverlaps {
    pub fn new(basis: &ProjectiveBasis, spectrum: &Spectrum) -> Result<Self> {
        if basis.dim() != spectrum.dim() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.dim(),
                found: basis.dim(),
            });
        }
        Ok(Self::from_amplitudes(matmul(
            basis.rows(),
            spectrum.vectors(),
        )))
    }

    pub fn from_amplitudes(amplitudes: DMatrix<C64>) -> Self {
        let magnitudes = amplitudes.map(|z| z.norm());
        let squared = magnitudes.map(|m| m * m);
        Self {
            amplitudes,
            magnitudes,
            squared,
        }
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn magnitudes(&self) -> &DMatrix<f64> {
        &self.magnitudes
    }

    pub fn outcomes(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.ncols()
    }
}

/// Energy-basis data of one POVM element.
#[derive(Debug, Clone)]
pub struct PovmOverlap {
    /// `(l, k) = <E_l|i^k>`
    energy_kets: DMatrix<C64>,
    weights: Vec<f64>,
    /// `<E|Pi_i|E>`
    diag: Vec<f64>,
    /// `min_k gamma^k |<i^k|E>|^2`
    x: Vec<f64>,
    /// `max_k |<i^k|E>|^2`
    y: Vec<f64>,
    gamma: f64,
    volume: f64,
}

impl PovmOverlap {
    pub fn energy_kets(&self) -> &DMatrix<C64> {
        &self.energy_kets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }
}

fn povm_overlaps(povm: &Povm, spectrum: &Spectrum) -> Result<Vec<PovmOverlap>> {
    if povm.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            found: povm.dim(),
        });
    }
    let n = spectrum.dim();
    Ok(povm
        .elements()
        .iter()
        .map(|e| {
            let energy_kets = ad_matmul(spectrum.vectors(), e.kets());
            let weights = e.weights().to_vec();
            let mut diag = vec![0.0f64; n];
            let mut x: Vec<f64> = vec![
                if weights.is_empty() {
                    0.0
                } else {
                    f64::INFINITY
                };
                n
            ];
            let mut y = vec![0.0f64; n];
            for l in 0..n {
                for (k, &g) in weights.iter().enumerate() {
                    let s = energy_kets[(l, k)].norm_sqr();
                    diag[l] += g * s;
                    x[l] = x[l].min(g * s);
                    y[l] = y[l].max(s);
                }
            }
            let gamma = weights.iter().copied().fold(f64::INFINITY, f64::min);
            PovmOverlap {
                energy_kets,
                volume: weights.iter().sum(),
                gamma: if gamma.is_finite() { gamma } else { 0.0 },
                weights,
                diag,
                x,
                y,
            }
        })
        .collect())
}

/// Overlap data of one measurement with the target's eigenbasis.
#[derive(Debug, Clone)]
pub enum Overlaps {
    Projective(ProjectiveOverlaps),
    Povm(Vec<PovmOverlap>),
}

impl Overlaps {
    pub fn new(measurement: &Measurement, spectrum: &Spectrum) -> Result<Self> {
        Ok(match measurement {
            Measurement::Projective(b) => {
                Overlaps::Projective(ProjectiveOverlaps::new(b, spectrum)?)
            }
            Measurement::Povm(p) => Overlaps::Povm(povm_overlaps(p, spectrum)?),
        })
    }

    pub fn outcomes(&self) -> usize {
        match self {
            Overlaps::Projective(o) => o.outcomes(),
            Overlaps::Povm(v) => v.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Overlaps::Projective(o) => o.dim(),
            Overlaps::Povm(v) => v[0].energy_kets.nrows(),
        }
    }

    /// Outcome probabilities of a state given in the energy basis.
    pub fn probabilities(&self, state: &EnergyState) -> Result<Vec<f64>> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let raw = match (self, state) {
            (Overlaps::Projective(o), EnergyState::Pure(c)) => {
                (&o.amplitudes * c).iter().map(|z| z.norm_sqr()).collect()
            }
            (Overlaps::Projective(o), EnergyState::Mixed(rho)) => {
                let m = &o.amplitudes * rho;
                (0..o.outcomes())
                    .map(|i| m.row(i).dot(&o.amplitudes.row(i).conjugate()).re)
                    .collect()
            }
            (Overlaps::Povm(v), EnergyState::Pure(c)) => v
                .iter()
                .map(|e| {
                    let proj = e.energy_kets.ad_mul(c);
                    e.weights
                        .iter()
                        .zip(proj.iter())
                        .map(|(g, z)| g * z.norm_sqr())
                        .sum()
                })
                .collect(),
            (Overlaps::Povm(v), EnergyState::Mixed(rho)) => v
                .iter()
                .map(|e| {
                    let m = e.energy_kets.ad_mul(&(rho * &e.energy_kets));
                    e.weights
                        .iter()
                        .enumerate()
                        .map(|(k, g)| g * m[(k, k)].re)
                        .sum()
                })
                .collect(),
        };
        normalize_check(raw)
    }

    /// Outcome distributions at every time, one per column. A pure state
    /// under a conserved target is handled as a single matrix product.
    pub(crate) fn probabilities_over_time(
        &self,
        state: &EnergyState,
        values: &[f64],
        times: &[f64],
    ) -> Result<DMatrix<f64>> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let columns: Vec<Vec<f64>> = match (self, state) {
            (Overlaps::Projective(o), EnergyState::Pure(c)) => {
                let evolved = DMatrix::from_fn(c.len(), times.len(), |l, j| {
                    c[l] * C64::from_polar(1.0, -values[l] * times[j])
                });
                let amps = matmul(&o.amplitudes, &evolved);
                (0..times.len())
                    .map(|j| normalize_check(amps.column(j).iter().map(|z| z.norm_sqr()).collect()))
                    .collect::<Result<_>>()?
            }
            _ => times
                .par_iter()
                .map(|&t| self.probabilities(&state.at(values, t)))
                .collect::<Result<_>>()?,
        };
        let rows = self.outcomes();
        Ok(DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    /// Pointwise bounds for every column of `probs`, as `(a, b)` with one
    /// column per distribution.
    pub(crate) fn bounds_over_time(&self, probs: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            Overlaps::Projective(o) => {
                let s = o.magnitudes.transpose() * probs.map(|x| x.max(0.0).sqrt());
                let s2 = o.squared.transpose() * probs;
                let b = s.map(|v| (v * v).min(1.0));
                let a = s2.zip_map(&b, |q, bb| (2.0 * q - bb).max(0.0));
                (a, b)
            }
            Overlaps::Povm(_) => {
                let n = self.dim();
                let mut a = DMatrix::zeros(n, probs.ncols());
                let mut b = DMatrix::zeros(n, probs.ncols());
                for j in 0..probs.ncols() {
                    let p: Vec<f64> = probs.column(j).iter().copied().collect();
                    let (aj, bj) = self.bounds(&p);
                    a.set_column(j, &DVector::from_vec(aj));
                    b.set_column(j, &DVector::from_vec(bj));
                }
                (a, b)
            }
        }
    }

    /// Pointwise bounds `(a, b)` for outcome distribution `p`.
    pub fn bounds(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            Overlaps::Projective(o) => pointwise_bounds(p, o),
            Overlaps::Povm(v) => povm_pointwise_bounds(p, v),
        }
    }
}

/// Projective bounds: with `c_iE = sqrt(p_i) |<i|E>|`,
/// `b_E = (sum_i c_iE)^2` and `a_E = max(2 sum_i c_iE^2 - b_E, 0)`.
pub fn pointwise_bounds(p: &[f64], overlaps: &ProjectiveOverlaps) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(p.len(), overlaps.outcomes(), "one probability per outcome");
    let sqrt_p = DVector::from_iterator(p.len(), p.iter().map(|x| x.max(0.0).sqrt()));
    let p = DVector::from_column_slice(p);
    let s = overlaps.magnitudes.tr_mul(&sqrt_p);
    let s2 = overlaps.squared.tr_mul(&p);
    let b: Vec<f64> = s.iter().map(|v| (v * v).min(1.0)).collect();
    let a = s2
        .iter()
        .zip(&b)
        .map(|(q, bb)| (2.0 * q - bb).max(0.0))
        .collect();
    (a, b)
}

/// POVM bounds: `b_E = (sum_i sqrt(p_i <E|Pi_i|E>))^2` and
/// `a_E = max(sum_i p_i (x_i + gamma_i y_i) - (sum_i sqrt(p_i y_i V_i))^2, 0)`.
pub fn povm_pointwise_bounds(p: &[f64], overlaps: &[PovmOverlap]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(p.len(), overlaps.len(), "one probability per element");
    let n = overlaps.first().map_or(0, |o| o.diag.len());
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for l in 0..n {
        let mut sb = 0.0;
        let mut lin = 0.0;
        let mut sy = 0.0;
        for (o, &pi) in overlaps.iter().zip(p) {
            let pi = pi.max(0.0);
            sb += (pi * o.diag[l]).sqrt();
            lin += pi * (o.x[l] + o.gamma * o.y[l]);
            sy += (pi * o.y[l] * o.volume).sqrt();
        }
        b[l] = (sb * sb).min(1.0);
        a[l] = (lin - sy * sy).max(0.0);
    }
    (a, b)
}

/// A state expressed in the eigenbasis of the target observable.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyState {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

impl EnergyState {
    pub fn new(state: &State, spectrum: &Spectrum) -> Result<Self> {
        if state.dim() != spectrum.dim() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.dim(),
                found: state.dim(),
            });
        }
        Ok(match state {
            State::Pure(psi) => EnergyState::Pure(spectrum.to_energy_basis(psi.amplitudes())),
            State::Mixed(rho) => {
                EnergyState::Mixed(spectrum.density_to_energy_basis(rho.entries()))
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            EnergyState::Pure(c) => c.len(),
            EnergyState::Mixed(r) => r.nrows(),
        }
    }

    /// True `p_E`.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            EnergyState::Pure(c) => c.iter().map(|z| z.norm_sqr()).collect(),
            EnergyState::Mixed(r) => (0..r.nrows()).map(|l| r[(l, l)].re.max(0.0)).collect(),
        }
    }

    /// State after evolving for time `t` under the diagonal generator `values`.
    pub fn at(&self, values: &[f64], t: f64) -> Self {
        if t == 0.0 {
            return self.clone();
        }
        let phase = |e: f64| C64::from_polar(1.0, -e * t);
        match self {
            EnergyState::Pure(c) => {
                EnergyState::Pure(DVector::from_fn(c.len(), |l, _| c[l] * phase(values[l])))
            }
            EnergyState::Mixed(r) => {
                EnergyState::Mixed(DMatrix::from_fn(r.nrows(), r.ncols(), |l, m| {
                    r[(l, m)] * phase(values[l] - values[m])
                }))
            }
        }
    }

    /// `sum_E p_E E^k`.
    pub fn moment(&self, values: &[f64], k: u32) -> f64 {
        self.populations()
            .iter()
            .zip(values)
            .map(|(p, e)| p * e.powi(k as i32))
            .sum()
    }
}

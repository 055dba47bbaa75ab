//! Random instances for the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proxybound::bounds::{
    quadratic_forms, sweep, Overlaps, ProbabilityBounds, QuadraticConstraint, TargetDynamics,
};
use proxybound::spectral::{
    eig_hermitian, DensityMatrix, HermitianOperator, Spectrum, State, StateVector, C64,
};
use proxybound::{Measurement, Povm, ProjectiveBasis};
use rand::Rng;

fn entry(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianOperator {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    HermitianOperator::new(&a + a.adjoint()).unwrap()
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
    StateVector::normalized(DVector::from_fn(n, |_, _| entry(rng))).unwrap()
}

pub fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_basis(n: usize, rng: &mut impl Rng) -> ProjectiveBasis {
    let q = DMatrix::from_fn(n, n, |_, _| entry(rng)).qr().q();
    ProjectiveBasis::new(q, (0..n).map(|i| i.to_string()).collect()).unwrap()
}

/// `S^{-1/2} A_i S^{-1/2}` with `S = sum_i A_i`, for random PSD `A_i` of
/// random rank (large enough that the sum is invertible).
pub fn random_povm(n: usize, m: usize, rng: &mut impl Rng) -> Povm {
    let raw: Vec<DMatrix<C64>> = (0..m)
        .map(|_| {
            let rank = rng.random_range(n.div_ceil(m)..=n);
            let a = DMatrix::from_fn(n, rank, |_, _| entry(rng));
            &a * a.adjoint()
        })
        .collect();
    let total = raw
        .iter()
        .fold(DMatrix::<C64>::zeros(n, n), |acc, x| acc + x);
    let spec = eig_hermitian(&HermitianOperator::new(total).unwrap()).unwrap();
    let v = spec.vectors();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        spec.values().iter().map(|x| C64::new(x.powf(-0.5), 0.0)),
    ));
    let s = v * d * v.adjoint();
    let elements = raw
        .iter()
        .map(|x| {
            let y = &s * x * &s;
            (&y + y.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect();
    Povm::from_matrices(elements).unwrap()
}

pub fn random_measurement(n: usize, rng: &mut impl Rng) -> Measurement {
    if rng.random_bool(0.5) {
        random_basis(n, rng).into()
    } else {
        let m = rng.random_range(2..=n + 1);
        random_povm(n, m, rng).into()
    }
}

/// One randomized bounding problem.
pub struct Instance {
    pub spectrum: Spectrum,
    pub state: State,
    pub measurements: Vec<Measurement>,
    pub times: Vec<f64>,
    pub dynamics: TargetDynamics,
}

impl Instance {
    pub fn random(max_dim: usize, rng: &mut impl Rng) -> Self {
        let n = rng.random_range(2..=max_dim);
        let spectrum = eig_hermitian(&random_hermitian(n, rng)).unwrap();
        let state = if rng.random_bool(0.5) {
            State::Pure(random_state(n, rng))
        } else {
            State::Mixed(random_density(n, rng))
        };
        let count = rng.random_range(1..=3);
        let measurements = (0..count).map(|_| random_measurement(n, rng)).collect();
        let (times, dynamics) = if rng.random_bool(0.7) {
            let points = rng.random_range(1..=6);
            let total = rng.random_range(0.5..5.0);
            (
                proxybound::bounds::uniform_grid(total, points, true),
                TargetDynamics::Conserved,
            )
        } else {
            (vec![0.0], TargetDynamics::NonConserved)
        };
        Self {
            spectrum,
            state,
            measurements,
            times,
            dynamics,
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn values(&self) -> &[f64] {
        self.spectrum.values()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.state.energy_populations(&self.spectrum)
    }

    pub fn overlaps(&self) -> Vec<Overlaps> {
        self.measurements
            .iter()
            .map(|m| Overlaps::new(m, &self.spectrum).unwrap())
            .collect()
    }

    pub fn bounds(&self) -> ProbabilityBounds {
        self.bounds_with(&self.measurements, &self.times)
    }

    pub fn bounds_with(&self, measurements: &[Measurement], times: &[f64]) -> ProbabilityBounds {
        sweep(
            &self.state,
            &self.spectrum,
            measurements,
            times,
            self.dynamics,
        )
        .unwrap()
    }

    pub fn quads(&self, pb: &ProbabilityBounds, measurements: usize) -> Vec<QuadraticConstraint> {
        let overlaps: Vec<Overlaps> = self.overlaps().into_iter().take(measurements).collect();
        quadratic_forms(&overlaps, pb).unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.populations()
            .iter()
            .zip(self.values())
            .map(|(p, e)| p * e)
            .sum()
    }
}

/// Largest `|E|`, at least 1; scales absolute tolerances.
pub fn energy_scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, e| m.max(e.abs()))
}

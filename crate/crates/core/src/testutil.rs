//! Random fixtures shared by unit tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::spectral::{DensityMatrix, HermitianOperator, StateVector, C64};

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

pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    a.qr().q()
}

pub fn random_density(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// `m` PSD matrices summing to the identity: `S^{-1/2} A_i S^{-1/2}` with
/// `S = sum A_i`.
pub fn random_povm_matrices(n: usize, m: usize, rng: &mut impl Rng) -> Vec<DMatrix<C64>> {
    let raw: Vec<DMatrix<C64>> = (0..m)
        .map(|_| {
            let a = DMatrix::from_fn(n, n, |_, _| entry(rng));
            &a * a.adjoint()
        })
        .collect();
    let total = raw
        .iter()
        .fold(DMatrix::<C64>::zeros(n, n), |acc, x| acc + x);
    let (values, vectors) = crate::spectral::eigh(&total);
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        values.iter().map(|v| C64::new(v.powf(-0.5), 0.0)),
    ));
    let s = &vectors * inv_sqrt * vectors.adjoint();
    raw.iter()
        .map(|x| {
            let y = &s * x * &s;
            (&y + y.adjoint()) * C64::new(0.5, 0.0)
        })
        .collect()
}

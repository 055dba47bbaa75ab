//! Shared fixtures for the benchmarks in `benches/`.

use proxybound::measurements::{computational_basis, klocal_observable_basis_type1};
use proxybound::models::{build_hamiltonian, sector_basis};
use proxybound::spectral::eig_hermitian;
use proxybound::states::haar_random;
use proxybound::{HermitianOperator, Measurement, ModelSpec, SectorKind, Spectrum, State};

/// A disordered Heisenberg chain at half filling with a Haar state and two
/// measurements (computational and observable-optimized with `k = 2`).
pub struct Chain {
    pub hamiltonian: HermitianOperator,
    pub spectrum: Spectrum,
    pub state: State,
    pub measurements: Vec<Measurement>,
}

impl Chain {
    pub fn heisenberg(length: usize, disorder: f64) -> Self {
        let spec = ModelSpec::heisenberg(length, disorder, 1).with_defaults();
        let sector = sector_basis(
            length,
            SectorKind::SpinZ {
                particles: length / 2,
            },
        )
        .expect("sector");
        let hamiltonian = build_hamiltonian(&spec, &sector).expect("hamiltonian");
        let spectrum = eig_hermitian(&hamiltonian).expect("spectrum");
        let state = State::Pure(haar_random(hamiltonian.dim(), 1).expect("state"));
        let measurements = vec![
            Measurement::Projective(computational_basis(&sector)),
            Measurement::Projective(
                klocal_observable_basis_type1(&spec, &sector, 2).expect("basis"),
            ),
        ];
        Self {
            hamiltonian,
            spectrum,
            state,
            measurements,
        }
    }
}

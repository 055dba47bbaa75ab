//! Dense Hermitian linear algebra: spectra, states, unitary evolution and
//! partial traces over contiguous blocks of sites.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numeric::{ad_matmul, matmul, TOL};

pub type C64 = nalgebra::Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermiticity and stores the exactly symmetrized matrix.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let asym = max_asymmetry(&matrix);
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if asym > TOL.hermiticity * scale {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        let mut matrix = matrix;
        hermitize(&mut matrix);
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| C64::new(x, 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Expectation value `<psi|H|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        let h_psi = &self.matrix * psi.amplitudes();
        psi.amplitudes().dotc(&h_psi).re
    }
}

fn max_asymmetry(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitize(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    /// Builds a spectrum from already-known data. Values must be sorted and
    /// the columns of `vectors` orthonormal.
    pub fn from_parts(values: Vec<f64>, vectors: DMatrix<C64>) -> Result<Self> {
        if vectors.nrows() != vectors.ncols() {
            return Err(Error::NotSquare {
                rows: vectors.nrows(),
                cols: vectors.ncols(),
            });
        }
        if values.len() != vectors.ncols() {
            return Err(Error::DimensionMismatch {
                expected: vectors.ncols(),
                found: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
        let err = orthonormality_error(&vectors);
        if err > TOL.orthonormality {
            return Err(Error::InvalidArgument(format!(
                "eigenvectors are not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column `l` is the eigenvector for `values()[l]`.
    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max_energy() - self.ground_energy()
    }

    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (l, &e) in self.values.iter().enumerate() {
            scaled.column_mut(l).scale_mut(e);
        }
        matmul(&scaled, &self.vectors.adjoint())
    }

    /// Coefficients `<E_l|psi>` of a state in the eigenbasis.
    pub fn to_energy_basis(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(psi)
    }

    /// `<E_l|rho|E_m>`.
    pub fn density_to_energy_basis(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        ad_matmul(&self.vectors, &matmul(rho, &self.vectors))
    }
}

/// Max elementwise deviation of `V^dagger V` from the identity.
pub fn orthonormality_error(v: &DMatrix<C64>) -> f64 {
    let gram = ad_matmul(v, v);
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Real-valued inputs go through the real symmetric solver. Equal eigenvalues
/// keep the order produced by the solver.
pub fn eig_hermitian(op: &HermitianOperator) -> Result<Spectrum> {
    let (values, vectors) = eigh(op.matrix());
    if values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(Spectrum { values, vectors })
}

fn eigh_raw(m: &DMatrix<C64>, shift: f64) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let shifted = if shift == 0.0 {
        m.clone()
    } else {
        m + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0)
    };
    if shifted.iter().all(|z| z.im == 0.0) {
        let eig = SymmetricEigen::new(shifted.map(|z| z.re));
        (
            eig.eigenvalues.iter().map(|x| x - shift).collect(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(shifted);
        (
            eig.eigenvalues.iter().map(|x| x - shift).collect(),
            eig.eigenvectors,
        )
    }
}

pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    // The QR iteration can return NaN, or visibly non-orthogonal vectors, on
    // large highly degenerate inputs (rank-one projectors, for instance).
    // Shifting by a multiple of the identity changes the iteration path but
    // not the eigenvectors.
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut best: Option<(f64, Vec<f64>, DMatrix<C64>)> = None;
    for shift in [0.0, 0.5 * scale, 1.37 * scale, -0.73 * scale] {
        let (vals, vecs) = eigh_raw(m, shift);
        if !vals.iter().all(|x| x.is_finite())
            || !vecs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        {
            continue;
        }
        let err = orthonormality_error(&vecs);
        if best.as_ref().map_or(true, |b| err < b.0) {
            best = Some((err, vals, vecs));
        }
        if err <= TOL.orthonormality {
            break;
        }
    }
    let (_, raw_values, raw_vectors) =
        best.expect("symmetric eigensolver failed to converge for every shift");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let values = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }
    (values, vectors)
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TOL.norm {
            return Err(Error::InvalidState(format!("norm is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// A positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let op = HermitianOperator::new(entries)?;
        let trace = op.matrix().trace();
        if (trace.re - 1.0).abs() > TOL.norm || trace.im.abs() > TOL.norm {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let (values, _) = eigh(op.matrix());
        if let Some(&min) = values.first() {
            if min < -TOL.positivity {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self {
            entries: op.into_matrix(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }
}

/// Either kind of state accepted by the bound machinery.
#[derive(Debug, Clone)]
pub enum State {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(s) => s.dim(),
            State::Mixed(r) => r.dim(),
        }
    }

    /// `tr(rho O)` for a Hermitian `O`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> f64 {
        match self {
            State::Pure(psi) => psi.amplitudes().dotc(&(op * psi.amplitudes())).re,
            State::Mixed(rho) => (rho.entries() * op).trace().re,
        }
    }

    /// Energy populations `p_l = <E_l|rho|E_l>`.
    pub fn energy_populations(&self, spectrum: &Spectrum) -> Vec<f64> {
        match self {
            State::Pure(psi) => spectrum
                .to_energy_basis(psi.amplitudes())
                .iter()
                .map(|c| c.norm_sqr())
                .collect(),
            State::Mixed(rho) => {
                let r = spectrum.density_to_energy_basis(rho.entries());
                (0..r.nrows()).map(|l| r[(l, l)].re.max(0.0)).collect()
            }
        }
    }
}

impl From<StateVector> for State {
    fn from(s: StateVector) -> Self {
        State::Pure(s)
    }
}

impl From<DensityMatrix> for State {
    fn from(r: DensityMatrix) -> Self {
        State::Mixed(r)
    }
}

/// `V e^{-i Lambda t} V^dagger psi`.
pub fn evolve(state: &StateVector, spectrum: &Spectrum, t: f64) -> Result<StateVector> {
    if state.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim(),
            found: state.dim(),
        });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let mut coeffs = spectrum.to_energy_basis(state.amplitudes());
    for (c, &e) in coeffs.iter_mut().zip(spectrum.values()) {
        *c *= C64::from_polar(1.0, -e * t);
    }
    Ok(StateVector {
        amplitudes: spectrum.vectors() * coeffs,
    })
}

/// Splits `site_dims` around a contiguous kept block, returning
/// `(left, kept, right)` dimensions.
fn block_split(site_dims: &[usize], keep: &[usize], dim: usize) -> Result<(usize, usize, usize)> {
    let product: usize = site_dims.iter().product();
    if product != dim {
        return Err(Error::Factorization { product, dim });
    }
    if keep.is_empty() {
        return Err(Error::InvalidBlock("kept block is empty".into()));
    }
    if keep.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidBlock(format!(
            "sites {keep:?} are not a contiguous ascending block"
        )));
    }
    let (start, end) = (keep[0], keep[keep.len() - 1] + 1);
    if end > site_dims.len() {
        return Err(Error::InvalidBlock(format!(
            "site {} out of range for {} sites",
            end - 1,
            site_dims.len()
        )));
    }
    let left = site_dims[..start].iter().product();
    let kept = site_dims[start..end].iter().product();
    let right = site_dims[end..].iter().product();
    Ok((left, kept, right))
}

/// Traces out everything except a contiguous block of sites. Works on any
/// square matrix (density matrices and operators alike). Site 0 is the most
/// significant tensor factor.
pub fn trace_out_complement(
    matrix: &DMatrix<C64>,
    site_dims: &[usize],
    keep: &[usize],
) -> Result<DMatrix<C64>> {
    let (left, kept, right) = block_split(site_dims, keep, matrix.nrows())?;
    let mut out = DMatrix::zeros(kept, kept);
    for a in 0..kept {
        for b in 0..kept {
            let mut acc = ZERO;
            for l in 0..left {
                let row0 = (l * kept + a) * right;
                let col0 = (l * kept + b) * right;
                for r in 0..right {
                    acc += matrix[(row0 + r, col0 + r)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a contiguous block.
pub fn partial_trace(
    rho: &DensityMatrix,
    site_dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    let reduced = trace_out_complement(rho.entries(), site_dims, keep)?;
    Ok(DensityMatrix { entries: reduced })
}

/// Reduced density matrix of a contiguous block of a pure state, without
/// forming the full projector.
pub fn reduced_density_of_pure(
    psi: &StateVector,
    site_dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    let (left, kept, right) = block_split(site_dims, keep, psi.dim())?;
    let amps = psi.amplitudes();
    let mut out = DMatrix::<C64>::zeros(kept, kept);
    for l in 0..left {
        // rows: kept index, cols: right index
        let block = DMatrix::from_fn(kept, right, |a, r| amps[(l * kept + a) * right + r]);
        out += &block * block.adjoint();
    }
    Ok(DensityMatrix { entries: out })
}

/// Kronecker product, first factor most significant.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

//! Projective and POVM measurements, the k-local optimized bases, outcome
//! probabilities and observational entropy.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{block_truncated_hamiltonian, ModelSpec, SymmetrySector};
use crate::numeric::{matmul, TOL};
use crate::spectral::{
    eig_hermitian, eigh, orthonormality_error, reduced_density_of_pure, trace_out_complement,
    Spectrum, State, StateVector, C64, ONE, ZERO,
};

/// An orthonormal basis stored as the unitary whose row `i` is `<i|`.
/// Measuring in the basis equals applying this unitary and reading out the
/// computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis {
    rows: DMatrix<C64>,
    labels: Vec<String>,
}

impl ProjectiveBasis {
    pub fn new(rows: DMatrix<C64>, labels: Vec<String>) -> Result<Self> {
        if rows.nrows() != rows.ncols() {
            return Err(Error::NotSquare {
                rows: rows.nrows(),
                cols: rows.ncols(),
            });
        }
        if labels.len() != rows.nrows() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                found: labels.len(),
            });
        }
        let err = orthonormality_error(&rows.adjoint());
        if err > TOL.orthonormality {
            return Err(Error::InvalidMeasurement(format!(
                "basis rows not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { rows, labels })
    }

    /// Basis from kets stored as columns.
    pub fn from_kets(kets: &DMatrix<C64>, labels: Vec<String>) -> Result<Self> {
        Self::new(kets.adjoint(), labels)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            rows: DMatrix::identity(dim, dim),
            labels: (0..dim).map(|i| i.to_string()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    /// Row `i` is the bra `<i|`; this is the measurement unitary.
    pub fn rows(&self) -> &DMatrix<C64> {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ket(&self, i: usize) -> DVector<C64> {
        self.rows.row(i).adjoint()
    }

    pub fn kets(&self) -> DMatrix<C64> {
        self.rows.adjoint()
    }
}

/// One POVM element with its spectral data `Pi = sum_k gamma_k |k><k|`,
/// restricted to strictly positive `gamma_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    matrix: DMatrix<C64>,
    weights: Vec<f64>,
    kets: DMatrix<C64>,
}

impl PovmElement {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: n,
                cols: matrix.ncols(),
            });
        }
        let op = crate::spectral::HermitianOperator::new(matrix)?;
        let (values, vectors) = eigh(op.matrix());
        if let Some(&min) = values.first() {
            if min < -TOL.orthonormality {
                return Err(Error::InvalidMeasurement(format!(
                    "element has negative eigenvalue {min:e}"
                )));
            }
        }
        if let Some(&max) = values.last() {
            if max > 1.0 + TOL.orthonormality {
                return Err(Error::InvalidMeasurement(format!(
                    "element has eigenvalue {max} > 1"
                )));
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&k| values[k] > TOL.povm_cutoff).collect();
        let weights = keep.iter().map(|&k| values[k].min(1.0)).collect();
        let kets = DMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])]);
        Ok(Self {
            matrix: op.into_matrix(),
            weights,
            kets,
        })
    }

    /// Element `sum_k w_k |k><k|` from orthonormal kets (columns).
    pub fn from_spectral(weights: Vec<f64>, kets: DMatrix<C64>) -> Result<Self> {
        if weights.len() != kets.ncols() {
            return Err(Error::DimensionMismatch {
                expected: kets.ncols(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidMeasurement(
                "weights must lie in (0, 1]".into(),
            ));
        }
        if orthonormality_error(&kets) > TOL.orthonormality {
            return Err(Error::InvalidMeasurement(
                "element kets not orthonormal".into(),
            ));
        }
        let mut scaled = kets.clone();
        for (c, &w) in weights.iter().enumerate() {
            scaled.column_mut(c).scale_mut(w);
        }
        let matrix = scaled * kets.adjoint();
        Ok(Self {
            matrix,
            weights,
            kets,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Positive eigenvalues `gamma_i^k`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Eigenvectors `|i^k>` as columns, matching `weights`.
    pub fn kets(&self) -> &DMatrix<C64> {
        &self.kets
    }

    /// `V_i = tr Pi_i`.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<PovmElement>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<PovmElement>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidMeasurement("POVM has no elements".into()));
        };
        if labels.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                found: labels.len(),
            });
        }
        let n = first.matrix.nrows();
        let mut total = DMatrix::<C64>::zeros(n, n);
        for e in &elements {
            if e.matrix.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.matrix.nrows(),
                });
            }
            total += &e.matrix;
        }
        let deviation = (total - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > TOL.orthonormality {
            return Err(Error::InvalidMeasurement(format!(
                "elements do not sum to identity (error {deviation:e})"
            )));
        }
        Ok(Self { elements, labels })
    }

    pub fn from_matrices(matrices: Vec<DMatrix<C64>>) -> Result<Self> {
        let labels = (0..matrices.len()).map(|i| i.to_string()).collect();
        let elements = matrices
            .into_iter()
            .map(PovmElement::from_matrix)
            .collect::<Result<_>>()?;
        Self::new(elements, labels)
    }

    /// Rank-one POVM equivalent to a projective basis.
    pub fn from_basis(basis: &ProjectiveBasis) -> Self {
        let elements = (0..basis.dim())
            .map(|i| {
                let ket = basis.ket(i);
                PovmElement {
                    matrix: &ket * ket.adjoint(),
                    weights: vec![1.0],
                    kets: DMatrix::from_column_slice(ket.len(), 1, ket.as_slice()),
                }
            })
            .collect();
        Self {
            elements,
            labels: basis.labels.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].matrix.nrows()
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.elements.iter().map(PovmElement::volume).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Projective(ProjectiveBasis),
    Povm(Povm),
}

impl Measurement {
    pub fn dim(&self) -> usize {
        match self {
            Measurement::Projective(b) => b.dim(),
            Measurement::Povm(p) => p.dim(),
        }
    }

    pub fn outcomes(&self) -> usize {
        match self {
            Measurement::Projective(b) => b.dim(),
            Measurement::Povm(p) => p.elements.len(),
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Measurement::Projective(b) => b.labels(),
            Measurement::Povm(p) => p.labels(),
        }
    }

    pub fn volumes(&self) -> Vec<f64> {
        match self {
            Measurement::Projective(b) => vec![1.0; b.dim()],
            Measurement::Povm(p) => p.volumes(),
        }
    }
}

impl From<ProjectiveBasis> for Measurement {
    fn from(b: ProjectiveBasis) -> Self {
        Measurement::Projective(b)
    }
}

impl From<Povm> for Measurement {
    fn from(p: Povm) -> Self {
        Measurement::Povm(p)
    }
}

/// Identity basis of a sector, labelled by bitstrings (site 0 first).
pub fn computational_basis(sector: &SymmetrySector) -> ProjectiveBasis {
    let d = sector.dim();
    ProjectiveBasis {
        rows: DMatrix::identity(d, d),
        labels: (0..d).map(|i| sector.label(i)).collect(),
    }
}

/// Eigenbasis (kets as columns) with a deterministic choice inside
/// degenerate eigenspaces: computational basis vectors are projected onto the
/// eigenspace and Gram-Schmidt orthonormalized in index order. Isolated
/// eigenvectors get their largest component made real and positive.
pub fn tie_broken_eigenbasis(matrix: &DMatrix<C64>, descending: bool) -> DMatrix<C64> {
    let n = matrix.nrows();
    let (values, vectors) = eigh(matrix);
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || values[i] - values[i - 1] > TOL.degeneracy * scale {
            groups.push((start, i));
            start = i;
        }
    }
    if descending {
        groups.reverse();
    }
    let mut out = DMatrix::<C64>::zeros(n, n);
    let mut col = 0;
    for (lo, hi) in groups {
        let sub = vectors.columns(lo, hi - lo).into_owned();
        if hi - lo == 1 {
            out.set_column(col, &phase_fixed(sub.column(0).into_owned()));
            col += 1;
            continue;
        }
        // Gram-Schmidt runs on coordinates in the solver's basis `sub`,
        // where P e_j has coordinates sub^dagger e_j.
        let d = hi - lo;
        let mut accepted: Vec<DVector<C64>> = Vec::with_capacity(d);
        for j in 0..n {
            if accepted.len() == d {
                break;
            }
            let mut c = sub.row(j).adjoint();
            if c.norm() < 1e-6 {
                continue;
            }
            orthogonalize(&mut c, &accepted);
            // a small residual is mostly round-off and would amplify it
            let norm = c.norm();
            if norm > 1e-3 {
                accepted.push(c / C64::new(norm, 0.0));
            }
        }
        // round-off can leave the projected unit vectors short of a full
        // span; the solver's own vectors fill whatever is missing
        for i in 0..d {
            if accepted.len() == d {
                break;
            }
            let mut c = DVector::<C64>::zeros(d);
            c[i] = ONE;
            orthogonalize(&mut c, &accepted);
            let norm = c.norm();
            if norm > 1e-6 {
                accepted.push(c / C64::new(norm, 0.0));
            }
        }
        debug_assert_eq!(accepted.len(), hi - lo);
        let coords = DMatrix::from_columns(&accepted);
        out.columns_mut(col, d).copy_from(&matmul(&sub, &coords));
        col += d;
    }
    out
}

fn phase_fixed(v: DVector<C64>) -> DVector<C64> {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return v;
    }
    let phase = pivot.conj() / C64::new(pivot.norm(), 0.0);
    v * phase
}

/// Two passes of modified Gram-Schmidt against orthonormal `basis`.
fn orthogonalize(v: &mut DVector<C64>, basis: &[DVector<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(v);
            v.axpy(-c, b, ONE);
        }
    }
}

fn check_block(length: usize, k: usize) -> Result<()> {
    if k == 0 || length % k != 0 {
        return Err(Error::BlockSize { k, length });
    }
    Ok(())
}

fn block_sites(length: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..length / k).map(move |b| (b * k..(b + 1) * k).collect())
}

fn block_labels(dims: &[usize]) -> Vec<String> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut digits = vec![0; dims.len()];
            for (slot, &d) in dims.iter().enumerate().rev() {
                digits[slot] = idx % d;
                idx /= d;
            }
            digits
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect()
}

/// Per-block eigenbases of the k-site reduced density matrices of a pure
/// state on `L` qubits (local Schmidt bases), ordered by descending weight.
pub fn local_schmidt_bases(
    state: &StateVector,
    length: usize,
    k: usize,
) -> Result<Vec<ProjectiveBasis>> {
    check_block(length, k)?;
    if state.dim() != 1 << length {
        return Err(Error::DimensionMismatch {
            expected: 1 << length,
            found: state.dim(),
        });
    }
    let dims = vec![2; length];
    block_sites(length, k)
        .map(|sites| {
            let rho = reduced_density_of_pure(state, &dims, &sites)?;
            let kets = tie_broken_eigenbasis(rho.entries(), true);
            ProjectiveBasis::from_kets(&kets, (0..kets.ncols()).map(|i| i.to_string()).collect())
        })
        .collect()
}

/// Ground-state-optimized k-local basis in the full `2^L` space: the tensor
/// product of the local Schmidt bases of `state`.
pub fn klocal_ground_state_basis(
    state: &StateVector,
    length: usize,
    k: usize,
) -> Result<ProjectiveBasis> {
    product_basis(&local_schmidt_bases(state, length, k)?)
}

/// Observable-optimized basis (type 1): eigenbasis of the block-truncated
/// Hamiltonian, built directly in `sector`.
pub fn klocal_observable_basis_type1(
    spec: &ModelSpec,
    sector: &SymmetrySector,
    k: usize,
) -> Result<ProjectiveBasis> {
    let h = block_truncated_hamiltonian(spec, sector, k)?;
    let spectrum = eig_hermitian(&h)?;
    ProjectiveBasis::from_kets(
        spectrum.vectors(),
        (0..h.dim()).map(|i| format!("e{i}")).collect(),
    )
}

/// Per-block eigenbases of the reduced operator `tr_{complement} H`.
pub fn local_reduced_observable_bases(
    h_full: &DMatrix<C64>,
    length: usize,
    k: usize,
) -> Result<Vec<ProjectiveBasis>> {
    check_block(length, k)?;
    if h_full.nrows() != 1 << length {
        return Err(Error::DimensionMismatch {
            expected: 1 << length,
            found: h_full.nrows(),
        });
    }
    let dims = vec![2; length];
    block_sites(length, k)
        .map(|sites| {
            let reduced = trace_out_complement(h_full, &dims, &sites)?;
            let kets = tie_broken_eigenbasis(&reduced, false);
            ProjectiveBasis::from_kets(&kets, (0..kets.ncols()).map(|i| i.to_string()).collect())
        })
        .collect()
}

/// Observable-optimized basis (type 2) in the full `2^L` space.
pub fn klocal_observable_basis_type2(
    h_full: &DMatrix<C64>,
    length: usize,
    k: usize,
) -> Result<ProjectiveBasis> {
    product_basis(&local_reduced_observable_bases(h_full, length, k)?)
}

/// `U = U_1 ⊗ ... ⊗ U_m`, each `U_b` having the block basis bras as rows.
pub fn measurement_unitary(local_bases: &[ProjectiveBasis]) -> Result<DMatrix<C64>> {
    let Some(first) = local_bases.first() else {
        return Err(Error::InvalidMeasurement("no local bases".into()));
    };
    let mut u = first.rows.clone();
    for b in &local_bases[1..] {
        u = u.kronecker(&b.rows);
    }
    let err = orthonormality_error(&u);
    if err > TOL.orthonormality {
        return Err(Error::InvalidMeasurement(format!(
            "local bases are not orthonormal (error {err:e})"
        )));
    }
    Ok(u)
}

fn product_basis(local: &[ProjectiveBasis]) -> Result<ProjectiveBasis> {
    let u = measurement_unitary(local)?;
    let dims: Vec<usize> = local.iter().map(ProjectiveBasis::dim).collect();
    Ok(ProjectiveBasis {
        rows: u,
        labels: block_labels(&dims),
    })
}

/// Restricts a full-space basis to a sector: each ket is projected onto the
/// sector, orthonormalized against those already kept (in basis order) and
/// dropped if its projection is negligible. Missing directions are filled
/// with sector computational states.
pub fn restrict_to_sector(
    basis: &ProjectiveBasis,
    sector: &SymmetrySector,
) -> Result<ProjectiveBasis> {
    if basis.dim() != sector.full_dim() {
        return Err(Error::DimensionMismatch {
            expected: sector.full_dim(),
            found: basis.dim(),
        });
    }
    let d = sector.dim();
    let idx = sector.basis_indices();
    let mut kept: Vec<DVector<C64>> = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for i in 0..basis.dim() {
        if kept.len() == d {
            break;
        }
        // ket components are the conjugated row entries
        let mut v = DVector::from_iterator(d, idx.iter().map(|&j| basis.rows[(i, j)].conj()));
        if v.norm() < TOL.sector_drop {
            continue;
        }
        orthogonalize(&mut v, &kept);
        let norm = v.norm();
        if norm > 1e-6 {
            kept.push(v / C64::new(norm, 0.0));
            labels.push(basis.labels[i].clone());
        }
    }
    for j in 0..d {
        if kept.len() == d {
            break;
        }
        let mut v = DVector::from_element(d, ZERO);
        v[j] = ONE;
        orthogonalize(&mut v, &kept);
        let norm = v.norm();
        if norm > 1e-6 {
            kept.push(v / C64::new(norm, 0.0));
            labels.push(format!("fill{j}"));
        }
    }
    let kets = DMatrix::from_columns(&kept);
    ProjectiveBasis::from_kets(&kets, labels)
}

/// Projectors onto half-open energy bins `[E_1 + m dE, E_1 + (m+1) dE)`.
/// Empty bins are omitted.
pub fn coarse_energy_povm(spectrum: &Spectrum, delta_e: f64) -> Result<Povm> {
    if !(delta_e > 0.0) || !delta_e.is_finite() {
        return Err(Error::InvalidMeasurement(format!(
            "energy resolution {delta_e} must be > 0"
        )));
    }
    let e1 = spectrum.ground_energy();
    let mut bins: Vec<(i64, Vec<usize>)> = Vec::new();
    for (l, &e) in spectrum.values().iter().enumerate() {
        let m = ((e - e1) / delta_e + TOL.binning).floor() as i64;
        match bins.last_mut() {
            Some((last, members)) if *last == m => members.push(l),
            _ => bins.push((m, vec![l])),
        }
    }
    let n = spectrum.dim();
    let mut elements = Vec::with_capacity(bins.len());
    let mut labels = Vec::with_capacity(bins.len());
    for (m, members) in bins {
        let kets = DMatrix::from_fn(n, members.len(), |r, c| spectrum.vectors()[(r, members[c])]);
        elements.push(PovmElement::from_spectral(vec![1.0; members.len()], kets)?);
        labels.push(format!("bin{m}"));
    }
    Povm::new(elements, labels)
}

/// Outcome distribution `p_i = tr(Pi_i rho)`; tiny negative values are
/// clipped to zero.
pub fn outcome_probabilities(state: &State, m: &Measurement) -> Result<Vec<f64>> {
    if state.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: state.dim(),
        });
    }
    let raw: Vec<f64> = match (state, m) {
        (State::Pure(psi), Measurement::Projective(b)) => (b.rows() * psi.amplitudes())
            .iter()
            .map(|a| a.norm_sqr())
            .collect(),
        (State::Mixed(rho), Measurement::Projective(b)) => {
            let r = b.rows() * rho.entries() * b.rows().adjoint();
            (0..r.nrows()).map(|i| r[(i, i)].re).collect()
        }
        (_, Measurement::Povm(p)) => p
            .elements()
            .iter()
            .map(|e| state.expectation(e.matrix()))
            .collect(),
    };
    normalize_check(raw)
}

pub(crate) fn normalize_check(raw: Vec<f64>) -> Result<Vec<f64>> {
    let p: Vec<f64> = raw.into_iter().map(|x| x.max(0.0)).collect();
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > TOL.probability_sum {
        return Err(Error::Normalization {
            sum,
            deficit: 1.0 - sum,
        });
    }
    Ok(p)
}

/// `S = -sum_i p_i ln(p_i / V_i)`, with `0 ln 0 = 0`.
pub fn observational_entropy(p: &[f64], volumes: &[f64]) -> f64 {
    p.iter()
        .zip(volumes)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &v)| -pi * (pi / v).ln())
        .sum()
}

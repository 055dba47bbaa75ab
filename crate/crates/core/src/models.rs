//! Disordered spin-chain Hamiltonians restricted to symmetry sectors.
//!
//! Site `s` (0-based, left to right) is bit `L-1-s` of a computational basis
//! index, so site 0 is the most significant tensor factor. Bit value 1 is an
//! occupied site (a "particle", `sigma^z = -1`).

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{HermitianOperator, C64};

const MAX_SITES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Heisenberg,
    Ising,
    Xy,
    Pxp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Ising => "ising",
            ModelKind::Xy => "xy",
            ModelKind::Pxp => "pxp",
        };
        f.write_str(s)
    }
}

/// Parameters of one of the four chain models. Boundaries are hard walls.
///
/// * Heisenberg: `sum_i (XX + YY + ZZ)_{i,i+1} + sum_i h_i Z_i`
/// * Ising: `sum_{i<j} J_ij X_i X_j + 1/2 sum_i (B + h_i) Z_i`
/// * XY: `sum_{i<j} J_ij (S+_i S-_j + h.c.) + B sum_i Z_i`
/// * PXP: `Omega/4 sum_i (1 - Z_i) X_{i+1} (1 - Z_{i+2})`
///
/// with `J_ij = J_0 / |i - j|^alpha` and `h_i` uniform in `[-W, W]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub length: usize,
    pub disorder: f64,
    pub seed: u64,
    pub coupling: Option<f64>,
    pub alpha: Option<f64>,
    pub field: Option<f64>,
    pub omega: Option<f64>,
}

impl ModelSpec {
    pub fn heisenberg(length: usize, disorder: f64, seed: u64) -> Self {
        Self {
            kind: ModelKind::Heisenberg,
            length,
            disorder,
            seed,
            coupling: None,
            alpha: None,
            field: None,
            omega: None,
        }
    }

    /// Ising chain with `J_0 = 1`, `alpha = 1.13`, `B = 4`.
    pub fn ising(length: usize, disorder: f64, seed: u64) -> Self {
        Self {
            kind: ModelKind::Ising,
            length,
            disorder,
            seed,
            coupling: Some(1.0),
            alpha: Some(1.13),
            field: Some(4.0),
            omega: None,
        }
    }

    /// XY chain with `J_0 = 1`, `alpha = 1.24`, `B = 0`.
    pub fn xy(length: usize) -> Self {
        Self {
            kind: ModelKind::Xy,
            length,
            disorder: 0.0,
            seed: 0,
            coupling: Some(1.0),
            alpha: Some(1.24),
            field: Some(0.0),
            omega: None,
        }
    }

    pub fn pxp(length: usize) -> Self {
        Self {
            kind: ModelKind::Pxp,
            length,
            disorder: 0.0,
            seed: 0,
            coupling: None,
            alpha: None,
            field: None,
            omega: Some(1.0),
        }
    }

    /// Fills kind-specific defaults for absent couplings.
    pub fn with_defaults(mut self) -> Self {
        let (c, a, b, o) = match self.kind {
            ModelKind::Heisenberg => (None, None, None, None),
            ModelKind::Ising => (Some(1.0), Some(1.13), Some(4.0), None),
            ModelKind::Xy => (Some(1.0), Some(1.24), Some(0.0), None),
            ModelKind::Pxp => (None, None, None, Some(1.0)),
        };
        self.coupling = self.coupling.or(c);
        self.alpha = self.alpha.or(a);
        self.field = self.field.or(b);
        self.omega = self.omega.or(o);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.length < 2 || self.length > MAX_SITES {
            return bad(format!(
                "chain length {} outside 2..={MAX_SITES}",
                self.length
            ));
        }
        if !(self.disorder >= 0.0) || !self.disorder.is_finite() {
            return bad(format!(
                "disorder strength {} must be finite and >= 0",
                self.disorder
            ));
        }
        let present = [
            ("coupling", self.coupling),
            ("alpha", self.alpha),
            ("field", self.field),
            ("omega", self.omega),
        ];
        let required: &[&str] = match self.kind {
            ModelKind::Heisenberg => &[],
            ModelKind::Ising | ModelKind::Xy => &["coupling", "alpha", "field"],
            ModelKind::Pxp => &["omega"],
        };
        for (name, value) in present {
            match (required.contains(&name), value) {
                (true, None) => return bad(format!("{} model requires `{name}`", self.kind)),
                (false, Some(_)) => {
                    return bad(format!("{} model does not take `{name}`", self.kind))
                }
                (_, Some(v)) if !v.is_finite() => return bad(format!("`{name}` must be finite")),
                _ => {}
            }
        }
        if matches!(self.kind, ModelKind::Xy | ModelKind::Pxp) && self.disorder != 0.0 {
            return bad(format!("{} model has no disorder term", self.kind));
        }
        Ok(())
    }

    /// Disorder fields `h_i`, uniform in `[-W, W]`, from a ChaCha8 stream
    /// seeded with `seed`. All zeros when `W = 0`.
    pub fn disorder_fields(&self) -> Vec<f64> {
        if self.disorder == 0.0 {
            return vec![0.0; self.length];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.length)
            .map(|_| rng.random_range(-self.disorder..=self.disorder))
            .collect()
    }

    fn long_range(&self, i: usize, j: usize) -> f64 {
        let j0 = self.coupling.unwrap_or(1.0);
        let alpha = self.alpha.unwrap_or(0.0);
        j0 / ((j - i) as f64).powf(alpha)
    }

    /// Every term of the Hamiltonian, in a fixed order.
    fn terms(&self) -> Vec<Term> {
        let l = self.length;
        let h = self.disorder_fields();
        let mut terms = Vec::new();
        match self.kind {
            ModelKind::Heisenberg => {
                for i in 0..l - 1 {
                    // XX + YY = 2 (S+S- + S-S+)
                    terms.push(Term::new(TermOp::Hop(i, i + 1), 2.0, &[i, i + 1]));
                    terms.push(Term::new(TermOp::ZZ(i, i + 1), 1.0, &[i, i + 1]));
                }
                for (i, &hi) in h.iter().enumerate() {
                    terms.push(Term::new(TermOp::Z(i), hi, &[i]));
                }
            }
            ModelKind::Ising => {
                let b = self.field.unwrap_or(0.0);
                for i in 0..l {
                    for j in (i + 1)..l {
                        terms.push(Term::new(TermOp::XX(i, j), self.long_range(i, j), &[i, j]));
                    }
                }
                for (i, &hi) in h.iter().enumerate() {
                    terms.push(Term::new(TermOp::Z(i), 0.5 * (b + hi), &[i]));
                }
            }
            ModelKind::Xy => {
                let b = self.field.unwrap_or(0.0);
                for i in 0..l {
                    for j in (i + 1)..l {
                        terms.push(Term::new(TermOp::Hop(i, j), self.long_range(i, j), &[i, j]));
                    }
                }
                for i in 0..l {
                    terms.push(Term::new(TermOp::Z(i), b, &[i]));
                }
            }
            ModelKind::Pxp => {
                // Omega/4 (1-Z)(X)(1-Z) = Omega |1><1| X |1><1|
                let omega = self.omega.unwrap_or(1.0);
                for i in 0..l.saturating_sub(2) {
                    terms.push(Term::new(TermOp::Pxp(i + 1), omega, &[i, i + 1, i + 2]));
                }
            }
        }
        terms
    }
}

#[derive(Debug, Clone, Copy)]
enum TermOp {
    /// `Z_i`
    Z(usize),
    /// `Z_i Z_j`
    ZZ(usize, usize),
    /// `S+_i S-_j + S-_i S+_j`: swaps differing bits with amplitude 1.
    Hop(usize, usize),
    /// `X_i X_j`: flips both bits.
    XX(usize, usize),
    /// Flips site `c` if both neighbours are occupied.
    Pxp(usize),
}

#[derive(Debug, Clone)]
struct Term {
    op: TermOp,
    coeff: f64,
    first_site: usize,
    last_site: usize,
}

impl Term {
    fn new(op: TermOp, coeff: f64, sites: &[usize]) -> Self {
        let first_site = *sites.iter().min().unwrap();
        let last_site = *sites.iter().max().unwrap();
        Self {
            op,
            coeff,
            first_site,
            last_site,
        }
    }

    fn within_block(&self, k: usize) -> bool {
        self.first_site / k == self.last_site / k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SectorKind {
    /// Fixed number of occupied sites (fixed total `S^z`).
    SpinZ {
        particles: usize,
    },
    /// The `prod_i Z_i` eigenspace containing the Neel state `0101...`.
    ParityEven,
    Full,
}

impl fmt::Display for SectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorKind::SpinZ { particles } => write!(f, "spin-z(n={particles})"),
            SectorKind::ParityEven => f.write_str("parity-even"),
            SectorKind::Full => f.write_str("full"),
        }
    }
}

/// A subspace spanned by a subset of computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySector {
    kind: SectorKind,
    length: usize,
    basis_indices: Vec<usize>,
}

impl SymmetrySector {
    pub fn kind(&self) -> SectorKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.basis_indices.len()
    }

    pub fn full_dim(&self) -> usize {
        1 << self.length
    }

    /// Full-space indices of the sector's basis states, ascending.
    pub fn basis_indices(&self) -> &[usize] {
        &self.basis_indices
    }

    /// Bitstring label of sector basis state `i`, site 0 first.
    pub fn label(&self, i: usize) -> String {
        bitstring(self.basis_indices[i], self.length)
    }

    /// Lifts a sector vector into the full `2^L` space.
    pub fn embed(&self, v: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        let mut full = nalgebra::DVector::zeros(self.full_dim());
        for (&idx, &c) in self.basis_indices.iter().zip(v.iter()) {
            full[idx] = c;
        }
        full
    }

    /// Keeps only the sector components of a full-space vector.
    pub fn restrict(&self, v: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_iterator(self.dim(), self.basis_indices.iter().map(|&i| v[i]))
    }

    pub fn contains(&self, full_index: usize) -> bool {
        self.basis_indices.binary_search(&full_index).is_ok()
    }
}

pub fn bitstring(index: usize, length: usize) -> String {
    (0..length)
        .map(|s| {
            if (index >> (length - 1 - s)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn neel_parity(length: usize) -> u32 {
    // 0101... has floor(L/2) occupied sites
    ((length / 2) % 2) as u32
}

pub fn sector_basis(length: usize, kind: SectorKind) -> Result<SymmetrySector> {
    if !(2..=MAX_SITES).contains(&length) {
        return Err(Error::InvalidModel(format!(
            "chain length {length} outside 2..={MAX_SITES}"
        )));
    }
    let all = 0..(1usize << length);
    let basis_indices: Vec<usize> = match kind {
        SectorKind::SpinZ { particles } => {
            if particles > length {
                return Err(Error::ParticleCount { particles, length });
            }
            all.filter(|s| s.count_ones() as usize == particles)
                .collect()
        }
        SectorKind::ParityEven => {
            let p = neel_parity(length);
            all.filter(|s| s.count_ones() % 2 == p).collect()
        }
        SectorKind::Full => all.collect(),
    };
    Ok(SymmetrySector {
        kind,
        length,
        basis_indices,
    })
}

/// Whether `kind` conserves the quantity labelling `sector`.
pub fn compatible(kind: ModelKind, sector: SectorKind) -> bool {
    matches!(
        (kind, sector),
        (_, SectorKind::Full)
            | (
                ModelKind::Heisenberg | ModelKind::Xy,
                SectorKind::SpinZ { .. }
            )
            | (ModelKind::Ising, SectorKind::ParityEven)
    )
}

fn check_compatible(spec: &ModelSpec, sector: &SymmetrySector) -> Result<()> {
    if !compatible(spec.kind, sector.kind) {
        return Err(Error::IncompatibleSector {
            model: spec.kind.to_string(),
            sector: sector.kind.to_string(),
        });
    }
    if spec.length != sector.length {
        return Err(Error::InvalidModel(format!(
            "model has {} sites but sector was built for {}",
            spec.length, sector.length
        )));
    }
    Ok(())
}

fn assemble(
    spec: &ModelSpec,
    sector: &SymmetrySector,
    keep: impl Fn(&Term) -> bool,
) -> Result<HermitianOperator> {
    spec.validate()?;
    check_compatible(spec, sector)?;
    let l = spec.length;
    let bit = |s: usize| 1usize << (l - 1 - s);
    let occupied = |state: usize, s: usize| state & bit(s) != 0;
    let z = |state: usize, s: usize| if occupied(state, s) { -1.0 } else { 1.0 };

    let terms: Vec<Term> = spec.terms().into_iter().filter(|t| keep(t)).collect();
    let position: HashMap<usize, usize> = sector
        .basis_indices
        .iter()
        .enumerate()
        .map(|(p, &s)| (s, p))
        .collect();
    let d = sector.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (col, &state) in sector.basis_indices.iter().enumerate() {
        for term in &terms {
            let target = match term.op {
                TermOp::Z(i) => {
                    m[(col, col)] += term.coeff * z(state, i);
                    None
                }
                TermOp::ZZ(i, j) => {
                    m[(col, col)] += term.coeff * z(state, i) * z(state, j);
                    None
                }
                TermOp::Hop(i, j) => {
                    (occupied(state, i) != occupied(state, j)).then(|| state ^ bit(i) ^ bit(j))
                }
                TermOp::XX(i, j) => Some(state ^ bit(i) ^ bit(j)),
                TermOp::Pxp(c) => {
                    (occupied(state, c - 1) && occupied(state, c + 1)).then(|| state ^ bit(c))
                }
            };
            if let Some(t) = target {
                let row = *position.get(&t).ok_or_else(|| Error::IncompatibleSector {
                    model: spec.kind.to_string(),
                    sector: sector.kind.to_string(),
                })?;
                m[(row, col)] += term.coeff;
            }
        }
    }
    HermitianOperator::from_real(m)
}

/// The model Hamiltonian restricted to `sector`.
pub fn build_hamiltonian(spec: &ModelSpec, sector: &SymmetrySector) -> Result<HermitianOperator> {
    assemble(spec, sector, |_| true)
}

/// The Hamiltonian with every term crossing a boundary between consecutive
/// length-`k` blocks removed. `k = L` gives the full Hamiltonian.
pub fn block_truncated_hamiltonian(
    spec: &ModelSpec,
    sector: &SymmetrySector,
    k: usize,
) -> Result<HermitianOperator> {
    if k == 0 || spec.length % k != 0 {
        return Err(Error::BlockSize {
            k,
            length: spec.length,
        });
    }
    assemble(spec, sector, |t| t.within_block(k))
}

use nalgebra::{DMatrix, DVector};

use super::overlaps::Overlaps;
use super::sweep::ProbabilityBounds;
use crate::error::{Error, Result};

/// The non-negative matrix `B_i[E, E'] = |<E|Pi_i|E'>|`. `A_i` shares the
/// diagonal and flips the sign of every off-diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadraticForm {
    /// `B = v v^T`, from a rank-one element.
    RankOne(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        match self {
            QuadraticForm::RankOne(v) => v.len(),
            QuadraticForm::Dense(m) => m.nrows(),
        }
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        match self {
            QuadraticForm::RankOne(v) => v * v.transpose(),
            QuadraticForm::Dense(m) => m.clone(),
        }
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        let b = self.b_matrix();
        DMatrix::from_fn(b.nrows(), b.ncols(), |r, c| {
            if r == c {
                b[(r, c)]
            } else {
                -b[(r, c)]
            }
        })
    }

    /// `q^T B q`.
    pub fn upper(&self, q: &[f64]) -> f64 {
        match self {
            QuadraticForm::RankOne(v) => {
                let s: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                s * s
            }
            QuadraticForm::Dense(m) => {
                let q = DVector::from_column_slice(q);
                q.dot(&(m * &q))
            }
        }
    }

    /// `q^T A q = 2 sum_E B_EE q_E^2 - q^T B q`.
    pub fn lower(&self, q: &[f64]) -> f64 {
        let diag: f64 = match self {
            QuadraticForm::RankOne(v) => v.iter().zip(q).map(|(a, b)| a * a * b * b).sum(),
            QuadraticForm::Dense(m) => q.iter().enumerate().map(|(l, x)| m[(l, l)] * x * x).sum(),
        };
        2.0 * diag - self.upper(q)
    }
}

/// Collective constraint `sqrt(p)^T A sqrt(p) <= p_min` and
/// `p_max <= sqrt(p)^T B sqrt(p)` for one measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConstraint {
    pub form: QuadraticForm,
    pub p_min: f64,
    pub p_max: f64,
    pub measurement: usize,
    pub outcome: usize,
}

impl QuadraticConstraint {
    pub fn new(b: DMatrix<f64>, p_min: f64, p_max: f64) -> Result<Self> {
        if b.nrows() != b.ncols() {
            return Err(Error::NotSquare {
                rows: b.nrows(),
                cols: b.ncols(),
            });
        }
        if b.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "B must be entrywise non-negative".into(),
            ));
        }
        if (&b - b.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidArgument("B must be symmetric".into()));
        }
        if !(p_min <= p_max) {
            return Err(Error::InvalidArgument(format!(
                "p_min {p_min} exceeds p_max {p_max}"
            )));
        }
        Ok(Self {
            form: QuadraticForm::Dense(b),
            p_min,
            p_max,
            measurement: 0,
            outcome: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Largest violation at `q`, zero when both sides hold.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let lo = self.form.lower(q) - self.p_min;
        let hi = self.p_max - self.form.upper(q);
        lo.max(hi).max(0.0)
    }
}

/// One constraint per outcome of every measurement, with `p_min`/`p_max`
/// taken from the swept ranges in `pb` (measurement order must match).
pub fn quadratic_forms(
    overlaps: &[Overlaps],
    pb: &ProbabilityBounds,
) -> Result<Vec<QuadraticConstraint>> {
    if pb.measurements() != overlaps.len() {
        return Err(Error::DimensionMismatch {
            expected: overlaps.len(),
            found: pb.measurements(),
        });
    }
    let mut out = Vec::new();
    for (m, o) in overlaps.iter().enumerate() {
        let (pmin, pmax) = (pb.outcome_min(m), pb.outcome_max(m));
        match o {
            Overlaps::Projective(po) => {
                for i in 0..po.outcomes() {
                    out.push(QuadraticConstraint {
                        form: QuadraticForm::RankOne(po.magnitudes().row(i).transpose()),
                        p_min: pmin[i],
                        p_max: pmax[i],
                        measurement: m,
                        outcome: i,
                    });
                }
            }
            Overlaps::Povm(elements) => {
                for (i, e) in elements.iter().enumerate() {
                    let k = e.energy_kets();
                    let form = if e.weights().len() == 1 {
                        let g = e.weights()[0].sqrt();
                        QuadraticForm::RankOne(DVector::from_iterator(
                            k.nrows(),
                            k.column(0).iter().map(|z| g * z.norm()),
                        ))
                    } else {
                        let mut scaled = k.clone();
                        for (c, &g) in e.weights().iter().enumerate() {
                            scaled.column_mut(c).scale_mut(g);
                        }
                        let s = scaled * k.adjoint();
                        let b = s.map(|z| z.norm());
                        // symmetrize away rounding
                        QuadraticForm::Dense((&b + b.transpose()) * 0.5)
                    };
                    out.push(QuadraticConstraint {
                        form,
                        p_min: pmin[i],
                        p_max: pmax[i],
                        measurement: m,
                        outcome: i,
                    });
                }
            }
        }
    }
    Ok(out)
}

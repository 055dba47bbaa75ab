use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::overlaps::{EnergyState, Overlaps};
use crate::error::{Error, Result};
use crate::measurements::Measurement;
use crate::numeric::TOL;
use crate::spectral::{Spectrum, State};

/// Whether the target observable commutes with the generator of the
/// dynamics. Only a conserved target has a time-independent energy
/// distribution, which is what licenses pooling several times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetDynamics {
    Conserved,
    NonConserved,
}

/// Extremized pointwise bounds together with per-outcome probability ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityBounds {
    a_max: Vec<f64>,
    b_min: Vec<f64>,
    outcome_min: Vec<Vec<f64>>,
    outcome_max: Vec<Vec<f64>>,
}

impl ProbabilityBounds {
    /// A plain box `a <= p <= b` without outcome data.
    pub fn new(a_max: Vec<f64>, b_min: Vec<f64>) -> Result<Self> {
        if a_max.len() != b_min.len() {
            return Err(Error::DimensionMismatch {
                expected: a_max.len(),
                found: b_min.len(),
            });
        }
        if a_max
            .iter()
            .chain(&b_min)
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::InvalidArgument(
                "bounds must be finite and non-negative".into(),
            ));
        }
        let pb = Self {
            a_max,
            b_min,
            outcome_min: Vec::new(),
            outcome_max: Vec::new(),
        };
        pb.check_feasible()?;
        Ok(pb)
    }

    /// Identity for [`Self::append`].
    fn neutral(dim: usize) -> Self {
        Self {
            a_max: vec![0.0; dim],
            b_min: vec![f64::INFINITY; dim],
            outcome_min: Vec::new(),
            outcome_max: Vec::new(),
        }
    }

    /// Extremizes the bounds and lists `other`'s measurements after ours.
    fn append(mut self, other: Self) -> Self {
        self.a_max
            .iter_mut()
            .zip(&other.a_max)
            .for_each(|(x, &y)| *x = x.max(y));
        self.b_min
            .iter_mut()
            .zip(&other.b_min)
            .for_each(|(x, &y)| *x = x.min(y));
        self.outcome_min.extend(other.outcome_min);
        self.outcome_max.extend(other.outcome_max);
        self
    }

    pub fn dim(&self) -> usize {
        self.a_max.len()
    }

    pub fn a_max(&self) -> &[f64] {
        &self.a_max
    }

    pub fn b_min(&self) -> &[f64] {
        &self.b_min
    }

    /// Number of measurements that contributed outcome ranges.
    pub fn measurements(&self) -> usize {
        self.outcome_min.len()
    }

    pub fn outcome_min(&self, measurement: usize) -> &[f64] {
        &self.outcome_min[measurement]
    }

    pub fn outcome_max(&self, measurement: usize) -> &[f64] {
        &self.outcome_max[measurement]
    }

    /// `a <= b` elementwise and `sum a <= 1 <= sum b`, within tolerance.
    pub fn check_feasible(&self) -> Result<()> {
        for (l, (a, b)) in self.a_max.iter().zip(&self.b_min).enumerate() {
            if a - b > TOL.feasibility {
                return Err(Error::Infeasible(format!(
                    "a_max[{l}] = {a} exceeds b_min[{l}] = {b}"
                )));
            }
        }
        let sa: f64 = self.a_max.iter().sum();
        let sb: f64 = self.b_min.iter().sum();
        if sa > 1.0 + TOL.feasibility {
            return Err(Error::Infeasible(format!("sum of a_max is {sa} > 1")));
        }
        if sb < 1.0 - TOL.feasibility {
            return Err(Error::Infeasible(format!("sum of b_min is {sb} < 1")));
        }
        Ok(())
    }

    fn repair(&mut self) -> Result<()> {
        self.check_feasible()?;
        // `+ 0.0` folds a possible -0.0 so signed zeros cannot leak into output
        for (a, b) in self.a_max.iter_mut().zip(self.b_min.iter_mut()) {
            *a = a.min(*b) + 0.0;
            *b += 0.0;
        }
        Ok(())
    }
}

/// `points` uniformly spaced times starting at 0. With `include_end` the last
/// point is `total`, otherwise the grid covers `[0, total)`.
pub fn uniform_grid(total: f64, points: usize, include_end: bool) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => {
            let steps = if include_end { n - 1 } else { n } as f64;
            (0..n).map(|j| total * j as f64 / steps).collect()
        }
    }
}

/// Extremizes the pointwise bounds over every (time, measurement) cell.
pub fn sweep(
    state: &State,
    spectrum: &Spectrum,
    measurements: &[Measurement],
    times: &[f64],
    dynamics: TargetDynamics,
) -> Result<ProbabilityBounds> {
    let overlaps = measurements
        .iter()
        .map(|m| Overlaps::new(m, spectrum))
        .collect::<Result<Vec<_>>>()?;
    sweep_overlaps(
        &EnergyState::new(state, spectrum)?,
        spectrum.values(),
        &overlaps,
        times,
        dynamics,
    )
}

/// As [`sweep`], with the state and measurements already expressed in the
/// target's eigenbasis. For a conserved target the state is evolved by
/// `values`; otherwise exactly one time is accepted and the state is used as
/// given.
pub fn sweep_overlaps(
    state: &EnergyState,
    values: &[f64],
    overlaps: &[Overlaps],
    times: &[f64],
    dynamics: TargetDynamics,
) -> Result<ProbabilityBounds> {
    let mut pb = sweep_unrepaired(state, values, overlaps, times, dynamics)?;
    pb.repair()?;
    Ok(pb)
}

/// Joins sweeps of disjoint measurement lists, as if they had been swept
/// together. Parts must come from [`sweep_unrepaired`].
pub(crate) fn join(parts: &[&ProbabilityBounds]) -> Result<ProbabilityBounds> {
    let first = parts.first().ok_or(Error::EmptyMeasurementSet)?;
    let mut pb = ProbabilityBounds::neutral(first.dim());
    for part in parts {
        if part.dim() != pb.dim() {
            return Err(Error::DimensionMismatch {
                expected: pb.dim(),
                found: part.dim(),
            });
        }
        pb = pb.append((*part).clone());
    }
    pb.repair()?;
    Ok(pb)
}

/// The sweep before the feasibility check and clamping.
pub(crate) fn sweep_unrepaired(
    state: &EnergyState,
    values: &[f64],
    overlaps: &[Overlaps],
    times: &[f64],
    dynamics: TargetDynamics,
) -> Result<ProbabilityBounds> {
    if overlaps.is_empty() {
        return Err(Error::EmptyMeasurementSet);
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if dynamics == TargetDynamics::NonConserved && times.len() > 1 {
        return Err(Error::TimeSweepNotAllowed {
            points: times.len(),
        });
    }
    let dim = state.dim();
    if values.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: values.len(),
        });
    }
    for o in overlaps {
        if o.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: o.dim(),
            });
        }
    }
    let times = match dynamics {
        TargetDynamics::Conserved => times,
        TargetDynamics::NonConserved => &[0.0][..],
    };
    let mut parts = Vec::with_capacity(overlaps.len());
    for o in overlaps {
        let probs = o.probabilities_over_time(state, values, times)?;
        parts.push(extremes(o, &probs));
    }
    let mut pb = ProbabilityBounds::neutral(dim);
    for part in parts {
        pb = pb.append(part);
    }
    Ok(pb)
}

/// Unrepaired bounds of one measurement from its outcome distributions
/// (one column per time).
pub(crate) fn extremes(overlap: &Overlaps, probs: &DMatrix<f64>) -> ProbabilityBounds {
    let (a, b) = overlap.bounds_over_time(probs);
    let row_fold = |m: &DMatrix<f64>, init: f64, f: fn(f64, f64) -> f64| -> Vec<f64> {
        m.row_iter()
            .map(|r| r.iter().copied().fold(init, f))
            .collect()
    };
    ProbabilityBounds {
        a_max: row_fold(&a, 0.0, f64::max),
        b_min: row_fold(&b, f64::INFINITY, f64::min),
        outcome_min: vec![row_fold(probs, f64::INFINITY, f64::min)],
        outcome_max: vec![row_fold(probs, f64::NEG_INFINITY, f64::max)],
    }
}

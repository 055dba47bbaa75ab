use serde::{Deserialize, Serialize};

use super::sweep::ProbabilityBounds;
use crate::error::{Error, Result};
use crate::numeric::TOL;

/// Interval on `<E^k>` with the distributions attaining each end.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// `u`, filled greedily from the smallest `E^k`.
    pub lower_distribution: Vec<f64>,
    /// `w`, filled greedily from the largest `E^k`.
    pub upper_distribution: Vec<f64>,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `E_l^k`.
pub fn moment_values(values: &[f64], moment: u32) -> Vec<f64> {
    values.iter().map(|e| e.powi(moment as i32)).collect()
}

/// Indices ordered by value, ties kept in index order.
fn sorted_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    idx
}

/// Greedy fill along `order`: each entry takes as much mass as its upper
/// bound allows while leaving every later entry at least its lower bound.
fn greedy_fill(a: &[f64], b: &[f64], order: &[usize]) -> Vec<f64> {
    let mut rest_a: f64 = order.iter().map(|&l| a[l]).sum();
    let mut used = 0.0;
    let mut p = vec![0.0; a.len()];
    for &l in order {
        rest_a -= a[l];
        let take = b[l].min(1.0 - used - rest_a).max(a[l]);
        p[l] = take;
        used += take;
    }
    p
}

/// Exact extremes of `sum_l E_l^k p_l` over `a_max <= p <= b_min`,
/// `sum p = 1`.
pub fn analytic_interval(pb: &ProbabilityBounds, values: &[f64], moment: u32) -> Result<Interval> {
    if moment == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    if values.len() != pb.dim() {
        return Err(Error::DimensionMismatch {
            expected: pb.dim(),
            found: values.len(),
        });
    }
    pb.check_feasible()?;
    let (a, b) = (pb.a_max(), pb.b_min());
    let v = moment_values(values, moment);
    let up = sorted_order(&v);
    let down: Vec<usize> = up.iter().rev().copied().collect();
    let u = greedy_fill(a, b, &up);
    let w = greedy_fill(a, b, &down);
    let dot = |p: &[f64]| p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    Ok(Interval {
        lo: dot(&u),
        hi: dot(&w),
        lower_distribution: u,
        upper_distribution: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityFactors {
    /// Percentage of the spectral range excluded.
    pub q1: f64,
    /// Percentage of eigenstates outside the interval.
    pub q2: f64,
}

/// Quality of an energy interval `[lo, hi]` relative to the ascending
/// spectrum `values`. Eigenvalues within `1e-9` of the range of an end point
/// count as inside.
pub fn quality_factors(lo: f64, hi: f64, values: &[f64]) -> Result<QualityFactors> {
    let (Some(&e1), Some(&en)) = (values.first(), values.last()) else {
        return Err(Error::EmptySpectrum);
    };
    let range = en - e1;
    if !(range > 0.0) {
        return Err(Error::DegenerateSpectrum(e1));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!(
            "interval [{lo}, {hi}] is empty"
        )));
    }
    let slack = TOL.degeneracy * range;
    let inside = values
        .iter()
        .filter(|&&e| e >= lo - slack && e <= hi + slack)
        .count();
    Ok(QualityFactors {
        q1: (1.0 - (hi - lo) / range) * 100.0,
        q2: (1.0 - inside as f64 / values.len() as f64) * 100.0,
    })
}

//! The constrained interval: extremes of `<E^k>` over every distribution
//! consistent with the box bounds, normalization and the collective quadratic
//! constraints. Also a linear-programming oracle for the box-only problem.
//!
//! The search runs in `q = sqrt(p)`, where the quadratic constraints are
//! smooth and normalization is the unit sphere. In `p` the feasible set is
//! convex (each constraint compares a concave or convex function of
//! `sqrt(p_E p_E')` with a constant) and the objective is linear, so local
//! optima found by the trust-region solver are global up to its tolerance.

use std::cell::Cell;

use cobyla::{minimize, Func, RhoBeg, StopTols};
use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    analytic_interval, moment_values, Interval, ProbabilityBounds, QuadraticConstraint,
};
use crate::error::{Error, Result};

/// Box bounds plus quadratic constraints on the target distribution.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    bounds: ProbabilityBounds,
    quads: Vec<QuadraticConstraint>,
}

impl FeasibleSet {
    pub fn new(bounds: ProbabilityBounds, quads: Vec<QuadraticConstraint>) -> Result<Self> {
        bounds.check_feasible()?;
        for (j, q) in quads.iter().enumerate() {
            if q.dim() != bounds.dim() {
                return Err(Error::DimensionMismatch {
                    expected: bounds.dim(),
                    found: q.dim(),
                });
            }
            if !(q.p_min <= q.p_max) {
                return Err(Error::Infeasible(format!(
                    "constraint {j}: p_min {} > p_max {}",
                    q.p_min, q.p_max
                )));
            }
        }
        Ok(Self { bounds, quads })
    }

    pub fn linear(bounds: ProbabilityBounds) -> Result<Self> {
        Self::new(bounds, Vec::new())
    }

    pub fn bounds(&self) -> &ProbabilityBounds {
        &self.bounds
    }

    pub fn quads(&self) -> &[QuadraticConstraint] {
        &self.quads
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Largest violation of any constraint at `q`, including the box and
    /// the unit-sphere normalization.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let (a, b) = (self.bounds.a_max(), self.bounds.b_min());
        let mut worst = (q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
        for (l, &x) in q.iter().enumerate() {
            let p = x * x;
            worst = worst.max(a[l] - p).max(p - b[l]).max(-x);
        }
        for c in &self.quads {
            worst = worst.max(c.residual(q));
        }
        worst.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Largest constraint residual accepted at a returned point.
    pub constraint_tolerance: f64,
    /// Final trust-region radius relative to the initial one.
    pub objective_tolerance: f64,
    /// Function evaluations per restart.
    pub max_iterations: usize,
    /// Random restarts besides the analytic warm start.
    pub restarts: usize,
    pub include_quadratic: bool,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            constraint_tolerance: 1e-6,
            objective_tolerance: 1e-8,
            max_iterations: 20_000,
            restarts: 8,
            include_quadratic: true,
            seed: 0,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.constraint_tolerance > 0.0) || !(self.objective_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "optimizer tolerances must be > 0".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointDiagnostics {
    pub evaluations: usize,
    pub attempted: usize,
    pub accepted: usize,
    /// Residual of the returned point (0 for the analytic fallback).
    pub residual: f64,
    /// Index of the winning start; 0 is the analytic warm start.
    pub best_start: Option<usize>,
    /// The optimizer drifted past the analytic bound and was clamped.
    pub clamped: bool,
    /// Every start failed; the analytic bound is returned instead.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightInterval {
    pub lo: f64,
    pub hi: f64,
    /// Distribution attaining `lo`.
    pub lower_distribution: Vec<f64>,
    pub upper_distribution: Vec<f64>,
    /// The box-only interval containing this one.
    pub linear: Interval,
    pub lower: EndpointDiagnostics,
    pub upper: EndpointDiagnostics,
}

impl TightInterval {
    pub fn degraded(&self) -> bool {
        self.lower.degraded || self.upper.degraded
    }
}

struct Candidate {
    start: usize,
    value: f64,
    q: Vec<f64>,
    residual: f64,
    evaluations: usize,
}

/// Random point of the box intersected with the simplex: start from `a`,
/// hand out the missing mass in random order, a random share at a time, then
/// top up in order until the sum is one.
fn random_feasible(a: &[f64], b: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p = a.to_vec();
    let mut rest = 1.0 - a.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.shuffle(rng);
    for &l in &order {
        let add = (rng.random::<f64>() * (b[l] - a[l])).min(rest).max(0.0);
        p[l] += add;
        rest -= add;
    }
    for &l in &order {
        let add = (b[l] - p[l]).min(rest).max(0.0);
        p[l] += add;
        rest -= add;
    }
    p
}

/// Solver-side constraint slack relative to the acceptance tolerance.
const SOLVER_SLACK: f64 = 1e-3;

type ConstraintFn<'a> = Box<dyn Func<()> + 'a>;

/// Embeds the solver's variables (the coordinates with a non-degenerate
/// box) into the full `q`; pinned coordinates keep their fixed value.
struct Lift {
    free: Vec<usize>,
    base: Vec<f64>,
}

impl Lift {
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut q = self.base.clone();
        for (&l, &xi) in self.free.iter().zip(x) {
            q[l] = xi;
        }
        q
    }
}

/// Constraints in the solver's `c(x) >= 0` convention, each loosened by
/// `slack`. Measured bounds carry rounding error, so equality-like
/// constraints can miss each other by a few ulps; without the slack the
/// solver stalls short of the optimum.
fn constraint_fns<'a>(
    lift: &'a Lift,
    quads: &'a [QuadraticConstraint],
    include_quadratic: bool,
    slack: f64,
) -> Vec<ConstraintFn<'a>> {
    let norm = move |x: &[f64]| lift.full(x).iter().map(|v| v * v).sum::<f64>();
    let mut cons: Vec<ConstraintFn<'a>> = vec![
        Box::new(move |x: &[f64], _: &mut ()| 1.0 + slack - norm(x)),
        Box::new(move |x: &[f64], _: &mut ()| norm(x) - 1.0 + slack),
    ];
    if include_quadratic {
        for c in quads {
            cons.push(Box::new(move |x: &[f64], _: &mut ()| {
                c.p_min + slack - c.form.lower(&lift.full(x))
            }));
            if c.p_max > 0.0 {
                cons.push(Box::new(move |x: &[f64], _: &mut ()| {
                    c.form.upper(&lift.full(x)) - c.p_max + slack
                }));
            }
        }
    }
    cons
}

fn solve_endpoint(
    set: &FeasibleSet,
    v: &[f64],
    sign: f64,
    warm: &[f64],
    settings: &OptimizerSettings,
    stream: u64,
) -> Vec<Candidate> {
    let n = set.dim();
    let (a, b) = (set.bounds.a_max(), set.bounds.b_min());
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|l| (a[l].sqrt(), b[l].min(1.0).sqrt().max(a[l].sqrt())))
        .collect();
    // pinned coordinates would make the interpolation simplex degenerate
    let free: Vec<usize> = (0..n)
        .filter(|&l| bounds[l].1 - bounds[l].0 > 1e-14)
        .collect();
    let free_bounds: Vec<(f64, f64)> = free.iter().map(|&l| bounds[l]).collect();
    let steps: Vec<f64> = free_bounds
        .iter()
        .map(|(lo, hi)| (0.5 * (hi - lo)).min(0.1))
        .collect();
    // shift and scale the objective to O(1); on the sphere this changes only
    // the value, not the optimizer
    let (vmin, vmax) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(x, y), &e| {
            (x.min(e), y.max(e))
        });
    let scale = if vmax > vmin { vmax - vmin } else { 1.0 };
    let w: Vec<f64> = v.iter().map(|e| sign * (e - vmin) / scale).collect();

    let checked = if settings.include_quadratic {
        set.clone()
    } else {
        FeasibleSet {
            bounds: set.bounds.clone(),
            quads: Vec::new(),
        }
    };

    let starts: Vec<Vec<f64>> = std::iter::once(warm.to_vec())
        .chain((0..settings.restarts).map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                settings.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (r as u64 + 1),
            );
            random_feasible(a, b, &mut rng)
        }))
        .collect();

    starts
        .par_iter()
        .enumerate()
        .map(|(start, p0)| {
            let q0: Vec<f64> = p0
                .iter()
                .zip(&bounds)
                .map(|(p, &(lo, hi))| p.max(0.0).sqrt().clamp(lo, hi))
                .collect();
            let count = Cell::new(0usize);
            let raw = if free.is_empty() {
                q0.clone()
            } else {
                let lift = Lift {
                    free: free.clone(),
                    base: q0.clone(),
                };
                let x0: Vec<f64> = free.iter().map(|&l| q0[l]).collect();
                let objective = |x: &[f64], _: &mut ()| {
                    count.set(count.get() + 1);
                    lift.full(x)
                        .iter()
                        .zip(&w)
                        .map(|(q, c)| c * q * q)
                        .sum::<f64>()
                };
                let cons = constraint_fns(
                    &lift,
                    &set.quads,
                    settings.include_quadratic,
                    SOLVER_SLACK * settings.constraint_tolerance,
                );
                let cons_ref: Vec<&dyn Func<()>> = cons.iter().map(|c| c.as_ref()).collect();
                let tols = StopTols {
                    xtol_rel: settings.objective_tolerance,
                    ..StopTols::default()
                };
                let rho = RhoBeg::Set(steps.clone());
                let x = match minimize(
                    objective,
                    &x0,
                    &free_bounds,
                    &cons_ref,
                    (),
                    settings.max_iterations,
                    rho,
                    Some(tols),
                ) {
                    Ok((_, x, _)) | Err((_, x, _)) => x,
                };
                lift.full(&x)
            };
            // clean up: clip to the box, then renormalize
            let mut q: Vec<f64> = raw
                .iter()
                .zip(&bounds)
                .map(|(x, &(lo, hi))| x.clamp(lo, hi))
                .collect();
            let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                q.iter_mut().for_each(|x| *x /= norm);
            }
            let residual = checked.residual(&q);
            let value = q.iter().zip(v).map(|(x, e)| e * x * x).sum();
            Candidate {
                start,
                value,
                q,
                residual,
                evaluations: count.get(),
            }
        })
        .collect()
}

fn pick(
    candidates: Vec<Candidate>,
    sign: f64,
    linear_value: f64,
    linear_point: &[f64],
    tol: f64,
) -> (f64, Vec<f64>, EndpointDiagnostics) {
    let attempted = candidates.len();
    let evaluations = candidates.iter().map(|c| c.evaluations).sum();
    let accepted: Vec<&Candidate> = candidates.iter().filter(|c| c.residual < tol).collect();
    // candidates arrive in start order, so a strict comparison keeps the
    // lowest start among ties
    let mut best: Option<&Candidate> = None;
    for c in &accepted {
        if best.map_or(true, |b| sign * c.value < sign * b.value) {
            best = Some(c);
        }
    }
    let mut diag = EndpointDiagnostics {
        evaluations,
        attempted,
        accepted: accepted.len(),
        residual: 0.0,
        best_start: None,
        clamped: false,
        degraded: false,
    };
    match best {
        None => {
            diag.degraded = true;
            (linear_value, linear_point.to_vec(), diag)
        }
        Some(c) => {
            diag.residual = c.residual;
            diag.best_start = Some(c.start);
            let p: Vec<f64> = c.q.iter().map(|x| x * x).collect();
            if sign * c.value < sign * linear_value {
                diag.clamped = true;
                (linear_value, p, diag)
            } else {
                (c.value, p, diag)
            }
        }
    }
}

/// Extremes of `sum_l E_l^k p_l` over `set`, nested inside the analytic
/// interval. Each end runs the analytic warm start plus `settings.restarts`
/// random feasible starts; a start counts only if its final residual is below
/// the constraint tolerance.
pub fn constrained_interval(
    set: &FeasibleSet,
    values: &[f64],
    moment: u32,
    settings: &OptimizerSettings,
) -> Result<TightInterval> {
    settings.validate()?;
    let linear = analytic_interval(&set.bounds, values, moment)?;
    let v = moment_values(values, moment);
    let lower = solve_endpoint(
        set,
        &v,
        1.0,
        &linear.lower_distribution,
        settings,
        2 * moment as u64,
    );
    let upper = solve_endpoint(
        set,
        &v,
        -1.0,
        &linear.upper_distribution,
        settings,
        2 * moment as u64 + 1,
    );
    let tol = settings.constraint_tolerance;
    let (lo, lower_distribution, lower) =
        pick(lower, 1.0, linear.lo, &linear.lower_distribution, tol);
    let (hi, upper_distribution, upper) =
        pick(upper, -1.0, linear.hi, &linear.upper_distribution, tol);
    Ok(TightInterval {
        lo,
        hi: hi.max(lo),
        lower_distribution,
        upper_distribution,
        linear,
        lower,
        upper,
    })
}

/// `min` and `max` of `sum_l E_l^k p_l` over the box and simplex, solved as a
/// linear program.
pub fn lp_oracle(pb: &ProbabilityBounds, values: &[f64], moment: u32) -> Result<(f64, f64)> {
    if values.len() != pb.dim() {
        return Err(Error::DimensionMismatch {
            expected: pb.dim(),
            found: values.len(),
        });
    }
    pb.check_feasible()?;
    let v = moment_values(values, moment);
    let solve = |direction| -> Result<f64> {
        let mut problem = Problem::new(direction);
        let mut sum = LinearExpr::empty();
        let vars: Vec<_> = v
            .iter()
            .zip(pb.a_max().iter().zip(pb.b_min()))
            .map(|(&c, (&lo, &hi))| problem.add_var(c, (lo, hi.max(lo))))
            .collect();
        for &x in &vars {
            sum.add(x, 1.0);
        }
        problem.add_constraint(sum, ComparisonOp::Eq, 1.0);
        let solution = problem
            .solve()
            .map_err(|e| Error::Infeasible(format!("linear program: {e}")))?;
        Ok(vars
            .iter()
            .zip(&v)
            .map(|(&x, c)| c * *solution.var_value(x))
            .sum())
    };
    Ok((
        solve(OptimizationDirection::Minimize)?,
        solve(OptimizationDirection::Maximize)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{quadratic_forms, sweep_overlaps, EnergyState, Overlaps, TargetDynamics};
    use crate::measurements::ProjectiveBasis;
    use crate::spectral::{eig_hermitian, State};
    use crate::testutil::{random_hermitian, random_state, random_unitary};
    use nalgebra::DMatrix;

    const APP_B: [f64; 8] = [0.0, 1.0, 2.0, 2.5, 3.0, 3.3, 3.7, 4.0];

    fn app_b_box() -> ProbabilityBounds {
        ProbabilityBounds::new(vec![0.0; 8], vec![0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0]).unwrap()
    }

    fn bin_constraint(members: &[usize], p: f64) -> QuadraticConstraint {
        let mut d = DMatrix::zeros(8, 8);
        for &l in members {
            d[(l, l)] = 1.0;
        }
        QuadraticConstraint::new(d, p, p).unwrap()
    }

    #[test]
    fn coarse_grained_tight_interval() {
        let quads = vec![
            bin_constraint(&[2, 3], 0.5),
            bin_constraint(&[4, 5, 6], 0.5),
        ];
        let set = FeasibleSet::new(app_b_box(), quads).unwrap();
        let t = constrained_interval(&set, &APP_B, 1, &OptimizerSettings::default()).unwrap();
        assert!((t.lo - 2.5).abs() < 1e-3, "lo {}", t.lo);
        assert!((t.hi - 3.1).abs() < 1e-3, "hi {}", t.hi);
        assert!((t.linear.lo - 2.25).abs() < 1e-12 && (t.linear.hi - 3.5).abs() < 1e-12);
        assert!(!t.degraded());
    }

    #[test]
    fn linear_only_matches_analytic() {
        let set = FeasibleSet::linear(app_b_box()).unwrap();
        let t = constrained_interval(&set, &APP_B, 1, &OptimizerSettings::default()).unwrap();
        assert!((t.lo - 2.25).abs() < 1e-8 && (t.hi - 3.5).abs() < 1e-8);
    }

    #[test]
    fn lp_oracle_examples() {
        let (lo, hi) = lp_oracle(&app_b_box(), &APP_B, 1).unwrap();
        assert!((lo - 2.25).abs() < 1e-9 && (hi - 3.5).abs() < 1e-9);
        let p = vec![0.1, 0.2, 0.3, 0.4];
        let (lo, hi) = lp_oracle(
            &ProbabilityBounds::new(p.clone(), p).unwrap(),
            &[1.0, 2.0, 3.0, 4.0],
            1,
        )
        .unwrap();
        assert!((lo - 3.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lp_oracle_agrees_with_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let a: Vec<f64> = p.iter().map(|x| x * rng.random::<f64>()).collect();
            let b: Vec<f64> = p
                .iter()
                .map(|x| (x + rng.random::<f64>() * 0.3).min(1.0))
                .collect();
            let e: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let pb = ProbabilityBounds::new(a, b).unwrap();
            for k in 1..=2 {
                let iv = analytic_interval(&pb, &e, k).unwrap();
                let (lo, hi) = lp_oracle(&pb, &e, k).unwrap();
                assert!((iv.lo - lo).abs() < 1e-9 && (iv.hi - hi).abs() < 1e-9);
            }
        }
    }

    fn measured_instance(seed: u64, n: usize) -> (Vec<f64>, FeasibleSet, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = eig_hermitian(&random_hermitian(n, &mut rng)).unwrap();
        let basis = ProjectiveBasis::new(
            random_unitary(n, &mut rng),
            (0..n).map(|i| i.to_string()).collect(),
        )
        .unwrap();
        let o = vec![Overlaps::new(&basis.into(), &spec).unwrap()];
        let es = EnergyState::new(&State::Pure(random_state(n, &mut rng)), &spec).unwrap();
        let pb = sweep_overlaps(
            &es,
            spec.values(),
            &o,
            &[0.0, 0.4, 1.1],
            TargetDynamics::Conserved,
        )
        .unwrap();
        let quads = quadratic_forms(&o, &pb).unwrap();
        let mean = es.moment(spec.values(), 1);
        (
            spec.values().to_vec(),
            FeasibleSet::new(pb, quads).unwrap(),
            mean,
        )
    }

    #[test]
    fn nested_and_valid_on_measured_instances() {
        for seed in 0..20 {
            let (e, set, mean) = measured_instance(seed, 5);
            let t = constrained_interval(&set, &e, 1, &OptimizerSettings::default()).unwrap();
            let tol = 1e-6;
            assert!(t.linear.lo <= t.lo + 1e-12 && t.hi <= t.linear.hi + 1e-12);
            assert!(
                t.lo <= mean + tol && mean <= t.hi + tol,
                "seed {seed}: {} {} {}",
                t.lo,
                mean,
                t.hi
            );
            assert!(
                set.residual(
                    &t.lower_distribution
                        .iter()
                        .map(|p| p.sqrt())
                        .collect::<Vec<_>>()
                ) < tol
            );
        }
    }

    #[test]
    fn deterministic_across_threads() {
        let (e, set, _) = measured_instance(3, 6);
        let s = OptimizerSettings::default();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let x = one.install(|| constrained_interval(&set, &e, 1, &s).unwrap());
        let y = many.install(|| constrained_interval(&set, &e, 1, &s).unwrap());
        assert_eq!(x, y);
    }

    #[test]
    fn random_starts_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = [0.1, 0.0, 0.2, 0.05];
        let b = [0.5, 0.3, 0.9, 0.4];
        for _ in 0..100 {
            let p = random_feasible(&a, &b, &mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p
                .iter()
                .zip(a.iter().zip(&b))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi + 1e-15));
        }
    }

    #[test]
    fn settings_validation() {
        let s = OptimizerSettings {
            constraint_tolerance: 0.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        assert!(OptimizerSettings::default().validate().is_ok());
    }
}

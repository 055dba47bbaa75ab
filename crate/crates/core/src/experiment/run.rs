use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    ExperimentConfig, MeasurementConfig, ModelConfig, Seeds, StateConfig, TimeConfig,
};
use crate::bounds::{
    analytic_interval, extremes, join, quadratic_forms, quality_factors, uniform_grid, EnergyState,
    Overlaps, ProbabilityBounds, QualityFactors,
};
use crate::error::{Error, Result};
use crate::estimator::{constrained_interval, FeasibleSet, OptimizerSettings};
use crate::measurements::{
    coarse_energy_povm, computational_basis, klocal_ground_state_basis,
    klocal_observable_basis_type1, klocal_observable_basis_type2, observational_entropy,
    restrict_to_sector, Measurement, ProjectiveBasis,
};
use crate::models::{build_hamiltonian, sector_basis, ModelSpec, SectorKind, SymmetrySector};
use crate::spectral::{eig_hermitian, HermitianOperator, Spectrum, State, StateVector, C64};
use crate::states::{ground_state, haar_random, pure_thermal};

/// The target, its spectrum and where it lives.
pub struct System {
    pub spec: Option<ModelSpec>,
    pub sector: Option<SymmetrySector>,
    pub spectrum: Spectrum,
}

impl System {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        match &config.model {
            ModelConfig::Diagonal { energies } => Ok(Self {
                spec: None,
                sector: None,
                spectrum: eig_hermitian(&HermitianOperator::diagonal(energies))?,
            }),
            model => {
                let spec = model.spec(config.seeds.disorder).expect("chain model");
                let sector = sector_basis(spec.length, config.sector)?;
                let spectrum = eig_hermitian(&build_hamiltonian(&spec, &sector)?)?;
                Ok(Self {
                    spec: Some(spec),
                    sector: Some(sector),
                    spectrum,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn chain(&self) -> Result<(&ModelSpec, &SymmetrySector)> {
        match (&self.spec, &self.sector) {
            (Some(spec), Some(sector)) => Ok((spec, sector)),
            _ => Err(Error::Config(
                "k-local measurements need a chain model".into(),
            )),
        }
    }
}

/// Expands the configured states, bloch grids included, with their labels.
pub fn prepare_states(
    config: &ExperimentConfig,
    system: &System,
) -> Result<Vec<(String, StateVector)>> {
    let spectrum = &system.spectrum;
    let mut out = Vec::new();
    let mut haar_index = 0u64;
    for s in &config.states {
        match s {
            StateConfig::Ground { label } => {
                out.push((
                    label.clone().unwrap_or_else(|| "G".into()),
                    ground_state(spectrum)?,
                ));
            }
            StateConfig::PureThermal { beta, label } => {
                out.push((
                    label.clone().unwrap_or_else(|| "C".into()),
                    pure_thermal(spectrum, *beta)?,
                ));
            }
            StateConfig::Haar { seed, label } => {
                let seed = seed.unwrap_or(config.seeds.haar.wrapping_add(haar_index));
                haar_index += 1;
                out.push((
                    label.clone().unwrap_or_else(|| "H".into()),
                    haar_random(system.dim(), seed)?,
                ));
            }
            StateConfig::Bloch { theta, phi, label } => {
                let name = label
                    .clone()
                    .unwrap_or_else(|| format!("bloch(theta={theta},phi={phi})"));
                out.push((name, bloch(*theta, *phi)?));
            }
            StateConfig::BlochGrid {
                theta_points,
                phi_points,
            } => {
                for i in 0..*theta_points {
                    let theta = if *theta_points > 1 {
                        i as f64 * PI / (*theta_points - 1) as f64
                    } else {
                        0.0
                    };
                    for j in 0..*phi_points {
                        let phi = 2.0 * PI * j as f64 / *phi_points as f64;
                        out.push((format!("bloch[{i},{j}]"), bloch(theta, phi)?));
                    }
                }
            }
            StateConfig::Amplitudes { re, im, label } => {
                let v = DVector::from_iterator(
                    re.len(),
                    re.iter()
                        .enumerate()
                        .map(|(j, &x)| C64::new(x, im.get(j).copied().unwrap_or(0.0))),
                );
                let name = label.clone().unwrap_or_else(|| format!("psi{}", out.len()));
                out.push((name, StateVector::normalized(v)?));
            }
        }
    }
    Ok(out)
}

fn bloch(theta: f64, phi: f64) -> Result<StateVector> {
    StateVector::new(DVector::from_vec(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]))
}

/// `H^{⊗m}` with outcome labels made of `+` and `-`.
fn x_basis(sites: usize) -> Result<ProjectiveBasis> {
    let h = 0.5f64.sqrt();
    let single = DMatrix::from_row_slice(2, 2, &[h, h, h, -h]).map(|x| C64::new(x, 0.0));
    let mut rows = DMatrix::identity(1, 1);
    for _ in 0..sites {
        rows = rows.kronecker(&single);
    }
    let labels = (0..1usize << sites)
        .map(|i| {
            (0..sites)
                .map(|s| {
                    if (i >> (sites - 1 - s)) & 1 == 1 {
                        '-'
                    } else {
                        '+'
                    }
                })
                .collect()
        })
        .collect();
    ProjectiveBasis::new(rows, labels)
}

/// Builds every configured measurement in the target's space.
pub fn prepare_measurements(
    config: &ExperimentConfig,
    system: &System,
) -> Result<Vec<Measurement>> {
    let needs_full_h = config
        .measurements
        .iter()
        .any(|m| matches!(m, MeasurementConfig::ObsOpt2 { .. }));
    let h_full = match (&system.spec, needs_full_h) {
        (Some(spec), true) => Some(
            build_hamiltonian(spec, &sector_basis(spec.length, SectorKind::Full)?)?.into_matrix(),
        ),
        _ => None,
    };
    config
        .measurements
        .par_iter()
        .map(|m| -> Result<Measurement> {
            Ok(match *m {
                MeasurementConfig::Computational {} => match &system.sector {
                    Some(sector) => computational_basis(sector).into(),
                    None => ProjectiveBasis::identity(system.dim()).into(),
                },
                MeasurementConfig::GsOpt { k } => {
                    let (spec, sector) = system.chain()?;
                    let gs = ground_state(&system.spectrum)?;
                    let full = StateVector::new(sector.embed(gs.amplitudes()))?;
                    restrict_to_sector(&klocal_ground_state_basis(&full, spec.length, k)?, sector)?
                        .into()
                }
                MeasurementConfig::ObsOpt1 { k } => {
                    let (spec, sector) = system.chain()?;
                    klocal_observable_basis_type1(spec, sector, k)?.into()
                }
                MeasurementConfig::ObsOpt2 { k } => {
                    let (spec, sector) = system.chain()?;
                    let h = h_full.as_ref().expect("built above");
                    restrict_to_sector(&klocal_observable_basis_type2(h, spec.length, k)?, sector)?
                        .into()
                }
                MeasurementConfig::Coarse { delta_e } => {
                    coarse_energy_povm(&system.spectrum, delta_e)?.into()
                }
                MeasurementConfig::XBasis {} => match &system.sector {
                    Some(sector) => restrict_to_sector(&x_basis(sector.length())?, sector)?.into(),
                    None => x_basis(system.dim().trailing_zeros() as usize)?.into(),
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightResult {
    pub lo: f64,
    pub hi: f64,
    pub contains_true: bool,
    pub degraded: bool,
    pub clamped: bool,
    pub residual: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentResult {
    pub moment: u32,
    pub true_value: f64,
    pub linear: Bracket,
    pub tight: Option<TightResult>,
    /// Only for the first moment.
    pub quality_linear: Option<QualityFactors>,
    pub quality_tight: Option<QualityFactors>,
}

/// Results for one (state, measurement set) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub case: usize,
    pub state: String,
    pub measurements: Vec<String>,
    pub moments: Vec<MomentResult>,
    #[serde(skip)]
    pub bounds: ProbabilityBounds,
}

/// Observational entropy of one measurement along the time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRecord {
    pub state: String,
    pub measurement: String,
    pub initial: f64,
    pub minimum: f64,
    pub time_of_minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config: ExperimentConfig,
    pub sector: String,
    pub dim: usize,
    pub seeds: Seeds,
    pub time: TimeConfig,
    pub disorder_fields: Vec<f64>,
    pub optimizer: Option<OptimizerSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub provenance: Provenance,
    pub spectrum: Vec<f64>,
    pub records: Vec<ResultRecord>,
    pub entropy: Vec<EntropyRecord>,
}

impl Summary {
    /// Per-eigenvector bound table, one block of rows per record.
    pub fn bounds_csv(&self) -> String {
        let mut out = String::from("record,l,E_l,a_max,b_min\n");
        for r in &self.records {
            for (l, e) in self.spectrum.iter().enumerate() {
                writeln!(
                    out,
                    "{},{l},{},{},{}",
                    r.case,
                    fmt_float(*e),
                    fmt_float(r.bounds.a_max()[l]),
                    fmt_float(r.bounds.b_min()[l])
                )
                .expect("write to string");
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Writes `summary.json` and `bounds.csv` into `<dir>/<name>/` and
    /// returns that directory.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let target = dir.join(&self.name);
        std::fs::create_dir_all(&target)?;
        std::fs::write(target.join("summary.json"), self.to_json()? + "\n")?;
        std::fs::write(target.join("bounds.csv"), self.bounds_csv())?;
        Ok(target)
    }
}

/// 17 significant digits; `-0` prints as `0`.
fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn slack(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    1e-8 * scale
}

/// Validates `config`, runs every (state, measurement set) case and returns
/// the assembled summary. Output is independent of the thread count.
pub fn run(config: &ExperimentConfig) -> Result<Summary> {
    let issues = config.validate();
    if !issues.is_empty() {
        let list: Vec<String> = issues.iter().map(ToString::to_string).collect();
        return Err(Error::Config(list.join("; ")));
    }
    let system = System::build(config)?;
    let states = prepare_states(config, &system)?;
    let measurements = prepare_measurements(config, &system)?;
    let labels: Vec<String> = config
        .measurements
        .iter()
        .map(MeasurementConfig::label)
        .collect();
    let overlaps = measurements
        .par_iter()
        .map(|m| Overlaps::new(m, &system.spectrum))
        .collect::<Result<Vec<_>>>()?;
    let energy_states = states
        .iter()
        .map(|(_, s)| EnergyState::new(&State::Pure(s.clone()), &system.spectrum))
        .collect::<Result<Vec<_>>>()?;

    let times = uniform_grid(
        config.time.total,
        config.time.points,
        config.time.include_end,
    );
    let values = system.spectrum.values();
    let settings = config
        .estimator
        .enabled
        .then(|| config.estimator.settings(config.seeds.optimizer));
    let sets = config.measurement_sets.sets(measurements.len());
    let cases: Vec<(usize, &Vec<usize>)> = (0..states.len())
        .flat_map(|s| sets.iter().map(move |set| (s, set)))
        .collect();

    // each measurement is swept once per state; sets only join the results
    let pairs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|s| (0..measurements.len()).map(move |m| (s, m)))
        .collect();
    let swept = pairs
        .par_iter()
        .map(|&(s, m)| -> Result<_> {
            let probs = overlaps[m].probabilities_over_time(&energy_states[s], values, &times)?;
            Ok((extremes(&overlaps[m], &probs), probs))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_state = measurements.len();

    let records = cases
        .par_iter()
        .enumerate()
        .map(|(case, &(s, set))| -> Result<ResultRecord> {
            let names: Vec<String> = set.iter().map(|&m| labels[m].clone()).collect();
            let instance = || {
                format!(
                    "record {case} (state {}, measurements [{}])",
                    states[s].0,
                    names.join(", ")
                )
            };
            let chosen: Vec<Overlaps> = set.iter().map(|&m| overlaps[m].clone()).collect();
            let es = &energy_states[s];
            let parts: Vec<_> = set.iter().map(|&m| &swept[s * per_state + m].0).collect();
            let bounds =
                join(&parts).map_err(|e| Error::Infeasible(format!("{}: {e}", instance())))?;
            let feasible = match &settings {
                Some(st) => {
                    let quads = if st.include_quadratic {
                        quadratic_forms(&chosen, &bounds)?
                    } else {
                        Vec::new()
                    };
                    Some(FeasibleSet::new(bounds.clone(), quads)?)
                }
                None => None,
            };
            let mut moments = Vec::with_capacity(config.moments.len());
            for &k in &config.moments {
                let truth = es.moment(values, k);
                let linear = analytic_interval(&bounds, values, k)?;
                let tol = slack(&crate::bounds::moment_values(values, k));
                if truth < linear.lo - tol || truth > linear.hi + tol {
                    return Err(Error::Infeasible(format!(
                        "{}: true moment {truth} outside [{}, {}]",
                        instance(),
                        linear.lo,
                        linear.hi
                    )));
                }
                let tight = match (&feasible, &settings) {
                    (Some(set), Some(st)) => {
                        let t = constrained_interval(set, values, k, st)?;
                        let ctol = tol
                            .max(st.constraint_tolerance * (linear.hi - linear.lo).abs().max(1.0));
                        Some(TightResult {
                            lo: t.lo,
                            hi: t.hi,
                            contains_true: truth >= t.lo - ctol && truth <= t.hi + ctol,
                            degraded: t.degraded(),
                            clamped: t.lower.clamped || t.upper.clamped,
                            residual: t.lower.residual.max(t.upper.residual),
                            evaluations: t.lower.evaluations + t.upper.evaluations,
                        })
                    }
                    _ => None,
                };
                let quality = |lo: f64, hi: f64| {
                    (k == 1)
                        .then(|| quality_factors(lo, hi, values).ok())
                        .flatten()
                };
                moments.push(MomentResult {
                    moment: k,
                    true_value: truth,
                    linear: Bracket {
                        lo: linear.lo,
                        hi: linear.hi,
                    },
                    quality_linear: quality(linear.lo, linear.hi),
                    quality_tight: tight.as_ref().and_then(|t| quality(t.lo, t.hi)),
                    tight,
                });
            }
            Ok(ResultRecord {
                case,
                state: states[s].0.clone(),
                measurements: names,
                moments,
                bounds,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let entropy = pairs
        .iter()
        .zip(&swept)
        .map(|(&(s, m), (_, probs))| {
            let volumes = measurements[m].volumes();
            let mut initial = f64::NAN;
            let (mut minimum, mut time_of_minimum) = (f64::INFINITY, 0.0);
            for (j, &t) in times.iter().enumerate() {
                let p: Vec<f64> = probs.column(j).iter().copied().collect();
                let h = observational_entropy(&p, &volumes);
                if j == 0 {
                    initial = h;
                }
                if h < minimum {
                    minimum = h;
                    time_of_minimum = t;
                }
            }
            EntropyRecord {
                state: states[s].0.clone(),
                measurement: labels[m].clone(),
                initial,
                minimum,
                time_of_minimum,
            }
        })
        .collect();

    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        sector: match &system.sector {
            Some(s) => s.kind().to_string(),
            None => "full".into(),
        },
        dim: system.dim(),
        seeds: config.seeds,
        time: config.time.clone(),
        disorder_fields: system
            .spec
            .as_ref()
            .map(ModelSpec::disorder_fields)
            .unwrap_or_default(),
        optimizer: settings,
    };
    Ok(Summary {
        name: config.name.clone(),
        provenance,
        spectrum: values.to_vec(),
        records,
        entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
name = "toy"
[model]
kind = "diagonal"
energies = [0.0, 1.0, 2.0, 2.5, 3.0, 3.3, 3.7, 4.0]
[[states]]
kind = "amplitudes"
re = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]
[[measurements]]
method = "coarse"
delta_e = 1.0
[time]
total = 0.0
points = 1
[estimator]
enabled = true
"#;

    const CHAIN: &str = r#"
name = "chain"
[model]
kind = "heisenberg"
length = 4
disorder = 2.0
[sector]
kind = "spin-z"
particles = 2
[[states]]
kind = "ground"
[[states]]
kind = "haar"
[[states]]
kind = "haar"
[[measurements]]
method = "computational"
[[measurements]]
method = "gs-opt"
k = 2
[[measurements]]
method = "obs-opt-1"
k = 4
[time]
total = 10.0
points = 21
[seeds]
disorder = 3
haar = 5
"#;

    #[test]
    fn coarse_toy_intervals() {
        let s = run(&ExperimentConfig::from_toml(TOY).unwrap()).unwrap();
        let m = &s.records[0].moments[0];
        assert!((m.true_value - 2.5).abs() < 1e-12);
        assert!((m.linear.lo - 2.25).abs() < 1e-9 && (m.linear.hi - 3.5).abs() < 1e-9);
        let t = m.tight.as_ref().unwrap();
        assert!(
            (t.lo - 2.5).abs() < 1e-3 && (t.hi - 3.1).abs() < 1e-3,
            "{t:?}"
        );
        assert!(t.contains_true && !t.degraded);
    }

    #[test]
    fn plus_state_is_identified() {
        let text = r#"
name = "q"
[model]
kind = "diagonal"
energies = [1.0, -1.0]
[[states]]
kind = "bloch"
theta = 1.5707963267948966
phi = 0.0
[[measurements]]
method = "x-basis"
[time]
points = 1
"#;
        let s = run(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
        let q = s.records[0].moments[0].quality_linear.unwrap();
        assert!((q.q1 - 100.0).abs() < 1e-9);
    }

    #[test]
    fn cumulative_sets_nest_and_contain_truth() {
        let s = run(&ExperimentConfig::from_toml(CHAIN).unwrap()).unwrap();
        assert_eq!(s.records.len(), 9);
        for state in s.records.chunks(3) {
            let widths: Vec<f64> = state
                .iter()
                .map(|r| r.moments[0].linear.hi - r.moments[0].linear.lo)
                .collect();
            assert!(
                widths.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "{widths:?}"
            );
            for r in state {
                let m = &r.moments[0];
                assert!(m.linear.lo - 1e-9 <= m.true_value && m.true_value <= m.linear.hi + 1e-9);
            }
        }
        // the block-exact basis identifies every state
        for r in s.records.iter().skip(2).step_by(3) {
            let m = &r.moments[0];
            assert!(m.linear.hi - m.linear.lo < 1e-8, "{:?}", m.linear);
        }
    }

    #[test]
    fn default_haar_seeds_are_distinct() {
        let c = ExperimentConfig::from_toml(CHAIN).unwrap();
        let states = prepare_states(&c, &System::build(&c).unwrap()).unwrap();
        assert_eq!(
            states.iter().map(|s| s.0.as_str()).collect::<Vec<_>>(),
            ["G", "H", "H"]
        );
        assert_ne!(states[1].1, states[2].1);
    }

    #[test]
    fn reruns_are_identical() {
        let c = ExperimentConfig::from_toml(CHAIN).unwrap();
        let (a, b) = (run(&c).unwrap(), run(&c).unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.bounds_csv(), b.bounds_csv());
    }

    #[test]
    fn csv_layout() {
        let s = run(&ExperimentConfig::from_toml(TOY).unwrap()).unwrap();
        let csv = s.bounds_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "record,l,E_l,a_max,b_min");
        assert_eq!(lines.len(), 1 + 8);
        assert!(lines[1].starts_with("0,0,0.0000000000000000e0,"));
        assert_eq!(fmt_float(-0.0), "0.0000000000000000e0");
        for line in &lines[1..] {
            for field in line.split(',').skip(2) {
                let mantissa = field.split('e').next().unwrap();
                assert_eq!(mantissa.replace(['-', '.'], "").len(), 17, "{field}");
            }
        }
    }

    #[test]
    fn invalid_config_is_a_config_error() {
        let bad = CHAIN.replace("k = 2", "k = 3");
        let err = run(&ExperimentConfig::from_toml(&bad).unwrap()).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("k=3")),
            "{err}"
        );
    }

    #[test]
    fn writes_both_files() {
        let s = run(&ExperimentConfig::from_toml(TOY).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = s.write(dir.path()).unwrap();
        assert_eq!(out, dir.path().join("toy"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(json["provenance"]["dim"], 8);
        assert!(out.join("bounds.csv").exists());
    }
}

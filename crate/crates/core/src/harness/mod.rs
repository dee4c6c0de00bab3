//! Monte Carlo NMSE experiments over distance, bandwidth, SNR and pilot
//! sweeps.

mod config;
mod output;

pub use config::{ExperimentConfig, Preset, Sweep, SweepAxis};
pub use output::{
    emit_results, emit_trials, parse_results, parse_trials, read_results, write_results,
    write_trials, OutputFormat, ResultRow, TrialRecord,
};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{generate_channel, sample_paths, SystemConfig, WidebandChannel};
use crate::dictionary::{
    build_dictionary, build_far_field_dictionary, build_grid, PolarDictionary, PolarGrid,
};
use crate::estimators::{
    estimate_angle_omp, estimate_angle_somp, estimate_bpd, estimate_bspd, estimate_ls,
    estimate_polar_omp, estimate_polar_somp, nmse_linear, to_db, EstimateReport, Estimator,
};
use crate::measurement::{
    observe, sample_combiners, sigma_for_snr_with, MeasurementEnsemble, ObservationSet,
    SparseProblem, Whitener,
};
use crate::pattern::{build_pattern_tables, PatternTables};
use crate::{Error, Result};

/// Relative tolerance on residual growth between greedy iterations.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-9;
/// Tolerance on the relative correlation between the final residual and the
/// selected columns.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

const STREAM_PATHS: u64 = 0;
const STREAM_COMBINERS: u64 = 1;
const STREAM_NOISE: u64 = 2;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at sweep point `point`.
pub fn trial_seed(seed: u64, point: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ point as u64) ^ trial as u64)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Dictionaries shared by every point of a sweep.
#[derive(Debug)]
pub struct Dictionaries {
    pub grid: PolarGrid,
    pub polar: PolarDictionary,
    pub far: PolarDictionary,
}

impl Dictionaries {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let system = cfg.system()?;
        let grid = build_grid(&system, cfg.num_angles, cfg.num_rings, cfg.beta)?;
        Ok(Self {
            polar: build_dictionary(&system, &grid),
            far: build_far_field_dictionary(&system, &grid),
            grid,
        })
    }
}

/// Everything a trial at one sweep point reads but never modifies.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: ExperimentConfig,
    pub system: SystemConfig,
    pub dictionaries: Arc<Dictionaries>,
    pub tables: Arc<PatternTables>,
}

impl Workspace {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Self::with_dictionaries(config, Arc::new(Dictionaries::build(config)?))
    }

    /// Reuses dictionaries built for a configuration with the same array and
    /// grid.
    pub fn with_dictionaries(config: &ExperimentConfig, dictionaries: Arc<Dictionaries>) -> Result<Self> {
        config.validate()?;
        let system = config.system()?;
        let tables = Arc::new(build_pattern_tables(&system, &dictionaries.grid));
        Ok(Self {
            config: config.clone(),
            system,
            dictionaries,
            tables,
        })
    }
}

/// One realization: paths, channel, combiners and noisy observations.
#[derive(Debug, Clone)]
pub struct Realization {
    pub channel: WidebandChannel,
    pub ensemble: MeasurementEnsemble,
    pub observations: ObservationSet,
    pub sigma: f64,
}

pub fn draw_realization(ws: &Workspace, seed: u64) -> Result<Realization> {
    let cfg = &ws.config;
    let mut paths_rng = stream(seed, STREAM_PATHS);
    let mut combiner_rng = stream(seed, STREAM_COMBINERS);
    let mut noise_rng = stream(seed, STREAM_NOISE);
    let paths = sample_paths(
        &ws.system,
        cfg.num_paths,
        cfg.r_min,
        cfg.r_max,
        cfg.gain_model,
        &mut paths_rng,
    )?;
    let channel = generate_channel(&ws.system, &paths);
    let ensemble = sample_combiners(&ws.system, cfg.pilots, cfg.rf_chains, cfg.combiner, &mut combiner_rng)?;
    let sigma = sigma_for_snr_with(&ensemble, &channel, cfg.snr_db, cfg.snr_reference)?;
    let observations = observe(&ensemble, &channel, sigma, &mut noise_rng)?;
    Ok(Realization {
        channel,
        ensemble,
        observations,
        sigma,
    })
}

/// Runs one estimator on a prepared realization.
pub fn run_estimator<'a>(
    ws: &Workspace,
    estimator: Estimator,
    realization: &Realization,
    polar: Option<&'a SparseProblem<'a>>,
    far: Option<&'a SparseProblem<'a>>,
) -> Result<EstimateReport> {
    let l_hat = ws.config.max_paths;
    let need = |p: Option<&'a SparseProblem<'a>>| {
        p.ok_or_else(|| Error::Invariant(format!("{estimator} needs its whitened problem")))
    };
    match estimator {
        Estimator::Ls => estimate_ls(&realization.ensemble, &realization.observations),
        Estimator::Bpd => estimate_bpd(need(polar)?, &ws.tables, l_hat),
        Estimator::PolarSomp => estimate_polar_somp(need(polar)?, l_hat),
        Estimator::PolarOmp => estimate_polar_omp(need(polar)?, l_hat),
        Estimator::AngleOmp => estimate_angle_omp(need(far)?, l_hat),
        Estimator::AngleSomp => estimate_angle_somp(need(far)?, l_hat),
        Estimator::Bspd => estimate_bspd(need(far)?, &ws.tables, l_hat),
    }
}

/// Per-estimator outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialEntry {
    pub estimator: Estimator,
    pub nmse_linear: f64,
    pub walltime_ms: f64,
    pub residual_growth: f64,
    pub orthogonality: f64,
    pub used_ridge: bool,
}

impl TrialEntry {
    pub fn nmse_db(&self) -> f64 {
        to_db(self.nmse_linear)
    }
}

/// Whether [`run_trial`] fails on greedy invariant violations.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrialOptions {
    pub check_invariants: bool,
}

/// One end-to-end draw; every estimator sees the same channel, combiners and
/// noise.
pub fn run_trial(ws: &Workspace, seed: u64, options: TrialOptions) -> Result<Vec<TrialEntry>> {
    let realization = draw_realization(ws, seed)?;
    let estimators = &ws.config.estimators;
    let needs_polar = estimators.iter().any(|e| *e != Estimator::Ls && !e.uses_far_field());
    let needs_far = estimators.iter().any(|e| e.uses_far_field());
    let whitener = if needs_polar || needs_far {
        Some(Whitener::new(&realization.ensemble)?)
    } else {
        None
    };
    let problem = |dict| {
        SparseProblem::new(
            whitener.as_ref().unwrap(),
            &realization.ensemble,
            &realization.observations,
            dict,
        )
    };
    let polar = needs_polar.then(|| problem(&ws.dictionaries.polar));
    let far = needs_far.then(|| problem(&ws.dictionaries.far));

    let mut entries = Vec::with_capacity(estimators.len());
    for &estimator in estimators {
        let report = run_estimator(ws, estimator, &realization, polar.as_ref(), far.as_ref())?;
        let entry = TrialEntry {
            estimator,
            nmse_linear: nmse_linear(&realization.channel.matrix, &report.channel)?,
            walltime_ms: report.elapsed.map_or(0.0, |d| d.as_secs_f64() * 1e3),
            residual_growth: report.residual_growth(),
            orthogonality: report.orthogonality,
            used_ridge: report.used_ridge,
        };
        if options.check_invariants {
            check_invariants(&entry)?;
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn check_invariants(entry: &TrialEntry) -> Result<()> {
    if entry.residual_growth > MONOTONICITY_TOLERANCE {
        return Err(Error::Invariant(format!(
            "{}: residual grew by {:e}",
            entry.estimator, entry.residual_growth
        )));
    }
    if !entry.used_ridge && entry.orthogonality > ORTHOGONALITY_TOLERANCE {
        return Err(Error::Invariant(format!(
            "{}: residual correlation {:e} with selected columns",
            entry.estimator, entry.orthogonality
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub trial: TrialOptions,
    /// Report mean wall time; off by default so output is reproducible.
    pub timing: bool,
}

/// Worst greedy invariant values seen over a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub estimator_runs: usize,
    pub max_residual_growth: f64,
    pub max_orthogonality: f64,
    pub ridge_runs: usize,
}

impl Diagnostics {
    fn record(&mut self, entry: &TrialEntry) {
        self.estimator_runs += 1;
        self.max_residual_growth = self.max_residual_growth.max(entry.residual_growth);
        if entry.used_ridge {
            self.ridge_runs += 1;
        } else {
            self.max_orthogonality = self.max_orthogonality.max(entry.orthogonality);
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
    pub diagnostics: Diagnostics,
}

/// Runs `cfg.trials` trials at every sweep point and aggregates per
/// estimator. `progress` is called after each point with its index.
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    options: SweepOptions,
    mut progress: impl FnMut(usize, usize),
) -> Result<SweepOutput> {
    cfg.validate()?;
    let (axis, values) = cfg.sweep_points();
    let dictionaries = Arc::new(Dictionaries::build(cfg)?);
    let mut out = SweepOutput::default();

    for (point, &value) in values.iter().enumerate() {
        let point_cfg = cfg.at_point(axis, value)?;
        let ws = Workspace::with_dictionaries(&point_cfg, dictionaries.clone())?;
        let mut per_estimator: Vec<Vec<TrialEntry>> = vec![Vec::new(); cfg.estimators.len()];
        for trial in 0..cfg.trials {
            let seed = trial_seed(cfg.seed, point, trial);
            let entries = run_trial(&ws, seed, options.trial).map_err(|e| Error::Trial {
                point,
                trial,
                source: Box::new(e),
            })?;
            for (slot, entry) in per_estimator.iter_mut().zip(entries) {
                out.diagnostics.record(&entry);
                out.trials.push(TrialRecord {
                    sweep_axis: axis,
                    sweep_value: value,
                    trial,
                    estimator: entry.estimator,
                    nmse_linear: entry.nmse_linear,
                    nmse_db: entry.nmse_db(),
                    walltime_ms: if options.timing { entry.walltime_ms } else { 0.0 },
                });
                slot.push(entry);
            }
        }
        for (estimator, entries) in cfg.estimators.iter().zip(&per_estimator) {
            out.rows.push(aggregate(axis, value, *estimator, entries, options.timing));
        }
        progress(point, values.len());
    }
    Ok(out)
}

pub fn run_sweep(cfg: &ExperimentConfig, options: SweepOptions) -> Result<SweepOutput> {
    run_sweep_with(cfg, options, |_, _| {})
}

/// Mean NMSE is the mean of linear values in dB; the spread is the sample
/// standard deviation of the per-trial dB values.
pub fn aggregate(
    axis: SweepAxis,
    value: f64,
    estimator: Estimator,
    entries: &[TrialEntry],
    timing: bool,
) -> ResultRow {
    let n = entries.len() as f64;
    let mean_linear = entries.iter().map(|e| e.nmse_linear).sum::<f64>() / n;
    let db: Vec<f64> = entries.iter().map(TrialEntry::nmse_db).collect();
    let mean_db = db.iter().sum::<f64>() / n;
    let std = if entries.len() > 1 {
        (db.iter().map(|x| (x - mean_db).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let walltime = if timing {
        entries.iter().map(|e| e.walltime_ms).sum::<f64>() / n
    } else {
        0.0
    };
    ResultRow {
        sweep_axis: axis,
        sweep_value: value,
        estimator,
        nmse_db_mean: to_db(mean_linear),
        nmse_db_std: std,
        trials: entries.len(),
        walltime_ms_mean: walltime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_antennas: 32,
            num_subcarriers: 8,
            num_angles: 32,
            num_rings: 3,
            num_paths: 2,
            max_paths: 4,
            pilots: 4,
            trials: 3,
            seed: 11,
            ..ExperimentConfig::desk_scale()
        }
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for p in 0..10 {
            for t in 0..100 {
                assert!(seen.insert(trial_seed(42, p, t)));
            }
        }
        assert_ne!(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
    }

    #[test]
    fn trials_are_deterministic() {
        let ws = Workspace::new(&tiny()).unwrap();
        let opts = TrialOptions {
            check_invariants: true,
        };
        let a = run_trial(&ws, 5, opts).unwrap();
        let b = run_trial(&ws, 5, opts).unwrap();
        let c = run_trial(&ws, 6, opts).unwrap();
        assert_eq!(a.len(), Estimator::ALL.len());
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(x.nmse_linear, y.nmse_linear);
            assert_ne!(x.nmse_linear, z.nmse_linear);
        }
    }

    #[test]
    fn sweep_aggregates_trials() {
        let mut cfg = tiny();
        cfg.estimators = vec![Estimator::Bpd, Estimator::Ls];
        cfg.sweep = Some(Sweep {
            axis: SweepAxis::Snr,
            values: vec![0.0, 10.0],
        });
        let out = run_sweep(&cfg, SweepOptions::default()).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.trials.len(), 2 * 2 * 3);
        for row in &out.rows {
            let linear: Vec<f64> = out
                .trials
                .iter()
                .filter(|t| t.sweep_value == row.sweep_value && t.estimator == row.estimator)
                .map(|t| t.nmse_linear)
                .collect();
            let mean = linear.iter().sum::<f64>() / linear.len() as f64;
            assert!((to_db(mean) - row.nmse_db_mean).abs() <= 1e-12 * row.nmse_db_mean.abs());
            assert_eq!(row.trials, 3);
            assert_eq!(row.walltime_ms_mean, 0.0);
        }
    }
}

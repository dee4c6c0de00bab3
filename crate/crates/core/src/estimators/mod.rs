//! Channel estimators: least squares, angle- and polar-domain OMP/SOMP,
//! angle-only beam-split pattern detection (BSPD) and bilinear pattern
//! detection (BPD).

pub mod greedy;
pub mod lstsq;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dictionary::GridIndex;
use crate::measurement::{MeasurementEnsemble, ObservationSet, SparseProblem};
use crate::pattern::PatternTables;
use crate::{CMatrix, Error, Result};
use greedy::{AngleMap, BilinearMap, GreedyOutcome, IdentityMap, SupportMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ls,
    AngleOmp,
    AngleSomp,
    Bspd,
    PolarOmp,
    PolarSomp,
    Bpd,
}

impl Estimator {
    pub const ALL: [Estimator; 7] = [
        Estimator::Ls,
        Estimator::AngleOmp,
        Estimator::AngleSomp,
        Estimator::Bspd,
        Estimator::PolarOmp,
        Estimator::PolarSomp,
        Estimator::Bpd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::AngleOmp => "angle_omp",
            Estimator::AngleSomp => "angle_somp",
            Estimator::Bspd => "bspd",
            Estimator::PolarOmp => "polar_omp",
            Estimator::PolarSomp => "polar_somp",
            Estimator::Bpd => "bpd",
        }
    }

    /// Whether the estimator works over the far-field (angle-only) dictionary.
    pub fn uses_far_field(self) -> bool {
        matches!(self, Estimator::AngleOmp | Estimator::AngleSomp | Estimator::Bspd)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

/// Detected supports. `carrier` lists grid samples in selection order and is
/// empty for the per-subcarrier OMP variants and for LS; `per_subcarrier`
/// holds deduplicated sensing-matrix columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SupportSet {
    pub carrier: Vec<GridIndex>,
    pub per_subcarrier: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub channel: CMatrix,
    pub support: SupportSet,
    /// `||R||_F` before and after each greedy iteration (summed over
    /// subcarriers for OMP). Empty for LS.
    pub residual_norms: Vec<f64>,
    /// Worst relative residual correlation with the selected columns.
    pub orthogonality: f64,
    pub used_ridge: bool,
    /// `None` on targets without a monotonic clock.
    pub elapsed: Option<Duration>,
}

impl EstimateReport {
    /// Largest relative growth of the residual between iterations, zero when
    /// it never grows.
    pub fn residual_growth(&self) -> f64 {
        self.residual_norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { w[1] })
            .fold(0.0, f64::max)
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Option<Duration>)> {
    let start = std::time::Instant::now();
    let out = f()?;
    Ok((out, Some(start.elapsed())))
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Option<Duration>)> {
    Ok((f()?, None))
}

/// Minimum-norm least squares `h_m = A^+ y_m` on the raw system.
pub fn estimate_ls(ens: &MeasurementEnsemble, obs: &ObservationSet) -> Result<EstimateReport> {
    let (channel, elapsed) = timed(|| {
        let a = ens.stacked();
        if a.nrows() != obs.raw.nrows() {
            return Err(Error::invalid("observations", "row count differs from combiners"));
        }
        let dim = a.nrows().max(a.ncols()) as f64;
        let svd = a.svd(true, true);
        let largest = svd.singular_values.max();
        let eps = largest * 1e-12 * dim;
        let pinv = svd
            .pseudo_inverse(eps)
            .map_err(|e| Error::Invariant(format!("pseudo-inverse failed: {e}")))?;
        Ok(pinv * &obs.raw)
    })?;
    Ok(EstimateReport {
        estimator: Estimator::Ls,
        channel,
        support: SupportSet::default(),
        residual_norms: Vec::new(),
        orthogonality: 0.0,
        used_ridge: false,
        elapsed,
    })
}

fn check_tables(problem: &SparseProblem, tables: &PatternTables, rings: bool) -> Result<()> {
    let ok = tables.num_angles() == problem.num_angles
        && tables.num_subcarriers() == problem.num_subcarriers()
        && (!rings || tables.num_rings() == problem.num_rings);
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("tables", "shape differs from the dictionary grid"))
    }
}

fn common_support<S: SupportMap>(
    estimator: Estimator,
    problem: &SparseProblem,
    map: &S,
    max_paths: usize,
) -> Result<EstimateReport> {
    let (out, elapsed) = timed(|| greedy::run(&problem.sensing, &problem.observations, map, max_paths))?;
    let na = problem.num_angles;
    let carrier = out
        .selected
        .iter()
        .map(|&c| GridIndex {
            angle: c % na,
            ring: c / na,
        })
        .collect();
    Ok(finish(estimator, problem, out, carrier, elapsed))
}

fn finish(
    estimator: Estimator,
    problem: &SparseProblem,
    out: GreedyOutcome,
    carrier: Vec<GridIndex>,
    elapsed: Option<Duration>,
) -> EstimateReport {
    let channel = greedy::synthesize(problem.synthesis, &out.supports, &out.coefficients);
    EstimateReport {
        estimator,
        channel,
        support: SupportSet {
            carrier,
            per_subcarrier: out.supports,
        },
        residual_norms: out.residual_norms,
        orthogonality: out.orthogonality,
        used_ridge: out.used_ridge,
        elapsed,
    }
}

fn per_subcarrier(
    estimator: Estimator,
    problem: &SparseProblem,
    max_paths: usize,
) -> Result<EstimateReport> {
    let m_count = problem.num_subcarriers();
    let map = IdentityMap(problem.num_atoms());
    let (outs, elapsed) = timed(|| {
        (0..m_count)
            .map(|m| {
                let y = problem.observations.columns(m, 1).into_owned();
                greedy::run(&problem.sensing, &y, &map, max_paths).map_err(|e| match e {
                    Error::LeastSquares { columns, .. } => Error::LeastSquares {
                        subcarrier: m,
                        columns,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut squared = vec![0.0; max_paths + 1];
    let mut merged = GreedyOutcome {
        selected: Vec::new(),
        supports: Vec::with_capacity(m_count),
        coefficients: Vec::with_capacity(m_count),
        residual_norms: Vec::new(),
        orthogonality: 0.0,
        used_ridge: false,
    };
    for out in outs {
        for (acc, r) in squared.iter_mut().zip(&out.residual_norms) {
            *acc += r * r;
        }
        merged.orthogonality = merged.orthogonality.max(out.orthogonality);
        merged.used_ridge |= out.used_ridge;
        merged.supports.extend(out.supports);
        merged.coefficients.extend(out.coefficients);
    }
    merged.residual_norms = squared.into_iter().map(f64::sqrt).collect();
    Ok(finish(estimator, problem, merged, Vec::new(), elapsed))
}

/// Bilinear pattern detection: correlation power is accumulated along both
/// drift tables.
pub fn estimate_bpd(
    problem: &SparseProblem,
    tables: &PatternTables,
    max_paths: usize,
) -> Result<EstimateReport> {
    check_tables(problem, tables, true)?;
    common_support(Estimator::Bpd, problem, &BilinearMap(tables), max_paths)
}

/// Common-support SOMP over the polar dictionary.
pub fn estimate_polar_somp(problem: &SparseProblem, max_paths: usize) -> Result<EstimateReport> {
    common_support(Estimator::PolarSomp, problem, &IdentityMap(problem.num_atoms()), max_paths)
}

/// Independent OMP on every subcarrier over the polar dictionary.
pub fn estimate_polar_omp(problem: &SparseProblem, max_paths: usize) -> Result<EstimateReport> {
    per_subcarrier(Estimator::PolarOmp, problem, max_paths)
}

/// Independent OMP on every subcarrier over the far-field dictionary.
pub fn estimate_angle_omp(problem: &SparseProblem, max_paths: usize) -> Result<EstimateReport> {
    per_subcarrier(Estimator::AngleOmp, problem, max_paths)
}

/// Common-support SOMP over the far-field dictionary.
pub fn estimate_angle_somp(problem: &SparseProblem, max_paths: usize) -> Result<EstimateReport> {
    common_support(Estimator::AngleSomp, problem, &IdentityMap(problem.num_atoms()), max_paths)
}

/// Angle-only pattern detection over the far-field dictionary; only the
/// angle table of `tables` is used.
pub fn estimate_bspd(
    problem: &SparseProblem,
    tables: &PatternTables,
    max_paths: usize,
) -> Result<EstimateReport> {
    check_tables(problem, tables, false)?;
    if problem.num_rings != 1 {
        return Err(Error::invalid("problem", "BSPD needs a single-ring dictionary"));
    }
    common_support(Estimator::Bspd, problem, &AngleMap(tables), max_paths)
}

/// Lowest reported NMSE, standing in for an exact estimate.
pub const NMSE_FLOOR_DB: f64 = -100.0;

/// `||H - H_hat||_F^2 / ||H||_F^2`.
pub fn nmse_linear(truth: &CMatrix, estimate: &CMatrix) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::invalid("estimate", "shape differs from the true channel"));
    }
    let power = truth.norm_squared();
    if power == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let err: f64 = truth
        .iter()
        .zip(estimate.iter())
        .map(|(a, b): (&Complex64, &Complex64)| (a - b).norm_sqr())
        .sum();
    Ok(err / power)
}

/// [`nmse_linear`] in dB, floored at [`NMSE_FLOOR_DB`].
pub fn nmse(truth: &CMatrix, estimate: &CMatrix) -> Result<f64> {
    Ok(to_db(nmse_linear(truth, estimate)?))
}

pub fn to_db(linear: f64) -> f64 {
    if linear <= 0.0 {
        NMSE_FLOOR_DB
    } else {
        (10.0 * linear.log10()).max(NMSE_FLOOR_DB)
    }
}

//! Greedy support detection shared by every pursuit-style estimator.
//!
//! A candidate is a carrier-level grid sample. A [`SupportMap`] says which
//! column of the sensing matrix that candidate occupies on each subcarrier;
//! the engine accumulates correlation power along that path, adds the best
//! candidate to the support and refits every subcarrier by least squares.

use num_complex::Complex64;

use super::lstsq::solve_restricted;
use crate::pattern::PatternTables;
use crate::{CMatrix, CVector, Error, Result};

pub trait SupportMap {
    fn num_candidates(&self) -> usize;
    /// Sensing-matrix column of `candidate` on subcarrier `m`.
    fn column(&self, candidate: usize, m: usize) -> usize;
}

/// Candidate `c` is column `c` on every subcarrier (common support).
#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl SupportMap for IdentityMap {
    fn num_candidates(&self) -> usize {
        self.0
    }

    fn column(&self, candidate: usize, _m: usize) -> usize {
        candidate
    }
}

/// Candidate `ring * N_a + angle` follows both drift tables.
#[derive(Debug, Clone, Copy)]
pub struct BilinearMap<'a>(pub &'a PatternTables);

impl SupportMap for BilinearMap<'_> {
    fn num_candidates(&self) -> usize {
        self.0.num_angles() * self.0.num_rings()
    }

    fn column(&self, candidate: usize, m: usize) -> usize {
        let na = self.0.num_angles();
        self.0.column(candidate % na, candidate / na, m)
    }
}

/// Candidate `angle` follows the angle table only, over a single ring.
#[derive(Debug, Clone, Copy)]
pub struct AngleMap<'a>(pub &'a PatternTables);

impl SupportMap for AngleMap<'_> {
    fn num_candidates(&self) -> usize {
        self.0.num_angles()
    }

    fn column(&self, candidate: usize, m: usize) -> usize {
        self.0.angle(candidate, m)
    }
}

/// Output of one greedy run.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    /// Selected candidates in selection order.
    pub selected: Vec<usize>,
    /// Deduplicated sensing columns per subcarrier.
    pub supports: Vec<Vec<usize>>,
    /// Coefficients aligned with `supports`.
    pub coefficients: Vec<Vec<Complex64>>,
    /// `||R||_F` before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
    /// Largest `||Psi_S^H r_m||_inf / (max_j ||psi_j|| * ||y_m||)` seen.
    pub orthogonality: f64,
    pub used_ridge: bool,
}

/// Step 9: the candidate maximizing `sum_m |U[col(c, m), m]|^2`, skipping
/// `excluded`. Ties go to the lowest candidate index.
pub fn select_candidate<S: SupportMap + ?Sized>(
    correlations: &CMatrix,
    map: &S,
    excluded: &[usize],
) -> Option<(usize, f64)> {
    let m_count = correlations.ncols();
    let mut best: Option<(usize, f64)> = None;
    for c in 0..map.num_candidates() {
        if excluded.contains(&c) {
            continue;
        }
        let mut power = 0.0;
        for m in 0..m_count {
            power += correlations[(map.column(c, m), m)].norm_sqr();
        }
        if best.is_none_or(|(_, p)| power > p) {
            best = Some((c, power));
        }
    }
    best
}

/// Runs `iterations` rounds of correlate, select, refit and residue update on
/// `Y ~ Psi X`.
pub fn run<S: SupportMap + ?Sized>(
    psi: &CMatrix,
    observations: &CMatrix,
    map: &S,
    iterations: usize,
) -> Result<GreedyOutcome> {
    let m_count = observations.ncols();
    if psi.nrows() != observations.nrows() {
        return Err(Error::invalid("observations", "row count differs from sensing matrix"));
    }
    if iterations == 0 {
        return Err(Error::invalid("max_paths", "need at least one iteration"));
    }
    if iterations > map.num_candidates() {
        return Err(Error::invalid(
            "max_paths",
            format!("{iterations} exceeds the {} candidates", map.num_candidates()),
        ));
    }

    let y_norms: Vec<f64> = (0..m_count).map(|m| observations.column(m).norm()).collect();
    let mut residual = observations.clone();
    let mut selected = Vec::with_capacity(iterations);
    let mut supports = vec![Vec::new(); m_count];
    let mut coefficients = vec![Vec::new(); m_count];
    let mut residual_norms = vec![residual.norm()];
    let mut orthogonality: f64 = 0.0;
    let mut used_ridge = false;

    for _ in 0..iterations {
        let correlations = psi.ad_mul(&residual);
        let (best, _) = select_candidate(&correlations, map, &selected)
            .expect("fewer selections than candidates");
        selected.push(best);

        for m in 0..m_count {
            let col = map.column(best, m);
            let support = &mut supports[m];
            if support.contains(&col) && !coefficients[m].is_empty() {
                continue;
            }
            if !support.contains(&col) {
                support.push(col);
            }
            let y = observations.column(m);
            let solution = solve_restricted(psi, support, y.as_slice()).ok_or(Error::LeastSquares {
                subcarrier: m,
                columns: support.len(),
            })?;
            used_ridge |= solution.ridge;

            let mut r = y.into_owned();
            for (&j, &x) in support.iter().zip(&solution.coefficients) {
                r.axpy(-x, &psi.column(j), Complex64::new(1.0, 0.0));
            }
            if !solution.ridge && y_norms[m] > 0.0 {
                orthogonality = orthogonality.max(relative_orthogonality(psi, support, &r, y_norms[m]));
            }
            residual.set_column(m, &r);
            coefficients[m] = solution.coefficients;
        }
        residual_norms.push(residual.norm());
    }

    Ok(GreedyOutcome {
        selected,
        supports,
        coefficients,
        residual_norms,
        orthogonality,
        used_ridge,
    })
}

fn relative_orthogonality(psi: &CMatrix, support: &[usize], r: &CVector, y_norm: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &j in support {
        let col = psi.column(j);
        worst = worst.max(col.dotc(r).norm());
        scale = scale.max(col.norm());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / (scale * y_norm)
    }
}

/// `W_S X_S` for each subcarrier: synthesizes the antenna-domain estimate
/// from sparse coefficients without forming the dense coefficient matrix.
pub fn synthesize(
    synthesis: &CMatrix,
    supports: &[Vec<usize>],
    coefficients: &[Vec<Complex64>],
) -> CMatrix {
    let mut out = CMatrix::zeros(synthesis.nrows(), supports.len());
    for (m, (support, coeffs)) in supports.iter().zip(coefficients).enumerate() {
        let mut col = out.column_mut(m);
        for (&j, &x) in support.iter().zip(coeffs) {
            col.axpy(x, &synthesis.column(j), Complex64::new(1.0, 0.0));
        }
    }
    out
}

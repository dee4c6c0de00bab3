//! Polar-domain (joint angle-distance) sampling grid and dictionaries.
//!
//! Indices are 0-based throughout: angle index `a` in `0..N_a` corresponds to
//! sample `n_a = a + 1` of the usual 1-based notation, likewise for rings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::{approx_array_response, far_field_response, spherical_response, SystemConfig};
use crate::{CMatrix, Error, Result};

/// Sampled angle parameters `theta = sin(angle)` and distance parameters
/// `alpha = cos^2(angle) / (2 r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    thetas: Vec<f64>,
    alphas: Vec<f64>,
    beta: f64,
    aperture: f64,
    wavelength: f64,
}

/// Position of a sample in a [`PolarGrid`], 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridIndex {
    pub angle: usize,
    pub ring: usize,
}

impl PolarGrid {
    pub fn num_angles(&self) -> usize {
        self.thetas.len()
    }

    pub fn num_rings(&self) -> usize {
        self.alphas.len()
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn theta(&self, angle: usize) -> f64 {
        self.thetas[angle]
    }

    pub fn alpha(&self, ring: usize) -> f64 {
        self.alphas[ring]
    }

    /// Physical angle of a sample, radians.
    pub fn angle(&self, angle: usize) -> f64 {
        self.thetas[angle].asin()
    }

    /// Sampled distance `D^2 cos^2 / (2 beta^2 lambda_c n_d)`; zero on the
    /// endfire sample `theta = -1`.
    pub fn distance(&self, ring: usize, angle: usize) -> f64 {
        let cos2 = 1.0 - self.thetas[angle].powi(2);
        self.aperture.powi(2) * cos2
            / (2.0 * self.beta.powi(2) * self.wavelength * (ring + 1) as f64)
    }

    /// Flat column index into the dictionary, distance-major.
    pub fn column(&self, index: GridIndex) -> usize {
        index.ring * self.num_angles() + index.angle
    }

    pub fn index_of_column(&self, column: usize) -> GridIndex {
        GridIndex {
            angle: column % self.num_angles(),
            ring: column / self.num_angles(),
        }
    }

    /// Nearest sample in each domain independently, ties toward the lower
    /// index.
    pub fn locate(&self, theta: f64, alpha: f64) -> GridIndex {
        GridIndex {
            angle: nearest_index(&self.thetas, theta),
            ring: nearest_index(&self.alphas, alpha),
        }
    }
}

/// Index of the entry of `values` closest to `target`, lowest index on ties.
/// Targets outside the sampled range land on the boundary index.
pub fn nearest_index(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        let dist = (v - target).abs();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    best
}

pub fn build_grid(
    cfg: &SystemConfig,
    num_angles: usize,
    num_rings: usize,
    beta: f64,
) -> Result<PolarGrid> {
    if num_angles < 2 {
        return Err(Error::invalid("num_angles", "need at least two angle samples"));
    }
    if num_rings == 0 {
        return Err(Error::invalid("num_rings", "need at least one distance ring"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("{beta} must be positive")));
    }
    let na = num_angles as f64;
    let thetas = (0..num_angles)
        .map(|a| (2.0 * a as f64 - na) / na)
        .collect();
    let aperture = cfg.aperture();
    let wavelength = cfg.wavelength();
    let alphas = (1..=num_rings)
        .map(|nd| beta * beta * wavelength * nd as f64 / (aperture * aperture))
        .collect();
    Ok(PolarGrid {
        thetas,
        alphas,
        beta,
        aperture,
        wavelength,
    })
}

/// Synthesis matrix with one unit-norm atom per grid sample.
#[derive(Debug, Clone)]
pub struct PolarDictionary {
    pub matrix: CMatrix,
    num_angles: usize,
    num_rings: usize,
}

impl PolarDictionary {
    pub fn num_atoms(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn num_angles(&self) -> usize {
        self.num_angles
    }

    pub fn num_rings(&self) -> usize {
        self.num_rings
    }
}

/// Columns are exact spherical-wave responses at the carrier,
/// `a(angle_a, r_{ring, a}, f_c)` at column `ring * N_a + angle`.
///
/// The endfire sample `theta = -1` has zero sampled distance; its atoms use
/// the second-order response at `(theta, alpha_ring)`, which is the limit of
/// the same parametrization.
pub fn build_dictionary(cfg: &SystemConfig, grid: &PolarGrid) -> PolarDictionary {
    let n = cfg.num_antennas();
    let fc = cfg.carrier_freq();
    let na = grid.num_angles();
    let mut matrix = CMatrix::zeros(n, grid.len());
    for ring in 0..grid.num_rings() {
        for angle in 0..na {
            let r = grid.distance(ring, angle);
            let atom = if r > 0.0 {
                spherical_response(cfg, grid.angle(angle), r, fc)
            } else {
                approx_array_response(cfg, grid.theta(angle), grid.alpha(ring), fc)
            };
            matrix.set_column(ring * na + angle, &atom);
        }
    }
    PolarDictionary {
        matrix,
        num_angles: na,
        num_rings: grid.num_rings(),
    }
}

/// Planar-wave dictionary over the angle samples only, used by the
/// angle-domain baselines.
pub fn build_far_field_dictionary(cfg: &SystemConfig, grid: &PolarGrid) -> PolarDictionary {
    let fc = cfg.carrier_freq();
    let mut matrix = CMatrix::zeros(cfg.num_antennas(), grid.num_angles());
    for (angle, &theta) in grid.thetas().iter().enumerate() {
        matrix.set_column(angle, &far_field_response(cfg, theta, fc));
    }
    PolarDictionary {
        matrix,
        num_angles: grid.num_angles(),
        num_rings: 1,
    }
}

/// Largest absolute inner product between distinct unit-norm columns.
pub fn mutual_coherence(matrix: &CMatrix) -> f64 {
    let gram = matrix.ad_mul(matrix);
    let mut worst: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            if i != j {
                worst = worst.max(gram[(i, j)].norm());
            }
        }
    }
    worst
}

const MAGIC: &[u8; 4] = b"PDIC";

/// Writes a complex matrix as: `PDIC`, u32 rows, u32 cols, u32 reserved
/// (zero), then row-major `(f32 re, f32 im)` pairs, all little-endian.
pub fn write_matrix(path: &Path, matrix: &CMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut emit = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));
    let rows = u32::try_from(matrix.nrows())
        .map_err(|_| Error::invalid("rows", "matrix too large for the format"))?;
    let cols = u32::try_from(matrix.ncols())
        .map_err(|_| Error::invalid("cols", "matrix too large for the format"))?;
    emit(MAGIC)?;
    emit(&rows.to_le_bytes())?;
    emit(&cols.to_le_bytes())?;
    emit(&0u32.to_le_bytes())?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let z = matrix[(i, j)];
            emit(&(z.re as f32).to_le_bytes())?;
            emit(&(z.im as f32).to_le_bytes())?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing PDIC header"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(1), word(2));
    if bytes.len() != 16 + rows * cols * 8 {
        return Err(bad("payload size does not match header"));
    }
    let float = |offset: usize| f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let offset = 16 + (i * cols + j) * 8;
        Complex64::new(float(offset) as f64, float(offset + 4) as f64)
    }))
}

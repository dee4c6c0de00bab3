//! Near-field beam split: the coherence function `Xi(gamma, zeta)` and the
//! bilinear support-drift tables.
//!
//! A path at `(theta, alpha)` observed on subcarrier `f_m` correlates best
//! with the polar atom nearest to `(f_m / f_c) * (theta, alpha)`. The tables
//! store that nearest atom for every grid sample and subcarrier.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::SystemConfig;
use crate::dictionary::{nearest_index, PolarGrid};
use crate::quadrature::integrate_adaptive;

const XI_TOLERANCE: f64 = 1e-8;

/// `|int_{-1/2}^{1/2} exp(j 2 pi x gamma - j 2 pi x^2 zeta) dx|`, in [0, 1].
///
/// Even in both arguments; signs are folded before integrating.
pub fn xi(gamma: f64, zeta: f64) -> f64 {
    xi_unfolded(gamma.abs(), zeta.abs())
}

/// [`xi`] without sign folding.
pub fn xi_unfolded(gamma: f64, zeta: f64) -> f64 {
    if gamma == 0.0 && zeta == 0.0 {
        return 1.0;
    }
    let integrand = |x: f64| Complex64::from_polar(1.0, 2.0 * PI * (x * gamma - x * x * zeta));
    integrate_adaptive(integrand, -0.5, 0.5, XI_TOLERANCE)
        .norm()
        .min(1.0)
}

/// Finite-array correlation `|a_bar(theta1, alpha1, f1)^H a_bar(theta2, alpha2, f2)|`
/// of two second-order responses, summed over every element.
pub fn exact_coherence(
    cfg: &SystemConfig,
    theta1: f64,
    alpha1: f64,
    f1: f64,
    theta2: f64,
    alpha2: f64,
    f2: f64,
) -> f64 {
    let n = cfg.num_antennas();
    let d = cfg.spacing();
    let lambda1 = crate::SPEED_OF_LIGHT / f1;
    let ratio = f2 / f1;
    let linear = 2.0 * PI * d / lambda1 * (theta1 - ratio * theta2);
    let quadratic = 2.0 * PI * d * d / lambda1 * (alpha1 - ratio * alpha2);
    let sum: Complex64 = (0..n)
        .map(|i| {
            let delta = cfg.antenna_offset(i);
            Complex64::from_polar(1.0, linear * delta - quadratic * delta * delta)
        })
        .sum();
    sum.norm() / n as f64
}

/// `(gamma, zeta)` arguments of [`xi`] for two parameter pairs, following the
/// finite-array correlation's normalization: `gamma = D / lambda_1 *
/// (theta1 - f2/f1 theta2)`, `zeta = D^2 / lambda_1 * (alpha1 - f2/f1 alpha2)`.
pub fn coherence_arguments(
    cfg: &SystemConfig,
    theta1: f64,
    alpha1: f64,
    f1: f64,
    theta2: f64,
    alpha2: f64,
    f2: f64,
) -> (f64, f64) {
    let lambda1 = crate::SPEED_OF_LIGHT / f1;
    let aperture = cfg.aperture();
    let ratio = f2 / f1;
    (
        aperture / lambda1 * (theta1 - ratio * theta2),
        aperture * aperture / lambda1 * (alpha1 - ratio * alpha2),
    )
}

/// Support-drift maps `Gamma(angle, m)` and `Lambda(ring, m)`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTables {
    num_angles: usize,
    num_rings: usize,
    num_subcarriers: usize,
    angle_map: Vec<usize>,
    ring_map: Vec<usize>,
}

impl PatternTables {
    /// Every subcarrier maps each sample to itself.
    pub fn identity(num_angles: usize, num_rings: usize, num_subcarriers: usize) -> Self {
        let angle_map = (0..num_angles)
            .flat_map(|a| std::iter::repeat_n(a, num_subcarriers))
            .collect();
        let ring_map = (0..num_rings)
            .flat_map(|r| std::iter::repeat_n(r, num_subcarriers))
            .collect();
        Self {
            num_angles,
            num_rings,
            num_subcarriers,
            angle_map,
            ring_map,
        }
    }

    pub fn num_angles(&self) -> usize {
        self.num_angles
    }

    pub fn num_rings(&self) -> usize {
        self.num_rings
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    /// `Gamma(angle, m)`.
    pub fn angle(&self, angle: usize, m: usize) -> usize {
        self.angle_map[angle * self.num_subcarriers + m]
    }

    /// `Lambda(ring, m)`.
    pub fn ring(&self, ring: usize, m: usize) -> usize {
        self.ring_map[ring * self.num_subcarriers + m]
    }

    /// Flat dictionary column that carrier sample `(angle, ring)` occupies on
    /// subcarrier `m`.
    pub fn column(&self, angle: usize, ring: usize, m: usize) -> usize {
        self.ring(ring, m) * self.num_angles + self.angle(angle, m)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.num_angles, self.num_rings, self.num_subcarriers)
    }
}

/// `Gamma(a, m) = argmin_n |theta_n - (f_m / f_c) theta_a|` and the analogue
/// for rings; ties go to the lower index, out-of-range targets clamp.
pub fn build_pattern_tables(cfg: &SystemConfig, grid: &PolarGrid) -> PatternTables {
    let m_count = cfg.num_subcarriers();
    let ratios: Vec<f64> = (0..m_count)
        .map(|m| cfg.subcarrier_freq(m) / cfg.carrier_freq())
        .collect();
    let drift = |samples: &[f64]| -> Vec<usize> {
        samples
            .iter()
            .flat_map(|&s| ratios.iter().map(move |&q| nearest_index(samples, q * s)))
            .collect()
    };
    PatternTables {
        num_angles: grid.num_angles(),
        num_rings: grid.num_rings(),
        num_subcarriers: m_count,
        angle_map: drift(grid.thetas()),
        ring_map: drift(grid.alphas()),
    }
}

//! Spherical-wave wideband channel model for a uniform linear array.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Result, SPEED_OF_LIGHT};

/// Array and OFDM geometry.
///
/// The antenna spacing is fixed to half the carrier wavelength and the
/// aperture is `N * d`. Subcarrier `m` (0-based) sits at
/// `f_c + (2m - M) / (2M) * B`, so for even `M` the subcarrier `M/2` is the
/// carrier itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    num_antennas: usize,
    num_subcarriers: usize,
    carrier_freq: f64,
    bandwidth: f64,
}

impl SystemConfig {
    pub fn new(
        num_antennas: usize,
        num_subcarriers: usize,
        carrier_freq: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::invalid("num_antennas", "must be positive"));
        }
        if num_subcarriers == 0 {
            return Err(Error::invalid("num_subcarriers", "must be positive"));
        }
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(Error::invalid("carrier_freq", "must be finite and positive"));
        }
        if !(bandwidth.is_finite() && bandwidth >= 0.0 && bandwidth < 2.0 * carrier_freq) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must lie in [0, 2 f_c), got {bandwidth}"),
            ));
        }
        Ok(Self {
            num_antennas,
            num_subcarriers,
            carrier_freq,
            bandwidth,
        })
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        Self::new(
            self.num_antennas,
            self.num_subcarriers,
            self.carrier_freq,
            bandwidth,
        )
    }

    pub fn with_subcarriers(&self, num_subcarriers: usize) -> Result<Self> {
        Self::new(
            self.num_antennas,
            num_subcarriers,
            self.carrier_freq,
            self.bandwidth,
        )
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Carrier wavelength `c / f_c`.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Element spacing, half the carrier wavelength.
    pub fn spacing(&self) -> f64 {
        0.5 * self.wavelength()
    }

    /// Array aperture `N * d`.
    pub fn aperture(&self) -> f64 {
        self.num_antennas as f64 * self.spacing()
    }

    /// Fraunhofer distance `2 D^2 / lambda_c`.
    pub fn rayleigh_distance(&self) -> f64 {
        2.0 * self.aperture().powi(2) / self.wavelength()
    }

    pub fn subcarrier_freq(&self, m: usize) -> f64 {
        let big_m = self.num_subcarriers as f64;
        self.carrier_freq + (2.0 * m as f64 - big_m) / (2.0 * big_m) * self.bandwidth
    }

    pub fn subcarrier_freqs(&self) -> Vec<f64> {
        (0..self.num_subcarriers)
            .map(|m| self.subcarrier_freq(m))
            .collect()
    }

    /// Symmetric element offset `n - (N - 1) / 2`; half-integer for even `N`.
    pub fn antenna_offset(&self, n: usize) -> f64 {
        n as f64 - (self.num_antennas as f64 - 1.0) / 2.0
    }
}

/// Complex gain of a path, either shared by all subcarriers or drawn per
/// subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub enum PathGain {
    Constant(Complex64),
    PerSubcarrier(Vec<Complex64>),
}

impl PathGain {
    pub fn at(&self, m: usize) -> Complex64 {
        match self {
            PathGain::Constant(g) => *g,
            PathGain::PerSubcarrier(gains) => gains[m],
        }
    }

    fn scaled(&self, factor: Complex64) -> Self {
        match self {
            PathGain::Constant(g) => PathGain::Constant(g * factor),
            PathGain::PerSubcarrier(gains) => {
                PathGain::PerSubcarrier(gains.iter().map(|g| g * factor).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// One gain per path, constant over subcarriers.
    #[default]
    PerPath,
    /// Independent CN(0, 1) gain on every subcarrier.
    PerSubcarrier,
}

/// One last-hop scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    angle: f64,
    distance: f64,
    gain: PathGain,
}

impl PathComponent {
    /// `angle` in radians within (-pi/2, pi/2), `distance` in meters.
    pub fn new(angle: f64, distance: f64, gain: Complex64) -> Result<Self> {
        Self::with_gain(angle, distance, PathGain::Constant(gain))
    }

    pub fn with_gain(angle: f64, distance: f64, gain: PathGain) -> Result<Self> {
        if !(angle.is_finite() && angle.abs() < FRAC_PI_2) {
            return Err(Error::invalid("angle", format!("{angle} outside (-pi/2, pi/2)")));
        }
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::invalid("distance", format!("{distance} must be positive")));
        }
        Ok(Self {
            angle,
            distance,
            gain,
        })
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn gain(&self) -> &PathGain {
        &self.gain
    }

    /// Angle parameter `sin(angle)`.
    pub fn theta(&self) -> f64 {
        self.angle.sin()
    }

    /// Distance parameter `cos^2(angle) / (2 r)`.
    pub fn alpha(&self) -> f64 {
        self.angle.cos().powi(2) / (2.0 * self.distance)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            angle: self.angle,
            distance: self.distance,
            gain: self.gain.scaled(factor),
        }
    }
}

/// Channel matrix, `N` rows by `M` subcarrier columns.
#[derive(Debug, Clone, PartialEq)]
pub struct WidebandChannel {
    pub matrix: CMatrix,
}

impl WidebandChannel {
    pub fn frobenius_norm_squared(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_squared().sqrt()
    }
}

fn check_antenna(cfg: &SystemConfig, n: usize) -> Result<()> {
    if n >= cfg.num_antennas {
        return Err(Error::invalid(
            "antenna",
            format!("index {n} out of range for {} elements", cfg.num_antennas),
        ));
    }
    Ok(())
}

/// Distance from a scatterer at `(angle, r)` to antenna `n`.
pub fn element_distance(cfg: &SystemConfig, angle: f64, r: f64, n: usize) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("distance", format!("{r} must be positive")));
    }
    check_antenna(cfg, n)?;
    let x = cfg.antenna_offset(n) * cfg.spacing();
    Ok((r * r + x * x - 2.0 * r * x * angle.sin()).sqrt())
}

/// `r^(n) - r` without the cancellation of subtracting two large numbers.
fn path_difference(r: f64, x: f64, sin_angle: f64) -> f64 {
    let rn = (r * r + x * x - 2.0 * r * x * sin_angle).sqrt();
    (x * x - 2.0 * r * x * sin_angle) / (rn + r)
}

/// Exact spherical-wave array response at frequency `f`, unit norm.
pub fn array_response(cfg: &SystemConfig, angle: f64, r: f64, f: f64) -> Result<CVector> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("distance", format!("{r} must be positive")));
    }
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::invalid("frequency", format!("{f} must be positive")));
    }
    Ok(spherical_response(cfg, angle, r, f))
}

pub(crate) fn spherical_response(cfg: &SystemConfig, angle: f64, r: f64, f: f64) -> CVector {
    let n = cfg.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * PI * f / SPEED_OF_LIGHT;
    let d = cfg.spacing();
    let s = angle.sin();
    CVector::from_fn(n, |i, _| {
        let phase = -k * path_difference(r, cfg.antenna_offset(i) * d, s);
        Complex64::from_polar(scale, phase)
    })
}

/// Second-order (Fresnel) approximation of the array response in the
/// `(theta, alpha)` parametrization.
pub fn approx_array_response(cfg: &SystemConfig, theta: f64, alpha: f64, f: f64) -> CVector {
    let n = cfg.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * PI * f / SPEED_OF_LIGHT;
    let d = cfg.spacing();
    CVector::from_fn(n, |i, _| {
        let x = cfg.antenna_offset(i) * d;
        Complex64::from_polar(scale, k * (x * theta - x * x * alpha))
    })
}

/// Planar-wave steering vector at parameter `theta`.
pub fn far_field_response(cfg: &SystemConfig, theta: f64, f: f64) -> CVector {
    approx_array_response(cfg, theta, 0.0, f)
}

/// Synthesizes the wideband channel of a set of paths.
///
/// Column `m` is `sqrt(N / L) * sum_l g_l exp(-j 2 pi r_l / lambda_m) a(angle_l, r_l, f_m)`.
pub fn generate_channel(cfg: &SystemConfig, paths: &[PathComponent]) -> WidebandChannel {
    let n = cfg.num_antennas;
    let m_count = cfg.num_subcarriers;
    let mut matrix = CMatrix::zeros(n, m_count);
    if paths.is_empty() {
        return WidebandChannel { matrix };
    }
    let norm = (n as f64 / paths.len() as f64).sqrt();
    for m in 0..m_count {
        let f = cfg.subcarrier_freq(m);
        let mut column = matrix.column_mut(m);
        for path in paths {
            let delay_phase = -2.0 * PI * f * path.distance / SPEED_OF_LIGHT;
            let coeff = path.gain.at(m) * Complex64::from_polar(norm, delay_phase);
            let response = spherical_response(cfg, path.angle, path.distance, f);
            column.axpy(coeff, &response, Complex64::new(1.0, 0.0));
        }
    }
    WidebandChannel { matrix }
}

/// Draws a circularly-symmetric CN(0, 1) sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random scatterers: angle uniform on the open interval (-pi/2, pi/2),
/// distance uniform on `[r_min, r_max]`, gains CN(0, 1).
pub fn sample_paths<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    count: usize,
    r_min: f64,
    r_max: f64,
    gain_model: GainModel,
    rng: &mut R,
) -> Result<Vec<PathComponent>> {
    if count == 0 {
        return Err(Error::invalid("paths", "at least one path is required"));
    }
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::invalid("r_min", format!("{r_min} must be positive")));
    }
    if !(r_max.is_finite() && r_max >= r_min) {
        return Err(Error::invalid("r_max", format!("{r_max} must be >= r_min")));
    }
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let angle = loop {
            let u: f64 = rng.random();
            let angle = -FRAC_PI_2 + PI * u;
            if angle > -FRAC_PI_2 {
                break angle;
            }
        };
        let u: f64 = rng.random();
        let distance = r_min + (r_max - r_min) * u;
        let gain = match gain_model {
            GainModel::PerPath => PathGain::Constant(complex_normal(rng)),
            GainModel::PerSubcarrier => PathGain::PerSubcarrier(
                (0..cfg.num_subcarriers).map(|_| complex_normal(rng)).collect(),
            ),
        };
        paths.push(PathComponent::with_gain(angle, distance, gain)?);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper_cfg() -> SystemConfig {
        SystemConfig::new(256, 256, 100e9, 10e9).unwrap()
    }

    #[test]
    fn config_geometry() {
        let cfg = paper_cfg();
        assert_relative_eq!(cfg.spacing(), cfg.wavelength() / 2.0);
        assert_eq!(cfg.subcarrier_freq(128), 100e9);
        assert!(cfg.subcarrier_freqs().iter().all(|&f| f > 0.0));
        assert_eq!(cfg.antenna_offset(0), -127.5);
        assert!(SystemConfig::new(4, 4, 1e9, 2e9).is_err());
        assert!(SystemConfig::new(0, 4, 1e9, 1e8).is_err());
    }

    #[test]
    fn element_distance_examples() {
        let cfg = SystemConfig::new(5, 1, 100e9, 0.0).unwrap();
        assert_eq!(element_distance(&cfg, 0.3, 7.5, 2).unwrap(), 7.5);

        // element 256 of a 257-element array with d = 1.5 mm sits 0.192 m
        // from the center
        let x: f64 = 0.192;
        let r: f64 = 10.0;
        let expected = (r * r + x * x).sqrt();
        assert_relative_eq!(expected, 10.00184, epsilon = 1e-5);
        let lambda = 2.0 * x / 128.0;
        let cfg = SystemConfig::new(257, 1, SPEED_OF_LIGHT / lambda, 0.0).unwrap();
        let got = element_distance(&cfg, 0.0, r, 256).unwrap();
        assert_relative_eq!(got, expected, epsilon = 1e-12);

        let far = 1e6;
        let cfg = paper_cfg();
        let x = cfg.antenna_offset(10) * cfg.spacing();
        let got = element_distance(&cfg, 0.4, far, 10).unwrap();
        assert!((got - (far - x * 0.4f64.sin())).abs() < 1e-7);

        assert!(element_distance(&cfg, 0.0, 0.0, 0).is_err());
        assert!(element_distance(&cfg, 0.0, -1.0, 0).is_err());
    }

    #[test]
    fn single_element_response_is_one() {
        let cfg = SystemConfig::new(1, 1, 28e9, 0.0).unwrap();
        let a = array_response(&cfg, 0.7, 3.0, 28e9).unwrap();
        assert_eq!(a.len(), 1);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn response_rejects_bad_inputs() {
        let cfg = paper_cfg();
        assert!(array_response(&cfg, 0.1, 0.0, 1e9).is_err());
        assert!(array_response(&cfg, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn response_converges_to_far_field() {
        let cfg = paper_cfg();
        for &angle in &[-1.2, -0.3, 0.0, 0.5, 1.4] {
            let a = array_response(&cfg, angle, 1e9, cfg.carrier_freq()).unwrap();
            // independent oracle: planar wave exp(j 2 pi delta d sin / lambda)
            let lambda = cfg.wavelength();
            let scale = 1.0 / (cfg.num_antennas() as f64).sqrt();
            for n in 0..cfg.num_antennas() {
                let phase = 2.0 * PI * cfg.antenna_offset(n) * cfg.spacing() * angle.sin() / lambda;
                let expected = Complex64::from_polar(scale, phase);
                assert!((a[n] - expected).norm() < 1e-6, "angle {angle} n {n}");
            }
        }
    }

    #[test]
    fn approx_response_special_cases() {
        let cfg = paper_cfg();
        let f = cfg.carrier_freq();
        let ones = approx_array_response(&cfg, 0.0, 0.0, f);
        let scale = 1.0 / 16.0;
        assert!(ones.iter().all(|z| (z - Complex64::new(scale, 0.0)).norm() < 1e-15));

        let ff = approx_array_response(&cfg, 0.3, 0.0, f);
        assert_eq!(ff, far_field_response(&cfg, 0.3, f));
    }

    #[test]
    fn fresnel_approximation_is_accurate_at_twenty_meters() {
        let cfg = paper_cfg();
        let path = PathComponent::new(PI / 6.0, 20.0, Complex64::new(1.0, 0.0)).unwrap();
        let f = cfg.carrier_freq();
        let exact = array_response(&cfg, path.angle(), path.distance(), f).unwrap();
        let approx = approx_array_response(&cfg, path.theta(), path.alpha(), f);
        let overlap = exact.dotc(&approx).norm();
        assert!(overlap >= 0.95, "overlap {overlap}");
    }

    #[test]
    fn single_unit_path_has_norm_sqrt_n() {
        let cfg = SystemConfig::new(64, 8, 100e9, 10e9).unwrap();
        let path = PathComponent::new(0.2, 12.0, Complex64::new(1.0, 0.0)).unwrap();
        let h = generate_channel(&cfg, &[path]);
        for m in 0..8 {
            assert_relative_eq!(h.matrix.column(m).norm(), 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn opposite_gains_cancel() {
        let cfg = SystemConfig::new(32, 4, 100e9, 10e9).unwrap();
        let g = Complex64::new(0.3, -1.1);
        let a = PathComponent::new(-0.4, 8.0, g).unwrap();
        let b = PathComponent::new(-0.4, 8.0, -g).unwrap();
        let h = generate_channel(&cfg, &[a, b]);
        assert!(h.frobenius_norm() < 1e-12);
    }

    #[test]
    fn average_column_power_is_n() {
        // Monte Carlo estimate of E ||h_m||^2 with six CN(0,1) paths.
        let cfg = SystemConfig::new(64, 4, 100e9, 10e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 500;
        let mut acc = 0.0;
        for _ in 0..draws {
            let paths = sample_paths(&cfg, 6, 10.0, 30.0, GainModel::PerPath, &mut rng).unwrap();
            let h = generate_channel(&cfg, &paths);
            acc += h.matrix.column(1).norm_squared();
        }
        let mean = acc / draws as f64;
        assert!((mean - 64.0).abs() < 6.4, "mean {mean}");
    }

    #[test]
    fn sampler_contracts() {
        let cfg = SystemConfig::new(16, 4, 100e9, 10e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = sample_paths(&cfg, 20, 10.0, 10.0, GainModel::PerPath, &mut rng).unwrap();
        assert!(paths.iter().all(|p| p.distance() == 10.0));

        let a = sample_paths(&cfg, 5, 5.0, 50.0, GainModel::PerPath, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_paths(&cfg, 5, 5.0, 50.0, GainModel::PerPath, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);

        assert!(sample_paths(&cfg, 5, 0.0, 5.0, GainModel::PerPath, &mut rng).is_err());
        assert!(sample_paths(&cfg, 5, 6.0, 5.0, GainModel::PerPath, &mut rng).is_err());

        let per_sc = sample_paths(&cfg, 2, 5.0, 6.0, GainModel::PerSubcarrier, &mut rng).unwrap();
        assert!(matches!(per_sc[0].gain(), PathGain::PerSubcarrier(g) if g.len() == 4));
    }

    #[test]
    fn sine_of_angles_is_centered() {
        let cfg = SystemConfig::new(4, 1, 100e9, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let paths = sample_paths(&cfg, 10_000, 1.0, 2.0, GainModel::PerPath, &mut rng).unwrap();
        let mean = paths.iter().map(|p| p.theta()).sum::<f64>() / paths.len() as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!(paths.iter().all(|p| p.theta().abs() < 1.0 && p.alpha() > 0.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn response_has_unit_norm(angle in -1.5f64..1.5, r in 0.5f64..500.0, f in 50e9f64..150e9) {
                let cfg = SystemConfig::new(128, 1, 100e9, 0.0).unwrap();
                let a = array_response(&cfg, angle, r, f).unwrap();
                prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn fresnel_overlap_in_operating_regime(angle in -1.2f64..1.2, r in 5.0f64..200.0) {
                let cfg = SystemConfig::new(256, 1, 100e9, 0.0).unwrap();
                let p = PathComponent::new(angle, r, Complex64::new(1.0, 0.0)).unwrap();
                let f = cfg.carrier_freq();
                let exact = array_response(&cfg, angle, r, f).unwrap();
                let approx = approx_array_response(&cfg, p.theta(), p.alpha(), f);
                prop_assert!(exact.dotc(&approx).norm() >= 0.95);
            }

            #[test]
            fn channel_is_linear_in_gains(re in -3.0f64..3.0, im in -3.0f64..3.0, seed in 0u64..1000) {
                let cfg = SystemConfig::new(16, 4, 100e9, 10e9).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let paths = sample_paths(&cfg, 3, 5.0, 40.0, GainModel::PerPath, &mut rng).unwrap();
                let c = Complex64::new(re, im);
                let scaled: Vec<_> = paths.iter().map(|p| p.scaled(c)).collect();
                let h = generate_channel(&cfg, &paths).matrix;
                let hs = generate_channel(&cfg, &scaled).matrix;
                let diff = (hs - h.map(|z| z * c)).norm();
                prop_assert!(diff < 1e-10 * (1.0 + c.norm()) * 16.0);
            }
        }
    }
}

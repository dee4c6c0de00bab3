use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{GainModel, SystemConfig};
use crate::estimators::Estimator;
use crate::measurement::{CombinerKind, SnrReference};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Path distance in meters; every path sits at exactly that distance.
    Distance,
    /// System bandwidth in Hz.
    Bandwidth,
    Snr,
    /// Pilot slots `P`.
    Pilots,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::Bandwidth => "bandwidth",
            SweepAxis::Snr => "snr",
            SweepAxis::Pilots => "pilots",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::Distance, SweepAxis::Bandwidth, SweepAxis::Snr, SweepAxis::Pilots]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// NMSE against link distance.
    Fig4,
    /// NMSE against bandwidth.
    Fig5,
    /// NMSE against SNR.
    Fig6,
    /// NMSE against pilot overhead.
    Fig7,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            "fig6" => Ok(Preset::Fig6),
            "fig7" => Ok(Preset::Fig7),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

/// Everything one Monte Carlo experiment needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_angles: usize,
    pub num_rings: usize,
    pub beta: f64,
    /// Physical paths `L`.
    pub num_paths: usize,
    /// Greedy iterations `L_hat`.
    pub max_paths: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub snr_db: f64,
    pub pilots: usize,
    pub rf_chains: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub sweep: Option<Sweep>,
    pub gain_model: GainModel,
    pub combiner: CombinerKind,
    pub snr_reference: SnrReference,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::paper_scale()
    }
}

impl ExperimentConfig {
    /// The full-size system: 256 antennas at 100 GHz, 256 subcarriers.
    pub fn paper_scale() -> Self {
        Self {
            num_antennas: 256,
            num_subcarriers: 256,
            carrier_freq_hz: 100e9,
            bandwidth_hz: 10e9,
            num_angles: 256,
            num_rings: 14,
            beta: 0.8,
            num_paths: 6,
            max_paths: 12,
            r_min: 10.0,
            r_max: 30.0,
            snr_db: 5.0,
            pilots: 32,
            rf_chains: 4,
            trials: 300,
            seed: 0,
            estimators: Estimator::ALL.to_vec(),
            sweep: None,
            gain_model: GainModel::default(),
            combiner: CombinerKind::default(),
            snr_reference: SnrReference::default(),
        }
    }

    /// Half the antennas, a quarter of the subcarriers and the same
    /// compression ratio `N / (P N_RF) = 2`; fast enough for routine runs.
    pub fn desk_scale() -> Self {
        Self {
            num_antennas: 128,
            num_subcarriers: 64,
            num_angles: 128,
            num_rings: 8,
            pilots: 16,
            trials: 50,
            ..Self::paper_scale()
        }
    }

    /// Pins the non-swept parameters of one figure and installs its sweep.
    /// Pilot counts are expressed relative to the configured scale so the
    /// compression ratio matches at both sizes.
    pub fn apply_preset(&mut self, preset: Preset) {
        let full_pilots = self.num_antennas / (2 * self.rf_chains).max(1);
        let full_pilots = full_pilots.max(1);
        match preset {
            Preset::Fig4 => {
                self.snr_db = 5.0;
                self.bandwidth_hz = 10e9;
                self.pilots = full_pilots;
                self.sweep = Some(Sweep {
                    axis: SweepAxis::Distance,
                    values: vec![5.0, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0],
                });
            }
            Preset::Fig5 => {
                self.snr_db = 5.0;
                self.pilots = full_pilots;
                self.r_min = 10.0;
                self.r_max = 30.0;
                self.sweep = Some(Sweep {
                    axis: SweepAxis::Bandwidth,
                    values: vec![0.1e9, 0.5e9, 1e9, 2e9, 5e9, 10e9],
                });
            }
            Preset::Fig6 => {
                self.bandwidth_hz = 10e9;
                self.pilots = full_pilots;
                self.r_min = 10.0;
                self.r_max = 30.0;
                self.sweep = Some(Sweep {
                    axis: SweepAxis::Snr,
                    values: vec![-5.0, -1.0, 3.0, 7.0, 11.0, 15.0],
                });
            }
            Preset::Fig7 => {
                self.snr_db = 5.0;
                self.bandwidth_hz = 10e9;
                self.r_min = 10.0;
                self.r_max = 30.0;
                // from a compression ratio of 16 down to 2, never fewer
                // measurements than greedy iterations
                let lowest = (full_pilots / 8).max(self.max_paths.div_ceil(self.rf_chains.max(1)));
                let step = (full_pilots / 16).max(1);
                let mut values: Vec<f64> = (0..)
                    .map(|k| (lowest + k * step) as f64)
                    .take_while(|&p| p <= full_pilots as f64)
                    .collect();
                if values.last() != Some(&(full_pilots as f64)) {
                    values.push(full_pilots as f64);
                }
                self.sweep = Some(Sweep {
                    axis: SweepAxis::Pilots,
                    values,
                });
            }
        }
    }

    /// Overlays the keys of a TOML document onto `self`.
    pub fn merge_toml(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        let mut base = toml::Table::try_from(self)
            .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
        for (key, value) in overlay {
            base.insert(key, value);
        }
        let merged: Self = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config file: {}", e.message())))?;
        Ok(merged)
    }

    pub fn merge_file(&self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn system(&self) -> Result<SystemConfig> {
        SystemConfig::new(
            self.num_antennas,
            self.num_subcarriers,
            self.carrier_freq_hz,
            self.bandwidth_hz,
        )
    }

    /// Sweep values, or the single configured SNR when no sweep is set.
    pub fn sweep_points(&self) -> (SweepAxis, Vec<f64>) {
        match &self.sweep {
            Some(s) => (s.axis, s.values.clone()),
            None => (SweepAxis::Snr, vec![self.snr_db]),
        }
    }

    /// A copy with the swept parameter set to `value`.
    pub fn at_point(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match axis {
            SweepAxis::Distance => {
                cfg.r_min = value;
                cfg.r_max = value;
            }
            SweepAxis::Bandwidth => cfg.bandwidth_hz = value,
            SweepAxis::Snr => cfg.snr_db = value,
            SweepAxis::Pilots => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("pilot count {value} is not a positive integer")));
                }
                cfg.pilots = value as usize;
            }
        }
        cfg.sweep = None;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_antennas == 0 || self.num_subcarriers == 0 {
            return fail("antenna and subcarrier counts must be positive".into());
        }
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            return fail("carrier frequency must be positive".into());
        }
        if !(self.bandwidth_hz >= 0.0 && self.bandwidth_hz < 2.0 * self.carrier_freq_hz) {
            return fail("bandwidth must lie in [0, 2 f_c)".into());
        }
        if self.num_angles < 2 || self.num_rings == 0 || self.beta.is_nan() || self.beta <= 0.0 {
            return fail("grid needs at least two angles, one ring and beta > 0".into());
        }
        if self.num_paths == 0 || self.max_paths == 0 {
            return fail("path counts must be positive".into());
        }
        if self.max_paths > self.num_angles {
            return fail(format!(
                "max_paths = {} exceeds the {} angle samples",
                self.max_paths, self.num_angles
            ));
        }
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.r_max.is_finite()) {
            return fail(format!("distance range [{}, {}] is invalid", self.r_min, self.r_max));
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if self.pilots == 0 || self.rf_chains == 0 {
            return fail("pilots and rf_chains must be positive".into());
        }
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        if self.estimators.is_empty() {
            return fail("no estimators selected".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return fail("sweep has no values".into());
            }
            for &v in &s.values {
                self.at_point(s.axis, v)?;
            }
        }
        Ok(())
    }
}

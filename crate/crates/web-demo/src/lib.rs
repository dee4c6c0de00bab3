//! WebAssembly bindings for a small interactive demo of `bpd-core`.
//!
//! The browser page calls three operations: a coherence-function heatmap,
//! the beam-split track of one dictionary atom across subcarriers, and a
//! single Monte Carlo trial of every estimator. The logic lives in [`ops`]
//! so it can be tested natively; the exported functions only convert errors.

use wasm_bindgen::prelude::*;

pub mod ops {
    use bpd_core::channel::{array_response, SystemConfig};
    use bpd_core::dictionary::{build_dictionary, build_grid};
    use bpd_core::estimators::Estimator;
    use bpd_core::harness::{run_trial as harness_trial, ExperimentConfig, TrialOptions, Workspace};
    use bpd_core::pattern::{build_pattern_tables, xi};
    use bpd_core::CMatrix;

    pub const ANTENNAS: usize = 64;
    pub const TRACK_SUBCARRIERS: usize = 32;
    pub const RINGS: usize = 6;
    pub const CARRIER_HZ: f64 = 100e9;

    /// `steps x steps` samples of `xi` on `[-gamma_max, gamma_max] x
    /// [-zeta_max, zeta_max]`, row-major with `zeta` along rows.
    pub fn xi_heatmap(gamma_max: f64, zeta_max: f64, steps: usize) -> Result<Vec<f64>, String> {
        if !(2..=201).contains(&steps) {
            return Err(format!("steps must lie in 2..=201, got {steps}"));
        }
        if !(gamma_max > 0.0 && zeta_max > 0.0 && gamma_max.is_finite() && zeta_max.is_finite()) {
            return Err("ranges must be positive".into());
        }
        let axis = |max: f64, i: usize| -max + 2.0 * max * i as f64 / (steps - 1) as f64;
        Ok((0..steps)
            .flat_map(|i| (0..steps).map(move |j| xi(axis(gamma_max, j), axis(zeta_max, i))))
            .collect())
    }

    /// For an on-grid path at sample `(angle, ring)` of the carrier grid,
    /// four entries per subcarrier: the atom the drift tables predict
    /// (angle, ring) and the atom that actually correlates best.
    pub fn beam_split_track(bandwidth_ghz: f64, angle: usize, ring: usize) -> Result<Vec<u32>, String> {
        let system = SystemConfig::new(ANTENNAS, TRACK_SUBCARRIERS, CARRIER_HZ, bandwidth_ghz * 1e9)
            .map_err(|e| e.to_string())?;
        let grid = build_grid(&system, ANTENNAS, RINGS, 0.8).map_err(|e| e.to_string())?;
        if angle == 0 || angle >= grid.num_angles() || ring >= grid.num_rings() {
            return Err(format!(
                "angle must lie in 1..{} and ring in 0..{}",
                grid.num_angles(),
                grid.num_rings()
            ));
        }
        let dict = build_dictionary(&system, &grid);
        let tables = build_pattern_tables(&system, &grid);
        let distance = grid.distance(ring, angle);
        let mut responses = CMatrix::zeros(ANTENNAS, TRACK_SUBCARRIERS);
        for m in 0..TRACK_SUBCARRIERS {
            let a = array_response(&system, grid.angle(angle), distance, system.subcarrier_freq(m))
                .map_err(|e| e.to_string())?;
            responses.set_column(m, &a);
        }
        let corr = dict.matrix.ad_mul(&responses);
        let na = grid.num_angles();
        let mut out = Vec::with_capacity(4 * TRACK_SUBCARRIERS);
        for m in 0..TRACK_SUBCARRIERS {
            let best = (0..corr.nrows())
                .max_by(|&i, &j| corr[(i, m)].norm().total_cmp(&corr[(j, m)].norm()))
                .unwrap_or(0);
            out.extend([
                tables.angle(angle, m) as u32,
                tables.ring(ring, m) as u32,
                (best % na) as u32,
                (best / na) as u32,
            ]);
        }
        Ok(out)
    }

    /// The reduced system the trial runs on.
    pub fn demo_config(snr_db: f64, bandwidth_ghz: f64) -> ExperimentConfig {
        ExperimentConfig {
            num_antennas: ANTENNAS,
            num_subcarriers: 16,
            bandwidth_hz: bandwidth_ghz * 1e9,
            num_angles: ANTENNAS,
            num_rings: 4,
            num_paths: 3,
            max_paths: 6,
            r_min: 2.0,
            r_max: 8.0,
            snr_db,
            pilots: 8,
            trials: 1,
            ..ExperimentConfig::desk_scale()
        }
    }

    pub fn estimator_names() -> Vec<&'static str> {
        Estimator::ALL.iter().map(|e| e.name()).collect()
    }

    /// NMSE in dB of every estimator, in [`estimator_names`] order, on one
    /// shared realization.
    pub fn run_trial(snr_db: f64, bandwidth_ghz: f64, seed: u32) -> Result<Vec<f64>, String> {
        let cfg = demo_config(snr_db, bandwidth_ghz);
        cfg.validate().map_err(|e| e.to_string())?;
        let ws = Workspace::new(&cfg).map_err(|e| e.to_string())?;
        let entries = harness_trial(&ws, seed as u64, TrialOptions::default()).map_err(|e| e.to_string())?;
        Ok(entries.iter().map(|e| e.nmse_db()).collect())
    }
}

fn js(message: String) -> JsError {
    JsError::new(&message)
}

#[wasm_bindgen]
pub fn xi_heatmap(gamma_max: f64, zeta_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    ops::xi_heatmap(gamma_max, zeta_max, steps).map_err(js)
}

#[wasm_bindgen]
pub fn beam_split_track(bandwidth_ghz: f64, angle: usize, ring: usize) -> Result<Vec<u32>, JsError> {
    ops::beam_split_track(bandwidth_ghz, angle, ring).map_err(js)
}

#[wasm_bindgen]
pub fn run_trial(snr_db: f64, bandwidth_ghz: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    ops::run_trial(snr_db, bandwidth_ghz, seed).map_err(js)
}

/// Comma-separated estimator names matching [`run_trial`]'s output order.
#[wasm_bindgen]
pub fn estimator_names() -> String {
    ops::estimator_names().join(",")
}

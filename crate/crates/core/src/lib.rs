//! Near-field wideband channel estimation for extremely large uniform linear
//! arrays.
//!
//! The crate models spherical-wave multipath channels across OFDM
//! subcarriers, observes them through random analog combiners, and recovers
//! them with greedy sparse estimators over a joint angle-distance (polar)
//! dictionary. The main estimator, bilinear pattern detection (BPD),
//! accumulates correlation power along the frequency-dependent drift of each
//! dictionary atom in both the angle and the distance domain. Baselines
//! (LS, angle/polar OMP and SOMP, angle-only BSPD) and a Monte Carlo harness
//! for NMSE sweeps are included.

pub mod channel;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod measurement;
pub mod pattern;
pub mod quadrature;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix, column-major.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

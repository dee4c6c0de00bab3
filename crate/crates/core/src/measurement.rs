//! Pilot observation through random analog combiners and noise
//! pre-whitening.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, SystemConfig, WidebandChannel};
use crate::dictionary::PolarDictionary;
use crate::{CMatrix, Error, Result};

/// Eigenvalues of a combiner block below this are treated as rank loss.
pub const MIN_COMBINER_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    /// Real entries drawn uniformly from `{-1, +1} / sqrt(N)`.
    #[default]
    Rademacher,
    /// Unit-modulus entries `(+-1 +- j) / sqrt(2 N)`.
    Qpsk,
}

/// Which noise the SNR target refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// `||H||_F^2 / E ||N_w||_F^2` with `N_w` the whitened noise.
    #[default]
    Whitened,
    /// `||H||_F^2 / E ||N_a||_F^2` with `N_a` the noise at the antennas,
    /// before combining.
    Antenna,
}

/// Per-slot combining matrices `A_p`, each `N_RF x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    combiners: Vec<CMatrix>,
}

impl MeasurementEnsemble {
    pub fn from_combiners(combiners: Vec<CMatrix>) -> Result<Self> {
        let first = combiners
            .first()
            .ok_or_else(|| Error::invalid("combiners", "need at least one slot"))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::invalid("combiners", "empty combiner"));
        }
        if combiners.iter().any(|c| c.shape() != shape) {
            return Err(Error::invalid("combiners", "all slots must share one shape"));
        }
        Ok(Self { combiners })
    }

    pub fn slots(&self) -> usize {
        self.combiners.len()
    }

    pub fn rf_chains(&self) -> usize {
        self.combiners[0].nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.combiners[0].ncols()
    }

    /// Total number of measurements per subcarrier, `P * N_RF`.
    pub fn rows(&self) -> usize {
        self.slots() * self.rf_chains()
    }

    pub fn combiner(&self, slot: usize) -> &CMatrix {
        &self.combiners[slot]
    }

    /// Stacked observation matrix `A = [A_1; ...; A_P]`.
    pub fn stacked(&self) -> CMatrix {
        let nrf = self.rf_chains();
        let mut a = CMatrix::zeros(self.rows(), self.num_antennas());
        for (p, block) in self.combiners.iter().enumerate() {
            a.view_mut((p * nrf, 0), block.shape()).copy_from(block);
        }
        a
    }

    /// `blockdiag(A_p A_p^H)`, the noise covariance divided by `sigma^2`.
    pub fn noise_shape(&self) -> CMatrix {
        let nrf = self.rf_chains();
        let mut c = CMatrix::zeros(self.rows(), self.rows());
        for (p, block) in self.combiners.iter().enumerate() {
            let gram = block * block.adjoint();
            c.view_mut((p * nrf, p * nrf), (nrf, nrf)).copy_from(&gram);
        }
        c
    }
}

pub fn sample_combiners<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    slots: usize,
    rf_chains: usize,
    kind: CombinerKind,
    rng: &mut R,
) -> Result<MeasurementEnsemble> {
    if slots == 0 {
        return Err(Error::invalid("pilots", "need at least one pilot slot"));
    }
    if rf_chains == 0 {
        return Err(Error::invalid("rf_chains", "need at least one RF chain"));
    }
    let n = cfg.num_antennas();
    let scale = 1.0 / (n as f64).sqrt();
    let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
    let combiners = (0..slots)
        .map(|_| {
            let mut block = CMatrix::zeros(rf_chains, n);
            for z in block.iter_mut() {
                *z = match kind {
                    CombinerKind::Rademacher => Complex64::new(sign(rng) * scale, 0.0),
                    CombinerKind::Qpsk => {
                        let s = scale * std::f64::consts::FRAC_1_SQRT_2;
                        Complex64::new(sign(rng) * s, sign(rng) * s)
                    }
                };
            }
            block
        })
        .collect();
    MeasurementEnsemble::from_combiners(combiners)
}

/// Raw pilot observations, `P * N_RF` rows by `M` subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub raw: CMatrix,
}

/// `y_m = A h_m + [A_1 n_{m,1}; ...; A_P n_{m,P}]` with `n ~ CN(0, sigma^2 I_N)`
/// and unit pilots.
pub fn observe<R: Rng + ?Sized>(
    ens: &MeasurementEnsemble,
    channel: &WidebandChannel,
    sigma: f64,
    rng: &mut R,
) -> Result<ObservationSet> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma", format!("{sigma} must be non-negative")));
    }
    let h = &channel.matrix;
    if h.nrows() != ens.num_antennas() {
        return Err(Error::invalid("channel", "row count differs from antenna count"));
    }
    let mut raw = ens.stacked() * h;
    if sigma > 0.0 {
        let nrf = ens.rf_chains();
        let mut noise = CMatrix::zeros(h.nrows(), h.ncols());
        for p in 0..ens.slots() {
            for z in noise.iter_mut() {
                *z = complex_normal(rng) * sigma;
            }
            let combined = ens.combiner(p) * &noise;
            let mut rows = raw.rows_mut(p * nrf, nrf);
            rows += combined;
        }
    }
    Ok(ObservationSet { raw })
}

/// Noise level reaching `snr_db` under the default (whitened-noise)
/// definition.
pub fn sigma_for_snr(ens: &MeasurementEnsemble, channel: &WidebandChannel, snr_db: f64) -> Result<f64> {
    sigma_for_snr_with(ens, channel, snr_db, SnrReference::Whitened)
}

pub fn sigma_for_snr_with(
    ens: &MeasurementEnsemble,
    channel: &WidebandChannel,
    snr_db: f64,
    reference: SnrReference,
) -> Result<f64> {
    let power = channel.frobenius_norm_squared();
    if power <= 0.0 {
        return Err(Error::ZeroChannel);
    }
    if snr_db.is_nan() {
        return Err(Error::invalid("snr_db", "not a number"));
    }
    let entries = match reference {
        SnrReference::Whitened => ens.rows(),
        SnrReference::Antenna => ens.num_antennas(),
    } * channel.matrix.ncols();
    let snr = 10f64.powf(snr_db / 10.0);
    Ok((power / (entries as f64 * snr)).sqrt())
}

/// Block-diagonal whitening transform built from `A_p A_p^H = S Sigma S^H`.
///
/// The factor is the Hermitian square root `D = S Sigma^{1/2} S^H`, so that
/// `D D^H = blockdiag(A_p A_p^H)` and `D^{-1} C D^{-H} = sigma^2 I`. It does
/// not depend on `sigma`.
#[derive(Debug, Clone)]
pub struct Whitener {
    block_size: usize,
    factors: Vec<CMatrix>,
    inverses: Vec<CMatrix>,
}

impl Whitener {
    /// One eigendecomposition per pilot slot.
    pub fn new(ens: &MeasurementEnsemble) -> Result<Self> {
        let grams = ens
            .combiners
            .iter()
            .map(|a| a * a.adjoint())
            .collect::<Vec<_>>();
        Self::from_blocks(ens.rf_chains(), grams)
    }

    /// Single eigendecomposition of the full block-diagonal matrix.
    pub fn monolithic(ens: &MeasurementEnsemble) -> Result<Self> {
        Self::from_blocks(ens.rows(), vec![ens.noise_shape()])
    }

    fn from_blocks(block_size: usize, grams: Vec<CMatrix>) -> Result<Self> {
        let mut factors = Vec::with_capacity(grams.len());
        let mut inverses = Vec::with_capacity(grams.len());
        for (block, gram) in grams.into_iter().enumerate() {
            let eig = SymmetricEigen::new(gram);
            let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if smallest.is_nan() || smallest < MIN_COMBINER_EIGENVALUE {
                return Err(Error::RankDeficientCombiner {
                    block,
                    eigenvalue: smallest,
                });
            }
            let s = &eig.eigenvectors;
            let root = |power: f64| {
                let mut scaled = s.clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= Complex64::new(eig.eigenvalues[j].powf(power), 0.0);
                }
                scaled * s.adjoint()
            };
            factors.push(root(0.5));
            inverses.push(root(-0.5));
        }
        Ok(Self {
            block_size,
            factors,
            inverses,
        })
    }

    pub fn rows(&self) -> usize {
        self.block_size * self.factors.len()
    }

    /// Left-multiplies by `D^{-1}`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let b = self.block_size;
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for (p, inv) in self.inverses.iter().enumerate() {
            let block = inv * x.rows(p * b, b);
            out.rows_mut(p * b, b).copy_from(&block);
        }
        out
    }

    fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        let b = self.block_size;
        let mut full = CMatrix::zeros(self.rows(), self.rows());
        for (p, block) in blocks.iter().enumerate() {
            full.view_mut((p * b, p * b), (b, b)).copy_from(block);
        }
        full
    }

    /// The whitening factor `D`.
    pub fn factor(&self) -> CMatrix {
        self.assemble(&self.factors)
    }

    /// `D^{-1}`.
    pub fn inverse(&self) -> CMatrix {
        self.assemble(&self.inverses)
    }
}

/// Whitened sparse recovery problem `Y_w = Psi X + N_w` over a dictionary.
#[derive(Debug, Clone)]
pub struct SparseProblem<'a> {
    /// Dictionary `W` mapping sparse coefficients back to antennas.
    pub synthesis: &'a CMatrix,
    /// Angle samples per ring in `synthesis`.
    pub num_angles: usize,
    pub num_rings: usize,
    /// `Psi = D^{-1} A W`.
    pub sensing: CMatrix,
    /// `Y_w = D^{-1} Y`.
    pub observations: CMatrix,
}

impl<'a> SparseProblem<'a> {
    pub fn new(
        whitener: &Whitener,
        ens: &MeasurementEnsemble,
        obs: &ObservationSet,
        dictionary: &'a PolarDictionary,
    ) -> Self {
        let sensing = whitener.apply(&(ens.stacked() * &dictionary.matrix));
        let observations = whitener.apply(&obs.raw);
        Self {
            synthesis: &dictionary.matrix,
            num_angles: dictionary.num_angles(),
            num_rings: dictionary.num_rings(),
            sensing,
            observations,
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.sensing.ncols()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.observations.ncols()
    }
}

/// Whitens the observations and the sensing matrix for one dictionary.
pub fn prewhiten<'a>(
    ens: &MeasurementEnsemble,
    obs: &ObservationSet,
    dictionary: &'a PolarDictionary,
) -> Result<SparseProblem<'a>> {
    let whitener = Whitener::new(ens)?;
    Ok(SparseProblem::new(&whitener, ens, obs, dictionary))
}

//! Radio arithmetic: dB conversions, log-distance path loss, receiver
//! sensitivity and the two protection conditions.
//!
//! A guardian protects a victim when it can *detect* the attacker's frame
//! (received power at or above its sensitivity) and *destroy* it at the victim
//! (signal-to-interference ratio below the effective threshold).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RfError {
    #[error("distance must be positive, got {0} m")]
    Distance(f64),
    #[error("invalid RF parameter `{name}`: {value}")]
    Param { name: &'static str, value: f64 },
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Path loss model and interference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfParams {
    /// Reference distance in metres.
    #[serde(default = "RfParams::default_d0")]
    pub d0: f64,
    /// Path loss exponent.
    #[serde(default = "RfParams::default_alpha")]
    pub alpha: f64,
    #[serde(default = "RfParams::default_pl_d0")]
    pub pl_d0_db: f64,
    /// SIR below which a receiver loses a symbol.
    #[serde(default = "RfParams::default_gamma")]
    pub gamma_sir_db: f64,
    /// Extra effectiveness of the interference waveform, added to the SIR
    /// threshold.
    #[serde(default = "RfParams::default_waveform_gain")]
    pub waveform_gain_db: f64,
    /// Standard deviation of per-link log-normal shadowing; 0 disables it.
    #[serde(default)]
    pub shadowing_sigma_db: f64,
}

impl RfParams {
    fn default_d0() -> f64 {
        8.0
    }
    fn default_alpha() -> f64 {
        3.3
    }
    fn default_pl_d0() -> f64 {
        58.5
    }
    fn default_gamma() -> f64 {
        3.0
    }
    fn default_waveform_gain() -> f64 {
        4.0
    }

    /// Effective destruction threshold in dB.
    pub fn gamma_eff_db(&self) -> f64 {
        self.gamma_sir_db + self.waveform_gain_db
    }

    pub fn validate(&self) -> Result<(), RfError> {
        let bad = |name, value| Err(RfError::Param { name, value });
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return bad("d0", self.d0);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !self.pl_d0_db.is_finite() {
            return bad("pl_d0_db", self.pl_d0_db);
        }
        if !self.gamma_sir_db.is_finite() {
            return bad("gamma_sir_db", self.gamma_sir_db);
        }
        if !self.waveform_gain_db.is_finite() {
            return bad("waveform_gain_db", self.waveform_gain_db);
        }
        if !(self.shadowing_sigma_db >= 0.0 && self.shadowing_sigma_db.is_finite()) {
            return bad("shadowing_sigma_db", self.shadowing_sigma_db);
        }
        Ok(())
    }
}

impl Default for RfParams {
    /// IEEE 802.15.4 2.4 GHz reference model: 58.5 dB at 8 m, exponent 3.3.
    fn default() -> Self {
        RfParams {
            d0: Self::default_d0(),
            alpha: Self::default_alpha(),
            pl_d0_db: Self::default_pl_d0(),
            gamma_sir_db: Self::default_gamma(),
            waveform_gain_db: Self::default_waveform_gain(),
            shadowing_sigma_db: 0.0,
        }
    }
}

/// Deterministic log-distance path loss in dB.
pub fn path_loss_db(d: f64, params: &RfParams) -> Result<f64, RfError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(RfError::Distance(d));
    }
    Ok(params.pl_d0_db + 10.0 * params.alpha * (d / params.d0).log10())
}

/// Per-link block shadowing, frozen for a given seed. The draw for a link
/// depends only on the seed and the two endpoint ids, so adding nodes never
/// perturbs existing links.
#[derive(Debug, Clone, Copy)]
pub struct Shadowing {
    seed: u64,
    sigma_db: f64,
}

impl Shadowing {
    pub fn new(seed: u64, sigma_db: f64) -> Self {
        Shadowing { seed, sigma_db }
    }

    /// Shadowing term in dB for the directed link `tx -> rx`.
    pub fn offset_db(&self, tx: u32, rx: u32) -> f64 {
        if self.sigma_db <= 0.0 {
            return 0.0;
        }
        let link_seed = splitmix64(self.seed ^ splitmix64(((tx as u64) << 32) | rx as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(link_seed);
        Normal::new(0.0, self.sigma_db)
            .expect("sigma validated non-negative")
            .sample(&mut rng)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Path loss with the seeded shadowing term of link `tx -> rx` added.
pub fn path_loss_shadowed_db(
    d: f64,
    params: &RfParams,
    shadowing: &Shadowing,
    tx: u32,
    rx: u32,
) -> Result<f64, RfError> {
    Ok(path_loss_db(d, params)? + shadowing.offset_db(tx, rx))
}

pub fn received_power_dbm(ptx_dbm: f64, d: f64, params: &RfParams) -> Result<f64, RfError> {
    Ok(ptx_dbm - path_loss_db(d, params)?)
}

/// Detection condition: the receiver hears the transmission (inclusive).
pub fn detects(
    ptx_dbm: f64,
    d: f64,
    sensitivity_dbm: f64,
    params: &RfParams,
) -> Result<bool, RfError> {
    Ok(received_power_dbm(ptx_dbm, d, params)? >= sensitivity_dbm)
}

/// Destruction condition: SIR at the victim falls strictly below
/// `gamma_sir_db + waveform_gain_db`.
pub fn destroys(
    pa_dbm: f64,
    d_av: f64,
    pg_dbm: f64,
    d_gv: f64,
    params: &RfParams,
) -> Result<bool, RfError> {
    let signal = received_power_dbm(pa_dbm, d_av, params)?;
    let interference = received_power_dbm(pg_dbm, d_gv, params)?;
    Ok(signal - interference < params.gamma_eff_db())
}

/// Receiver sensitivity budget `S = N_T * N_F * SNR_min`, held in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBudget {
    pub thermal_noise_dbm: f64,
    pub noise_figure_db: f64,
    pub snr_min_db: f64,
}

impl SensitivityBudget {
    /// Lowers the effective SNR requirement by a bit-error-tolerance gain.
    pub fn with_tolerance_gain(self, gain_db: f64) -> Self {
        SensitivityBudget {
            snr_min_db: self.snr_min_db - gain_db,
            ..self
        }
    }
}

pub fn sensitivity_dbm(budget: &SensitivityBudget) -> f64 {
    budget.thermal_noise_dbm + budget.noise_figure_db + budget.snr_min_db
}

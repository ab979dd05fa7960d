//! Cell geometry, distance-based path loss and per-RRB mean SNR.

use rand::Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Inner radius of the service annulus; also the path-loss reference distance.
pub const D_MIN_M: f64 = 30.0;
/// Cell radius.
pub const CELL_RADIUS_M: f64 = 3000.0;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub radius_m: f64,
    pub azimuth_rad: f64,
}

impl Position {
    pub fn new(radius_m: f64, azimuth_rad: f64) -> Result<Self> {
        if !(D_MIN_M..=CELL_RADIUS_M).contains(&radius_m) {
            return Err(Error::Domain(format!(
                "radius {radius_m} m outside [{D_MIN_M}, {CELL_RADIUS_M}]"
            )));
        }
        if !(0.0..std::f64::consts::TAU).contains(&azimuth_rad) {
            return Err(Error::Domain(format!("azimuth {azimuth_rad} outside [0, 2pi)")));
        }
        Ok(Self { radius_m, azimuth_rad })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub pl_ref_db: f64,
    pub d_ref_m: f64,
    pub pl_exponent: f64,
    pub pl_floor_db: f64,
    pub noise_psd_dbm_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pl_ref_db: -70.0,
            d_ref_m: 30.0,
            pl_exponent: 2.5,
            pl_floor_db: -120.0,
            noise_psd_dbm_hz: -174.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pl_ref_db > self.pl_floor_db) {
            return Err(Error::Config("pl_ref_db must exceed pl_floor_db".into()));
        }
        if !(self.pl_exponent > 0.0) {
            return Err(Error::Config("pl_exponent must be positive".into()));
        }
        if !(self.d_ref_m > 0.0) {
            return Err(Error::Config("d_ref_m must be positive".into()));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::Config("noise_psd_dbm_hz must be finite".into()));
        }
        Ok(())
    }
}

/// Path loss as a (negative) gain in dB, clamped to `[pl_floor_db, pl_ref_db]`.
pub fn path_loss_at(radius_m: f64, cp: &ChannelParams) -> Result<f64> {
    if !(radius_m > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius_m}")));
    }
    let pl = cp.pl_ref_db - 10.0 * cp.pl_exponent * (radius_m / cp.d_ref_m).log10();
    Ok(pl.clamp(cp.pl_floor_db, cp.pl_ref_db))
}

pub fn path_loss_db(pos: &Position, cp: &ChannelParams) -> Result<f64> {
    path_loss_at(pos.radius_m, cp)
}

/// Radius at which the unclamped path loss equals `pl_db`.
pub fn radius_for_path_loss(pl_db: f64, cp: &ChannelParams) -> f64 {
    cp.d_ref_m * 10f64.powf((cp.pl_ref_db - pl_db) / (10.0 * cp.pl_exponent))
}

pub fn noise_power_dbm(psd_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    debug_assert!(bandwidth_hz > 0.0);
    psd_dbm_hz + 10.0 * bandwidth_hz.log10()
}

/// Noise plus optional interference PSD, summed in the linear domain.
pub fn effective_psd_dbm_hz(noise_psd_dbm_hz: f64, interference_psd_dbm_hz: Option<f64>) -> f64 {
    match interference_psd_dbm_hz {
        None => noise_psd_dbm_hz,
        Some(i) => lin_to_db(db_to_lin(noise_psd_dbm_hz) + db_to_lin(i)),
    }
}

/// Per-RRB link budget of one transmitter. `None` interference means the RRB
/// carries no interferer at all.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub pl_db: f64,
    pub interference_psd_dbm_hz: Vec<Option<f64>>,
    pub rrb_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
}

impl LinkBudget {
    pub fn mean_snr(&self, rrb_index: usize) -> f64 {
        let psd = effective_psd_dbm_hz(self.noise_psd_dbm_hz, self.interference_psd_dbm_hz[rrb_index]);
        db_to_lin(self.tx_power_dbm + self.pl_db - noise_power_dbm(psd, self.rrb_bandwidth_hz))
    }

    pub fn mean_snrs(&self) -> Vec<f64> {
        (0..self.interference_psd_dbm_hz.len()).map(|i| self.mean_snr(i)).collect()
    }
}

pub fn mean_snr(lb: &LinkBudget, rrb_index: usize) -> f64 {
    lb.mean_snr(rrb_index)
}

/// Rayleigh power gain: exponential with unit mean.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

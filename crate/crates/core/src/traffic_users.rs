//! Device population and the two traffic processes.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::geometry_channel::{Position, CELL_RADIUS_M, D_MIN_M};
use crate::{Error, Result};

pub const SCHEDULED_TX_DBM: f64 = 21.0;
pub const NS_TX_DBM: f64 = 23.0;
pub const SCHEDULED_DELAY_BUDGET: u32 = 10;
pub const NS_DELAY_BUDGET: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceClass {
    Scheduled,
    NonScheduled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: usize,
    pub pos: Position,
    pub class: DeviceClass,
    pub tx_power_dbm: f64,
    pub delay_budget_slots: u32,
    pub next_ns_arrival_slot: Option<u64>,
}

impl Device {
    pub fn new(id: usize, pos: Position, class: DeviceClass) -> Self {
        let (tx_power_dbm, delay_budget_slots) = match class {
            DeviceClass::Scheduled => (SCHEDULED_TX_DBM, SCHEDULED_DELAY_BUDGET),
            DeviceClass::NonScheduled => (NS_TX_DBM, NS_DELAY_BUDGET),
        };
        Self { id, pos, class, tx_power_dbm, delay_budget_slots, next_ns_arrival_slot: None }
    }
}

/// Uniform-in-area position on the annulus `[r_min, r_max]`.
pub fn draw_position<R: Rng + ?Sized>(r_min: f64, r_max: f64, rng: &mut R) -> Position {
    let u: f64 = rng.random();
    let radius_m = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt().clamp(r_min, r_max);
    let azimuth_rad = rng.random::<f64>() * std::f64::consts::TAU;
    let azimuth_rad = if azimuth_rad >= std::f64::consts::TAU { 0.0 } else { azimuth_rad };
    Position { radius_m, azimuth_rad }
}

/// `n` devices of `class`, ids starting at `first_id`, uniform in area over
/// `[r_min, r_max]`.
pub fn place_devices<R: Rng + ?Sized>(
    n: usize,
    class: DeviceClass,
    r_min: f64,
    r_max: f64,
    first_id: usize,
    rng: &mut R,
) -> Result<Vec<Device>> {
    if !(D_MIN_M..=CELL_RADIUS_M).contains(&r_min) || !(r_min..=CELL_RADIUS_M).contains(&r_max) {
        return Err(Error::Config(format!(
            "placement annulus [{r_min}, {r_max}] not inside [{D_MIN_M}, {CELL_RADIUS_M}]"
        )));
    }
    Ok((0..n).map(|i| Device::new(first_id + i, draw_position(r_min, r_max, rng), class)).collect())
}

/// Scheduled devices over the whole cell.
pub fn place_users<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Device> {
    assert!(n >= 1, "place_users needs n >= 1");
    place_devices(n, DeviceClass::Scheduled, D_MIN_M, CELL_RADIUS_M, 0, rng).expect("cell annulus is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcess {
    pub rate_per_slot: f64,
}

impl Default for ArrivalProcess {
    fn default() -> Self {
        Self { rate_per_slot: 0.01 }
    }
}

impl ArrivalProcess {
    pub fn new(rate_per_slot: f64) -> Result<Self> {
        if !(rate_per_slot > 0.0 && rate_per_slot < 1.0) {
            return Err(Error::Config(format!("arrival rate {rate_per_slot} outside (0,1)")));
        }
        Ok(Self { rate_per_slot })
    }
}

/// `now + ceil(X)` with `X` exponential of mean `1/rate`; always later than `now`.
pub fn next_ns_arrival<R: Rng + ?Sized>(process: &ArrivalProcess, now_slot: u64, rng: &mut R) -> u64 {
    let x = Exp::new(process.rate_per_slot).expect("validated rate").sample(rng);
    now_slot + (x.ceil() as u64).max(1)
}

/// Scheduled queues are saturated.
pub fn scheduled_has_data(device: &Device) -> bool {
    assert_eq!(device.class, DeviceClass::Scheduled, "scheduled_has_data on a non-scheduled device");
    true
}

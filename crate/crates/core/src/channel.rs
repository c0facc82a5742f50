//! Air-to-ground propagation, link budget and interference primitives.
//!
//! Everything in here is a pure function of its arguments. Distances fed to
//! the log-distance pathloss terms are slant (3-D) distances, while the LoS
//! probability uses the horizontal distance through the elevation angle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dec;

/// Free-space constant for distance in metres and frequency in Hz.
const FSPL_CONSTANT_DB: f64 = 147.55;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("slant distance must be positive, got {0}")]
    ZeroDistance(f64),
    #[error("invalid channel parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Mix LoS and NLoS losses by the elevation-dependent LoS probability.
    Probabilistic,
    /// Always use the LoS loss.
    LosOnly,
}

impl std::str::FromStr for ChannelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "probabilistic" => Ok(ChannelMode::Probabilistic),
            "los" | "los_only" => Ok(ChannelMode::LosOnly),
            other => Err(format!("unknown channel mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    #[serde(with = "dec")]
    pub carrier_freq_hz: f64,
    #[serde(with = "dec")]
    pub eta_los_db: f64,
    #[serde(with = "dec")]
    pub eta_nlos_db: f64,
    #[serde(with = "dec")]
    pub c1: f64,
    #[serde(with = "dec")]
    pub c2: f64,
    /// Receiver noise power per resource block.
    #[serde(with = "dec")]
    pub noise_power_w: f64,
    #[serde(with = "dec")]
    pub rb_bandwidth_hz: f64,
    pub num_rbs: u32,
    #[serde(with = "dec")]
    pub uav_antenna_gain: f64,
    #[serde(with = "dec")]
    pub ue_tx_power_w: f64,
    pub channel_mode: ChannelMode,
}

impl Default for ChannelParams {
    /// Dense-urban, 2 GHz, one 1 MHz resource block.
    fn default() -> Self {
        ChannelParams {
            carrier_freq_hz: 2e9,
            eta_los_db: 1.6,
            eta_nlos_db: 23.0,
            c1: 12.076,
            c2: 0.114,
            noise_power_w: dbm_to_w(-90.0),
            rb_bandwidth_hz: 1e6,
            num_rbs: 1,
            uav_antenna_gain: 100.0,
            ue_tx_power_w: 0.002,
            channel_mode: ChannelMode::Probabilistic,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ChannelError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ChannelError::InvalidParam {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("rb_bandwidth_hz", self.rb_bandwidth_hz)?;
        positive("noise_power_w", self.noise_power_w)?;
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("uav_antenna_gain", self.uav_antenna_gain)?;
        if self.num_rbs == 0 {
            return Err(ChannelError::InvalidParam {
                field: "num_rbs",
                reason: "at least one resource block is required".into(),
            });
        }
        if !(self.ue_tx_power_w.is_finite() && self.ue_tx_power_w >= 0.0) {
            return Err(ChannelError::InvalidParam {
                field: "ue_tx_power_w",
                reason: format!("must be finite and >= 0, got {}", self.ue_tx_power_w),
            });
        }
        if !(self.eta_nlos_db > self.eta_los_db) {
            return Err(ChannelError::InvalidParam {
                field: "eta_nlos_db",
                reason: format!(
                    "NLoS excess loss ({}) must exceed LoS excess loss ({})",
                    self.eta_nlos_db, self.eta_los_db
                ),
            });
        }
        Ok(())
    }

    /// Full uplink bandwidth across all resource blocks.
    pub fn total_bandwidth_hz(&self) -> f64 {
        self.rb_bandwidth_hz * self.num_rbs as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub horizontal_dist_m: f64,
    pub uav_height_m: f64,
}

impl LinkGeometry {
    pub fn new(horizontal_dist_m: f64, uav_height_m: f64) -> Self {
        LinkGeometry {
            horizontal_dist_m,
            uav_height_m,
        }
    }

    pub fn slant_dist_m(&self) -> f64 {
        self.horizontal_dist_m.hypot(self.uav_height_m)
    }

    /// Elevation angle seen from the ground end, in degrees. 90 when overhead.
    pub fn elevation_deg(&self) -> f64 {
        self.uav_height_m.atan2(self.horizontal_dist_m).to_degrees()
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn log_distance_db(geom: &LinkGeometry, params: &ChannelParams, eta_db: f64) -> Result<f64, ChannelError> {
    let d = geom.slant_dist_m();
    if !(d > 0.0) {
        return Err(ChannelError::ZeroDistance(d));
    }
    Ok(20.0 * d.log10() + 20.0 * params.carrier_freq_hz.log10() - FSPL_CONSTANT_DB + eta_db)
}

pub fn pathloss_los(geom: &LinkGeometry, params: &ChannelParams) -> Result<f64, ChannelError> {
    log_distance_db(geom, params, params.eta_los_db)
}

pub fn pathloss_nlos(geom: &LinkGeometry, params: &ChannelParams) -> Result<f64, ChannelError> {
    log_distance_db(geom, params, params.eta_nlos_db)
}

/// LoS probability from the elevation angle. Directly overhead the angle is
/// taken as 90 degrees.
pub fn p_los(geom: &LinkGeometry, params: &ChannelParams) -> f64 {
    let theta = geom.elevation_deg();
    1.0 / (1.0 + params.c1 * (-params.c2 * (theta - params.c1)).exp())
}

/// Convex mix of the LoS and NLoS losses with an explicit LoS probability.
pub fn blend_pathloss(
    p_los: f64,
    geom: &LinkGeometry,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let los = pathloss_los(geom, params)?;
    let nlos = pathloss_nlos(geom, params)?;
    Ok(p_los * los + (1.0 - p_los) * nlos)
}

pub fn pathloss_total(geom: &LinkGeometry, params: &ChannelParams) -> Result<f64, ChannelError> {
    match params.channel_mode {
        ChannelMode::LosOnly => pathloss_los(geom, params),
        ChannelMode::Probabilistic => blend_pathloss(p_los(geom, params), geom, params),
    }
}

/// `G * 10^(-pathloss/10)`.
pub fn channel_gain(pathloss_db: f64, antenna_gain: f64) -> f64 {
    antenna_gain * 10f64.powf(-pathloss_db / 10.0)
}

pub fn snr_uplink(tx_power_w: f64, gain: f64, params: &ChannelParams) -> f64 {
    tx_power_w * gain / params.noise_power_w
}

/// Uplink rate summed over resource blocks, with power split evenly across them.
pub fn throughput(tx_power_w: f64, gain: f64, params: &ChannelParams) -> f64 {
    let k = params.num_rbs as f64;
    let per_rb_snr = snr_uplink(tx_power_w / k, gain, params);
    (0..params.num_rbs)
        .map(|_| params.rb_bandwidth_hz * (1.0 + per_rb_snr).log2())
        .sum()
}

pub fn interference_contribution(tx_power_w: f64, gain_to_neighbor_bs: f64) -> f64 {
    tx_power_w * gain_to_neighbor_bs
}

/// SINR and rate of a terrestrial UE whose serving BS sees `interference_w`
/// from the UAV. The rate uses the full (all-RB) bandwidth.
pub fn ue_sinr_throughput(
    ue_tx_power_w: f64,
    ue_gain: f64,
    interference_w: f64,
    params: &ChannelParams,
) -> (f64, f64) {
    let sinr = ue_tx_power_w * ue_gain / (interference_w + params.noise_power_w);
    (sinr, params.total_bandwidth_hz() * (1.0 + sinr).log2())
}

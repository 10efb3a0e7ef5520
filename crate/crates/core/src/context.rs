//! User and small-cell context profiles and the acceptability rules of both
//! sides.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chord_length, hf_probability, CellGeometry, Point};
use crate::radio::RadioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub id: usize,
    pub position: Point,
    /// Urgency coefficient; same time unit as the delivery time fed to [`qoe`].
    pub tau: f64,
    /// Trajectory angle in radians.
    pub theta: f64,
    /// Speed in m/s.
    pub speed: f64,
}

impl UserProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::domain(format!(
                "user {}: position must be finite",
                self.id
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::domain(format!(
                "user {}: tau must be positive",
                self.id
            )));
        }
        if !(self.theta.abs() < FRAC_PI_2) {
            return Err(Error::domain(format!(
                "user {}: theta must lie in (-pi/2, pi/2)",
                self.id
            )));
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::domain(format!(
                "user {}: speed must be non-negative",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallCellProfile {
    pub id: usize,
    pub geometry: CellGeometry,
    pub quota: usize,
    /// Handover preparation time `T_p` in seconds.
    pub prep_time: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
}

impl SmallCellProfile {
    pub fn validate(&self) -> Result<()> {
        self.geometry
            .validate()
            .map_err(|e| Error::domain(format!("cell {}: {e}", self.id)))?;
        if self.quota == 0 {
            return Err(Error::domain(format!(
                "cell {}: quota must be at least 1",
                self.id
            )));
        }
        if !(self.prep_time >= 0.0) || !self.prep_time.is_finite() {
            return Err(Error::domain(format!(
                "cell {}: prep_time must be non-negative",
                self.id
            )));
        }
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return Err(Error::domain(format!(
                "cell {}: tx_power must be positive",
                self.id
            )));
        }
        Ok(())
    }
}

/// Logistic quality of experience `1 / (1 + exp(t - tau))`.
pub fn qoe(t: f64, tau: f64) -> f64 {
    let x = t - tau;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// A cell accepts a user whose crossing time covers the preparation time.
/// A stationary user stays forever and is always acceptable.
pub fn is_acceptable_to_cell(user: &UserProfile, cell: &SmallCellProfile) -> Result<bool> {
    if user.speed == 0.0 {
        return Ok(true);
    }
    let chord = chord_length(&cell.geometry, user.theta)?;
    Ok(chord / user.speed >= cell.prep_time)
}

/// A user accepts a cell whose handover-failure probability is below
/// `hf_threshold` and whose link clears the radio SINR floor.
pub fn is_acceptable_to_user(
    cell: &SmallCellProfile,
    hf_threshold: f64,
    link_sinr: f64,
    radio: &RadioConfig,
) -> Result<bool> {
    if !(hf_threshold > 0.0 && hf_threshold <= 1.0) {
        return Err(Error::domain(format!(
            "hf threshold must lie in (0, 1], got {hf_threshold}"
        )));
    }
    Ok(hf_probability(&cell.geometry)? < hf_threshold && radio.passes_floor(link_sinr))
}

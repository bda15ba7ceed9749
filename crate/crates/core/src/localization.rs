//! UE position from the estimated distance and RIS angle of departure, and
//! the error metrics reported by the Monte Carlo studies.

use serde::{Deserialize, Serialize};

use crate::dsp::SweepResult;
use crate::error::{ensure_non_negative, Result};
use crate::geometry::{direction_to_global, local_direction, Direction, Orientation, Position3};

/// `x_UE = x_RIS + R (d u(theta))`. With the identity orientation this is the
/// usual spherical-to-Cartesian placement around the RIS center.
pub fn localize(distance: f64, aod: &Direction, ris_pos: Position3, orient: &Orientation) -> Result<Position3> {
    direction_to_global(aod, distance, ris_pos, orient)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEstimate {
    pub position: Position3,
    pub distance: f64,
    pub aod: Direction,
    pub velocity: f64,
}

impl LocalizationEstimate {
    /// Builds the estimate from a sweep result. Negative distances (a peak
    /// ahead of the loop-back offset) are clamped to zero.
    pub fn from_sweep(sweep: &SweepResult, ris_pos: Position3, orient: &Orientation) -> Result<Self> {
        let distance = sweep.distance.max(0.0);
        Ok(Self {
            position: localize(distance, &sweep.aod, ris_pos, orient)?,
            distance,
            aod: sweep.aod,
            velocity: sweep.velocity,
        })
    }
}

/// True geometry of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ue_position: Position3,
    pub ris_position: Position3,
    /// UE direction in the RIS local frame.
    pub aod: Direction,
    pub distance: f64,
}

impl GroundTruth {
    pub fn new(ue_position: Position3, ris_position: Position3, orient: &Orientation) -> Result<Self> {
        Ok(Self {
            ue_position,
            ris_position,
            aod: local_direction(ue_position, ris_position, orient)?,
            distance: ue_position.distance(ris_position),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `|d_hat - d|`, metres.
    pub distance_error: f64,
    /// Great-circle separation of true and estimated AOD, radians.
    pub angle_error: f64,
    /// Euclidean position error, metres.
    pub position_error: f64,
}

pub fn error_report(est: &LocalizationEstimate, truth: &GroundTruth) -> Result<ErrorReport> {
    ensure_non_negative("distance", est.distance)?;
    Ok(ErrorReport {
        distance_error: (est.distance - truth.distance).abs(),
        angle_error: est.aod.angle_to(&truth.aod),
        position_error: est.position.distance(truth.ue_position),
    })
}

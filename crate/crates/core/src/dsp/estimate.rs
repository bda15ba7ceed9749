use ndarray::ArrayView2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::{DelayDopplerMap, FrameSpectrum, Peak, SpectralEngine};
use super::{window_frame, PipelineConfig, WindowSpec};
use crate::channel::{BeatCube, Waveform};
use crate::error::{Error, Result};
use crate::geometry::{Direction, SPEED_OF_LIGHT};

/// Per-sweep-angle output of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMeasurement {
    pub direction: Direction,
    /// `tau_m`, seconds.
    pub delay: f64,
    /// `nu_m`, dimensionless.
    pub doppler: f64,
    pub delay_bin: usize,
    pub doppler_bin: i64,
    /// `|z_m(tau_m, nu_m)|^2`.
    pub peak_power: f64,
    /// `P_ave,m`.
    pub avg_power: f64,
}

/// Beam-sweep estimate: per-angle peaks, the selected beam and the derived
/// angle, distance and velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub per_angle: Vec<AngleMeasurement>,
    /// `m_hat`, zero-based.
    pub selected: usize,
    pub delay: f64,
    pub doppler: f64,
    pub aod: Direction,
    /// `(tau_hat - tau_RB) c / 2`; negative when the selected peak sits
    /// before the loop-back offset.
    pub distance: f64,
    pub velocity: f64,
    pub delay_step: f64,
    pub doppler_step: f64,
}

impl SweepResult {
    pub fn distance_step(&self) -> f64 {
        self.delay_step * SPEED_OF_LIGHT / 2.0
    }

    pub fn velocity_step(&self) -> f64 {
        self.doppler_step * SPEED_OF_LIGHT / 2.0
    }

    pub fn avg_power_profile(&self) -> Vec<f64> {
        self.per_angle.iter().map(|a| a.avg_power).collect()
    }
}

/// Window -> pad -> transform -> gate -> peak -> beam power for single
/// frames, with FFT plans built once.
pub struct FrameProcessor {
    engine: SpectralEngine,
    waveform: Waveform,
    config: PipelineConfig,
    windows: (WindowSpec, WindowSpec),
}

impl FrameProcessor {
    pub fn new(waveform: &Waveform, config: &PipelineConfig) -> Result<Self> {
        waveform.validate()?;
        config.validate(waveform)?;
        Ok(Self {
            engine: SpectralEngine::for_rows(config.plan, waveform.chirps_per_frame),
            waveform: *waveform,
            config: *config,
            windows: config.window_specs(waveform)?,
        })
    }

    pub fn spectrum(&self, frame: ArrayView2<'_, Complex64>) -> Result<FrameSpectrum<'_>> {
        let windowed = window_frame(frame, self.windows.0, self.windows.1)?;
        Ok(FrameSpectrum::new(&self.engine, windowed.view(), &self.waveform, self.config.min_distance))
    }

    /// Fully materialized (gated) map of one frame.
    pub fn map(&self, frame: ArrayView2<'_, Complex64>) -> Result<DelayDopplerMap> {
        Ok(self.spectrum(frame)?.into_map())
    }

    /// Peak and `P_ave` of one frame.
    pub fn measure(&self, frame: ArrayView2<'_, Complex64>) -> Result<(Peak, f64)> {
        let mut spec = self.spectrum(frame)?;
        let peak = spec.peak()?;
        let avg = spec.average_power(peak.delay, peak.doppler, self.config.power_window)?;
        Ok((peak, avg))
    }
}

/// Runs the beam-sweep estimator over every frame of the cube and selects
/// `m_hat = argmax_m P_ave,m` (ties to the smallest `m`).
pub fn estimate(cube: &BeatCube, config: &PipelineConfig) -> Result<SweepResult> {
    let proc = FrameProcessor::new(&cube.waveform, config)?;
    if cube.n_angles() != cube.plan.len() {
        return Err(Error::DimensionMismatch("cube frames do not match sweep plan".into()));
    }
    let per_angle = (0..cube.n_angles())
        .into_par_iter()
        .map(|m| {
            let (peak, avg_power) = proc.measure(cube.frame(m))?;
            Ok(AngleMeasurement {
                direction: cube.plan.angles[m],
                delay: peak.delay,
                doppler: peak.doppler,
                delay_bin: peak.delay_bin,
                doppler_bin: peak.doppler_bin,
                peak_power: peak.power,
                avg_power,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut selected = 0;
    for (m, a) in per_angle.iter().enumerate() {
        if a.avg_power > per_angle[selected].avg_power {
            selected = m;
        }
    }
    let pick = per_angle[selected];
    Ok(SweepResult {
        selected,
        delay: pick.delay,
        doppler: pick.doppler,
        aod: pick.direction,
        distance: (pick.delay - config.loopback_delay) * SPEED_OF_LIGHT / 2.0,
        velocity: pick.doppler * SPEED_OF_LIGHT / 2.0,
        delay_step: config.plan.delay_step(&cube.waveform),
        doppler_step: config.plan.doppler_step(&cube.waveform),
        per_angle,
    })
}

//! Delay-Doppler processing: windowing, zero padding, the 2D spectrum,
//! self-interference gating, peak extraction and RIS beam-power selection.
//!
//! Grid conventions (dimensionless Doppler `nu = 2 v / c`):
//!
//! - delay bin `n'` sits at `tau = n' / (S N_DFT T_s)`, `n' = 0 .. N_DFT-1`;
//! - Doppler bin with natural FFT index `k'` maps to the signed index
//!   `s = k'` for `k' < ceil(K_DFT/2)` and `s = k' - K_DFT` otherwise, at
//!   `nu = s / (f_c K_DFT T)`.
//!
//! Both exponents of the transform are positive, so a path whose beat
//! signal carries `exp(-j 2 pi (S tau n T_s + f_c nu k T))` peaks at
//! `(tau, nu)`.

mod estimate;
mod map;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Waveform;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::geometry::SPEED_OF_LIGHT;

pub use estimate::{estimate, AngleMeasurement, FrameProcessor, SweepResult};
pub use map::{average_power, delay_doppler_map, gate_min_distance, peak, DelayDopplerMap, FrameSpectrum, Peak};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub length: usize,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("window.length", "must be >= 1"));
        }
        Ok(Self { kind, length })
    }

    /// Hann: `w(a) = sin^2(a pi / A)`, `a = 0 .. A-1`.
    pub fn coefficients(&self) -> Vec<f64> {
        let a_len = self.length as f64;
        (0..self.length)
            .map(|a| match self.kind {
                WindowKind::Hann => (a as f64 * std::f64::consts::PI / a_len).sin().powi(2),
                WindowKind::Rectangular => 1.0,
            })
            .collect()
    }
}

/// `w_N w_K^T (.) frame` for an `N x K` frame.
pub fn window_frame(frame: ArrayView2<'_, Complex64>, spec_n: WindowSpec, spec_k: WindowSpec) -> Result<Array2<Complex64>> {
    let (n, k) = frame.dim();
    if spec_n.length != n || spec_k.length != k {
        return Err(Error::DimensionMismatch(format!(
            "frame is {n}x{k} but windows are {}x{}",
            spec_n.length, spec_k.length
        )));
    }
    let wn = spec_n.coefficients();
    let wk = spec_k.coefficients();
    let mut out = frame.to_owned();
    for (mut row, &a) in out.outer_iter_mut().zip(&wn) {
        for (y, &b) in row.iter_mut().zip(&wk) {
            *y *= a * b;
        }
    }
    Ok(out)
}

/// Transform sizes of the delay (fast-time) and Doppler (slow-time) axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DftPlan {
    pub n_dft: usize,
    pub k_dft: usize,
}

impl DftPlan {
    pub fn new(n_dft: usize, k_dft: usize) -> Result<Self> {
        if n_dft == 0 || k_dft == 0 {
            return Err(Error::invalid("pipeline", "transform sizes must be >= 1"));
        }
        Ok(Self { n_dft, k_dft })
    }

    /// Checks the plan covers a frame of `n x k` samples.
    pub fn check_frame(&self, n: usize, k: usize) -> Result<()> {
        if self.n_dft < n {
            return Err(Error::invalid("pipeline.n_dft", format!("{} < samples per chirp {n}", self.n_dft)));
        }
        if self.k_dft < k {
            return Err(Error::invalid("pipeline.k_dft", format!("{} < chirps per frame {k}", self.k_dft)));
        }
        Ok(())
    }

    /// Delay spacing `1 / (S N_DFT T_s)`, seconds.
    pub fn delay_step(&self, wf: &Waveform) -> f64 {
        1.0 / (wf.slope() * self.n_dft as f64 * wf.sample_period)
    }

    /// Doppler spacing `1 / (f_c K_DFT T)` (dimensionless `nu`).
    pub fn doppler_step(&self, wf: &Waveform) -> f64 {
        1.0 / (wf.carrier_freq * self.k_dft as f64 * wf.chirp_duration)
    }

    /// One delay bin expressed as distance, metres.
    pub fn distance_step(&self, wf: &Waveform) -> f64 {
        self.delay_step(wf) * SPEED_OF_LIGHT / 2.0
    }

    /// One Doppler bin expressed as radial velocity, m/s.
    pub fn velocity_step(&self, wf: &Waveform) -> f64 {
        self.doppler_step(wf) * SPEED_OF_LIGHT / 2.0
    }

    /// Signed Doppler index of natural FFT index `k'`.
    pub fn signed_doppler(&self, natural: usize) -> i64 {
        signed_index(natural, self.k_dft)
    }
}

pub(crate) fn signed_index(natural: usize, len: usize) -> i64 {
    if natural < len.div_ceil(2) {
        natural as i64
    } else {
        natural as i64 - len as i64
    }
}

pub(crate) fn natural_index(signed: i64, len: usize) -> usize {
    signed.rem_euclid(len as i64) as usize
}

/// Places the frame in the top-left block of an `N_DFT x K_DFT` zero matrix.
pub fn zero_pad(frame: ArrayView2<'_, Complex64>, plan: &DftPlan) -> Result<Array2<Complex64>> {
    let (n, k) = frame.dim();
    plan.check_frame(n, k)?;
    let mut out = Array2::zeros((plan.n_dft, plan.k_dft));
    out.slice_mut(s![..n, ..k]).assign(&frame);
    Ok(out)
}

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window: WindowKind,
    pub plan: DftPlan,
    /// Half-width `Delta` of the delay window averaged for the beam power, s.
    pub power_window: f64,
    /// Delay bins closer than this distance are excluded from the peak search, m.
    pub min_distance: f64,
    /// RIS loop-back latency subtracted from the selected delay, s.
    pub loopback_delay: f64,
}

impl PipelineConfig {
    pub fn validate(&self, wf: &Waveform) -> Result<()> {
        self.plan.check_frame(wf.samples_per_chirp, wf.chirps_per_frame)?;
        ensure_positive("pipeline.power_window_s", self.power_window)?;
        ensure_non_negative("pipeline.min_distance_m", self.min_distance)?;
        ensure_non_negative("ris.loopback_delay_s", self.loopback_delay)?;
        Ok(())
    }

    pub fn window_specs(&self, wf: &Waveform) -> Result<(WindowSpec, WindowSpec)> {
        Ok((
            WindowSpec::new(self.window, wf.samples_per_chirp)?,
            WindowSpec::new(self.window, wf.chirps_per_frame)?,
        ))
    }
}

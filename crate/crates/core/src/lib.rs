//! Simulation and estimation toolkit for self-localization of a monostatic
//! FMCW radar against a reconfigurable intelligent surface (RIS) landmark.
//!
//! The crate is organised along the processing chain:
//!
//! - [`geometry`]: directions, positions, array layouts, wavenumber and
//!   steering vectors, RIS phase profiles.
//! - [`channel`]: link budget and synthesis of the beat-signal cube
//!   `Y[n, k, m]` (ADC sample, chirp, sweep angle).
//! - [`dsp`]: windowing, zero padding, delay-Doppler maps, gating, peak
//!   extraction, beam power and the full sweep estimator.
//! - [`localization`]: position estimate from distance and angle of
//!   departure, error metrics.
//! - [`experiments`]: Monte Carlo studies and single-run diagnostics.
//! - [`config`] and [`io`]: scenario files, cube/capture files and CSV output.

pub mod channel;
pub mod config;
pub mod dsp;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod localization;

pub use error::{Error, Result};

pub use channel::{BeatCube, LinkBudget, PathKind, PathSpec, SweepPlan, Waveform};
pub use config::ScenarioConfig;
pub use dsp::{DelayDopplerMap, DftPlan, PipelineConfig, SweepResult, WindowKind, WindowSpec};
pub use geometry::{ArrayLayout, Direction, Orientation, Position3, Vec3, SPEED_OF_LIGHT};
pub use localization::{ErrorReport, GroundTruth, LocalizationEstimate};

//! Beat-signal synthesis for the RIS loopback path, passive targets and
//! transmitter leakage, plus the radar-equation link budget.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, ArrayViewMut2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::geometry::{ris_beam_gain, ArrayLayout, Direction, SPEED_OF_LIGHT};

/// RNG stream reserved for per-run path phases; streams `0..M` carry the
/// per-sweep-angle noise.
const PHASE_STREAM: u64 = u64::MAX;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// FMCW chirp parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub chirp_duration: f64,
    pub sample_period: f64,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
}

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("waveform.carrier_freq_hz", self.carrier_freq)?;
        ensure_positive("waveform.bandwidth_hz", self.bandwidth)?;
        ensure_positive("waveform.chirp_duration_s", self.chirp_duration)?;
        ensure_positive("waveform.sample_period_s", self.sample_period)?;
        if self.samples_per_chirp == 0 {
            return Err(Error::invalid("waveform.samples_per_chirp", "must be >= 1"));
        }
        if self.chirps_per_frame == 0 {
            return Err(Error::invalid("waveform.chirps_per_frame", "must be >= 1"));
        }
        let swept = self.slope() * self.samples_per_chirp as f64 * self.sample_period;
        if swept > self.bandwidth * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "waveform.chirp_duration_s",
                format!("sampled sweep {swept:e} Hz exceeds bandwidth {:e} Hz", self.bandwidth),
            ));
        }
        Ok(())
    }

    /// Chirp slope `S = B / T`, Hz/s.
    pub fn slope(&self) -> f64 {
        self.bandwidth / self.chirp_duration
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// Retransmission through the RIS; scaled by the per-angle beam gain.
    RisLoopback,
    Target,
    Leakage,
}

/// One propagation path of the beat-signal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub kind: PathKind,
    /// One-way distance, metres.
    pub distance: f64,
    /// Radial velocity, m/s (positive = receding).
    pub radial_velocity: f64,
    /// `|gamma|^2`, watts at the receiver.
    pub gain_sq: f64,
    /// `arg(gamma)`, radians.
    pub phase: f64,
    /// Delay added on top of the round trip `2 d / c` (RIS loop-back latency).
    pub excess_delay: f64,
}

impl PathSpec {
    pub fn new(kind: PathKind, distance: f64, gain_sq: f64) -> Self {
        Self {
            kind,
            distance,
            radial_velocity: 0.0,
            gain_sq,
            phase: 0.0,
            excess_delay: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("path.distance", self.distance)?;
        ensure_non_negative("path.gain_sq", self.gain_sq)?;
        ensure_finite("path.radial_velocity", self.radial_velocity)?;
        ensure_finite("path.phase", self.phase)?;
        ensure_non_negative("path.excess_delay", self.excess_delay)?;
        Ok(())
    }

    /// Round-trip delay `tau = 2 d / c` plus the excess delay.
    pub fn delay(&self) -> f64 {
        2.0 * self.distance / SPEED_OF_LIGHT + self.excess_delay
    }

    /// Doppler shift in the normalized form `nu = 2 v / c`.
    pub fn doppler(&self) -> f64 {
        2.0 * self.radial_velocity / SPEED_OF_LIGHT
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.gain_sq.sqrt(), self.phase)
    }
}

/// Ordered RIS steering directions, one per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub angles: Vec<Direction>,
}

impl SweepPlan {
    pub fn new(angles: Vec<Direction>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::invalid("sweep", "at least one sweep angle is required"));
        }
        Ok(Self { angles })
    }

    /// Azimuth grid `start, start + step, ...` up to and including `stop`
    /// (within a 1e-9 step tolerance) at fixed elevation; degrees in.
    pub fn azimuth_grid(start_deg: f64, stop_deg: f64, step_deg: f64, elevation_deg: f64) -> Result<Self> {
        ensure_finite("sweep.azimuth_start_deg", start_deg)?;
        ensure_finite("sweep.azimuth_stop_deg", stop_deg)?;
        ensure_positive("sweep.azimuth_step_deg", step_deg)?;
        if stop_deg < start_deg {
            return Err(Error::invalid("sweep.azimuth_stop_deg", "must be >= azimuth_start_deg"));
        }
        let count = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
        let angles = (0..count)
            .map(|i| Direction::from_degrees(start_deg + i as f64 * step_deg, elevation_deg))
            .collect::<Result<Vec<_>>>()?;
        Self::new(angles)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Index of the grid angle with the smallest angular separation from
    /// `dir`; ties go to the smaller index.
    pub fn nearest(&self, dir: &Direction) -> usize {
        let mut best = 0;
        let mut best_sep = f64::INFINITY;
        for (i, a) in self.angles.iter().enumerate() {
            let sep = a.angle_to(dir);
            if sep < best_sep {
                best = i;
                best_sep = sep;
            }
        }
        best
    }
}

/// Complex beat samples indexed `[m, n, k]` (sweep angle, ADC sample, chirp).
#[derive(Debug, Clone, PartialEq)]
pub struct BeatCube {
    pub samples: Array3<Complex64>,
    pub waveform: Waveform,
    pub plan: SweepPlan,
}

impl BeatCube {
    pub fn new(samples: Array3<Complex64>, waveform: Waveform, plan: SweepPlan) -> Result<Self> {
        let (m, n, k) = samples.dim();
        if m != plan.len() || n != waveform.samples_per_chirp || k != waveform.chirps_per_frame {
            return Err(Error::DimensionMismatch(format!(
                "cube is {m}x{n}x{k} (M x N x K) but waveform/plan declare {}x{}x{}",
                plan.len(),
                waveform.samples_per_chirp,
                waveform.chirps_per_frame
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("cube", "contains non-finite samples"));
        }
        Ok(Self { samples, waveform, plan })
    }

    pub fn zeros(waveform: Waveform, plan: SweepPlan) -> Self {
        let samples = Array3::zeros((plan.len(), waveform.samples_per_chirp, waveform.chirps_per_frame));
        Self { samples, waveform, plan }
    }

    pub fn n_angles(&self) -> usize {
        self.samples.dim().0
    }

    /// `N x K` frame for sweep angle `m`.
    pub fn frame(&self, m: usize) -> ndarray::ArrayView2<'_, Complex64> {
        self.samples.index_axis(Axis(0), m)
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Transmit power, antenna gain, RIS amplification/loss and receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// `P`, watts.
    pub tx_power: f64,
    /// `G_trx`, linear.
    pub combined_gain: f64,
    /// `zeta = L_loss * alpha_RIS`, linear.
    pub ris_loop_factor: f64,
    /// `sigma_N^2`, total complex noise power per sample, watts.
    pub noise_power: f64,
}

impl LinkBudget {
    pub fn from_db(tx_power_dbm: f64, gain_dbi: f64, ris_loop_factor_db: f64, noise_power_dbm: f64) -> Self {
        Self {
            tx_power: dbm_to_watts(tx_power_dbm),
            combined_gain: db_to_linear(gain_dbi),
            ris_loop_factor: db_to_linear(ris_loop_factor_db),
            noise_power: dbm_to_watts(noise_power_dbm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("link.tx_power", self.tx_power)?;
        ensure_non_negative("link.combined_gain", self.combined_gain)?;
        ensure_non_negative("link.ris_loop_factor", self.ris_loop_factor)?;
        ensure_non_negative("link.noise_power", self.noise_power)?;
        Ok(())
    }
}

/// Radar-equation echo power `P G S lambda^2 / ((4 pi)^3 d^4)`.
pub fn target_gain_sq(budget: &LinkBudget, rcs: f64, d: f64, wavelength: f64) -> Result<f64> {
    ensure_positive("distance", d)?;
    ensure_non_negative("rcs", rcs)?;
    ensure_positive("wavelength", wavelength)?;
    let four_pi = 4.0 * PI;
    Ok(budget.tx_power * budget.combined_gain * rcs * wavelength * wavelength / (four_pi.powi(3) * d.powi(4)))
}

/// One-way free-space gain `(lambda / (4 pi d))^2`.
pub fn one_way_gain_sq(d: f64, wavelength: f64) -> Result<f64> {
    ensure_positive("distance", d)?;
    ensure_positive("wavelength", wavelength)?;
    Ok((wavelength / (4.0 * PI * d)).powi(2))
}

/// RIS loopback power `P G |g_UR|^2 zeta |g_RU|^2` before the beam gain.
pub fn ris_loopback_gain_sq(budget: &LinkBudget, d0: f64, wavelength: f64) -> Result<f64> {
    let one_way = one_way_gain_sq(d0, wavelength)?;
    Ok(budget.tx_power * budget.combined_gain * one_way * budget.ris_loop_factor * one_way)
}

/// Fully resolved physical description consumed by [`synthesize_scene`].
#[derive(Debug, Clone)]
pub struct Scene {
    pub waveform: Waveform,
    pub plan: SweepPlan,
    pub layout: ArrayLayout,
    /// True angle of departure at the RIS, local frame.
    pub ris_direction: Direction,
    pub paths: Vec<PathSpec>,
    pub noise_power: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.waveform.validate()?;
        if self.plan.is_empty() {
            return Err(Error::invalid("sweep", "empty sweep plan"));
        }
        for p in &self.paths {
            p.validate()?;
        }
        ensure_non_negative("noise_power", self.noise_power)?;
        Ok(())
    }

    /// Per-path complex coefficient for sweep angle `m`.
    fn coefficient(&self, path: &PathSpec, beam_gains: &[Complex64], m: usize) -> Complex64 {
        match path.kind {
            PathKind::RisLoopback => path.amplitude() * beam_gains[m],
            PathKind::Target | PathKind::Leakage => path.amplitude(),
        }
    }
}

/// Fast-time tone `exp(-j 2 pi (S tau + f_c nu) n T_s)` and slow-time tone
/// `exp(-j 2 pi f_c nu k T)` of one path.
fn path_tones(wf: &Waveform, path: &PathSpec) -> (Vec<Complex64>, Vec<Complex64>) {
    let nu = path.doppler();
    let fast = (wf.slope() * path.delay() + wf.carrier_freq * nu) * wf.sample_period;
    let slow = wf.carrier_freq * nu * wf.chirp_duration;
    let tone = |cycles_per_step: f64, len: usize| -> Vec<Complex64> {
        (0..len)
            .map(|i| {
                let c = cycles_per_step * i as f64;
                Complex64::from_polar(1.0, -2.0 * PI * (c - c.round()))
            })
            .collect()
    };
    (tone(fast, wf.samples_per_chirp), tone(slow, wf.chirps_per_frame))
}

fn add_tone(frame: &mut ArrayViewMut2<'_, Complex64>, coeff: Complex64, fast: &[Complex64], slow: &[Complex64]) {
    if coeff == Complex64::new(0.0, 0.0) {
        return;
    }
    for (mut row, f) in frame.outer_iter_mut().zip(fast) {
        let cf = coeff * f;
        for (y, s) in row.iter_mut().zip(slow) {
            *y += cf * s;
        }
    }
}

fn fill_noise(frame: &mut ArrayViewMut2<'_, Complex64>, noise_power: f64, seed: u64, m: usize) {
    if noise_power == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    let sigma = (noise_power / 2.0).sqrt();
    for y in frame.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *y += Complex64::new(sigma * re, sigma * im);
    }
}

/// Noisy beat cube for a resolved scene. Frame `m` draws its noise from the
/// counter-based stream `(seed, m)`, so the result does not depend on how the
/// frames are scheduled.
pub fn synthesize_scene(scene: &Scene, seed: u64) -> Result<BeatCube> {
    scene.validate()?;
    let wf = scene.waveform;
    let wavelength = wf.wavelength();
    let beam_gains = scene
        .plan
        .angles
        .iter()
        .map(|phi| ris_beam_gain(&scene.layout, &scene.ris_direction, phi, wavelength))
        .collect::<Result<Vec<_>>>()?;
    let tones: Vec<_> = scene.paths.iter().map(|p| path_tones(&wf, p)).collect();

    let mut cube = BeatCube::zeros(wf, scene.plan.clone());
    cube.samples
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(m, mut frame)| {
            fill_noise(&mut frame, scene.noise_power, seed, m);
            for (path, (fast, slow)) in scene.paths.iter().zip(&tones) {
                add_tone(&mut frame, scene.coefficient(path, &beam_gains, m), fast, slow);
            }
        });
    if cube.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("paths", "synthesis produced non-finite samples"));
    }
    Ok(cube)
}

/// Draws uniform path phases from the run's dedicated phase stream.
pub fn randomize_phases(paths: &mut [PathSpec], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PHASE_STREAM);
    for p in paths.iter_mut() {
        p.phase = rng.random_range(-PI..PI);
    }
}

/// Synthesizes the beat cube of a configured scenario, including the optional
/// leakage tone. Deterministic in `(scenario, seed)`.
pub fn synthesize(scenario: &ScenarioConfig, seed: u64) -> Result<BeatCube> {
    scenario.synthesize(seed)
}

/// Adds a static transmit-to-receive leakage tone at `delay` seconds to every
/// frame.
pub fn add_leakage(mut cube: BeatCube, gain_sq: f64, delay: f64) -> Result<BeatCube> {
    ensure_non_negative("leakage.delay", delay)?;
    ensure_non_negative("leakage.gain_sq", gain_sq)?;
    let path = PathSpec {
        excess_delay: delay,
        ..PathSpec::new(PathKind::Leakage, 0.0, gain_sq)
    };
    let (fast, slow) = path_tones(&cube.waveform, &path);
    let coeff = path.amplitude();
    for mut frame in cube.samples.axis_iter_mut(Axis(0)) {
        add_tone(&mut frame, coeff, &fast, &slow);
    }
    Ok(cube)
}

/// Single noiseless frame of one path, `N x K`; handy for tests and probes.
pub fn path_frame(wf: &Waveform, path: &PathSpec, coeff: Complex64) -> Array2<Complex64> {
    let (fast, slow) = path_tones(wf, path);
    let mut frame = Array2::zeros((wf.samples_per_chirp, wf.chirps_per_frame));
    add_tone(&mut frame.view_mut(), coeff, &fast, &slow);
    frame
}

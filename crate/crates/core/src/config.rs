//! Scenario files (TOML). Every field has a default, and an empty file
//! yields the reference 60 GHz setup: a 16x4 RIS 13.38 m in front of the
//! radar, 20 dBm transmit power, 600 samples x 128 chirps, and a
//! 1199 x 4793 transform.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{
    add_leakage, dbm_to_watts, randomize_phases, ris_loopback_gain_sq, synthesize_scene, target_gain_sq, BeatCube,
    LinkBudget, PathKind, PathSpec, Scene, SweepPlan, Waveform,
};
use crate::dsp::{DftPlan, PipelineConfig, WindowKind};
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::geometry::{make_upa, ArrayLayout, Orientation, Vec3, SPEED_OF_LIGHT};
use crate::localization::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveformSection {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub if_bandwidth_hz: f64,
    /// Defaults to `1 / if_bandwidth_hz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_period_s: Option<f64>,
    /// Defaults to `samples_per_chirp * sample_period_s`, i.e. the sampled
    /// part of the chirp spans the full bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirp_duration_s: Option<f64>,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 60e9,
            bandwidth_hz: 3.4345e9,
            if_bandwidth_hz: 10e6,
            sample_period_s: None,
            chirp_duration_s: None,
            samples_per_chirp: 600,
            chirps_per_frame: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub azimuth_start_deg: f64,
    pub azimuth_stop_deg: f64,
    pub azimuth_step_deg: f64,
    pub elevation_deg: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            azimuth_start_deg: -45.0,
            azimuth_stop_deg: 45.0,
            azimuth_step_deg: 1.5,
            elevation_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UeSection {
    pub position_m: [f64; 3],
    /// Radial velocity relative to the RIS, m/s (positive = receding).
    pub radial_velocity_mps: f64,
}

impl Default for UeSection {
    fn default() -> Self {
        Self {
            position_m: [0.0, 0.0, 0.0],
            radial_velocity_mps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisSection {
    pub position_m: [f64; 3],
    /// Array normal in global coordinates; defaults to pointing at the UE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 3]>,
    pub elements_az: usize,
    pub elements_el: usize,
    /// Defaults to half a wavelength.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub element_spacing_m: Option<f64>,
    pub loopback_delay_s: f64,
    /// Passive echo off the RIS hardware, modeled as a target at the RIS.
    pub structural_reflection: bool,
    pub structural_rcs_m2: f64,
}

impl Default for RisSection {
    fn default() -> Self {
        Self {
            position_m: [0.0, 13.38, 0.0],
            normal: None,
            elements_az: 16,
            elements_el: 4,
            element_spacing_m: None,
            loopback_delay_s: 1.78e-9,
            structural_reflection: true,
            structural_rcs_m2: 19.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub ris_loop_factor_db: f64,
    pub noise_power_dbm: f64,
    /// When false the cube is noiseless.
    pub noise: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            antenna_gain_dbi: 4.7712,
            ris_loop_factor_db: 45.532,
            noise_power_dbm: -63.64,
            noise: true,
        }
    }
}

impl LinkSection {
    pub fn budget(&self) -> LinkBudget {
        let mut b = LinkBudget::from_db(self.tx_power_dbm, self.antenna_gain_dbi, self.ris_loop_factor_db, self.noise_power_dbm);
        if !self.noise {
            b.noise_power = 0.0;
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeakageSection {
    pub enabled: bool,
    pub power_dbm: f64,
    pub distance_m: f64,
}

impl Default for LeakageSection {
    fn default() -> Self {
        Self {
            enabled: false,
            power_dbm: -70.0,
            distance_m: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub distance_m: f64,
    #[serde(default)]
    pub velocity_mps: f64,
    pub rcs_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub window: WindowKind,
    pub n_dft: usize,
    pub k_dft: usize,
    /// `Delta` of the beam-power window, seconds.
    pub power_window_s: f64,
    pub min_distance_m: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            n_dft: 1199,
            k_dft: 4793,
            power_window_s: 0.33e-9,
            min_distance_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Draw uniform path phases per seed; otherwise all phases are zero.
    pub random_phases: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { random_phases: true }
    }
}

/// Complete scenario: waveform, sweep, geometry, link budget, extra paths and
/// estimator settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub waveform: WaveformSection,
    pub sweep: SweepSection,
    pub ue: UeSection,
    pub ris: RisSection,
    pub link: LinkSection,
    pub leakage: LeakageSection,
    pub pipeline: PipelineSection,
    pub simulation: SimulationSection,
    pub targets: Vec<TargetSection>,
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn waveform(&self) -> Waveform {
        let w = &self.waveform;
        let sample_period = w.sample_period_s.unwrap_or(1.0 / w.if_bandwidth_hz);
        Waveform {
            carrier_freq: w.carrier_freq_hz,
            bandwidth: w.bandwidth_hz,
            chirp_duration: w.chirp_duration_s.unwrap_or(w.samples_per_chirp as f64 * sample_period),
            sample_period,
            samples_per_chirp: w.samples_per_chirp,
            chirps_per_frame: w.chirps_per_frame,
        }
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let s = &self.sweep;
        SweepPlan::azimuth_grid(s.azimuth_start_deg, s.azimuth_stop_deg, s.azimuth_step_deg, s.elevation_deg)
    }

    pub fn element_spacing(&self) -> f64 {
        self.ris.element_spacing_m.unwrap_or(self.waveform().wavelength() / 2.0)
    }

    pub fn layout(&self) -> Result<ArrayLayout> {
        make_upa(self.ris.elements_az, self.ris.elements_el, self.element_spacing())
    }

    pub fn ue_position(&self) -> Vec3 {
        Vec3::from_array(self.ue.position_m)
    }

    pub fn ris_position(&self) -> Vec3 {
        Vec3::from_array(self.ris.position_m)
    }

    pub fn ris_orientation(&self) -> Result<Orientation> {
        let normal = match self.ris.normal {
            Some(n) => Vec3::from_array(n),
            None => self.ue_position() - self.ris_position(),
        };
        Orientation::facing(normal).map_err(|_| Error::invalid("ris.normal", "must be a non-zero vector"))
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        GroundTruth::new(self.ue_position(), self.ris_position(), &self.ris_orientation()?)
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        Ok(PipelineConfig {
            window: p.window,
            plan: DftPlan::new(p.n_dft, p.k_dft)?,
            power_window: p.power_window_s,
            min_distance: p.min_distance_m,
            loopback_delay: self.ris.loopback_delay_s,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.waveform;
        ensure_positive("waveform.if_bandwidth_hz", w.if_bandwidth_hz)?;
        if let Some(t) = w.sample_period_s {
            ensure_positive("waveform.sample_period_s", t)?;
        }
        if let Some(t) = w.chirp_duration_s {
            ensure_positive("waveform.chirp_duration_s", t)?;
        }
        let wf = self.waveform();
        wf.validate()?;
        self.sweep_plan()?;
        for (field, v) in [("ue.position_m", self.ue.position_m), ("ris.position_m", self.ris.position_m)] {
            for x in v {
                ensure_finite(field, x)?;
            }
        }
        ensure_finite("ue.radial_velocity_mps", self.ue.radial_velocity_mps)?;
        if self.ue_position().distance(self.ris_position()) <= 0.0 {
            return Err(Error::invalid("ue.position_m", "UE and RIS must not coincide"));
        }
        if let Some(s) = self.ris.element_spacing_m {
            ensure_positive("ris.element_spacing_m", s)?;
        }
        if self.ris.elements_az == 0 {
            return Err(Error::invalid("ris.elements_az", "must be >= 1"));
        }
        if self.ris.elements_el == 0 {
            return Err(Error::invalid("ris.elements_el", "must be >= 1"));
        }
        self.ris_orientation()?;
        ensure_non_negative("ris.loopback_delay_s", self.ris.loopback_delay_s)?;
        ensure_non_negative("ris.structural_rcs_m2", self.ris.structural_rcs_m2)?;
        let l = &self.link;
        for (field, v) in [
            ("link.tx_power_dbm", l.tx_power_dbm),
            ("link.antenna_gain_dbi", l.antenna_gain_dbi),
            ("link.ris_loop_factor_db", l.ris_loop_factor_db),
            ("link.noise_power_dbm", l.noise_power_dbm),
            ("leakage.power_dbm", self.leakage.power_dbm),
        ] {
            ensure_finite(field, v)?;
        }
        ensure_non_negative("leakage.distance_m", self.leakage.distance_m)?;
        for t in &self.targets {
            ensure_positive("targets.distance_m", t.distance_m)?;
            ensure_finite("targets.velocity_mps", t.velocity_mps)?;
            ensure_non_negative("targets.rcs_m2", t.rcs_m2)?;
        }
        let p = &self.pipeline;
        if p.n_dft < w.samples_per_chirp {
            return Err(Error::invalid(
                "pipeline.n_dft",
                format!("{} is smaller than waveform.samples_per_chirp {}", p.n_dft, w.samples_per_chirp),
            ));
        }
        if p.k_dft < w.chirps_per_frame {
            return Err(Error::invalid(
                "pipeline.k_dft",
                format!("{} is smaller than waveform.chirps_per_frame {}", p.k_dft, w.chirps_per_frame),
            ));
        }
        self.pipeline()?.validate(&wf)
    }

    /// Propagation paths before phase randomization (leakage excluded; it is
    /// added by [`crate::channel::add_leakage`]).
    pub fn paths(&self) -> Result<Vec<PathSpec>> {
        let wavelength = self.waveform().wavelength();
        let budget = self.link.budget();
        let d0 = self.ue_position().distance(self.ris_position());
        let v0 = self.ue.radial_velocity_mps;
        let mut paths = vec![PathSpec {
            radial_velocity: v0,
            excess_delay: self.ris.loopback_delay_s,
            ..PathSpec::new(PathKind::RisLoopback, d0, ris_loopback_gain_sq(&budget, d0, wavelength)?)
        }];
        if self.ris.structural_reflection {
            paths.push(PathSpec {
                radial_velocity: v0,
                ..PathSpec::new(
                    PathKind::Target,
                    d0,
                    target_gain_sq(&budget, self.ris.structural_rcs_m2, d0, wavelength)?,
                )
            });
        }
        for t in &self.targets {
            paths.push(PathSpec {
                radial_velocity: t.velocity_mps,
                ..PathSpec::new(
                    PathKind::Target,
                    t.distance_m,
                    target_gain_sq(&budget, t.rcs_m2, t.distance_m, wavelength)?,
                )
            });
        }
        Ok(paths)
    }

    /// Resolved scene for `seed` (phases drawn from the seed when enabled).
    pub fn scene(&self, seed: u64) -> Result<Scene> {
        self.validate()?;
        let mut paths = self.paths()?;
        if self.simulation.random_phases {
            randomize_phases(&mut paths, seed);
        }
        Ok(Scene {
            waveform: self.waveform(),
            plan: self.sweep_plan()?,
            layout: self.layout()?,
            ris_direction: self.ground_truth()?.aod,
            paths,
            noise_power: self.link.budget().noise_power,
        })
    }

    /// Scene synthesis plus the optional leakage tone.
    pub fn synthesize(&self, seed: u64) -> Result<BeatCube> {
        let cube = synthesize_scene(&self.scene(seed)?, seed)?;
        if self.leakage.enabled {
            add_leakage(
                cube,
                dbm_to_watts(self.leakage.power_dbm),
                2.0 * self.leakage.distance_m / SPEED_OF_LIGHT,
            )
        } else {
            Ok(cube)
        }
    }
}

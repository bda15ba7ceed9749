//! Monte Carlo error studies (MAE versus transmit power, RIS beam step and
//! RIS size) and single-run diagnostics (delay-velocity map, beam-power
//! profile, distance profile).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::dsp::{estimate, DelayDopplerMap, FrameProcessor, Peak, SweepResult};
use crate::error::{Error, Result};
use crate::geometry::{direction_to_global, Direction};
use crate::localization::{error_report, ErrorReport, GroundTruth, LocalizationEstimate};

/// RNG stream used to draw the randomized UE placement of a run.
const PLACEMENT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyParameter {
    TxPower,
    BeamStep,
    RisElements,
}

impl StudyParameter {
    pub fn name(&self) -> &'static str {
        match self {
            StudyParameter::TxPower => "tx_power",
            StudyParameter::BeamStep => "beam_step",
            StudyParameter::RisElements => "n_ris_elements",
        }
    }
}

impl fmt::Display for StudyParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tx_power" => Ok(StudyParameter::TxPower),
            "beam_step" => Ok(StudyParameter::BeamStep),
            "n_ris_elements" | "ris_elements" => Ok(StudyParameter::RisElements),
            other => Err(Error::invalid(
                "sweep-param",
                format!("unknown parameter `{other}` (expected tx_power, beam_step or n_ris_elements)"),
            )),
        }
    }
}

/// One swept value: dBm for `tx_power`, degrees for `beam_step`, an
/// `AZxEL` element grid for `n_ris_elements`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Scalar(f64),
    Grid { az: usize, el: usize },
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Scalar(v) => write!(f, "{v}"),
            ParamValue::Grid { az, el } => write!(f, "{az}x{el}"),
        }
    }
}

impl ParamValue {
    pub fn parse(parameter: StudyParameter, text: &str) -> Result<Self> {
        let text = text.trim();
        match parameter {
            StudyParameter::RisElements => {
                let (a, e) = text
                    .split_once(['x', 'X'])
                    .ok_or_else(|| Error::invalid("values", format!("`{text}` is not an AZxEL element grid")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::invalid("values", format!("`{text}` is not an AZxEL element grid")))
                };
                Ok(ParamValue::Grid { az: parse(a)?, el: parse(e)? })
            }
            _ => text
                .parse::<f64>()
                .map(ParamValue::Scalar)
                .map_err(|_| Error::invalid("values", format!("`{text}` is not a number"))),
        }
    }

    pub fn parse_list(parameter: StudyParameter, list: &str) -> Result<Vec<Self>> {
        list.split(',').filter(|s| !s.trim().is_empty()).map(|s| Self::parse(parameter, s)).collect()
    }
}

/// How the UE is placed in each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    /// The scenario's geometry as configured.
    Fixed,
    /// UE at the configured RIS distance, true azimuth drawn uniformly from
    /// `[-half_range_deg, half_range_deg]` around the RIS normal.
    RandomAod { half_range_deg: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStudy {
    pub parameter: StudyParameter,
    pub values: Vec<ParamValue>,
    pub runs_per_point: usize,
    pub base: ScenarioConfig,
    pub master_seed: u64,
    pub placement: Placement,
    pub keep_records: bool,
}

impl SweepStudy {
    pub fn new(parameter: StudyParameter, values: Vec<ParamValue>, runs_per_point: usize, base: ScenarioConfig, master_seed: u64) -> Self {
        Self {
            parameter,
            values,
            runs_per_point,
            base,
            master_seed,
            placement: Placement::Fixed,
            keep_records: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub value_index: usize,
    pub run: usize,
    pub seed: u64,
    pub truth: GroundTruth,
    pub estimate: LocalizationEstimate,
    pub errors: ErrorReport,
}

/// Mean absolute error with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mae {
    pub mean: f64,
    pub std_error: f64,
}

impl Mae {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    pub value: ParamValue,
    pub runs: usize,
    /// Runs whose synthesis or estimation failed.
    pub failures: usize,
    pub distance: Mae,
    /// Radians.
    pub angle: Mae,
    pub position: Mae,
    /// Set when the derived scenario itself was invalid.
    pub error: Option<String>,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub parameter: StudyParameter,
    pub points: Vec<StudyPoint>,
}

/// Seed of run `run` at value index `value_index`. The 64-bit SplitMix
/// finalizer is a bijection, so distinct `(value_index, run)` pairs with
/// `run < runs_per_point` get distinct seeds.
pub fn run_seed(master_seed: u64, value_index: usize, run: usize, runs_per_point: usize) -> u64 {
    let counter = (value_index as u64).wrapping_mul(runs_per_point as u64).wrapping_add(run as u64);
    splitmix64(master_seed.wrapping_add(counter))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Base scenario with the swept parameter applied.
pub fn derive_scenario(base: &ScenarioConfig, parameter: StudyParameter, value: &ParamValue) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match (parameter, value) {
        (StudyParameter::TxPower, ParamValue::Scalar(v)) => cfg.link.tx_power_dbm = *v,
        (StudyParameter::BeamStep, ParamValue::Scalar(v)) => cfg.sweep.azimuth_step_deg = *v,
        (StudyParameter::RisElements, ParamValue::Grid { az, el }) => {
            cfg.ris.elements_az = *az;
            cfg.ris.elements_el = *el;
        }
        (p, v) => return Err(Error::invalid("values", format!("value {v} does not fit parameter {p}"))),
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Scenario for one run under `placement`. Random placement pins the RIS
/// orientation to the configured one and moves the UE.
pub fn place_run(cfg: &ScenarioConfig, placement: Placement, seed: u64) -> Result<ScenarioConfig> {
    match placement {
        Placement::Fixed => Ok(cfg.clone()),
        Placement::RandomAod { half_range_deg } => {
            let orient = cfg.ris_orientation()?;
            let truth = cfg.ground_truth()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(PLACEMENT_STREAM);
            let h = half_range_deg.abs();
            let az = if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
            let dir = Direction::from_degrees(az, truth.aod.elevation.to_degrees())?;
            let ue = direction_to_global(&dir, truth.distance, cfg.ris_position(), &orient)?;
            let mut out = cfg.clone();
            out.ris.normal = Some(orient.normal().to_array());
            out.ue.position_m = ue.to_array();
            Ok(out)
        }
    }
}

/// Simulate, estimate, localize and score one run.
pub fn run_once(cfg: &ScenarioConfig, seed: u64) -> Result<(SweepResult, LocalizationEstimate, GroundTruth, ErrorReport)> {
    let cube = cfg.synthesize(seed)?;
    let sweep = estimate(&cube, &cfg.pipeline()?)?;
    let est = LocalizationEstimate::from_sweep(&sweep, cfg.ris_position(), &cfg.ris_orientation()?)?;
    let truth = cfg.ground_truth()?;
    let errors = error_report(&est, &truth)?;
    Ok((sweep, est, truth, errors))
}

fn run_point(study: &SweepStudy, value_index: usize, value: &ParamValue) -> StudyPoint {
    let mut point = StudyPoint {
        value: *value,
        runs: study.runs_per_point,
        failures: 0,
        distance: Mae::default(),
        angle: Mae::default(),
        position: Mae::default(),
        error: None,
        records: Vec::new(),
    };
    let cfg = match derive_scenario(&study.base, study.parameter, value) {
        Ok(c) => c,
        Err(e) => {
            point.error = Some(e.to_string());
            point.failures = study.runs_per_point;
            return point;
        }
    };
    let outcomes: Vec<Result<RunRecord>> = (0..study.runs_per_point)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(study.master_seed, value_index, run, study.runs_per_point);
            let placed = place_run(&cfg, study.placement, seed)?;
            let (_, estimate, truth, errors) = run_once(&placed, seed)?;
            Ok(RunRecord { value_index, run, seed, truth, estimate, errors })
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => {
                point.failures += 1;
                point.error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let pick = |f: fn(&ErrorReport) -> f64| records.iter().map(|r| f(&r.errors)).collect::<Vec<_>>();
    point.distance = Mae::of(&pick(|e| e.distance_error));
    point.angle = Mae::of(&pick(|e| e.angle_error));
    point.position = Mae::of(&pick(|e| e.position_error));
    if study.keep_records {
        point.records = records;
    }
    point
}

/// Runs every (value, run) pair; invalid values are reported on their point
/// without aborting the study. Deterministic in the study definition.
pub fn run_study(study: &SweepStudy) -> Result<StudyResult> {
    if study.values.is_empty() {
        return Err(Error::invalid("values", "at least one value is required"));
    }
    if study.runs_per_point == 0 {
        return Err(Error::invalid("runs", "must be >= 1"));
    }
    let points = study
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| run_point(study, i, v))
        .collect();
    Ok(StudyResult { parameter: study.parameter, points })
}

/// Single-run outputs: delay-velocity map at the selected beam, beam-power
/// profile over the sweep, and the distance profile at zero Doppler.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub sweep: SweepResult,
    pub map: DelayDopplerMap,
    /// `(distance_m, |z|^2)` along the zero-Doppler column of `map`.
    pub distance_profile: Vec<(f64, f64)>,
}

impl Diagnostics {
    /// `(direction, P_ave)` per sweep angle.
    pub fn beam_profile(&self) -> Vec<(Direction, f64)> {
        self.sweep.per_angle.iter().map(|a| (a.direction, a.avg_power)).collect()
    }
}

pub fn diagnostic_run(scenario: &ScenarioConfig, seed: u64) -> Result<Diagnostics> {
    let cube = scenario.synthesize(seed)?;
    let pipeline = scenario.pipeline()?;
    let sweep = estimate(&cube, &pipeline)?;
    let proc = FrameProcessor::new(&cube.waveform, &pipeline)?;
    let map = proc.map(cube.frame(sweep.selected))?;
    let step = sweep.distance_step();
    let distance_profile = map
        .delay_profile(0)
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as f64 * step, p))
        .collect();
    Ok(Diagnostics { sweep, map, distance_profile })
}

/// Indices of local maxima (greater than the left neighbour, not smaller than
/// the right one) within `threshold_db` of the global maximum.
pub fn profile_peaks(profile: &[f64], threshold_db: f64) -> Vec<usize> {
    let max = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = max * 10f64.powf(-threshold_db / 10.0);
    (0..profile.len())
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { profile[i - 1] };
            let right = profile.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            profile[i] > left && profile[i] >= right && profile[i] >= floor
        })
        .collect()
}

/// The `count` largest 2D local maxima of `|z|^2` (8-neighbourhood; the
/// Doppler axis wraps), in decreasing power.
pub fn map_peaks(map: &DelayDopplerMap, count: usize) -> Vec<Peak> {
    let power = map.values().mapv(|z| z.norm_sqr());
    let (nd, nk) = power.dim();
    let mut peaks = Vec::new();
    for i in 0..nd {
        for j in 0..nk {
            let p = power[[i, j]];
            if p == 0.0 {
                continue;
            }
            let mut is_max = true;
            'nb: for di in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                if ii < 0 || ii >= nd as i64 {
                    continue;
                }
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(nk as i64) as usize;
                    let q = power[[ii as usize, jj]];
                    // strict on one side so plateaus yield a single maximum
                    if q > p || (q == p && (ii as usize, jj) < (i, j)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                let s = crate::dsp::signed_index(j, nk);
                peaks.push(Peak {
                    delay_bin: i,
                    doppler_bin: s,
                    delay: map.delay(i),
                    doppler: map.doppler(s),
                    power: p,
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    peaks.truncate(count);
    peaks
}

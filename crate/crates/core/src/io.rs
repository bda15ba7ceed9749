//! File formats: the native cube container, int16 I/Q captures with a JSON
//! sidecar, and CSV emission of sweep results, studies and diagnostics.
//!
//! Native cube layout: the 8-byte magic `RISCUBE\x01`, a little-endian `u64`
//! header length, a JSON header (waveform, sweep plan, dimensions), then
//! `f64` little-endian `(re, im)` pairs with `n` fastest, then `k`, then `m`.
//!
//! Capture layout: `int16` little-endian `I` then `Q` per sample in the same
//! `n`, `k`, `m` order, so the file holds exactly `4 N K M` bytes. A sample
//! decodes to `scale * (I + jQ)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::channel::{BeatCube, SweepPlan, Waveform};
use crate::dsp::{DelayDopplerMap, SweepResult};
use crate::error::{Error, Result};
use crate::experiments::{Diagnostics, StudyResult};
use crate::geometry::{Direction, SPEED_OF_LIGHT};

const CUBE_MAGIC: &[u8; 8] = b"RISCUBE\x01";

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CubeHeader {
    waveform: Waveform,
    plan: SweepPlan,
    dims: [usize; 3],
}

/// Sample ordering shared by both binary formats: `n` fastest, then `k`,
/// then `m`.
fn ordered(cube: &Array3<Complex64>) -> impl Iterator<Item = Complex64> + '_ {
    let (m, n, k) = cube.dim();
    (0..m).flat_map(move |mi| (0..k).flat_map(move |ki| (0..n).map(move |ni| cube[[mi, ni, ki]])))
}

fn from_ordered(values: Vec<Complex64>, m: usize, n: usize, k: usize) -> Array3<Complex64> {
    let mut out = Array3::zeros((m, n, k));
    let mut it = values.into_iter();
    for mi in 0..m {
        for ki in 0..k {
            for ni in 0..n {
                out[[mi, ni, ki]] = it.next().expect("length checked by caller");
            }
        }
    }
    out
}

pub fn write_cube(cube: &BeatCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = serde_json::to_vec(&CubeHeader {
        waveform: cube.waveform,
        plan: cube.plan.clone(),
        dims: {
            let (m, n, k) = cube.samples.dim();
            [m, n, k]
        },
    })?;
    write_atomic(path, |w| {
        let io = |e| Error::io(path, e);
        w.write_all(CUBE_MAGIC).map_err(io)?;
        w.write_all(&(header.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&header).map_err(io)?;
        for z in ordered(&cube.samples) {
            w.write_all(&z.re.to_le_bytes()).map_err(io)?;
            w.write_all(&z.im.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    })
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<BeatCube> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != CUBE_MAGIC {
        return Err(Error::Capture(format!("{} is not a cube file", path.display())));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body_start = 16usize
        .checked_add(hlen)
        .filter(|&s| s <= bytes.len())
        .ok_or_else(|| Error::Capture("truncated header".into()))?;
    let header: CubeHeader = serde_json::from_slice(&bytes[16..body_start])?;
    let [m, n, k] = header.dims;
    let expected = m
        .checked_mul(n)
        .and_then(|x| x.checked_mul(k))
        .and_then(|x| x.checked_mul(16))
        .ok_or_else(|| Error::Capture("dimensions overflow".into()))?;
    let body = &bytes[body_start..];
    if body.len() != expected {
        return Err(Error::Capture(format!("payload is {} bytes, expected {expected}", body.len())));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    BeatCube::new(from_ordered(values, m, n, k), header.waveform, header.plan)
}

/// Capture sidecar. `sweep` lists the steering direction of every frame in
/// the file; `trim` is an optional default `[start, end)` frame range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    pub frames: usize,
    pub waveform: Waveform,
    pub sweep: Vec<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trim: Option<[usize; 2]>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl CaptureMeta {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_chirp != self.waveform.samples_per_chirp || self.chirps_per_frame != self.waveform.chirps_per_frame {
            return Err(Error::Capture("N/K disagree with the waveform".into()));
        }
        if self.sweep.len() != self.frames {
            return Err(Error::Capture(format!("{} sweep directions for {} frames", self.sweep.len(), self.frames)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::invalid("scale", format!("must be positive, got {}", self.scale)));
        }
        self.waveform.validate()
    }

    pub fn byte_len(&self) -> usize {
        4 * self.samples_per_chirp * self.chirps_per_frame * self.frames
    }
}

/// Parses `a:b` into `a..b`; either side may be empty (`:b`, `a:`).
pub fn parse_trim(text: &str, frames: usize) -> Result<Range<usize>> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| Error::invalid("trim", format!("`{text}` is not of the form a:b")))?;
    let num = |s: &str, default: usize| -> Result<usize> {
        if s.trim().is_empty() {
            Ok(default)
        } else {
            s.trim().parse().map_err(|_| Error::invalid("trim", format!("`{s}` is not a frame index")))
        }
    };
    Ok(num(a, 0)?..num(b, frames)?)
}

/// Quantizes a cube to int16 I/Q. With `scale = None` the largest component
/// maps to full scale. Returns the sidecar that was written.
pub fn export_capture(cube: &BeatCube, data_path: impl AsRef<Path>, meta_path: impl AsRef<Path>, scale: Option<f64>) -> Result<CaptureMeta> {
    let peak = cube.samples.iter().fold(0.0f64, |a, z| a.max(z.re.abs()).max(z.im.abs()));
    let scale = match scale {
        Some(s) => s,
        None if peak > 0.0 => peak / i16::MAX as f64,
        None => 1.0,
    };
    let (m, n, k) = cube.samples.dim();
    let meta = CaptureMeta {
        samples_per_chirp: n,
        chirps_per_frame: k,
        frames: m,
        waveform: cube.waveform,
        sweep: cube.plan.angles.clone(),
        trim: None,
        scale,
    };
    meta.validate()?;
    let q = |x: f64| (x / scale).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
    let data_path = data_path.as_ref();
    write_atomic(data_path, |w| {
        for z in ordered(&cube.samples) {
            w.write_all(&q(z.re).to_le_bytes()).map_err(|e| Error::io(data_path, e))?;
            w.write_all(&q(z.im).to_le_bytes()).map_err(|e| Error::io(data_path, e))?;
        }
        Ok(())
    })?;
    let meta_path = meta_path.as_ref();
    let json = serde_json::to_vec_pretty(&meta)?;
    write_atomic(meta_path, |w| w.write_all(&json).map_err(|e| Error::io(meta_path, e)))?;
    Ok(meta)
}

pub fn read_capture_meta(meta_path: impl AsRef<Path>) -> Result<CaptureMeta> {
    let meta_path = meta_path.as_ref();
    let text = std::fs::read(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let meta: CaptureMeta = serde_json::from_slice(&text)?;
    meta.validate()?;
    Ok(meta)
}

/// Loads a capture and keeps frames `trim` (falling back to the sidecar's
/// range, then to all frames).
pub fn ingest_capture(data_path: impl AsRef<Path>, meta_path: impl AsRef<Path>, trim: Option<Range<usize>>) -> Result<BeatCube> {
    let meta = read_capture_meta(meta_path)?;
    let data_path = data_path.as_ref();
    let bytes = std::fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    if bytes.len() != meta.byte_len() {
        return Err(Error::Capture(format!(
            "{} holds {} bytes, metadata implies {}",
            data_path.display(),
            bytes.len(),
            meta.byte_len()
        )));
    }
    let range = trim
        .or(meta.trim.map(|[a, b]| a..b))
        .unwrap_or(0..meta.frames);
    if range.start >= range.end || range.end > meta.frames {
        return Err(Error::invalid(
            "trim",
            format!("{}:{} is outside 0:{} or empty", range.start, range.end, meta.frames),
        ));
    }
    let (n, k) = (meta.samples_per_chirp, meta.chirps_per_frame);
    let frame_bytes = 4 * n * k;
    let values: Vec<Complex64> = bytes[range.start * frame_bytes..range.end * frame_bytes]
        .chunks_exact(4)
        .map(|c| {
            let i = i16::from_le_bytes([c[0], c[1]]) as f64;
            let q = i16::from_le_bytes([c[2], c[3]]) as f64;
            Complex64::new(i, q) * meta.scale
        })
        .collect();
    let plan = SweepPlan::new(meta.sweep[range.clone()].to_vec())?;
    BeatCube::new(from_ordered(values, range.len(), n, k), meta.waveform, plan)
}

/// Writes a header and rows of already-formatted fields.
fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(header)?;
        for r in rows {
            c.write_record(&r)?;
        }
        c.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    })
}

fn f(x: f64) -> String {
    // Rust's shortest round-trip formatting
    format!("{x}")
}

pub const STUDY_COLUMNS: [&str; 11] = [
    "parameter",
    "value",
    "runs",
    "failures",
    "distance_mae_m",
    "distance_se_m",
    "angle_mae_deg",
    "angle_se_deg",
    "position_mae_m",
    "position_se_m",
    "error",
];

/// One row per study point. Angles in degrees.
pub fn write_study_csv(result: &StudyResult, path: impl AsRef<Path>) -> Result<()> {
    let rows = result.points.iter().map(|p| {
        vec![
            result.parameter.to_string(),
            p.value.to_string(),
            p.runs.to_string(),
            p.failures.to_string(),
            f(p.distance.mean),
            f(p.distance.std_error),
            f(p.angle.mean.to_degrees()),
            f(p.angle.std_error.to_degrees()),
            f(p.position.mean),
            f(p.position.std_error),
            p.error.clone().unwrap_or_default(),
        ]
    });
    write_table(path.as_ref(), &STUDY_COLUMNS, rows)
}

/// Per-run records of a study (empty unless the study kept them).
pub fn write_study_records_csv(result: &StudyResult, path: impl AsRef<Path>) -> Result<()> {
    let header = [
        "value", "run", "seed", "true_distance_m", "true_azimuth_deg", "est_distance_m", "est_azimuth_deg", "est_velocity_mps",
        "distance_error_m", "angle_error_deg", "position_error_m",
    ];
    let rows = result.points.iter().flat_map(|p| {
        p.records.iter().map(move |r| {
            vec![
                p.value.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                f(r.truth.distance),
                f(r.truth.aod.azimuth.to_degrees()),
                f(r.estimate.distance),
                f(r.estimate.aod.azimuth.to_degrees()),
                f(r.estimate.velocity),
                f(r.errors.distance_error),
                f(r.errors.angle_error.to_degrees()),
                f(r.errors.position_error),
            ]
        })
    });
    write_table(path.as_ref(), &header, rows)
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "m",
    "azimuth_deg",
    "elevation_deg",
    "delay_s",
    "doppler",
    "delay_bin",
    "doppler_bin",
    "peak_power",
    "avg_power",
    "selected",
];

/// Per-angle measurements; `selected` is 1 on the chosen beam.
pub fn write_sweep_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let rows = result.per_angle.iter().enumerate().map(|(m, a)| {
        vec![
            m.to_string(),
            f(a.direction.azimuth.to_degrees()),
            f(a.direction.elevation.to_degrees()),
            f(a.delay),
            f(a.doppler),
            a.delay_bin.to_string(),
            a.doppler_bin.to_string(),
            f(a.peak_power),
            f(a.avg_power),
            u8::from(m == result.selected).to_string(),
        ]
    });
    write_table(path.as_ref(), &SWEEP_COLUMNS, rows)
}

pub const ESTIMATE_COLUMNS: [&str; 8] = [
    "selected",
    "azimuth_deg",
    "elevation_deg",
    "distance_m",
    "velocity_mps",
    "delay_s",
    "distance_step_m",
    "velocity_step_mps",
];

pub fn write_estimate_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let row = vec![
        result.selected.to_string(),
        f(result.aod.azimuth.to_degrees()),
        f(result.aod.elevation.to_degrees()),
        f(result.distance),
        f(result.velocity),
        f(result.delay),
        f(result.distance_step()),
        f(result.velocity_step()),
    ];
    write_table(path.as_ref(), &ESTIMATE_COLUMNS, std::iter::once(row))
}

/// Long-format map: one row per (delay bin, Doppler bin) with
/// `|velocity| <= velocity_limit` (all bins when `None`).
pub fn write_map_csv(map: &DelayDopplerMap, velocity_limit: Option<f64>, path: impl AsRef<Path>) -> Result<()> {
    let nk = map.n_doppler() as i64;
    let lo = -(nk / 2);
    let hi = lo + nk;
    let v_step = map.doppler_step() * SPEED_OF_LIGHT / 2.0;
    let d_step = map.delay_step() * SPEED_OF_LIGHT / 2.0;
    let bins: Vec<i64> = (lo..hi)
        .filter(|&s| velocity_limit.is_none_or(|lim| (s as f64 * v_step).abs() <= lim))
        .collect();
    let rows = (0..map.n_delay()).flat_map(|i| {
        bins.iter().map(move |&s| {
            vec![
                i.to_string(),
                s.to_string(),
                f(i as f64 * d_step),
                f(s as f64 * v_step),
                f(map.power(i, s)),
            ]
        })
    });
    write_table(path.as_ref(), &["delay_bin", "doppler_bin", "distance_m", "velocity_mps", "power"], rows)
}

pub fn write_beam_profile_csv(diag: &Diagnostics, path: impl AsRef<Path>) -> Result<()> {
    let rows = diag
        .beam_profile()
        .into_iter()
        .map(|(d, p)| vec![f(d.azimuth.to_degrees()), f(d.elevation.to_degrees()), f(p)]);
    write_table(path.as_ref(), &["azimuth_deg", "elevation_deg", "avg_power"], rows)
}

pub fn write_distance_profile_csv(diag: &Diagnostics, path: impl AsRef<Path>) -> Result<()> {
    let rows = diag.distance_profile.iter().map(|&(d, p)| vec![f(d), f(p)]);
    write_table(path.as_ref(), &["distance_m", "power"], rows)
}

/// Diagnostics bundle in `dir`: `map.csv`, `beam_profile.csv`,
/// `distance_profile.csv`.
pub fn write_diagnostics(diag: &Diagnostics, dir: impl AsRef<Path>, velocity_limit: Option<f64>) -> Result<[std::path::PathBuf; 3]> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = [dir.join("map.csv"), dir.join("beam_profile.csv"), dir.join("distance_profile.csv")];
    write_map_csv(&diag.map, velocity_limit, &paths[0])?;
    write_beam_profile_csv(diag, &paths[1])?;
    write_distance_profile_csv(diag, &paths[2])?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Mae, ParamValue, StudyParameter, StudyPoint};

    fn small_cube() -> BeatCube {
        let wf = Waveform {
            carrier_freq: 60e9,
            bandwidth: 1e9,
            chirp_duration: 1e-5,
            sample_period: 1e-6,
            samples_per_chirp: 5,
            chirps_per_frame: 3,
        };
        let plan = SweepPlan::azimuth_grid(-10.0, 10.0, 10.0, 0.0).unwrap();
        let samples = Array3::from_shape_fn((3, 5, 3), |(m, n, k)| Complex64::new((m * 100 + n * 10 + k) as f64, -(n as f64)));
        BeatCube::new(samples, wf, plan).unwrap()
    }

    #[test]
    fn cube_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cube");
        let c = small_cube();
        write_cube(&c, &p).unwrap();
        assert_eq!(read_cube(&p).unwrap(), c);
        std::fs::write(&p, b"nope").unwrap();
        assert!(read_cube(&p).is_err());
    }

    #[test]
    fn capture_is_exact_for_integers() {
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = (dir.path().join("x.bin"), dir.path().join("x.json"));
        let c = small_cube();
        let meta = export_capture(&c, &d, &m, Some(1.0)).unwrap();
        assert_eq!(std::fs::metadata(&d).unwrap().len() as usize, meta.byte_len());
        assert_eq!(ingest_capture(&d, &m, None).unwrap(), c);
        // I then Q, n fastest
        let raw = std::fs::read(&d).unwrap();
        assert_eq!(i16::from_le_bytes([raw[4], raw[5]]), 10);
        assert_eq!(i16::from_le_bytes([raw[6], raw[7]]), -1);
    }

    #[test]
    fn trim_selects_frames() {
        let dir = tempfile::tempdir().unwrap();
        let (d, m) = (dir.path().join("x.bin"), dir.path().join("x.json"));
        let c = small_cube();
        export_capture(&c, &d, &m, Some(1.0)).unwrap();
        let t = ingest_capture(&d, &m, Some(1..3)).unwrap();
        assert_eq!(t.n_angles(), 2);
        assert_eq!(t.frame(0), c.frame(1));
        assert_eq!(t.plan.angles[..], c.plan.angles[1..]);
        assert!(ingest_capture(&d, &m, Some(2..4)).is_err());
        assert!(ingest_capture(&d, &m, Some(2..2)).is_err());
        std::fs::write(&d, [0u8; 10]).unwrap();
        assert!(matches!(ingest_capture(&d, &m, None), Err(Error::Capture(_))));
    }

    #[test]
    fn trim_parsing() {
        assert_eq!(parse_trim("3:7", 10).unwrap(), 3..7);
        assert_eq!(parse_trim(":4", 10).unwrap(), 0..4);
        assert_eq!(parse_trim("2:", 10).unwrap(), 2..10);
        assert!(parse_trim("5", 10).is_err());
    }

    #[test]
    fn empty_study_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_study_csv(&StudyResult { parameter: StudyParameter::TxPower, points: vec![] }, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.trim_end(), STUDY_COLUMNS.join(","));
    }

    #[test]
    fn study_csv_reparses_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let point = StudyPoint {
            value: ParamValue::Scalar(12.5),
            runs: 3,
            failures: 0,
            distance: Mae { mean: 0.1 + 0.2, std_error: 1.0 / 3.0 },
            angle: Mae { mean: 0.0123456789, std_error: 1e-17 },
            position: Mae { mean: std::f64::consts::PI, std_error: 2e-300 },
            error: Some("a, \"quoted\" note".into()),
            records: vec![],
        };
        write_study_csv(&StudyResult { parameter: StudyParameter::TxPower, points: vec![point.clone()] }, &p).unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(rec[4].parse::<f64>().unwrap(), point.distance.mean);
        assert_eq!(rec[5].parse::<f64>().unwrap(), point.distance.std_error);
        assert_eq!(rec[6].parse::<f64>().unwrap(), point.angle.mean.to_degrees());
        assert_eq!(rec[8].parse::<f64>().unwrap(), point.position.mean);
        assert_eq!(rec[9].parse::<f64>().unwrap(), point.position.std_error);
        assert_eq!(&rec[10], "a, \"quoted\" note");
    }
}

//! Acceptance criteria 1-9. Each test writes one `PASS`/`FAIL` line to stderr
//! before asserting. Monte Carlo criteria use 100 runs per point and a 3 standard
//! error tolerance.

mod common;

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{literal_map, max_rel_error, small_scenario, waveform};
use risloc::channel::{dbm_to_watts, synthesize_scene, Scene};
use risloc::dsp::{delay_doppler_map, estimate, gate_min_distance, peak, zero_pad, FrameProcessor};
use risloc::experiments::{diagnostic_run, profile_peaks, run_study, Mae, ParamValue, Placement, StudyParameter, SweepStudy};
use risloc::geometry::{make_upa, ris_beam_gain, steering_vector};
use risloc::io::{export_capture, ingest_capture};
use risloc::localization::{error_report, LocalizationEstimate};
use risloc::{BeatCube, DftPlan, Direction, ScenarioConfig, SweepPlan, SPEED_OF_LIGHT};

const RUNS: usize = 100;
const TOL_SE: f64 = 3.0;

/// Written to stderr directly so the line survives the harness's output capture.
fn report(n: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {n}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n}: {detail}");
}

fn random_frame(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((n, k), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `b` is not above `a` by more than `tol` combined standard errors.
fn not_above(a: &Mae, b: &Mae, tol: f64) -> bool {
    b.mean <= a.mean + tol * a.std_error.hypot(b.std_error)
}

fn study(parameter: StudyParameter, values: &[&str], base: ScenarioConfig, placement: Placement) -> Vec<risloc::experiments::StudyPoint> {
    let values = values.iter().map(|v| ParamValue::parse(parameter, v).unwrap()).collect();
    let mut s = SweepStudy::new(parameter, values, RUNS, base, 2024);
    s.placement = placement;
    let r = run_study(&s).unwrap();
    for p in &r.points {
        println!(
            "  {} = {}: distance {:.6} ({:.6}) m, angle {:.4} ({:.4}) deg, position {:.6} ({:.6}) m, failures {}",
            r.parameter,
            p.value,
            p.distance.mean,
            p.distance.std_error,
            p.angle.mean.to_degrees(),
            p.angle.std_error.to_degrees(),
            p.position.mean,
            p.position.std_error,
            p.failures
        );
    }
    r.points
}

#[test]
fn criterion_1_transform_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, k) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let plan = DftPlan::new(n + rng.random_range(0..=16), k + rng.random_range(0..=16)).unwrap();
        let wf = waveform(n, k, rng.random_range(1e8..4e9));
        let padded = zero_pad(random_frame(&mut rng, n, k).view(), &plan).unwrap();
        let fast = delay_doppler_map(padded.view(), &wf, &plan).unwrap();
        let slow = literal_map(padded.view(), &wf, plan.n_dft, plan.k_dft);
        worst = worst.max(max_rel_error(fast.values(), &slow, 1e-12));
    }
    report(1, worst <= 1e-9, format!("max relative error {worst:.3e} over 100 frames"));
}

#[test]
fn criterion_2_noiseless_recovery() {
    let mut c = ScenarioConfig::default();
    c.link.noise = false;
    let truth = c.ground_truth().unwrap();
    let plan = c.sweep_plan().unwrap();
    let r = estimate(&c.synthesize(0).unwrap(), &c.pipeline().unwrap()).unwrap();
    let loc = LocalizationEstimate::from_sweep(&r, c.ris_position(), &c.ris_orientation().unwrap()).unwrap();
    let e = error_report(&loc, &truth).unwrap();
    let half_step = c.sweep.azimuth_step_deg.to_radians() / 2.0;
    let bound = r.distance_step() + 2.0 * truth.distance * (half_step / 2.0).sin();
    let ok = (r.distance - 13.38).abs() <= r.distance_step()
        && r.selected == plan.nearest(&truth.aod)
        && r.velocity.abs() <= r.velocity_step()
        && e.position_error <= e.distance_error + 2.0 * truth.distance * (e.angle_error / 2.0).sin() + 1e-12
        && e.position_error <= bound;
    report(
        2,
        ok,
        format!(
            "d = {:.5} m (bin {:.5}), azimuth {:.2} deg, v = {:.4} m/s (bin {:.4}), position error {:.5} m (bound {:.5})",
            r.distance,
            r.distance_step(),
            r.aod.azimuth.to_degrees(),
            r.velocity,
            r.velocity_step(),
            e.position_error,
            bound
        ),
    );
}

#[test]
fn criterion_3_beam_matched_gain() {
    let lambda = SPEED_OF_LIGHT / 60e9;
    let mut worst_match: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for (n_az, n_el) in [(16, 4), (16, 16)] {
        let layout = make_upa(n_az, n_el, lambda / 2.0).unwrap();
        let n = layout.len() as f64;
        let sweep = SweepPlan::azimuth_grid(-45.0, 45.0, 1.5, 0.0).unwrap();
        assert_eq!(sweep.len(), 61);
        for theta in &sweep.angles {
            // direct sum of a^T diag(conj(a)^2) a
            let a = steering_vector(&layout, theta, lambda).unwrap();
            let direct: Complex64 = a.iter().map(|x| x * x * x.conj() * x.conj()).sum();
            let g = ris_beam_gain(&layout, theta, theta, lambda).unwrap().norm();
            worst_match = worst_match.max((g - n).abs() / n).max((direct.norm() - n).abs() / n);
            for phi in &sweep.angles {
                worst_ratio = worst_ratio.max(ris_beam_gain(&layout, theta, phi, lambda).unwrap().norm() / n);
            }
        }
    }
    let ok = worst_match <= 1e-9 && worst_ratio <= 1.0 + 1e-12;
    report(3, ok, format!("matched relative error {worst_match:.2e}, max |gain|/N {worst_ratio:.12}"));
}

#[test]
fn criterion_4_distance_profile_structure() {
    let mut c = ScenarioConfig::default();
    c.link.noise = false;
    let d = diagnostic_run(&c, 0).unwrap();
    let power: Vec<f64> = d.distance_profile.iter().map(|p| p.1).collect();
    let peaks = profile_peaks(&power, 20.0);
    let dist: Vec<f64> = peaks.iter().map(|&i| d.distance_profile[i].0).collect();
    let resolution = SPEED_OF_LIGHT / (2.0 * c.waveform.bandwidth_hz);
    let offset = c.ris.loopback_delay_s * SPEED_OF_LIGHT / 2.0;
    let step = d.sweep.distance_step();
    let two = dist.len() == 2
        && (dist[0] - 13.38).abs() <= step
        && (dist[1] - dist[0] - offset).abs() <= 2.0 * step
        && dist[1] - dist[0] > resolution;

    c.leakage.enabled = true;
    let cube = c.synthesize(0).unwrap();
    let pipe = c.pipeline().unwrap();
    let r = estimate(&cube, &pipe).unwrap();
    let open = risloc::PipelineConfig { min_distance: 0.0, ..pipe };
    let map = FrameProcessor::new(&cube.waveform, &open).unwrap().map(cube.frame(r.selected)).unwrap();
    let ungated = peak(&map).unwrap();
    let gated_ok = ungated.distance() < c.pipeline.min_distance_m && (r.distance - 13.38).abs() <= step;
    report(
        4,
        two && gated_ok,
        format!(
            "profile peaks at {dist:?} m (separation > {resolution:.4} m), leakage peak at {:.3} m removed, gated estimate {:.4} m",
            ungated.distance(),
            r.distance
        ),
    );
}

#[test]
fn criterion_5_tx_power_trend() {
    let base = ScenarioConfig::default();
    let bin = base.pipeline().unwrap().plan.distance_step(&base.waveform());
    let pts = study(StudyParameter::TxPower, &["5", "10", "15", "20", "25", "30"], base, Placement::Fixed);
    let monotone = pts.windows(2).all(|w| not_above(&w[0].position, &w[1].position, TOL_SE));
    let d_min = pts.iter().map(|p| p.distance.mean).fold(f64::INFINITY, f64::min);
    let d_max = pts.iter().map(|p| p.distance.mean).fold(0.0, f64::max);
    let flat = d_max - d_min <= bin && d_max <= bin / 2.0 + TOL_SE * pts.iter().map(|p| p.distance.std_error).fold(0.0, f64::max);
    let clean = pts.iter().all(|p| p.failures == 0);
    report(
        5,
        monotone && flat && clean,
        format!(
            "position MAE {:.5} -> {:.5} m non-increasing within {TOL_SE} SE; distance MAE in [{d_min:.5}, {d_max:.5}] m, bin {bin:.5} m",
            pts[0].position.mean,
            pts[pts.len() - 1].position.mean
        ),
    );
}

#[test]
fn criterion_6_beam_step_trend() {
    let base = ScenarioConfig::default();
    let bin = base.pipeline().unwrap().plan.distance_step(&base.waveform());
    let pts = study(StudyParameter::BeamStep, &["3", "1.5", "0.75"], base, Placement::RandomAod { half_range_deg: 15.0 });
    let strict = pts.windows(2).all(|w| w[1].angle.mean < w[0].angle.mean);
    let d: Vec<f64> = pts.iter().map(|p| p.distance.mean).collect();
    let flat = d.iter().all(|x| (x - d[0]).abs() <= bin);
    let angles: Vec<String> = pts.iter().map(|p| format!("{:.4}", p.angle.mean.to_degrees())).collect();
    report(6, strict && flat, format!("angle MAE {} deg strictly decreasing; distance MAE {d:.5?} m within bin {bin:.5} m", angles.join(" > ")));
}

#[test]
fn criterion_7_ris_size_trend() {
    let base = ScenarioConfig::default();
    let pts = study(StudyParameter::RisElements, &["4x4", "16x4", "16x16"], base, Placement::Fixed);
    let within = pts.windows(2).all(|w| not_above(&w[0].angle, &w[1].angle, TOL_SE) && not_above(&w[0].position, &w[1].position, TOL_SE));
    let (first, last) = (&pts[0], &pts[pts.len() - 1]);
    let overall = last.angle.mean < first.angle.mean && last.position.mean < first.position.mean;
    report(
        7,
        within && overall,
        format!(
            "angle MAE {:.3} -> {:.3} deg, position MAE {:.4} -> {:.4} m over 16/64/256 elements",
            first.angle.mean.to_degrees(),
            last.angle.mean.to_degrees(),
            first.position.mean,
            last.position.mean
        ),
    );
}

#[test]
fn criterion_8_noise_power() {
    let c = ScenarioConfig::default();
    let sigma2 = dbm_to_watts(c.link.noise_power_dbm);
    let scene = Scene {
        waveform: c.waveform(),
        plan: SweepPlan::azimuth_grid(-3.0, 3.0, 1.5, 0.0).unwrap(),
        layout: c.layout().unwrap(),
        ris_direction: Direction::new(0.0, 0.0).unwrap(),
        paths: vec![],
        noise_power: sigma2,
    };
    let cube = synthesize_scene(&scene, 8).unwrap();
    let p: Vec<f64> = cube.samples.iter().map(|z| z.norm_sqr()).collect();
    let m = Mae::of(&p);
    let z = (m.mean - sigma2) / m.std_error;
    report(
        8,
        z.abs() <= 3.0,
        format!("mean power {:.4} dBm vs {:.2} dBm, {z:+.2} SE over {} samples", 10.0 * (m.mean * 1e3).log10(), c.link.noise_power_dbm, p.len()),
    );
}

/// Fixed-seed pass over the module invariants; the randomized versions live
/// in the `properties` target.
#[test]
fn criterion_9_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    let lambda = 0.005;

    let layout = make_upa(16, 4, lambda / 2.0).unwrap();
    for _ in 0..50 {
        let d = Direction::new(rng.random_range(-PI..PI), rng.random_range(-1.5..1.5)).unwrap();
        if steering_vector(&layout, &d, lambda).unwrap().iter().any(|a| (a.norm() - 1.0).abs() > 1e-12) {
            failures.push("unit modulus");
        }
    }

    for _ in 0..20 {
        let (n, k) = (rng.random_range(1..24), rng.random_range(1..24));
        let f = random_frame(&mut rng, n, k);
        let map = delay_doppler_map(f.view(), &waveform(n, k, 1e9), &DftPlan::new(n, k).unwrap()).unwrap();
        let lhs: f64 = map.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * k) as f64;
        let rhs: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        if (lhs - rhs).abs() > 1e-9 * rhs {
            failures.push("Parseval");
        }
        let gates = [0.0, 0.3, 0.6];
        let range = n as f64 * DftPlan::new(n, k).unwrap().distance_step(&waveform(n, k, 1e9));
        let powers: Vec<f64> = gates.iter().map(|g| peak(&gate_min_distance(map.clone(), g * range).unwrap()).unwrap().power).collect();
        if powers.windows(2).any(|w| w[1] > w[0]) {
            failures.push("gating monotonicity");
        }
    }

    let c = small_scenario();
    let pipe = c.pipeline().unwrap();
    for seed in 0..5 {
        let cube = c.synthesize(seed).unwrap();
        let a = estimate(&cube, &pipe).unwrap();
        let scaled = BeatCube::new(cube.samples.mapv(|z| z * 37.5), cube.waveform, cube.plan.clone()).unwrap();
        let b = estimate(&scaled, &pipe).unwrap();
        if (a.selected, a.delay, a.doppler) != (b.selected, b.delay, b.doppler) {
            failures.push("scaling invariance");
        }
    }

    let mut cfg = ScenarioConfig::default();
    cfg.link.tx_power_dbm = 12.25;
    cfg.ris.normal = Some([0.1, -1.0, 0.2]);
    cfg.targets.push(risloc::config::TargetSection { distance_m: 4.0, velocity_mps: 1.5, rcs_m2: 2.0 });
    if ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap() != cfg {
        failures.push("config round trip");
    }

    let wf = waveform(8, 4, 1e9);
    let plan = SweepPlan::azimuth_grid(-3.0, 3.0, 3.0, 0.0).unwrap();
    let samples = ndarray::Array3::from_shape_fn((3, 8, 4), |_| Complex64::new(rng.random_range(-32768..32768) as f64, rng.random_range(-32768..32768) as f64));
    let cube = BeatCube::new(samples, wf, plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (data, meta) = (dir.path().join("x.iq"), dir.path().join("x.json"));
    export_capture(&cube, &data, &meta, Some(1.0)).unwrap();
    if ingest_capture(&data, &meta, None).unwrap() != cube {
        failures.push("capture round trip");
    }

    report(9, failures.is_empty(), format!("module invariants, failures: {failures:?}"));
}

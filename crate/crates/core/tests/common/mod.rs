//! Helpers shared by the integration tests: small scenarios and the literal
//! double-sum reference for the delay-Doppler map.
#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use risloc::{ScenarioConfig, Waveform};

/// Waveform with `S N T_s = B`, 100 ns sampling.
pub fn waveform(n: usize, k: usize, bandwidth: f64) -> Waveform {
    Waveform {
        carrier_freq: 60e9,
        bandwidth,
        chirp_duration: n as f64 * 1e-7,
        sample_period: 1e-7,
        samples_per_chirp: n,
        chirps_per_frame: k,
    }
}

/// Scaled-down scenario (64 samples, 16 chirps) keeping the reference
/// geometry. The bandwidth is cut so the unambiguous range still covers the
/// RIS; the two RIS returns merge into one resolution cell.
pub fn small_scenario() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.waveform.samples_per_chirp = 64;
    c.waveform.chirps_per_frame = 16;
    c.waveform.bandwidth_hz = 0.5e9;
    c.pipeline.n_dft = 128;
    c.pipeline.k_dft = 32;
    c.pipeline.power_window_s = 2e-9;
    c.sweep.azimuth_start_deg = -30.0;
    c.sweep.azimuth_stop_deg = 30.0;
    c.sweep.azimuth_step_deg = 3.0;
    c
}

/// `z(tau_i, nu_s) = sum_k sum_n y[n, k] exp(j 2 pi S tau_i n T_s)
/// exp(j 2 pi f_c nu_s k T)` with `tau_i = i / (S N_DFT T_s)` and
/// `nu_s = s / (f_c K_DFT T)` over the signed Doppler index `s`, evaluated
/// term by term. Returned with columns in natural index order.
pub fn literal_map(padded: ArrayView2<'_, Complex64>, wf: &Waveform, n_dft: usize, k_dft: usize) -> Array2<Complex64> {
    let s = wf.bandwidth / wf.chirp_duration;
    let (ts, t, fc) = (wf.sample_period, wf.chirp_duration, wf.carrier_freq);
    let mut out = Array2::zeros((n_dft, k_dft));
    for i in 0..n_dft {
        let tau = i as f64 / (s * n_dft as f64 * ts);
        for col in 0..k_dft {
            let signed = if col < k_dft.div_ceil(2) { col as f64 } else { col as f64 - k_dft as f64 };
            let nu = signed / (fc * k_dft as f64 * t);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..padded.ncols() {
                for n in 0..padded.nrows() {
                    let phase = 2.0 * PI * (s * tau * n as f64 * ts + fc * nu * k as f64 * t);
                    acc += padded[[n, k]] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            out[[i, col]] = acc;
        }
    }
    out
}

/// Largest pointwise `|a - b| / max(|b|, floor)`.
pub fn max_rel_error(a: &Array2<Complex64>, b: &Array2<Complex64>, floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(floor))
        .fold(0.0, f64::max)
}

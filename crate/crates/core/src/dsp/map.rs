use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{natural_index, signed_index, DftPlan};
use crate::channel::Waveform;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::geometry::SPEED_OF_LIGHT;

/// Relative slack on the row upper bounds; covers FFT rounding.
const BOUND_SLACK: f64 = 1e-9;

/// Oversampling of the coarse Doppler pass relative to the row length.
const COARSE_OVERSAMPLING: usize = 16;

/// Power-of-two transform that samples a row's Doppler spectrum on a coarse
/// grid. Viewing the row spectrum `p(w) = sum_k d_k e^{jwk}` (degree
/// `n = len - 1`) as `e^{jnw/2} q(w)` with `q` of exponential type `n/2`,
/// Bernstein's inequality gives `|p(w)| <= max_l |p(w_l)| / (1 - n pi / 2L)`
/// for `L` equispaced samples `w_l`.
#[derive(Clone)]
struct CoarsePass {
    fft: Arc<dyn Fft<f64>>,
    row_len: usize,
    /// Squared inflation `1 / (1 - n pi / 2L)^2`.
    factor: f64,
}

/// Unnormalized inverse transforms (positive exponent) along both axes.
#[derive(Clone)]
pub(crate) struct SpectralEngine {
    plan: DftPlan,
    delay_fft: Arc<dyn Fft<f64>>,
    doppler_fft: Arc<dyn Fft<f64>>,
    coarse: Option<CoarsePass>,
}

impl SpectralEngine {
    pub(crate) fn new(plan: DftPlan) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            plan,
            delay_fft: planner.plan_fft_inverse(plan.n_dft),
            doppler_fft: planner.plan_fft_inverse(plan.k_dft),
            coarse: None,
        }
    }

    /// Engine for frames with `row_len` chirps; enables the coarse bound when
    /// it is cheaper than the full Doppler transform.
    pub(crate) fn for_rows(plan: DftPlan, row_len: usize) -> Self {
        let mut engine = Self::new(plan);
        let len = (COARSE_OVERSAMPLING * row_len.max(1)).next_power_of_two();
        if len < plan.k_dft {
            let n = row_len.saturating_sub(1) as f64;
            let shrink = 1.0 - n * std::f64::consts::PI / (2.0 * len as f64);
            engine.coarse = Some(CoarsePass {
                fft: FftPlanner::new().plan_fft_inverse(len),
                row_len,
                factor: 1.0 / (shrink * shrink),
            });
        }
        engine
    }

    /// Upper bound on `max_nu |z(tau, nu)|^2` for one delay row, if the
    /// coarse pass is enabled.
    fn coarse_bound(&self, row: &[Complex64]) -> Option<f64> {
        let pass = self.coarse.as_ref().filter(|p| p.row_len == row.len())?;
        let mut buf = vec![Complex64::new(0.0, 0.0); pass.fft.len()];
        buf[..row.len()].copy_from_slice(row);
        pass.fft.process(&mut buf);
        let max = buf.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let l1: f64 = row.iter().map(|z| z.norm_sqr().sqrt()).sum();
        // absolute term covers rounding when the samples are near zero
        Some(max * pass.factor * (1.0 + BOUND_SLACK) + l1 * l1 * 1e-12)
    }

    /// Transforms each column of an `n x k` frame (`n <= N_DFT`) along the
    /// delay axis, returning `N_DFT x k`. All-zero columns are skipped; their
    /// transform is exactly zero.
    pub(crate) fn delay_transform(&self, frame: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
        let (n, k) = frame.dim();
        let n_dft = self.plan.n_dft;
        let mut out = Array2::zeros((n_dft, k));
        let mut buf = vec![Complex64::new(0.0, 0.0); n_dft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.delay_fft.get_inplace_scratch_len()];
        for col in 0..k {
            let column = frame.column(col);
            if column.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            buf[..n].iter_mut().zip(column.iter()).for_each(|(b, z)| *b = *z);
            buf[n..].iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            self.delay_fft.process_with_scratch(&mut buf, &mut scratch);
            out.column_mut(col).iter_mut().zip(&buf).for_each(|(o, b)| *o = *b);
        }
        out
    }

    /// Doppler spectrum (natural index order) of one delay row, zero padded
    /// to `K_DFT`.
    pub(crate) fn doppler_row(&self, row: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plan.k_dft];
        buf[..row.len()].copy_from_slice(row);
        self.doppler_fft.process(&mut buf);
        buf
    }
}

/// Grid location and squared magnitude of a spectral maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub delay_bin: usize,
    /// Signed Doppler index (zero-centered axis).
    pub doppler_bin: i64,
    /// Seconds.
    pub delay: f64,
    /// Dimensionless `nu = 2 v / c`.
    pub doppler: f64,
    /// `|z|^2` at the peak.
    pub power: f64,
}

impl Peak {
    pub fn distance(&self) -> f64 {
        self.delay * SPEED_OF_LIGHT / 2.0
    }

    pub fn velocity(&self) -> f64 {
        self.doppler * SPEED_OF_LIGHT / 2.0
    }
}

/// Running argmax with the tie rule: larger power, then smaller delay bin,
/// then smaller signed Doppler.
#[derive(Debug, Clone, Copy)]
struct Best {
    power: f64,
    delay_bin: usize,
    doppler_bin: i64,
}

impl Best {
    fn beats(&self, other: &Option<Best>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.power > o.power
                    || (self.power == o.power && (self.delay_bin, self.doppler_bin) < (o.delay_bin, o.doppler_bin))
            }
        }
    }
}

/// Row maximum, scanning Doppler bins from most negative to most positive.
fn row_best(row: &[Complex64], delay_bin: usize) -> Best {
    let len = row.len();
    let split = len.div_ceil(2);
    let mut best = Best {
        power: f64::NEG_INFINITY,
        delay_bin,
        doppler_bin: 0,
    };
    for natural in (split..len).chain(0..split) {
        let p = row[natural].norm_sqr();
        if p > best.power {
            best.power = p;
            best.doppler_bin = signed_index(natural, len);
        }
    }
    best
}

/// Inclusive delay-bin range covered by `[tau - delta, tau + delta]`.
fn delay_window(n_delay: usize, delay_step: f64, tau: f64, delta: f64) -> Result<(usize, usize)> {
    ensure_positive("power_window", delta)?;
    ensure_non_negative("delay", tau)?;
    let lo = ((tau - delta) / delay_step - 1e-9).ceil().max(0.0);
    let hi = ((tau + delta) / delay_step + 1e-9).floor();
    if hi < lo || lo >= n_delay as f64 {
        return Err(Error::EmptySearch(format!(
            "no delay bins within [{:e}, {:e}] s",
            tau - delta,
            tau + delta
        )));
    }
    Ok((lo as usize, (hi as usize).min(n_delay - 1)))
}

fn gate_bins_for(min_distance: f64, distance_step: f64) -> usize {
    (min_distance / distance_step).ceil() as usize
}

/// Full complex delay-Doppler spectrum `z(tau, nu)` of one frame, rows indexed
/// by delay bin and columns by natural Doppler index.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerMap {
    values: Array2<Complex64>,
    delay_step: f64,
    doppler_step: f64,
    /// Leading delay bins excluded from the peak search.
    gate_bins: usize,
}

impl DelayDopplerMap {
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn n_delay(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_doppler(&self) -> usize {
        self.values.ncols()
    }

    pub fn delay_step(&self) -> f64 {
        self.delay_step
    }

    pub fn doppler_step(&self) -> f64 {
        self.doppler_step
    }

    pub fn gate_bins(&self) -> usize {
        self.gate_bins
    }

    pub fn delay(&self, delay_bin: usize) -> f64 {
        delay_bin as f64 * self.delay_step
    }

    pub fn doppler(&self, signed_bin: i64) -> f64 {
        signed_bin as f64 * self.doppler_step
    }

    /// `|z|^2` at a delay bin and signed Doppler bin.
    pub fn power(&self, delay_bin: usize, doppler_bin: i64) -> f64 {
        self.values[[delay_bin, natural_index(doppler_bin, self.n_doppler())]].norm_sqr()
    }

    /// Signed Doppler bin nearest to `nu`.
    pub fn doppler_bin_of(&self, nu: f64) -> i64 {
        (nu / self.doppler_step).round() as i64
    }

    /// `|z(tau, nu)|^2` along the delay axis for one Doppler bin.
    pub fn delay_profile(&self, doppler_bin: i64) -> Vec<f64> {
        let col = natural_index(doppler_bin, self.n_doppler());
        self.values.column(col).iter().map(|z| z.norm_sqr()).collect()
    }

    /// Squared-magnitude map with Doppler columns reordered to ascending
    /// signed index.
    pub fn centered_power(&self) -> Array2<f64> {
        let k = self.n_doppler();
        let split = k.div_ceil(2);
        let order: Vec<usize> = (split..k).chain(0..split).collect();
        Array2::from_shape_fn((self.n_delay(), k), |(i, j)| self.values[[i, order[j]]].norm_sqr())
    }

    fn make_peak(&self, b: Best) -> Peak {
        Peak {
            delay_bin: b.delay_bin,
            doppler_bin: b.doppler_bin,
            delay: self.delay(b.delay_bin),
            doppler: self.doppler(b.doppler_bin),
            power: b.power,
        }
    }
}

/// Evaluates `z(tau, nu) = sum_k sum_n Y'[n,k] exp(j 2 pi S tau n T_s)
/// exp(j 2 pi f_c nu k T)` on the plan's grid for an already padded
/// `N_DFT x K_DFT` matrix.
pub fn delay_doppler_map(padded: ArrayView2<'_, Complex64>, waveform: &Waveform, plan: &DftPlan) -> Result<DelayDopplerMap> {
    if padded.dim() != (plan.n_dft, plan.k_dft) {
        return Err(Error::DimensionMismatch(format!(
            "padded frame is {:?} but plan is {}x{}",
            padded.dim(),
            plan.n_dft,
            plan.k_dft
        )));
    }
    let engine = SpectralEngine::new(*plan);
    let delay = engine.delay_transform(padded);
    let mut values = Array2::zeros((plan.n_dft, plan.k_dft));
    for (i, mut out_row) in values.outer_iter_mut().enumerate() {
        let row: Vec<Complex64> = delay.row(i).to_vec();
        let spec = engine.doppler_row(&row);
        out_row.iter_mut().zip(spec).for_each(|(o, v)| *o = v);
    }
    Ok(DelayDopplerMap {
        values,
        delay_step: plan.delay_step(waveform),
        doppler_step: plan.doppler_step(waveform),
        gate_bins: 0,
    })
}

/// Masks delay bins whose distance `tau c / 2` is below `min_distance`.
pub fn gate_min_distance(mut map: DelayDopplerMap, min_distance: f64) -> Result<DelayDopplerMap> {
    ensure_non_negative("min_distance", min_distance)?;
    map.gate_bins = gate_bins_for(min_distance, map.delay_step * SPEED_OF_LIGHT / 2.0);
    Ok(map)
}

/// Global maximum of `|z|^2` over unmasked bins; ties go to the smaller
/// delay, then to the smaller signed Doppler.
pub fn peak(map: &DelayDopplerMap) -> Result<Peak> {
    let mut best: Option<Best> = None;
    for i in map.gate_bins..map.n_delay() {
        let row = map.values.row(i);
        let cand = row_best(row.as_slice().expect("standard layout"), i);
        if cand.beats(&best) {
            best = Some(cand);
        }
    }
    best.map(|b| map.make_peak(b))
        .ok_or_else(|| Error::EmptySearch("every delay bin is gated out".into()))
}

/// Mean of `|z(tau, nu)|^2` over the delay bins within `tau +/- delta` at the
/// Doppler bin nearest `nu`: the rectangular-rule discretization of
/// `(1 / 2 delta) int |z(t, nu)|^2 dt`.
pub fn average_power(map: &DelayDopplerMap, tau: f64, nu: f64, delta: f64) -> Result<f64> {
    let (lo, hi) = delay_window(map.n_delay(), map.delay_step, tau, delta)?;
    let col = natural_index(map.doppler_bin_of(nu), map.n_doppler());
    let sum: f64 = (lo..=hi).map(|i| map.values[[i, col]].norm_sqr()).sum();
    Ok(sum / (hi - lo + 1) as f64)
}

/// Lazily evaluated delay-Doppler spectrum of one frame.
///
/// Only the delay-axis transform is computed up front. Doppler rows are
/// transformed on demand, and the peak search visits rows in decreasing
/// order of the bound `max_nu |z(tau, nu)|^2 <= (sum_k |D[tau, k]|)^2`,
/// stopping once no remaining row can beat the incumbent. The result is
/// identical to [`peak`] on the fully materialized map.
pub struct FrameSpectrum<'e> {
    engine: &'e SpectralEngine,
    delay: Array2<Complex64>,
    rows: Vec<Option<Vec<Complex64>>>,
    delay_step: f64,
    doppler_step: f64,
    gate_bins: usize,
}

impl<'e> FrameSpectrum<'e> {
    pub(crate) fn new(engine: &'e SpectralEngine, windowed: ArrayView2<'_, Complex64>, waveform: &Waveform, min_distance: f64) -> Self {
        let plan = engine.plan;
        let delay = engine.delay_transform(windowed);
        let delay_step = plan.delay_step(waveform);
        Self {
            engine,
            rows: vec![None; plan.n_dft],
            delay,
            delay_step,
            doppler_step: plan.doppler_step(waveform),
            gate_bins: gate_bins_for(min_distance, delay_step * SPEED_OF_LIGHT / 2.0),
        }
    }

    pub fn n_delay(&self) -> usize {
        self.delay.nrows()
    }

    /// Number of Doppler rows transformed so far.
    pub fn rows_evaluated(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }

    fn row(&mut self, i: usize) -> &[Complex64] {
        if self.rows[i].is_none() {
            let input = self.delay.row(i).to_vec();
            self.rows[i] = Some(self.engine.doppler_row(&input));
        }
        self.rows[i].as_deref().expect("row just computed")
    }

    fn row_bound(&self, i: usize) -> f64 {
        let l1: f64 = self.delay.row(i).iter().map(|z| z.norm_sqr().sqrt()).sum();
        l1 * l1 * (1.0 + BOUND_SLACK)
    }

    pub fn peak(&mut self) -> Result<Peak> {
        let mut order: Vec<(usize, f64)> = (self.gate_bins..self.n_delay()).map(|i| (i, self.row_bound(i))).collect();
        // stable: equal bounds keep ascending delay order
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut best: Option<Best> = None;
        for (i, bound) in order {
            if let Some(b) = &best {
                if bound < b.power {
                    break;
                }
                if bound == b.power && i > b.delay_bin {
                    continue;
                }
            }
            if let Some(b) = &best {
                let row = self.delay.row(i);
                let fine = self.engine.coarse_bound(row.as_slice().expect("standard layout"));
                if let Some(fine) = fine {
                    if fine < b.power || (fine == b.power && i > b.delay_bin) {
                        continue;
                    }
                }
            }
            let cand = row_best(self.row(i), i);
            if cand.beats(&best) {
                best = Some(cand);
            }
        }
        let b = best.ok_or_else(|| Error::EmptySearch("every delay bin is gated out".into()))?;
        Ok(Peak {
            delay_bin: b.delay_bin,
            doppler_bin: b.doppler_bin,
            delay: b.delay_bin as f64 * self.delay_step,
            doppler: b.doppler_bin as f64 * self.doppler_step,
            power: b.power,
        })
    }

    /// Same as [`average_power`] on the materialized map.
    pub fn average_power(&mut self, tau: f64, nu: f64, delta: f64) -> Result<f64> {
        let (lo, hi) = delay_window(self.n_delay(), self.delay_step, tau, delta)?;
        let k_dft = self.engine.plan.k_dft;
        let col = natural_index((nu / self.doppler_step).round() as i64, k_dft);
        let mut sum = 0.0;
        for i in lo..=hi {
            sum += self.row(i)[col].norm_sqr();
        }
        Ok(sum / (hi - lo + 1) as f64)
    }

    /// Materializes every row.
    pub fn into_map(mut self) -> DelayDopplerMap {
        let (n_dft, k_dft) = (self.engine.plan.n_dft, self.engine.plan.k_dft);
        let mut values = Array2::zeros((n_dft, k_dft));
        for i in 0..n_dft {
            let row = self.row(i).to_vec();
            values.row_mut(i).iter_mut().zip(row).for_each(|(o, v)| *o = v);
        }
        DelayDopplerMap {
            values,
            delay_step: self.delay_step,
            doppler_step: self.doppler_step,
            gate_bins: self.gate_bins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{path_frame, PathKind, PathSpec};
    use crate::dsp::zero_pad;

    fn wf(n: usize, k: usize) -> Waveform {
        // S N T_s = B, so one unpadded delay bin is c / 2B
        Waveform {
            carrier_freq: 60e9,
            bandwidth: 3.4345e9,
            chirp_duration: n as f64 * 1e-7,
            sample_period: 1e-7,
            samples_per_chirp: n,
            chirps_per_frame: k,
        }
    }

    fn map_of(frame: &Array2<Complex64>, w: &Waveform, plan: DftPlan) -> DelayDopplerMap {
        let padded = zero_pad(frame.view(), &plan).unwrap();
        delay_doppler_map(padded.view(), w, &plan).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_map() {
        let w = wf(8, 4);
        let m = map_of(&Array2::zeros((8, 4)), &w, DftPlan::new(11, 7).unwrap());
        assert!(m.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn unit_impulse_gives_flat_map() {
        let w = wf(8, 4);
        let mut f = Array2::zeros((8, 4));
        f[[0, 0]] = Complex64::new(1.0, 0.0);
        let m = map_of(&f, &w, DftPlan::new(13, 9).unwrap());
        assert!(m.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn on_grid_path_peaks_at_its_bin() {
        let (n, k) = (32, 16);
        let w = wf(n, k);
        let plan = DftPlan::new(n, k).unwrap();
        // delay exactly on bin 5, velocity on Doppler bin -3
        let tau = 5.0 * plan.delay_step(&w);
        let nu = -3.0 * plan.doppler_step(&w);
        let path = PathSpec {
            excess_delay: tau,
            radial_velocity: nu * SPEED_OF_LIGHT / 2.0,
            ..PathSpec::new(PathKind::Target, 0.0, 4.0)
        };
        // the fast-time Doppler coupling f_c nu T_s moves the tone off grid;
        // remove it for this oracle by pre-compensating the delay
        let path = PathSpec {
            excess_delay: tau - w.carrier_freq * nu / w.slope(),
            ..path
        };
        let frame = path_frame(&w, &path, Complex64::new(2.0, 0.0));
        let m = map_of(&frame, &w, plan);
        let p = peak(&m).unwrap();
        assert_eq!((p.delay_bin, p.doppler_bin), (5, -3));
        assert!((p.power.sqrt() - (n * k) as f64 * 2.0).abs() < 1e-9 * (n * k) as f64);
    }

    #[test]
    fn tie_goes_to_smaller_delay() {
        let w = wf(16, 4);
        let plan = DftPlan::new(16, 4).unwrap();
        let mut frame = Array2::zeros((16, 4));
        for bin in [3usize, 9] {
            let p = PathSpec {
                excess_delay: bin as f64 * plan.delay_step(&w),
                ..PathSpec::new(PathKind::Target, 0.0, 1.0)
            };
            frame = frame + path_frame(&w, &p, Complex64::new(1.0, 0.0));
        }
        // make the two peaks bit-identical in power
        let m = map_of(&frame, &w, plan);
        let p3 = m.power(3, 0);
        let p9 = m.power(9, 0);
        assert!((p3 - p9).abs() < 1e-9 * p3);
        let mut values = m.values().clone();
        values[[9, 0]] = values[[3, 0]];
        let tied = DelayDopplerMap { values, ..m };
        assert_eq!(peak(&tied).unwrap().delay_bin, 3);
    }

    #[test]
    fn gating_cases() {
        let w = wf(16, 4);
        let plan = DftPlan::new(16, 4).unwrap();
        let mut f = Array2::zeros((16, 4));
        f[[0, 0]] = Complex64::new(1.0, 0.0);
        let m = map_of(&f, &w, plan);
        assert_eq!(gate_min_distance(m.clone(), 0.0).unwrap().gate_bins(), 0);
        let all = gate_min_distance(m, 1e3).unwrap();
        assert!(matches!(peak(&all), Err(Error::EmptySearch(_))));
    }

    #[test]
    fn average_power_constant_and_single_bin() {
        let w = wf(8, 4);
        let plan = DftPlan::new(8, 4).unwrap();
        let mut f = Array2::zeros((8, 4));
        f[[0, 0]] = Complex64::new(3.0, 0.0);
        let m = map_of(&f, &w, plan);
        let step = m.delay_step();
        assert!((average_power(&m, 3.0 * step, 0.0, 2.5 * step).unwrap() - 9.0).abs() < 1e-12);
        let mut f2 = Array2::zeros((8, 4));
        f2[[1, 0]] = Complex64::new(1.0, 0.0);
        f2[[0, 1]] = Complex64::new(0.5, 0.0);
        let m2 = map_of(&f2, &w, plan);
        let single = average_power(&m2, 2.0 * step, 0.0, 0.4 * step).unwrap();
        assert_eq!(single, m2.power(2, 0));
        assert!(average_power(&m2, 2.5 * step, 0.0, 0.1 * step).is_err());
    }

    #[test]
    fn lazy_matches_full_map_bit_for_bit() {
        let w = wf(24, 8);
        let plan = DftPlan::new(37, 29).unwrap();
        let frame = Array2::from_shape_fn((24, 8), |(i, j)| {
            Complex64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i * 5 + j) % 7) as f64 - 3.0)
        });
        let engine = SpectralEngine::new(plan);
        let mut lazy = FrameSpectrum::new(&engine, frame.view(), &w, 0.0);
        let lp = lazy.peak().unwrap();
        let full = map_of(&frame, &w, plan);
        assert_eq!(lp, peak(&full).unwrap());
        assert_eq!(lazy.into_map().values(), full.values());
    }

    fn noise_frame(n: usize, k: usize, seed: u64) -> Array2<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, k), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn coarse_bound_dominates_row_maximum() {
        let plan = DftPlan::new(16, 1031).unwrap();
        let engine = SpectralEngine::for_rows(plan, 16);
        assert!(engine.coarse.is_some());
        for seed in 0..50 {
            let f = noise_frame(16, 16, seed);
            for row in f.outer_iter() {
                let row = row.to_vec();
                let exact = engine.doppler_row(&row).iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
                let bound = engine.coarse_bound(&row).unwrap();
                assert!(bound >= exact, "{bound} < {exact}");
                assert!(bound <= exact * 1.5, "bound too loose: {bound} vs {exact}");
            }
        }
        // a pure tone halfway between coarse samples
        let tone: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / 256.0)).collect();
        let exact = engine.doppler_row(&tone).iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        assert!(engine.coarse_bound(&tone).unwrap() >= exact);
    }

    #[test]
    fn pruned_search_matches_full_map_on_noise() {
        let w = wf(32, 16);
        let plan = DftPlan::new(40, 1031).unwrap();
        let engine = SpectralEngine::for_rows(plan, 16);
        for seed in 0..20 {
            let frame = noise_frame(32, 16, seed);
            let mut lazy = FrameSpectrum::new(&engine, frame.view(), &w, 0.0);
            let lp = lazy.peak().unwrap();
            assert_eq!(lp, peak(&map_of(&frame, &w, plan)).unwrap());
        }
    }
}

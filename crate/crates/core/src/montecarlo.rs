//! Time-domain Monte Carlo of the `X_A`–`Y_B` cross-correlation estimator.
//!
//! The system is linear and Gaussian, so the symmetrised output spectra are
//! reproduced exactly by a classical Gaussian surrogate: six independent
//! white noise channels are drawn, filtered by the transfer coefficients
//! in the frequency domain and transformed back.
//!
//! Fourier conventions: the transfer coefficients use `e^{+iωt}`; the FFT
//! uses `e^{-iωt}`, so each bin is multiplied by `conj(H(ω_k))`. With `X̂`
//! the forward FFT of a length-`M` record, `E[conj(X̂_k) Ŷ_k] = M S_XY(ω_k)/dt`
//! in the convention of [`crate::dynamics::output_spectra`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::correlation::{
    check_grid_coverage, line_integral, snr_grid, snr_numeric, with_optimal_power_b,
};
use crate::dynamics::{response_at, spectra_point};
use crate::error::{require_positive, Error, Result};
use crate::params::{GravityModel, SystemParams};

/// Largest record, in samples, that [`synthesize_outputs`] will build.
pub const MAX_SAMPLES: u64 = 1 << 28;

/// Integration time of the desk-scale preset, 100 damping periods.
pub const DESK_TAU_S: f64 = 1000.0;
/// Analytic SNR the desk-scale preset is boosted to at [`DESK_TAU_S`].
pub const DESK_TARGET_SNR: f64 = 5.0;
/// Sampling step of the desk-scale preset (20 samples per period).
pub const DESK_DT_S: f64 = 0.005;

const CHANNELS: usize = 6;
// per-trial stream layout: trial index in the high bits, channel in the low
const CHANNEL_BITS: u32 = 3;

/// Spectral densities (double-sided) of the six independent input
/// channels `X_A^in, Y_A^in, X_B^in, Y_B^in, Q_A^th, Q_B^th`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub vacuum: [f64; 4],
    pub thermal: [f64; 2],
}

impl NoiseModel {
    pub fn for_system(sys: &SystemParams) -> Self {
        NoiseModel {
            vacuum: [0.5; 4],
            thermal: [sys.n_th_a() + 0.5, sys.n_th_b() + 0.5],
        }
    }

    pub fn channel_psds(&self) -> [f64; CHANNELS] {
        let v = self.vacuum;
        let t = self.thermal;
        [v[0], v[1], v[2], v[3], t[0], t[1]]
    }
}

/// Simultaneous records of `X_A^out` and `Y_B^out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPair {
    pub x_a: Vec<f64>,
    pub y_b: Vec<f64>,
    pub dt: f64,
    pub tau: f64,
    pub seed: u64,
    pub trial_index: u64,
}

impl TimeSeriesPair {
    pub fn len(&self) -> usize {
        self.x_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_a.is_empty()
    }

    /// First `n` samples of both records.
    pub fn prefix(&self, n: usize) -> TimeSeriesPair {
        let n = n.min(self.len());
        TimeSeriesPair {
            x_a: self.x_a[..n].to_vec(),
            y_b: self.y_b[..n].to_vec(),
            dt: self.dt,
            tau: n as f64 * self.dt,
            seed: self.seed,
            trial_index: self.trial_index,
        }
    }
}

/// Number of samples for a record of length `tau`, enforcing the sampling
/// and duration preconditions and the memory guard.
pub fn sample_count(sys: &SystemParams, dt: f64, tau: f64) -> Result<usize> {
    require_positive("dt", dt)?;
    require_positive("tau", tau)?;
    let dt_max = 2.0 * PI / (20.0 * sys.omega_m());
    if dt > dt_max * (1.0 + 1e-9) {
        return Err(Error::domain(
            "dt",
            format!(
                "{dt:e} s does not resolve the resonance; need dt <= 2π/(20 ω_m) = {dt_max:e} s"
            ),
        ));
    }
    let tau_min = 10.0 * 2.0 * PI / sys.gamma_m();
    if tau < tau_min * (1.0 - 1e-9) {
        return Err(Error::domain(
            "tau",
            format!("{tau:e} s is shorter than ten damping times ({tau_min:e} s)"),
        ));
    }
    let n = (tau / dt).round();
    // the synthesis record is twice the kept length
    if 2.0 * n > MAX_SAMPLES as f64 {
        return Err(Error::TooManySamples {
            samples: (2.0 * n) as u64,
            limit: MAX_SAMPLES,
        });
    }
    Ok(n as usize)
}

/// Angular frequency of FFT bin `k` in a record of `m` samples.
fn bin_omega(k: usize, m: usize, dt: f64) -> f64 {
    let k = if k <= m / 2 {
        k as f64
    } else {
        k as f64 - m as f64
    };
    2.0 * PI * k / (m as f64 * dt)
}

fn response_rows(omega: f64, sys: &SystemParams) -> ([Complex64; CHANNELS], [Complex64; CHANNELS]) {
    let r = response_at(omega, sys);
    let m = r.input_matrix();
    let t = r.thermal_matrix();
    let row = |i: usize| {
        [
            m[(i, 0)],
            m[(i, 1)],
            m[(i, 2)],
            m[(i, 3)],
            t[(i, 0)],
            t[(i, 1)],
        ]
    };
    (row(0), row(3))
}

/// Precomputed transfer rows and FFT plans for records of a fixed length.
pub struct SynthesisPlan {
    sys: SystemParams,
    dt: f64,
    n: usize,
    sigma: [f64; CHANNELS],
    // rows of X_A and Y_B on bins 0..=m/2
    h_x: Vec<[Complex64; CHANNELS]>,
    h_y: Vec<[Complex64; CHANNELS]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SynthesisPlan {
    pub fn new(sys: &SystemParams, dt: f64, tau: f64) -> Result<Self> {
        sys.validate()?;
        let n = sample_count(sys, dt, tau)?;
        let m = 2 * n;
        let psd = NoiseModel::for_system(sys).channel_psds();
        let sigma = psd.map(|s| (s / dt).sqrt());
        let (h_x, h_y) = (0..=m / 2)
            .map(|k| response_rows(bin_omega(k, m, dt), sys))
            .unzip();
        let mut planner = FftPlanner::new();
        Ok(SynthesisPlan {
            sys: *sys,
            dt,
            n,
            sigma,
            h_x,
            h_y,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    /// One realisation. The record is synthesised circularly over `2N`
    /// samples and the first half is discarded.
    pub fn synthesize(&self, seed: u64, trial: u64) -> Result<TimeSeriesPair> {
        if trial >> (64 - CHANNEL_BITS) != 0 {
            return Err(Error::domain(
                "trial",
                format!("index {trial} exceeds 2^61"),
            ));
        }
        let m = 2 * self.n;
        // channels that reach neither output are skipped; every channel has
        // its own stream, so this does not change the others
        let active: Vec<usize> = (0..CHANNELS)
            .filter(|&ch| {
                self.h_x
                    .iter()
                    .chain(&self.h_y)
                    .any(|h| h[ch] != Complex64::new(0.0, 0.0))
            })
            .collect();
        // X + iY; both spectra are Hermitian, so one inverse FFT gives x and y
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        for pair in active.chunks(2) {
            // two real channels per FFT as the real and imaginary parts
            for (part, &ch) in pair.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((trial << CHANNEL_BITS) | ch as u64);
                let sigma = self.sigma[ch];
                for v in w.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    if part == 0 {
                        *v = Complex64::new(sigma * z, 0.0);
                    } else {
                        v.im = sigma * z;
                    }
                }
            }
            self.forward.process(&mut w);
            for k in 0..m {
                let zc = w[(m - k) % m].conj();
                let spectra = [(w[k] + zc) * 0.5, (w[k] - zc) * Complex64::new(0.0, -0.5)];
                for (&ch, wk) in pair.iter().zip(spectra) {
                    let (hx, hy) = self.coefficients(k, ch);
                    out[k] += (hx + Complex64::i() * hy) * wk;
                }
            }
        }
        self.inverse.process(&mut out);
        let scale = 1.0 / m as f64;
        Ok(TimeSeriesPair {
            x_a: out[self.n..].iter().map(|z| z.re * scale).collect(),
            y_b: out[self.n..].iter().map(|z| z.im * scale).collect(),
            dt: self.dt,
            tau: self.n as f64 * self.dt,
            seed,
            trial_index: trial,
        })
    }

    /// FFT-convention coefficients of channel `ch` at bin `k`:
    /// `conj(H(ω))` on positive bins, `H(|ω|)` on negative ones, real at
    /// DC and Nyquist.
    fn coefficients(&self, k: usize, ch: usize) -> (Complex64, Complex64) {
        let m = 2 * self.n;
        if k == 0 || k == m / 2 {
            let (hx, hy) = (self.h_x[k][ch], self.h_y[k][ch]);
            (Complex64::new(hx.re, 0.0), Complex64::new(hy.re, 0.0))
        } else if k < m / 2 {
            (self.h_x[k][ch].conj(), self.h_y[k][ch].conj())
        } else {
            (self.h_x[m - k][ch], self.h_y[m - k][ch])
        }
    }

    pub fn system(&self) -> &SystemParams {
        &self.sys
    }
}

/// Synthesises `X_A^out` and `Y_B^out` for one trial. `(seed, trial)`
/// determines every sample.
pub fn synthesize_outputs(
    sys: &SystemParams,
    dt: f64,
    tau: f64,
    seed: u64,
    trial: u64,
) -> Result<TimeSeriesPair> {
    SynthesisPlan::new(sys, dt, tau)?.synthesize(seed, trial)
}

/// Time-domain correlation kernel with taps at lags `-half..=half`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    pub dt: f64,
    /// `taps[i]` is the kernel at lag `i - half`.
    pub taps: Vec<f64>,
}

impl FilterKernel {
    /// Kernel from an odd number of centred taps.
    pub fn from_taps(dt: f64, taps: Vec<f64>) -> Result<Self> {
        require_positive("dt", dt)?;
        if taps.len().is_multiple_of(2) {
            return Err(Error::domain("taps", "need an odd number of centred taps"));
        }
        Ok(FilterKernel { dt, taps })
    }

    /// `F(t - t') = δ_{tt'}`: the estimator reduces to `Σ X Y dt²`.
    pub fn delta(dt: f64) -> Self {
        FilterKernel {
            dt,
            taps: vec![1.0],
        }
    }

    pub fn half(&self) -> usize {
        self.taps.len() / 2
    }
}

/// A correlation filter in the frequency domain, ready for records of a
/// fixed length.
pub struct PreparedFilter {
    n: usize,
    dt: f64,
    // DFT of the taps on the zero-padded length
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
}

impl PreparedFilter {
    /// Filter for records of `n` samples from explicit taps.
    pub fn from_kernel(kernel: &FilterKernel, n: usize) -> Result<Self> {
        let half = kernel.half();
        if half >= n.max(1) {
            return Err(Error::Config(format!(
                "kernel spans {} lags but the record has only {n} samples",
                kernel.taps.len()
            )));
        }
        let p = n + 2 * half;
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for (i, &t) in kernel.taps.iter().enumerate() {
            let lag = i as isize - half as isize;
            buf[lag.rem_euclid(p as isize) as usize] = Complex64::new(t, 0.0);
        }
        let forward = FftPlanner::new().plan_fft_forward(p);
        forward.process(&mut buf);
        Ok(PreparedFilter {
            n,
            dt: kernel.dt,
            spectrum: buf,
            forward,
        })
    }

    /// Matched filter `F̃ = conj(S_XY)/(S_XX S_NN)` of `template` for
    /// records of `n` samples. It is the `2n`-periodic kernel whose DFT is
    /// `F̃(ω_k)/dt`; on `n`-sample records only lags `|l| < n` enter, so
    /// the estimator remains an ordinary linear correlation.
    pub fn optimal(template: &SystemParams, dt: f64, n: usize) -> Result<Self> {
        require_positive("dt", dt)?;
        if n == 0 {
            return Err(Error::domain("n", "record must not be empty"));
        }
        let p = 2 * n;
        let (n_a, n_b) = (template.n_th_a(), template.n_th_b());
        let mut spectrum = Vec::with_capacity(p);
        for k in 0..p {
            let (s_xx, s_nn, s_xy, _) =
                spectra_point(&response_at(bin_omega(k, p, dt), template), n_a, n_b);
            spectrum.push(s_xy.conj() / (s_xx * s_nn * dt));
        }
        Ok(PreparedFilter {
            n,
            dt,
            spectrum,
            forward: FftPlanner::new().plan_fft_forward(p),
        })
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    /// Time-domain taps at lags `0..len` (wrapping, negative lags at the
    /// end) of the padded kernel.
    pub fn taps(&self) -> Vec<f64> {
        let p = self.spectrum.len();
        let mut buf = self.spectrum.clone();
        FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
        buf.iter().map(|z| z.re / p as f64).collect()
    }
}

/// `Ĉ_XY = Σ_t Σ_t' X_A(t) F(t - t') Y_B(t') dt²`, evaluated with FFTs.
pub fn estimator_cxy(pair: &TimeSeriesPair, filter: &PreparedFilter) -> Result<f64> {
    if pair.len() != filter.n || pair.y_b.len() != filter.n {
        return Err(Error::Config(format!(
            "filter prepared for {} samples, record has {}",
            filter.n,
            pair.len()
        )));
    }
    if (pair.dt - filter.dt).abs() > 1e-12 * filter.dt {
        return Err(Error::Config(format!(
            "filter dt {} differs from record dt {}",
            filter.dt, pair.dt
        )));
    }
    let p = filter.spectrum.len();
    let pad = |v: &[f64]| {
        let mut b = vec![Complex64::new(0.0, 0.0); p];
        for (d, &s) in b.iter_mut().zip(v) {
            d.re = s;
        }
        b
    };
    let (mut xh, mut yh) = (pad(&pair.x_a), pad(&pair.y_b));
    filter.forward.process(&mut xh);
    filter.forward.process(&mut yh);
    let sum: Complex64 = (0..p)
        .map(|k| xh[k].conj() * filter.spectrum[k] * yh[k])
        .sum();
    Ok(sum.re * pair.dt * pair.dt / p as f64)
}

/// Convenience wrapper preparing `kernel` for `pair` on the fly.
pub fn estimator_cxy_kernel(pair: &TimeSeriesPair, kernel: &FilterKernel) -> Result<f64> {
    estimator_cxy(pair, &PreparedFilter::from_kernel(kernel, pair.len())?)
}

/// Expected estimator value `τ ∫ dω/2π Re[S_XY F̃]` for data from `sys`
/// and the matched filter of `template`.
pub fn expected_estimator(sys: &SystemParams, template: &SystemParams, tau: f64) -> Result<f64> {
    require_positive("tau", tau)?;
    let grid = snr_grid(template);
    check_grid_coverage(&grid, template)?;
    let (na, nb) = (sys.n_th_a(), sys.n_th_b());
    let (ta, tb) = (template.n_th_a(), template.n_th_b());
    let rate = line_integral(
        |w| {
            let (_, _, s_xy, _) = spectra_point(&response_at(w, sys), na, nb);
            let (t_xx, t_nn, t_xy, _) = spectra_point(&response_at(w, template), ta, tb);
            (s_xy * t_xy.conj()).re / (t_xx * t_nn)
        },
        &grid,
    )?;
    Ok(tau * rate)
}

/// Welch cross-spectral density estimate on non-negative frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchEstimate {
    /// rad/s
    pub omega: Vec<f64>,
    pub csd: Vec<Complex64>,
    pub segments: usize,
}

/// Welch estimate of the double-sided cross spectrum `S_xy` (Hann window,
/// 50 % overlap), in the convention of
/// [`crate::dynamics::output_spectra`]: white samples of variance `σ²`
/// give `σ² dt`.
pub fn welch_csd(x: &[f64], y: &[f64], dt: f64, segment: usize) -> Result<WelchEstimate> {
    require_positive("dt", dt)?;
    if x.len() != y.len() {
        return Err(Error::Config("series lengths differ".into()));
    }
    if segment < 2 || segment > x.len() {
        return Err(Error::domain(
            "segment",
            format!("must lie in [2, {}], got {segment}", x.len()),
        ));
    }
    let window: Vec<f64> = (0..segment)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment as f64).cos())
        .collect();
    let norm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let bins = segment / 2 + 1;
    let mut acc = vec![Complex64::new(0.0, 0.0); bins];
    let step = segment / 2;
    let mut segments = 0;
    let mut start = 0;
    let (mut xb, mut yb) = (
        vec![Complex64::default(); segment],
        vec![Complex64::default(); segment],
    );
    while start + segment <= x.len() {
        for i in 0..segment {
            xb[i] = Complex64::new(x[start + i] * window[i], 0.0);
            yb[i] = Complex64::new(y[start + i] * window[i], 0.0);
        }
        fft.process(&mut xb);
        fft.process(&mut yb);
        for k in 0..bins {
            acc[k] += xb[k].conj() * yb[k];
        }
        segments += 1;
        start += step;
    }
    let scale = dt / (norm * segments as f64);
    Ok(WelchEstimate {
        omega: (0..bins).map(|k| bin_omega(k, segment, dt)).collect(),
        csd: acc.into_iter().map(|z| z * scale).collect(),
        segments,
    })
}

/// Desk-scale verification set: 1 g mirrors at 10 Hz with `Q_m = 100` at
/// room temperature, finesse 6000 in a 1 m cavity, `n̄_th/C_A = 10⁻³`,
/// cavity B at its optimal power, and ω_g boosted so that the analytic SNR
/// is [`DESK_TARGET_SNR`] at [`DESK_TAU_S`].
pub fn desk_preset() -> Result<SystemParams> {
    let mut sys = SystemParams::reference();
    for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
        cav.mech.omega_m = 2.0 * PI * 10.0;
        cav.mech.q_m = 100.0;
    }
    let sys = with_optimal_power_b(&sys.with_noise_to_cooperativity(1e-3)?)?;
    let boost = boost_for_snr(&sys, DESK_TAU_S, DESK_TARGET_SNR)?;
    let mut out = sys;
    out.gravity.boost = boost;
    Ok(out)
}

/// Boost of ω_g for which the analytic SNR at `tau` equals `target`.
pub fn boost_for_snr(sys: &SystemParams, tau: f64, target: f64) -> Result<f64> {
    require_positive("target", target)?;
    if sys.gravity_model != GravityModel::Quantum {
        return Err(Error::Config(
            "boosting needs the quantum gravity model".into(),
        ));
    }
    let grid = snr_grid(sys);
    let snr_at = |b: f64| {
        let mut s = *sys;
        s.gravity.boost = b;
        snr_numeric(&s, tau, &grid)
    };
    let mut boost = sys.gravity.boost.max(1.0);
    // SNR ∝ boost² while the thermal cross path is weak
    for _ in 0..60 {
        let snr = snr_at(boost)?;
        if !(snr > 0.0) {
            return Err(Error::Config("analytic SNR vanishes; cannot boost".into()));
        }
        let ratio = target / snr;
        if (ratio - 1.0).abs() < 1e-10 {
            return Ok(boost);
        }
        boost *= ratio.sqrt();
    }
    Err(Error::Config(format!(
        "boost iteration for SNR {target} did not converge"
    )))
}

/// Settings of a Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub dt: f64,
    /// Integration times, s; each trial is synthesised once at the longest
    /// and truncated for the others.
    pub taus: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    /// System whose matched filter is applied; defaults to the simulated
    /// system under the quantum gravity model.
    pub filter_template: Option<SystemParams>,
    /// Keep every per-trial estimate in the result.
    pub keep_trials: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub tau_s: f64,
    pub c_xy: f64,
}

/// Ensemble statistics at one integration time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauStats {
    pub tau: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    /// Standard error of `mu_hat`.
    pub std_err: f64,
    pub snr_empirical: f64,
    pub snr_analytic: f64,
    pub mu_analytic: f64,
}

impl TauStats {
    /// `|μ̂| ≤ k · σ̂/√n`.
    pub fn consistent_with_zero(&self, k: f64) -> bool {
        self.mu_hat.abs() <= k * self.std_err
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub n_trials: usize,
    /// Statistics at the longest integration time.
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub snr_empirical: f64,
    pub snr_analytic: f64,
    pub taus: Vec<f64>,
    pub per_tau: Vec<TauStats>,
    /// Slope of `ln SNR` against `ln τ`; `None` with fewer than two
    /// distinct integration times.
    pub growth_exponent: Option<f64>,
    pub boost: f64,
    pub trials: Vec<TrialRecord>,
}

/// Runs trials `0..n_trials` of the ensemble.
pub fn run_ensemble(sys: &SystemParams, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    let trials: Vec<u64> = (0..cfg.n_trials as u64).collect();
    run_ensemble_trials(sys, cfg, &trials)
}

/// Runs the given trial indices. Statistics are aggregated in ascending
/// trial order, so any permutation of `trials` gives identical results.
pub fn run_ensemble_trials(
    sys: &SystemParams,
    cfg: &EnsembleConfig,
    trials: &[u64],
) -> Result<EnsembleResult> {
    if trials.len() < 2 {
        return Err(Error::domain(
            "n_trials",
            format!("need at least 2 trials, got {}", trials.len()),
        ));
    }
    if trials.len() < 50 {
        log::warn!(
            "{} trials are too few for SNR claims (want >= 50)",
            trials.len()
        );
    }
    let mut taus = cfg.taus.clone();
    if taus.is_empty() {
        return Err(Error::domain("taus", "need at least one integration time"));
    }
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let tau_max = *taus.last().expect("non-empty");
    let plan = SynthesisPlan::new(sys, cfg.dt, tau_max)?;
    let template = cfg.filter_template.unwrap_or(SystemParams {
        gravity_model: GravityModel::Quantum,
        ..*sys
    });
    template.validate()?;
    let lengths = taus
        .iter()
        .map(|&t| sample_count(sys, cfg.dt, t))
        .collect::<Result<Vec<_>>>()?;
    let filters = lengths
        .iter()
        .map(|&n| PreparedFilter::optimal(&template, cfg.dt, n))
        .collect::<Result<Vec<_>>>()?;

    let mut sorted = trials.to_vec();
    sorted.sort_unstable();
    let estimates = sorted
        .par_iter()
        .map(|&trial| {
            let pair = plan.synthesize(cfg.seed, trial)?;
            lengths
                .iter()
                .zip(&filters)
                .map(|(&n, f)| estimator_cxy(&pair.prefix(n), f))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let grid = snr_grid(sys);
    let n = sorted.len() as f64;
    let mut per_tau = Vec::with_capacity(taus.len());
    for (j, &n_samples) in lengths.iter().enumerate() {
        let tau = n_samples as f64 * cfg.dt;
        let values: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sigma = var.sqrt();
        per_tau.push(TauStats {
            tau,
            mu_hat: mean,
            sigma_hat: sigma,
            std_err: sigma / n.sqrt(),
            snr_empirical: mean / sigma,
            snr_analytic: snr_numeric(sys, tau, &grid)?,
            mu_analytic: expected_estimator(sys, &template, tau)?,
        });
    }
    let growth_exponent = growth_fit(&per_tau);
    let last = *per_tau.last().expect("non-empty");
    let records = if cfg.keep_trials {
        sorted
            .iter()
            .zip(&estimates)
            .flat_map(|(&trial, e)| {
                per_tau.iter().zip(e).map(move |(s, &c)| TrialRecord {
                    trial,
                    tau_s: s.tau,
                    c_xy: c,
                })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(EnsembleResult {
        n_trials: sorted.len(),
        mu_hat: last.mu_hat,
        sigma_hat: last.sigma_hat,
        snr_empirical: last.snr_empirical,
        snr_analytic: last.snr_analytic,
        taus: per_tau.iter().map(|s| s.tau).collect(),
        per_tau,
        growth_exponent,
        boost: sys.gravity.boost,
        trials: records,
    })
}

/// Least-squares slope of `ln SNR` against `ln τ`.
fn growth_fit(stats: &[TauStats]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.snr_empirical > 0.0)
        .map(|s| (s.tau.ln(), s.snr_empirical.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn short_desk() -> SystemParams {
        desk_preset().unwrap()
    }

    #[test]
    fn desk_preset_hits_target() {
        let sys = short_desk();
        let snr = snr_numeric(&sys, DESK_TAU_S, &snr_grid(&sys)).unwrap();
        assert!((snr / DESK_TARGET_SNR - 1.0).abs() < 1e-8);
        assert!((sys.cooperativity_b() - 0.5).abs() < 1e-9);
        assert!(sys.gravity.boost > 1.0);
    }

    #[test]
    fn sample_count_guards() {
        let sys = short_desk();
        assert!(matches!(
            sample_count(&sys, 0.01, 1000.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            sample_count(&sys, 0.005, 10.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            sample_count(&sys, 1e-7, 1e5),
            Err(Error::TooManySamples { .. })
        ));
        assert_eq!(sample_count(&sys, 0.005, 100.0).unwrap(), 20_000);
    }

    #[test]
    fn bins_follow_fft_order() {
        assert_eq!(bin_omega(0, 8, 1.0), 0.0);
        assert!((bin_omega(1, 8, 1.0) - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!((bin_omega(7, 8, 1.0) + 2.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn delta_kernel_identical_series() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let pair = TimeSeriesPair {
            x_a: x.clone(),
            y_b: x.clone(),
            dt: 0.01,
            tau: 0.64,
            seed: 0,
            trial_index: 0,
        };
        let c = estimator_cxy_kernel(&pair, &FilterKernel::delta(0.01)).unwrap();
        let direct: f64 = x.iter().map(|v| v * v).sum::<f64>() * 1e-4;
        assert!((c - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn fft_estimator_matches_direct_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let taps: Vec<f64> = (0..7).map(|_| rng.sample(StandardNormal)).collect();
        let dt = 0.1;
        let kernel = FilterKernel::from_taps(dt, taps.clone()).unwrap();
        let pair = TimeSeriesPair {
            x_a: x.clone(),
            y_b: y.clone(),
            dt,
            tau: n as f64 * dt,
            seed: 0,
            trial_index: 0,
        };
        let fast = estimator_cxy_kernel(&pair, &kernel).unwrap();
        let mut slow = 0.0;
        for t in 0..n {
            for s in 0..n {
                let lag = t as isize - s as isize;
                if lag.abs() <= 3 {
                    slow += x[t] * taps[(lag + 3) as usize] * y[s];
                }
            }
        }
        slow *= dt * dt;
        assert!((fast - slow).abs() < 1e-12 * slow.abs().max(1.0));
    }

    #[test]
    fn optimal_filter_equals_periodised_kernel() {
        // the frequency-domain filter is ordinary linear correlation with
        // its own taps
        let sys = short_desk();
        let dt = DESK_DT_S;
        let n = 64;
        let f = PreparedFilter::optimal(&sys, dt, n).unwrap();
        let taps = f.taps();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let pair = TimeSeriesPair {
            x_a: x.clone(),
            y_b: y.clone(),
            dt,
            tau: n as f64 * dt,
            seed: 0,
            trial_index: 0,
        };
        let fast = estimator_cxy(&pair, &f).unwrap();
        let p = 2 * n as isize;
        let mut slow = 0.0;
        for t in 0..n {
            for s in 0..n {
                let lag = (t as isize - s as isize).rem_euclid(p) as usize;
                slow += x[t] * taps[lag] * y[s];
            }
        }
        slow *= dt * dt;
        assert!((fast - slow).abs() < 1e-9 * slow.abs(), "{fast} vs {slow}");
    }

    #[test]
    fn synthesis_is_reproducible() {
        let sys = short_desk();
        let plan = SynthesisPlan::new(&sys, DESK_DT_S, 100.0).unwrap();
        let a = plan.synthesize(11, 3).unwrap();
        let b = plan.synthesize(11, 3).unwrap();
        let c = plan.synthesize(11, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x_a, c.x_a);
        assert_eq!(a.len(), 20_000);
        assert!((a.tau - 100.0).abs() < 1e-9);
    }

    #[test]
    fn expected_estimator_matches_rate() {
        let sys = short_desk();
        let mu = expected_estimator(&sys, &sys, DESK_TAU_S).unwrap();
        let snr = snr_numeric(&sys, DESK_TAU_S, &snr_grid(&sys)).unwrap();
        // μ = τ·rate = SNR² for the matched filter
        assert!((mu / (snr * snr) - 1.0).abs() < 1e-9);
        let mut null = sys;
        null.gravity_model = GravityModel::None;
        assert_eq!(expected_estimator(&null, &sys, DESK_TAU_S).unwrap(), 0.0);
    }

    #[test]
    fn growth_fit_recovers_slope() {
        let stats: Vec<TauStats> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&tau: &f64| TauStats {
                tau,
                mu_hat: 0.0,
                sigma_hat: 0.0,
                std_err: 0.0,
                snr_empirical: 3.0 * tau.powf(0.5),
                snr_analytic: 0.0,
                mu_analytic: 0.0,
            })
            .collect();
        assert!((growth_fit(&stats).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(growth_fit(&stats[..1]), None);
    }
}

//! Monte-Carlo experiments built on the waveform pipeline.

use super::{
    bin_freq, extract_crossings, extract_crossings_with, fft_inplace, fft_len, gen_bandlimited_noise,
    ideal_lp, match_crossings, quantize, synthesize_span, trial_rng, CrossingRule, MatchReport,
    SampledWaveform,
};
use crate::channel_params::{derive_with_beta, ChannelConfig, DerivedParams, ZeroCrossingSeq};
use crate::error::{require_positive, Error, Result};
use crate::level_crossing::mean_excursion_duration;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Shared simulation knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Grid points per transition time `beta`.
    pub points_per_beta: f64,
    /// Symbols per independently generated block.
    pub block_symbols: usize,
    /// Add channel noise after the lowpass.
    pub noise: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { points_per_beta: 40.0, block_symbols: 1000, noise: true }
    }
}

impl SimOptions {
    fn dt(&self, params: &DerivedParams) -> Result<f64> {
        if !(self.points_per_beta >= 20.0) {
            return Err(Error::InvalidParameter {
                field: "points_per_beta",
                value: self.points_per_beta,
                reason: "must be at least 20",
            });
        }
        Ok(params.beta / self.points_per_beta)
    }
}

fn exp_dist(lambda: f64) -> Result<Exp<f64>> {
    Exp::new(lambda).map_err(|e| Error::Domain(e.to_string()))
}

/// Realization with an even number `n_crossings` of crossings whose end
/// level matches the start level, padded to an FFT-friendly length.
pub fn periodic_realization<R: Rng + ?Sized>(
    params: &DerivedParams,
    n_crossings: usize,
    dt: f64,
    rng: &mut R,
) -> Result<(ZeroCrossingSeq, SampledWaveform)> {
    if n_crossings == 0 || n_crossings % 2 == 1 {
        return Err(Error::Domain("periodic_realization: crossing count must be even and positive".into()));
    }
    let exp = exp_dist(params.lambda)?;
    let mut times = Vec::with_capacity(n_crossings);
    let mut t = 0.0;
    for _ in 0..n_crossings {
        t += params.beta + exp.sample(rng);
        times.push(t);
    }
    let tail = params.beta + exp.sample(rng);
    let n = fft_len(((t + tail) / dt).ceil() as usize);
    let zcs = ZeroCrossingSeq::from_times(times, 0.0, false)?;
    let x = synthesize_span(&zcs, params, dt, n)?;
    Ok((zcs, x))
}

/// Realization on exactly `n_samples` grid points; crossings closer than
/// `beta` to the end are dropped and the count is made even.
pub fn fixed_span_realization<R: Rng + ?Sized>(
    params: &DerivedParams,
    n_samples: usize,
    dt: f64,
    rng: &mut R,
) -> Result<(ZeroCrossingSeq, SampledWaveform)> {
    let exp = exp_dist(params.lambda)?;
    let limit = n_samples as f64 * dt - params.beta;
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += params.beta + exp.sample(rng);
        if t > limit {
            break;
        }
        times.push(t);
    }
    if times.len() % 2 == 1 {
        times.pop();
    }
    let zcs = ZeroCrossingSeq::from_times(times, 0.0, false)?;
    let x = synthesize_span(&zcs, params, dt, n_samples)?;
    Ok((zcs, x))
}

/// Channel output before the quantizer: lowpassed input plus noise.
pub fn channel_output<R: Rng + ?Sized>(
    x: &SampledWaveform,
    params: &DerivedParams,
    noise: bool,
    rng: &mut R,
) -> Result<SampledWaveform> {
    let y = ideal_lp(x, params.w)?;
    if !noise {
        return Ok(y);
    }
    let n = gen_bandlimited_noise(x.len(), x.dt, params.n0, params.w, rng)?;
    let mut r = y.add(&n)?;
    r.t_start = x.t_start;
    Ok(r)
}

/// Out-of-band part `x - LP(x)`.
pub fn lp_residual(x: &SampledWaveform, bandwidth: f64) -> Result<SampledWaveform> {
    x.sub(&ideal_lp(x, bandwidth)?)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Normalized histogram with uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
}

impl Histogram {
    /// Bins of width `bin_width` centred on multiples of it.
    pub fn build(values: &[f64], bin_width: f64) -> Result<Self> {
        require_positive("bin_width", bin_width)?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = (lo / bin_width).round() as i64;
        let last = (hi / bin_width).round() as i64;
        let mut counts = vec![0usize; (last - first + 1) as usize];
        for &v in values {
            counts[((v / bin_width).round() as i64 - first) as usize] += 1;
        }
        let norm = 1.0 / (values.len() as f64 * bin_width);
        Ok(Self {
            bin_width,
            centers: (first..=last).map(|i| i as f64 * bin_width).collect(),
            density: counts.iter().map(|&c| c as f64 * norm).collect(),
        })
    }

    /// `D(h || N(mean, var))` between bin probabilities, in nats.
    pub fn kl_to_gaussian(&self, mean: f64, var: f64) -> f64 {
        let sd = var.sqrt();
        let cdf = |x: f64| crate::special::std_normal_cdf((x - mean) / sd);
        let half = 0.5 * self.bin_width;
        self.centers
            .iter()
            .zip(&self.density)
            .filter(|(_, &d)| d > 0.0)
            .map(|(&c, &d)| {
                let p = d * self.bin_width;
                let q = (cdf(c + half) - cdf(c - half)).max(f64::MIN_POSITIVE);
                p * (p / q).ln()
            })
            .sum()
    }
}

/// Time and ensemble statistics of the lowpass distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpDistortionStats {
    pub time_mean: f64,
    pub time_variance: f64,
    pub ensemble_mean: [f64; 3],
    pub ensemble_variance: [f64; 3],
    pub ensemble_variance_pooled: f64,
    pub histogram: Histogram,
    pub kl_divergence: f64,
    pub n_time_samples: usize,
    pub n_ensemble: usize,
}

/// Distortion `x - LP(x)` statistics: one long realization for the time
/// average and `n_ensemble` independent ones sampled at three instants.
pub fn lp_distortion_stats(
    params: &DerivedParams,
    n_time_samples: usize,
    n_ensemble: usize,
    seed: u64,
) -> Result<LpDistortionStats> {
    if n_time_samples < 1000 || n_ensemble < 2 {
        return Err(Error::Domain("lp_distortion_stats: sample counts too small".into()));
    }
    let dt = params.beta / 20.0;
    let n = fft_len(n_time_samples);
    let (_, x) = fixed_span_realization(params, n, dt, &mut trial_rng(seed, 0))?;
    let xt = lp_residual(&x, params.w)?;
    let (time_mean, time_variance) = mean_var(&xt.samples);
    let max = xt.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let histogram = Histogram::build(&xt.samples, 0.01 * max)?;
    let kl_divergence = histogram.kl_to_gaussian(time_mean, time_variance);

    let m = fft_len((200.0 * params.t_avg / dt) as usize);
    let picks = [m / 4, m / 2, 3 * m / 4];
    let draws: Vec<[f64; 3]> = (0..n_ensemble as u64)
        .into_par_iter()
        .map(|trial| -> Result<[f64; 3]> {
            let mut rng = trial_rng(seed, trial + 1);
            let (_, x) = fixed_span_realization(params, m, dt, &mut rng)?;
            let xt = lp_residual(&x, params.w)?;
            Ok(picks.map(|i| xt.samples[i]))
        })
        .collect::<Result<_>>()?;
    let mut ensemble_mean = [0.0; 3];
    let mut ensemble_variance = [0.0; 3];
    for j in 0..3 {
        let col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        (ensemble_mean[j], ensemble_variance[j]) = mean_var(&col);
    }
    let all: Vec<f64> = draws.iter().flatten().copied().collect();
    let ensemble_variance_pooled = all.iter().map(|v| v * v).sum::<f64>() / all.len() as f64;
    Ok(LpDistortionStats {
        time_mean,
        time_variance,
        ensemble_mean,
        ensemble_variance,
        ensemble_variance_pooled,
        histogram,
        kl_divergence,
        n_time_samples: n,
        n_ensemble,
    })
}

/// Averaged periodogram of the transmit signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalPsd {
    /// Angular frequencies of the retained bins (DC excluded).
    pub omega: Vec<f64>,
    pub psd: Vec<f64>,
    pub n_crossings: usize,
    pub n_segments: usize,
    /// Mean square of the synthesized samples.
    pub total_power: f64,
    /// Power carried by bins with `|f| > W`.
    pub out_of_band_power: f64,
}

/// Periodogram `|dt X_j|^2 / (N dt)` averaged over segments of about
/// `segment_symbols` symbols until `k_symbols` crossings are used.
pub fn empirical_psd(
    params: &DerivedParams,
    k_symbols: usize,
    segment_symbols: usize,
    dt: f64,
    seed: u64,
) -> Result<EmpiricalPsd> {
    if k_symbols < 1000 || segment_symbols < 10 {
        return Err(Error::Domain("empirical_psd: need K >= 1000 and segments of >= 10 symbols".into()));
    }
    let n = fft_len((segment_symbols as f64 * params.t_avg / dt).ceil() as usize);
    let n_segments = k_symbols.div_ceil(segment_symbols);
    let segments: Vec<(Vec<f64>, usize, f64)> = (0..n_segments as u64)
        .into_par_iter()
        .map(|trial| -> Result<(Vec<f64>, usize, f64)> {
            let mut rng = trial_rng(seed, trial);
            let (zcs, x) = fixed_span_realization(params, n, dt, &mut rng)?;
            let mut buf: Vec<Complex64> = x.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_inplace(&mut buf, false);
            let norm = dt / n as f64;
            let p = buf[..=n / 2].iter().map(|c| c.norm_sqr() * norm).collect();
            Ok((p, zcs.len(), x.power()))
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; n / 2 + 1];
    let mut n_crossings = 0;
    let mut total_power = 0.0;
    for (p, c, pw) in &segments {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        n_crossings += c;
        total_power += pw;
    }
    let scale = 1.0 / n_segments as f64;
    total_power *= scale;
    let df = 1.0 / (n as f64 * dt);
    let mut omega = Vec::with_capacity(n / 2);
    let mut psd = Vec::with_capacity(n / 2);
    let mut out_of_band_power = 0.0;
    for (j, &a) in acc.iter().enumerate().skip(1) {
        let f = bin_freq(j, n, dt);
        let s = a * scale;
        if f > params.w {
            // two-sided: mirror bin carries the same power except at Nyquist
            let weight = if 2 * j == n { 1.0 } else { 2.0 };
            out_of_band_power += weight * s * df;
        }
        omega.push(2.0 * PI * f);
        psd.push(s);
    }
    Ok(EmpiricalPsd { omega, psd, n_crossings, n_segments, total_power, out_of_band_power })
}

/// Mean and variance of a count sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountStats {
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl CountStats {
    fn from_counts(counts: &[usize]) -> Self {
        let v: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, variance) = mean_var(&v);
        Self { mean, variance, n: counts.len() }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

fn sign_changes(r: &SampledWaveform, from: f64, to: f64) -> usize {
    let i0 = (((from - r.t_start) / r.dt).ceil().max(0.0)) as usize;
    let i1 = (((to - r.t_start) / r.dt).floor() as usize).min(r.len() - 1);
    (i0..i1).filter(|&i| (r.samples[i] >= 0.0) != (r.samples[i + 1] >= 0.0)).count()
}

fn blocks<T: Send>(
    n_items: usize,
    per_block: usize,
    f: impl Fn(u64) -> Result<Vec<T>> + Sync,
) -> Result<Vec<T>> {
    let n_blocks = n_items.div_ceil(per_block) as u64;
    let parts: Vec<Vec<T>> = (0..n_blocks).into_par_iter().map(&f).collect::<Result<_>>()?;
    let mut out: Vec<T> = parts.into_iter().flatten().collect();
    out.truncate(n_items);
    Ok(out)
}

/// Crossings of the channel output inside each transition interval
/// `[T_k - beta/2, T_k + beta/2]`.
pub fn transition_crossing_census(
    params: &DerivedParams,
    n_trials: usize,
    opts: &SimOptions,
    seed: u64,
) -> Result<CountStats> {
    let dt = opts.dt(params)?;
    let per = opts.block_symbols.max(2) & !1;
    let counts = blocks(n_trials, per, |b| {
        let mut rng = trial_rng(seed, b);
        let (zcs, x) = periodic_realization(params, per, dt, &mut rng)?;
        let r = channel_output(&x, params, opts.noise, &mut rng)?;
        let h = 0.5 * params.beta;
        Ok(zcs.times.iter().map(|&t| sign_changes(&r, t - h, t + h)).collect())
    })?;
    Ok(CountStats::from_counts(&counts))
}

/// Full-chain alignment statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStats {
    pub n_symbols: usize,
    pub shift_mean: f64,
    pub shift_variance: f64,
    pub n_shift: usize,
    pub mean_v: f64,
    pub var_v: f64,
    pub n_insertions: usize,
    pub n_deletions: usize,
}

/// One block of the full chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBlock {
    pub tx: ZeroCrossingSeq,
    pub rx: ZeroCrossingSeq,
    pub report: MatchReport,
}

/// Block `block` of [`chain_experiment`] with `n_crossings` transmitted
/// crossings.
pub fn chain_block(
    params: &DerivedParams,
    n_crossings: usize,
    opts: &SimOptions,
    seed: u64,
    block: u64,
) -> Result<ChainBlock> {
    let dt = opts.dt(params)?;
    let mut rng = trial_rng(seed, block);
    let (tx, x) = periodic_realization(params, n_crossings, dt, &mut rng)?;
    let r = channel_output(&x, params, opts.noise, &mut rng)?;
    let rx = extract_crossings(&r)?;
    let report = match_crossings(&tx, &rx);
    Ok(ChainBlock { tx, rx, report })
}

/// Synthesizes, filters, adds noise, extracts crossings from the
/// unquantized output and aligns them with the input crossings.
pub fn chain_experiment(
    params: &DerivedParams,
    n_symbols: usize,
    opts: &SimOptions,
    seed: u64,
) -> Result<ChainStats> {
    let per = opts.block_symbols.max(2) & !1;
    let n_blocks = n_symbols.div_ceil(per) as u64;
    let reports: Vec<MatchReport> = (0..n_blocks)
        .into_par_iter()
        .map(|b| chain_block(params, per, opts, seed, b).map(|c| c.report))
        .collect::<Result<_>>()?;
    let shifts: Vec<f64> = reports.iter().flat_map(|r| r.shift_samples.iter().copied()).collect();
    let vs: Vec<usize> = reports.iter().flat_map(|r| r.per_symbol_counts.iter().copied()).collect();
    let (shift_mean, shift_variance) = mean_var(&shifts);
    let v = CountStats::from_counts(&vs);
    Ok(ChainStats {
        n_symbols: vs.len(),
        shift_mean,
        shift_variance,
        n_shift: shifts.len(),
        mean_v: v.mean,
        var_v: v.variance,
        n_insertions: reports.iter().map(|r| r.n_insertions).sum(),
        n_deletions: reports.iter().map(|r| r.n_deletions).sum(),
    })
}

/// Deletion count for one decoupled `(W, beta)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeletionPoint {
    pub w: f64,
    pub beta: f64,
    /// `1 / (2 beta lambda)`.
    pub k_tilde: f64,
    pub w_beta: f64,
    pub rho_db: f64,
    pub n_symbols: usize,
    pub n_deletions: usize,
    pub n_insertions: usize,
}

/// Quantized full chain with independent bandwidth and transition time;
/// crossings are read from the one-bit signal at sign-change midpoints.
pub fn deletion_census(
    w: f64,
    beta: f64,
    lambda: f64,
    rho_db: f64,
    n_symbols: usize,
    dt: f64,
    seed: u64,
) -> Result<DeletionPoint> {
    let cfg = ChannelConfig::new(w, lambda, crate::channel_params::db_to_linear(rho_db), 1.0)?;
    let params = derive_with_beta(&cfg, beta)?;
    let n = n_symbols.max(2) & !1;
    let mut rng = trial_rng(seed, 0);
    let (zcs, x) = periodic_realization(&params, n, dt, &mut rng)?;
    let r = channel_output(&x, &params, true, &mut rng)?;
    let rx = extract_crossings_with(&quantize(&r), CrossingRule::Midpoint)?;
    let m = match_crossings(&zcs, &rx);
    Ok(DeletionPoint {
        w,
        beta,
        k_tilde: 1.0 / (2.0 * beta * lambda),
        w_beta: w * beta,
        rho_db,
        n_symbols: n,
        n_deletions: m.n_deletions,
        n_insertions: m.n_insertions,
    })
}

/// Zero-crossing rate of bandlimited Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseCrossingRate {
    pub rate: f64,
    pub expected: f64,
    pub crossings: usize,
    pub duration: f64,
}

const NOISE_BLOCK: usize = 1 << 20;

fn noise_blocks<T: Send>(
    n_samples: usize,
    dt: f64,
    n0: f64,
    w: f64,
    seed: u64,
    f: impl Fn(&SampledWaveform) -> T + Sync,
) -> Result<Vec<T>> {
    let n_blocks = n_samples.div_ceil(NOISE_BLOCK) as u64;
    (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(seed, b);
            let x = gen_bandlimited_noise(NOISE_BLOCK, dt, n0, w, &mut rng)?;
            Ok(f(&x))
        })
        .collect()
}

/// Counts sign changes over periodic noise blocks of `2^20` samples.
pub fn noise_crossing_rate(
    w: f64,
    n0: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<NoiseCrossingRate> {
    let counts = noise_blocks(n_samples, dt, n0, w, seed, |x| {
        let n = x.len();
        (0..n).filter(|&i| (x.samples[i] >= 0.0) != (x.samples[(i + 1) % n] >= 0.0)).count()
    })?;
    let crossings: usize = counts.iter().sum();
    let duration = (counts.len() * NOISE_BLOCK) as f64 * dt;
    Ok(NoiseCrossingRate {
        rate: crossings as f64 / duration,
        expected: 2.0 * w / 3f64.sqrt(),
        crossings,
        duration,
    })
}

/// Mean duration of noise excursions above a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionStats {
    pub level: f64,
    pub mean_duration: f64,
    pub std_error: f64,
    pub n_excursions: usize,
    pub predicted: f64,
}

/// Interpolated up/down crossings of `level` by bandlimited noise; complete
/// excursions inside each block are averaged.
pub fn excursion_mc(
    level: f64,
    w: f64,
    n0: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<ExcursionStats> {
    let per_block = noise_blocks(n_samples, dt, n0, w, seed, |x| {
        let mut out = Vec::new();
        let mut start = None;
        for i in 0..x.len() - 1 {
            let (a, b) = (x.samples[i] - level, x.samples[i + 1] - level);
            if (a >= 0.0) != (b >= 0.0) {
                let t = (i as f64 + a / (a - b)) * dt;
                if b >= 0.0 {
                    start = Some(t);
                } else if let Some(s) = start.take() {
                    out.push(t - s);
                }
            }
        }
        out
    })?;
    let d: Vec<f64> = per_block.into_iter().flatten().collect();
    if d.len() < 2 {
        return Err(Error::Domain("excursion_mc: fewer than two excursions observed".into()));
    }
    let (mean, var) = mean_var(&d);
    let s2 = crate::distortion::noise_curvature(n0, w);
    Ok(ExcursionStats {
        level,
        mean_duration: mean,
        std_error: (var / d.len() as f64).sqrt(),
        n_excursions: d.len(),
        predicted: mean_excursion_duration(level * level, n0 * w, s2)?,
    })
}

//! Waveform-level Monte-Carlo engine.
//!
//! Waveforms live on a uniform grid and are treated as one period of a
//! periodic signal by the FFT-based filters, so realizations are built with
//! matching levels at both ends.

mod experiments;
mod matching;

pub use experiments::*;
pub use matching::{match_crossings, MatchReport};

use crate::channel_params::{DerivedParams, ZeroCrossingSeq};
use crate::error::{require_positive, Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::{Read, Write};

/// Real signal on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub t_start: f64,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, dt: f64, t_start: f64) -> Result<Self> {
        require_positive("dt", dt)?;
        if samples.len() < 2 {
            return Err(Error::Domain("waveform needs at least two samples".into()));
        }
        Ok(Self { samples, dt, t_start })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Mean of the squared samples.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub fn add(&self, other: &SampledWaveform) -> Result<SampledWaveform> {
        if self.len() != other.len() {
            return Err(Error::Domain("waveform lengths differ".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(Self { samples, dt: self.dt, t_start: self.t_start })
    }

    pub fn sub(&self, other: &SampledWaveform) -> Result<SampledWaveform> {
        if self.len() != other.len() {
            return Err(Error::Domain("waveform lengths differ".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(Self { samples, dt: self.dt, t_start: self.t_start })
    }
}

/// Smallest 5-smooth integer `>= n`.
pub fn fft_len(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Renders the transmit signal: `+sqrt(P_hat)` before the first crossing,
/// alternating plateaus, and sine-halfwave transitions of length `beta`
/// centred on each crossing. The grid covers `n_samples` steps from `t0`.
pub fn synthesize_span(
    zcs: &ZeroCrossingSeq,
    params: &DerivedParams,
    dt: f64,
    n_samples: usize,
) -> Result<SampledWaveform> {
    require_positive("dt", dt)?;
    let beta = params.beta;
    if dt > beta / 20.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter { field: "dt", value: dt, reason: "must not exceed beta/20" });
    }
    let amp = params.p_hat.sqrt();
    let half = 0.5 * beta;
    let start_level = if zcs.first_rising { -amp } else { amp };
    let mut samples = vec![0.0; n_samples];
    let mut level = start_level;
    let mut next = 0;
    for (i, s) in samples.iter_mut().enumerate() {
        let t = zcs.t0 + i as f64 * dt;
        while next < zcs.len() && t >= zcs.times[next] + half {
            level = -level;
            next += 1;
        }
        *s = if next < zcs.len() && t > zcs.times[next] - half {
            // level is the value before crossing `next`
            -level * (PI * (t - zcs.times[next]) / beta).sin()
        } else {
            level
        };
    }
    SampledWaveform::new(samples, dt, zcs.t0)
}

/// [`synthesize_span`] up to one transition time past the last crossing.
pub fn synthesize(zcs: &ZeroCrossingSeq, params: &DerivedParams, dt: f64) -> Result<SampledWaveform> {
    let n = ((zcs.end() + params.beta - zcs.t0) / dt).ceil() as usize + 1;
    synthesize_span(zcs, params, dt, n)
}

pub(crate) fn fft_inplace(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    fft.process(buf);
}

/// Frequency of DFT bin `j` for length `n` and step `dt`.
pub(crate) fn bin_freq(j: usize, n: usize, dt: f64) -> f64 {
    let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    jj / (n as f64 * dt)
}

fn check_rate(dt: f64, bandwidth: f64) -> Result<()> {
    require_positive("W", bandwidth)?;
    if 1.0 / dt < 2.0 * bandwidth {
        return Err(Error::InvalidParameter {
            field: "dt",
            value: dt,
            reason: "sample rate below twice the filter bandwidth",
        });
    }
    Ok(())
}

fn brickwall(buf: &mut [Complex64], dt: f64, bandwidth: f64) -> usize {
    let n = buf.len();
    let mut kept = 0;
    for (j, v) in buf.iter_mut().enumerate() {
        if bin_freq(j, n, dt).abs() > bandwidth {
            *v = Complex64::new(0.0, 0.0);
        } else {
            kept += 1;
        }
    }
    kept
}

/// Ideal lowpass with one-sided bandwidth `bandwidth` and unit gain,
/// applied to the waveform as one period of a periodic signal.
pub fn ideal_lp(w: &SampledWaveform, bandwidth: f64) -> Result<SampledWaveform> {
    check_rate(w.dt, bandwidth)?;
    let n = w.len();
    let mut buf: Vec<Complex64> = w.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_inplace(&mut buf, false);
    brickwall(&mut buf, w.dt, bandwidth);
    fft_inplace(&mut buf, true);
    let scale = 1.0 / n as f64;
    Ok(SampledWaveform { samples: buf.iter().map(|c| c.re * scale).collect(), dt: w.dt, t_start: w.t_start })
}

/// Gaussian noise with flat two-sided PSD `N0/2` on `|f| <= bandwidth`,
/// scaled so that its expected variance is exactly `N0 * bandwidth`.
pub fn gen_bandlimited_noise<R: Rng + ?Sized>(
    len: usize,
    dt: f64,
    n0: f64,
    bandwidth: f64,
    rng: &mut R,
) -> Result<SampledWaveform> {
    check_rate(dt, bandwidth)?;
    require_positive("N0", n0)?;
    let mut buf: Vec<Complex64> = (0..len).map(|_| Complex64::new(StandardNormal.sample(rng), 0.0)).collect();
    fft_inplace(&mut buf, false);
    let kept = brickwall(&mut buf, dt, bandwidth);
    fft_inplace(&mut buf, true);
    // unit white samples keep kept/len of their variance
    let scale = (n0 * bandwidth * len as f64 / kept as f64).sqrt() / len as f64;
    SampledWaveform::new(buf.iter().map(|c| c.re * scale).collect(), dt, 0.0)
}

/// One-bit quantizer; zero maps to `+1`.
pub fn quantize(w: &SampledWaveform) -> SampledWaveform {
    SampledWaveform {
        samples: w.samples.iter().map(|&x| if x >= 0.0 { 1.0 } else { -1.0 }).collect(),
        dt: w.dt,
        t_start: w.t_start,
    }
}

/// How crossing instants are placed between bracketing samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingRule {
    Interpolate,
    Midpoint,
}

/// Sign changes of the quantized signal. Two-level inputs use the midpoint
/// rule, real inputs linear interpolation.
pub fn extract_crossings(w: &SampledWaveform) -> Result<ZeroCrossingSeq> {
    let binary = w.samples.iter().all(|&x| x == 1.0 || x == -1.0);
    let rule = if binary { CrossingRule::Midpoint } else { CrossingRule::Interpolate };
    extract_crossings_with(w, rule)
}

pub fn extract_crossings_with(w: &SampledWaveform, rule: CrossingRule) -> Result<ZeroCrossingSeq> {
    let mut times = Vec::new();
    let mut first_rising = false;
    for i in 0..w.len().saturating_sub(1) {
        let (a, b) = (w.samples[i], w.samples[i + 1]);
        if (a >= 0.0) != (b >= 0.0) {
            if times.is_empty() {
                first_rising = b >= 0.0;
            }
            let frac = match rule {
                CrossingRule::Midpoint => 0.5,
                CrossingRule::Interpolate => a / (a - b),
            };
            times.push(w.time(i) + frac * w.dt);
        }
    }
    let mut spacings = Vec::with_capacity(times.len());
    let mut prev = w.t_start;
    for &t in &times {
        spacings.push(t - prev);
        prev = t;
    }
    Ok(ZeroCrossingSeq { times, spacings, t0: w.t_start, first_rising })
}

/// Per-trial generator: stream `trial` of the master seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Writes crossing times as a little-endian `u64` count followed by `f64`
/// seconds.
pub fn write_crossing_dump<W: Write>(mut out: W, zcs: &ZeroCrossingSeq) -> Result<()> {
    out.write_all(&(zcs.len() as u64).to_le_bytes())?;
    for t in &zcs.times {
        out.write_all(&t.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_crossing_dump`].
pub fn read_crossing_dump<R: Read>(mut inp: R) -> Result<Vec<f64>> {
    let mut word = [0u8; 8];
    inp.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        inp.read_exact(&mut word)?;
        times.push(f64::from_le_bytes(word));
    }
    Ok(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_params::{derive, sample_input_sequence, ChannelConfig};

    fn params(k: f64) -> DerivedParams {
        derive(&ChannelConfig::from_k(k, 1.0, 10.0).unwrap()).unwrap()
    }

    #[test]
    fn single_symbol_crosses_at_transition_centre() {
        let p = params(1.0);
        let dt = p.beta / 40.0;
        let zcs = ZeroCrossingSeq::from_times(vec![1.3], 0.0, false).unwrap();
        let w = synthesize(&zcs, &p, dt).unwrap();
        let x = extract_crossings(&w).unwrap();
        assert_eq!(x.len(), 1);
        assert!((x.times[0] - 1.3).abs() < dt / 2.0);
        assert!(!x.first_rising);
        let amp = p.p_hat.sqrt();
        assert_eq!(w.samples[0], amp);
        assert_eq!(*w.samples.last().unwrap(), -amp);
        assert!(w.samples.iter().all(|v| v.abs() <= amp));
    }

    #[test]
    fn plateaus_alternate_and_transitions_are_continuous() {
        let p = params(1.0);
        let dt = p.beta / 50.0;
        let zcs = sample_input_sequence(&p, 40, &mut trial_rng(1, 0)).unwrap();
        let w = synthesize(&zcs, &p, dt).unwrap();
        let amp = p.p_hat.sqrt();
        let max_step = amp * PI / p.beta * dt * 1.0001;
        for pair in w.samples.windows(2) {
            assert!((pair[1] - pair[0]).abs() <= max_step);
        }
        for i in 0..zcs.len() - 1 {
            let mid = 0.5 * (zcs.times[i] + zcs.times[i + 1]);
            let j = ((mid - w.t_start) / dt) as usize;
            let expect = if i % 2 == 0 { -amp } else { amp };
            if zcs.times[i + 1] - zcs.times[i] > p.beta * 1.01 {
                assert_eq!(w.samples[j], expect);
            }
        }
        let x = extract_crossings(&w).unwrap();
        assert_eq!(x.len(), zcs.len());
        for (a, b) in x.times.iter().zip(&zcs.times) {
            assert!((a - b).abs() <= dt);
        }
    }

    #[test]
    fn resolution_floor_enforced() {
        let p = params(1.0);
        let zcs = ZeroCrossingSeq::from_times(vec![1.0], 0.0, false).unwrap();
        assert!(synthesize(&zcs, &p, p.beta / 10.0).is_err());
    }

    #[test]
    fn empirical_power_matches_average_power() {
        let p = params(0.8);
        let zcs = sample_input_sequence(&p, 20_000, &mut trial_rng(5, 0)).unwrap();
        let w = synthesize(&zcs, &p, p.beta / 20.0).unwrap();
        assert!((w.power() / p.p - 1.0).abs() < 0.01);
    }

    fn tone(f: f64, n: usize, dt: f64) -> SampledWaveform {
        SampledWaveform::new((0..n).map(|i| (2.0 * PI * f * i as f64 * dt).sin()).collect(), dt, 0.0).unwrap()
    }

    #[test]
    fn lowpass_passes_and_blocks_tones() {
        let (n, dt, w) = (4096, 1.0 / 64.0, 4.0);
        // bins are multiples of 1/(n dt) = 1/64
        let pass = tone(0.5 * w, n, dt);
        let out = ideal_lp(&pass, w).unwrap();
        let err = out.samples.iter().zip(&pass.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
        let stop = tone(1.5 * w, n, dt);
        let out = ideal_lp(&stop, w).unwrap();
        assert!(out.power() / stop.power() < 1e-12);
        assert!(ideal_lp(&stop, 40.0).is_err());
        let mixed = pass.add(&stop).unwrap();
        assert!(ideal_lp(&mixed, w).unwrap().power() <= mixed.power());
    }

    #[test]
    fn noise_variance_and_acf() {
        let (w, n0) = (1.0f64, 0.3);
        let dt = 1.0 / (8.0 * w);
        let mut rng = trial_rng(7, 0);
        let mut sum = 0.0;
        let mut lag = 0.0;
        let mut count = 0usize;
        let shift = (1.0 / (2.0 * w) / dt).round() as usize;
        for _ in 0..10 {
            let x = gen_bandlimited_noise(1 << 20, dt, n0, w, &mut rng).unwrap();
            sum += x.samples.iter().map(|v| v * v).sum::<f64>();
            lag += x.samples.iter().zip(&x.samples[shift..]).map(|(a, b)| a * b).sum::<f64>();
            count += x.len();
        }
        let var = sum / count as f64;
        assert!((var / (n0 * w) - 1.0).abs() < 0.01, "{var}");
        assert!((lag / count as f64).abs() < 0.01 * n0 * w);
    }

    #[test]
    fn quantizer_ties() {
        let w = SampledWaveform::new(vec![0.3, -0.3, 0.0], 1.0, 0.0).unwrap();
        assert_eq!(quantize(&w).samples, vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn crossings_of_a_sine() {
        let dt = 1e-3;
        let w = SampledWaveform::new(
            (0..=1100).map(|i| (2.0 * PI * (i as f64 * dt - 0.0003)).sin()).collect(),
            dt,
            0.0,
        )
        .unwrap();
        let x = extract_crossings(&w).unwrap();
        let expect = [0.0003, 0.5003, 1.0003];
        assert_eq!(x.len(), 3);
        for (a, b) in x.times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(x.first_rising);
        let q = extract_crossings(&quantize(&w)).unwrap();
        for (a, b) in q.times.iter().zip(expect) {
            assert!((a - b).abs() <= dt / 2.0);
        }
        assert!(x.times.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn dump_roundtrip() {
        let zcs = ZeroCrossingSeq::from_times(vec![0.5, 1.25, 3.0], 0.0, false).unwrap();
        let mut buf = Vec::new();
        write_crossing_dump(&mut buf, &zcs).unwrap();
        assert_eq!(buf.len(), 8 + 24);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        assert_eq!(read_crossing_dump(&buf[..]).unwrap(), zcs.times);
    }

    #[test]
    fn fft_lengths_are_smooth() {
        assert_eq!(fft_len(1000), 1000);
        assert_eq!(fft_len(1001), 1024);
        assert_eq!(fft_len(7), 8);
    }
}

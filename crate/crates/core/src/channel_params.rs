//! Channel parameterization, derived scalars and sampling of the input
//! zero-crossing process.

use crate::error::{require_positive, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

/// Converts a level in dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// User-facing channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// One-sided bandwidth in Hz.
    #[serde(rename = "W")]
    pub w: f64,
    /// Rate of the exponential part of the symbol duration, 1/s.
    pub lambda: f64,
    /// SNR with respect to the average input power, linear.
    pub rho: f64,
    /// Peak power.
    #[serde(rename = "P_hat")]
    pub p_hat: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { w: 1.0, lambda: 1.0, rho: db_to_linear(20.0), p_hat: 1.0, seed: 0 }
    }
}

impl ChannelConfig {
    pub fn new(w: f64, lambda: f64, rho: f64, p_hat: f64) -> Result<Self> {
        let cfg = Self { w, lambda, rho, p_hat, seed: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a config from the bandwidth ratio `k = W/lambda` and an SNR in dB.
    pub fn from_k(k: f64, w: f64, rho_db: f64) -> Result<Self> {
        require_positive("k", k)?;
        Self::new(w, w / k, db_to_linear(rho_db), 1.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("W", self.w)?;
        require_positive("lambda", self.lambda)?;
        require_positive("rho", self.rho)?;
        require_positive("P_hat", self.p_hat)
    }

    pub fn k(&self) -> f64 {
        self.w / self.lambda
    }

    pub fn rho_db(&self) -> f64 {
        linear_to_db(self.rho)
    }

    /// Sets a field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}` as a number")))
        };
        match key {
            "W" | "w" => self.w = parse(value)?,
            "lambda" => self.lambda = parse(value)?,
            "rho" => self.rho = parse(value)?,
            "rho_dB" | "rho_db" => self.rho = db_to_linear(parse(value)?),
            "P_hat" | "p_hat" => self.p_hat = parse(value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("`seed`: cannot parse `{value}`")))?
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

/// Capacity of the unquantized bandlimited AWGN channel in nats/s.
/// `rho = 0` is permitted here and yields zero.
pub fn awgn_capacity(w: f64, rho: f64) -> f64 {
    w * rho.ln_1p()
}

/// Scalars that follow from a [`ChannelConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    pub w: f64,
    pub lambda: f64,
    pub rho: f64,
    pub p_hat: f64,
    /// Transition duration.
    pub beta: f64,
    /// Mean symbol duration.
    pub t_avg: f64,
    /// Variance of a symbol duration.
    pub sigma_a_sq: f64,
    /// Average power of the transmit signal.
    pub p: f64,
    /// One-sided noise PSD level.
    pub n0: f64,
    /// Variance of the lowpass-filtered noise.
    pub sigma_nhat_sq: f64,
    /// `W / lambda`.
    pub k: f64,
}

/// Derives all scalars with the default coupling `beta = 1/(2W)`.
pub fn derive(cfg: &ChannelConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    derive_with_beta(cfg, 1.0 / (2.0 * cfg.w))
}

/// Derives all scalars with an independent transition time `beta`.
pub fn derive_with_beta(cfg: &ChannelConfig, beta: f64) -> Result<DerivedParams> {
    cfg.validate()?;
    require_positive("beta", beta)?;
    let mean_exp = 1.0 / cfg.lambda;
    let t_avg = mean_exp + beta;
    // the transition carries half of the peak power on average
    let p = cfg.p_hat * (0.5 * beta + mean_exp) / t_avg;
    let n0 = p / (cfg.rho * cfg.w);
    Ok(DerivedParams {
        w: cfg.w,
        lambda: cfg.lambda,
        rho: cfg.rho,
        p_hat: cfg.p_hat,
        beta,
        t_avg,
        sigma_a_sq: mean_exp * mean_exp,
        p,
        n0,
        sigma_nhat_sq: n0 * cfg.w,
        k: cfg.w / cfg.lambda,
    })
}

impl DerivedParams {
    pub fn config(&self) -> ChannelConfig {
        ChannelConfig { w: self.w, lambda: self.lambda, rho: self.rho, p_hat: self.p_hat, seed: 0 }
    }

    pub fn awgn_capacity(&self) -> f64 {
        awgn_capacity(self.w, self.rho)
    }

    /// `true` when `beta` follows the default coupling to `W`.
    pub fn is_coupled(&self) -> bool {
        ((2.0 * self.w * self.beta) - 1.0).abs() < 1e-12
    }
}

/// Ordered zero-crossing instants with their spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCrossingSeq {
    pub times: Vec<f64>,
    /// `spacings[0] = times[0] - t0`, then consecutive differences.
    pub spacings: Vec<f64>,
    pub t0: f64,
    /// Polarity of the first crossing; subsequent crossings alternate.
    pub first_rising: bool,
}

impl ZeroCrossingSeq {
    /// Builds a sequence from strictly increasing crossing times.
    pub fn from_times(times: Vec<f64>, t0: f64, first_rising: bool) -> Result<Self> {
        let mut spacings = Vec::with_capacity(times.len());
        let mut prev = t0;
        for (i, &t) in times.iter().enumerate() {
            let d = t - prev;
            if !(d > 0.0) && !(i == 0 && d == 0.0) {
                return Err(Error::Domain(format!("crossing times must be strictly increasing (index {i})")));
            }
            spacings.push(d);
            prev = t;
        }
        Ok(Self { times, spacings, t0, first_rising })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Polarity of crossing `i`.
    pub fn is_rising(&self, i: usize) -> bool {
        self.first_rising ^ (i % 2 == 1)
    }

    pub fn end(&self) -> f64 {
        self.times.last().copied().unwrap_or(self.t0)
    }
}

/// Draws `count` symbol durations `A = beta + Exp(lambda)` and accumulates
/// them from `t0 = 0`. The first crossing is falling (the signal starts at
/// `+sqrt(P_hat)`).
pub fn sample_input_sequence<R: Rng + ?Sized>(
    params: &DerivedParams,
    count: usize,
    rng: &mut R,
) -> Result<ZeroCrossingSeq> {
    if count == 0 {
        return Err(Error::Domain("sample_input_sequence: count must be >= 1".into()));
    }
    let exp = Exp::new(params.lambda).map_err(|e| Error::Domain(e.to_string()))?;
    let mut times = Vec::with_capacity(count);
    let mut spacings = Vec::with_capacity(count);
    let mut t = 0.0;
    for _ in 0..count {
        let a = params.beta + exp.sample(rng);
        t += a;
        spacings.push(a);
        times.push(t);
    }
    Ok(ZeroCrossingSeq { times, spacings, t0: 0.0, first_rising: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derive_basic() {
        let p = derive(&ChannelConfig::new(0.5, 1.0, 10.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.beta, 1.0);
        assert_eq!(p.t_avg, 2.0);
        assert_eq!(p.sigma_a_sq, 1.0);
        assert!((p.p - 0.75).abs() < 1e-15);
        assert!((p.rho - p.p / (p.n0 * p.w)).abs() < 1e-12);
        assert!((p.sigma_nhat_sq - p.n0 * p.w).abs() < 1e-18);
    }

    #[test]
    fn power_ratio_limits() {
        let p = |k: f64| derive(&ChannelConfig::new(k, 1.0, 1.0, 1.0).unwrap()).unwrap().p;
        assert!((p(1e9) - 1.0).abs() < 1e-8);
        assert!((p(1e-9) - 0.5).abs() < 1e-8);
        for k in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let r = p(k);
            assert!(r > 0.5 && r < 1.0);
            assert!((r - (0.5 + 2.0 * k) / (1.0 + 2.0 * k)).abs() < 1e-14);
        }
    }

    #[test]
    fn derive_rejects_nonpositive() {
        let err = ChannelConfig::new(-1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("`W`"));
        let err = ChannelConfig::new(1.0, 1.0, 1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("`P_hat`"));
        let err = ChannelConfig::new(1.0, f64::NAN, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("`lambda`"));
    }

    #[test]
    fn capacity() {
        assert_eq!(awgn_capacity(1.0, 0.0), 0.0);
        assert!((awgn_capacity(1.0, std::f64::consts::E - 1.0) - 1.0).abs() < 1e-15);
        assert!((awgn_capacity(2.0, 3.0) - 2.0 * 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn spacing_moments_match() {
        let p = derive(&ChannelConfig::new(0.5, 1.0, 10.0, 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = sample_input_sequence(&p, 1_000_000, &mut rng).unwrap();
        let n = seq.spacings.len() as f64;
        let mean = seq.spacings.iter().sum::<f64>() / n;
        let var = seq.spacings.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(seq.spacings.iter().all(|&a| a >= p.beta));
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn sequence_is_reproducible_and_alternating() {
        let p = derive(&ChannelConfig::default()).unwrap();
        let a = sample_input_sequence(&p, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_input_sequence(&p, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_rising(0) && a.is_rising(1) && !a.is_rising(2));
        let c = ZeroCrossingSeq::from_times(a.times.clone(), 0.0, false).unwrap();
        for (x, y) in c.spacings.iter().zip(&a.spacings) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn from_times_rejects_disorder() {
        assert!(ZeroCrossingSeq::from_times(vec![1.0, 0.5], 0.0, true).is_err());
    }

    #[test]
    fn set_by_key() {
        let mut c = ChannelConfig::default();
        c.set("W", "3").unwrap();
        c.set("rho_dB", "10").unwrap();
        c.set("seed", "42").unwrap();
        assert_eq!(c.w, 3.0);
        assert!((c.rho - 10.0).abs() < 1e-12);
        assert_eq!(c.seed, 42);
        assert!(c.set("bogus", "1").is_err());
    }
}

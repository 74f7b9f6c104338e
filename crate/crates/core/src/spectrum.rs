//! Power spectral density of the zero-crossing signal: transition-pulse
//! spectrum, correlation factor, and the upper/lower PSD bounds.

use crate::channel_params::DerivedParams;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::io::Write;

const SERIES_HALF_WIDTH: f64 = 1e-4;

/// Parameter-free pulse spectrum `h(u) = |G(u/beta)|^2 / beta^2`.
/// Requires `u != 0`; the removable point `u = pi` is evaluated by series.
pub fn pulse_h(u: f64) -> f64 {
    let u = u.abs();
    let x = u - PI;
    if x.abs() < SERIES_HALF_WIDTH {
        let x2 = x * x;
        let num = PI.powi(4) * (1.0 - x2 / 12.0 + x2 * x2 / 360.0);
        let den = (PI + x).powi(2) * (2.0 * PI + x).powi(2);
        num / den
    } else {
        let q = PI * PI / (u * (PI * PI - u * u));
        2.0 * (1.0 + u.cos()) * q * q
    }
}

/// `|G(omega)|^2` of the sine-halfwave transition pulse.
pub fn g_mag_sq(omega: f64, beta: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Pole { op: "g_mag_sq", omega });
    }
    Ok(beta * beta * pulse_h(omega * beta))
}

/// `|G(omega)|^2` for a generic odd transition shape `f` on `[-beta/2, beta/2]`,
/// given `a(omega) = ∫ f(t) sin(omega t) dt`.
pub fn g_mag_sq_general(omega: f64, beta: f64, a: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Pole { op: "g_mag_sq_general", omega });
    }
    let step = 2.0 * (1.0 + (omega * beta).cos()) / (omega * omega);
    Ok(step + a * a + 4.0 * a / omega * (0.5 * omega * beta).cos())
}

/// Correlation factor `c(omega) = lambda / (sqrt(lambda^2 + omega^2) - lambda)`.
pub fn correlation_factor(omega: f64, lambda: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Pole { op: "correlation_factor", omega });
    }
    // rationalized to avoid cancellation at small |omega|
    Ok(lambda * (lambda.hypot(omega) + lambda) / (omega * omega))
}

/// `c(2 pi W)` as a function of `k = W/lambda`.
pub fn c1(k: f64) -> f64 {
    let a = 2.0 * PI * k;
    if a > 1e8 {
        // overflow-free leading terms
        return (1.0 + 1.0 / a) / a;
    }
    (a.hypot(1.0) + 1.0) / (a * a)
}

/// Modulus and phase of `E[exp(i omega L_1)]` for one symbol duration.
fn char_fn(omega: f64, lambda: f64, beta: f64) -> (f64, f64) {
    let r = lambda / lambda.hypot(omega);
    (r, omega * beta + (omega / lambda).atan())
}

/// `E[cos(omega L_n)]` with `L_n` the sum of `n` symbol durations.
pub fn expected_cos(omega: f64, n: u32, lambda: f64, beta: f64) -> f64 {
    let (r, theta) = char_fn(omega, lambda, beta);
    r.powi(n as i32) * (n as f64 * theta).cos()
}

/// Density of `L_n` (shifted Erlang).
pub fn pdf_l(l: f64, n: u32, lambda: f64, beta: f64) -> f64 {
    let x = l - n as f64 * beta;
    if x < 0.0 || n == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return if n == 1 { lambda } else { 0.0 };
    }
    let nf = n as f64;
    (nf * lambda.ln() - lambda * x + (nf - 1.0) * x.ln() - ln_gamma(nf)).exp()
}

/// Upper and lower PSD bounds of the transmit signal over angular frequency.
#[derive(Debug, Clone, Copy)]
pub struct PsdBounds {
    pub p_hat: f64,
    pub t_avg: f64,
    pub beta: f64,
    pub lambda: f64,
}

pub fn psd_bounds(params: &DerivedParams) -> PsdBounds {
    PsdBounds { p_hat: params.p_hat, t_avg: params.t_avg, beta: params.beta, lambda: params.lambda }
}

impl PsdBounds {
    fn base(&self, omega: f64) -> Result<f64> {
        Ok(self.p_hat * g_mag_sq(omega, self.beta)? / self.t_avg)
    }

    pub fn upper(&self, omega: f64) -> Result<f64> {
        Ok(self.base(omega)? * (1.0 + 2.0 * correlation_factor(omega, self.lambda)?))
    }

    pub fn lower(&self, omega: f64) -> Result<f64> {
        Ok(self.base(omega)? / (1.0 + 2.0 * correlation_factor(omega, self.lambda)?))
    }

    /// `(lower, upper)` at `omega`.
    pub fn at(&self, omega: f64) -> Result<(f64, f64)> {
        Ok((self.lower(omega)?, self.upper(omega)?))
    }

    /// The PSD in the limit of infinitely many symbols.
    pub fn exact(&self, omega: f64) -> Result<f64> {
        let (r, theta) = char_fn(omega, self.lambda, self.beta);
        Ok(self.base(omega)? * (1.0 - r * r) / (1.0 + 2.0 * r * theta.cos() + r * r))
    }

    /// The PSD of a `big_k`-symbol burst (Fejér-weighted correlation sum).
    pub fn finite_k(&self, omega: f64, big_k: u64) -> Result<f64> {
        if big_k == 0 {
            return Err(Error::Domain("finite_k: K must be >= 1".into()));
        }
        let (r, theta) = char_fn(omega, self.lambda, self.beta);
        let z = -Complex64::from_polar(r, theta);
        let kf = big_k as f64;
        let one = Complex64::new(1.0, 0.0);
        let zk = z.powf(kf);
        let zk1 = z.powf(kf - 1.0);
        let plain = (z - zk) / (one - z);
        let weighted = z * (one - zk1 * kf + zk * (kf - 1.0)) / ((one - z) * (one - z));
        let sum = plain - weighted / kf;
        Ok(self.base(omega)? * (1.0 + 2.0 * sum.re))
    }
}

/// One row of an exported PSD curve.
#[derive(Debug, Clone, Copy)]
pub struct PsdRow {
    pub f_over_w: f64,
    pub lower: f64,
    pub upper: f64,
    pub empirical: f64,
}

/// Writes PSD rows as CSV with header `f_over_W,lower,upper,empirical`.
pub fn write_psd_csv<W: Write>(out: W, rows: &[PsdRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["f_over_W", "lower", "upper", "empirical"])?;
    for r in rows {
        wtr.write_record([
            format!("{:.9e}", r.f_over_w),
            format!("{:.9e}", r.lower),
            format!("{:.9e}", r.upper),
            format!("{:.9e}", r.empirical),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

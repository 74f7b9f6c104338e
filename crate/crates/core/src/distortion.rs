//! Lowpass-distortion statistics: bounds on the out-of-band variance and the
//! ACF curvature it contributes, total distortion variance, and SDR.

use crate::channel_params::DerivedParams;
use crate::error::{Error, Result};
use crate::quad;
use crate::special::{ci, si, EULER_GAMMA};
use crate::spectrum::{c1, g_mag_sq, pulse_h};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Noise ACF curvature at the origin, `-(4 pi^2 / 3) N0 W^3`.
pub fn noise_curvature(n0: f64, w: f64) -> f64 {
    -(4.0 * PI * PI / 3.0) * n0 * w.powi(3)
}

/// Out-of-band energy constant of the sine transition.
pub fn c0_constant() -> f64 {
    static C0: OnceLock<f64> = OnceLock::new();
    *C0.get_or_init(|| {
        -3.0 * EULER_GAMMA - 3.0 * (2.0 * PI).ln() + 3.0 * ci(2.0 * PI) - PI * PI + 4.0 * PI * si(PI)
            - PI * si(2.0 * PI)
    })
}

/// Out-of-band curvature constant of the sine transition.
pub fn c2_constant() -> f64 {
    static C2: OnceLock<f64> = OnceLock::new();
    *C2.get_or_init(|| PI * PI - EULER_GAMMA - (2.0 * PI).ln() - PI * si(2.0 * PI) + ci(2.0 * PI))
}

// Past this point the (1 + cos u) factor is averaged analytically.
const TAIL_START: f64 = 2001.0 * PI;

/// `∫_from^∞ u^p h(u) du`, summed over `2 pi` panels with an averaged tail.
pub(crate) fn pulse_moment_tail(p: i32, from: f64) -> Result<f64> {
    let f = |u: f64| u.powi(p) * pulse_h(u);
    let mut acc = 0.0;
    let mut a = from;
    while a < TAIL_START {
        let b = (a + 2.0 * PI).min(TAIL_START);
        acc += quad::adaptive(f, a, b, 0.0, 1e-12)?.value;
        a = b;
    }
    // h(u) ~ 2 pi^4 (1 + cos u) u^-6 (1 + 2 pi^2 / u^2)
    let n = 5 - p;
    let nf = n as f64;
    let tail = 2.0
        * PI.powi(4)
        * (1.0 / (nf * TAIL_START.powi(n)) + 2.0 * PI * PI / ((nf + 2.0) * TAIL_START.powi(n + 2)));
    Ok(acc + tail)
}

/// `c0` by direct quadrature of the pulse spectrum tail.
pub fn c0_quadrature() -> Result<f64> {
    Ok(2.0 * PI * pulse_moment_tail(0, PI)?)
}

/// `c2` by direct quadrature of the pulse spectrum tail.
pub fn c2_quadrature() -> Result<f64> {
    Ok(2.0 / PI * pulse_moment_tail(2, PI)?)
}

/// `c0` recovered from the dimensional integral `∫_{2 pi W}^∞ |G(omega)|^2 d omega`.
pub fn c0_dimensional(params: &DerivedParams) -> Result<f64> {
    Ok(2.0 * PI / params.beta * omega_moment_tail(0, params)?)
}

/// `c2` recovered from the dimensional integral of `omega^2 |G(omega)|^2`.
pub fn c2_dimensional(params: &DerivedParams) -> Result<f64> {
    Ok(2.0 * params.beta / PI * omega_moment_tail(2, params)?)
}

fn omega_moment_tail(p: i32, params: &DerivedParams) -> Result<f64> {
    let beta = params.beta;
    let period = 2.0 * PI / beta;
    let lo = 2.0 * PI * params.w;
    let hi = lo + 1000.0 * period;
    let f = |w: f64| w.powi(p) * g_mag_sq(w, beta).unwrap_or(f64::NAN);
    let mut acc = 0.0;
    for j in 0..1000 {
        let a = lo + j as f64 * period;
        acc += quad::adaptive(f, a, a + period, 0.0, 1e-12)?.value;
    }
    let n = 5 - p;
    let tail = 2.0 * PI.powi(4) / (beta.powi(4) * n as f64 * hi.powi(n));
    Ok(acc + tail)
}

/// Bounds on the lowpass distortion and its effect on the total noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionBounds {
    pub c1: f64,
    pub sigma_xt_sq_lo: f64,
    pub sigma_xt_sq_hi: f64,
    /// Most negative bound on the distortion ACF curvature at zero.
    pub s2_xt_lo: f64,
    /// Least negative bound on the distortion ACF curvature at zero.
    pub s2_xt_hi: f64,
    pub sigma_z_sq_lo: f64,
    pub sigma_z_sq_hi: f64,
    pub s2_zz_lo: f64,
    pub s2_zz_hi: f64,
    pub sdr_lo: f64,
    pub sdr_hi: f64,
}

pub fn distortion_bounds(params: &DerivedParams) -> Result<DistortionBounds> {
    if !params.is_coupled() {
        return Err(Error::Domain("distortion_bounds: requires beta = 1/(2W)".into()));
    }
    let c1 = c1(params.k);
    let g = 1.0 + 2.0 * c1;
    let scale = params.p_hat / params.t_avg;
    let sigma_xt_sq_hi = g * scale * params.beta * c0_constant() / (2.0 * PI * PI);
    let sigma_xt_sq_lo = sigma_xt_sq_hi / (g * g);
    let s2_xt_lo = -g * scale * c2_constant() / (2.0 * params.beta);
    let s2_xt_hi = s2_xt_lo / (g * g);
    let noise = params.sigma_nhat_sq;
    let s2_noise = noise_curvature(params.n0, params.w);
    Ok(DistortionBounds {
        c1,
        sigma_xt_sq_lo,
        sigma_xt_sq_hi,
        s2_xt_lo,
        s2_xt_hi,
        sigma_z_sq_lo: noise + sigma_xt_sq_lo,
        sigma_z_sq_hi: noise + sigma_xt_sq_hi,
        s2_zz_lo: s2_noise + s2_xt_lo,
        s2_zz_hi: s2_noise + s2_xt_hi,
        sdr_lo: params.p / sigma_xt_sq_hi,
        sdr_hi: params.p / sigma_xt_sq_lo,
    })
}

/// `(lower, upper)` SDR bounds as functions of `k` alone.
pub fn sdr_pure_k(k: f64) -> (f64, f64) {
    let g = 1.0 + 2.0 * c1(k);
    let base = 2.0 * PI * PI * (0.5 + 2.0 * k) / c0_constant();
    (base / g, base * g)
}

/// Bounds on the effective SNR after removing the distortion power from the
/// signal. Diagnostic only.
pub fn rho_star_bounds(params: &DerivedParams, d: &DistortionBounds) -> (f64, f64) {
    let n = params.sigma_nhat_sq;
    ((params.p - d.sigma_xt_sq_hi) / n, (params.p - d.sigma_xt_sq_lo) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_params::{derive, ChannelConfig};

    fn params(w: f64, lambda: f64) -> DerivedParams {
        derive(&ChannelConfig::new(w, lambda, 100.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn constants_match_quadrature() {
        let c0 = c0_constant();
        let c2 = c2_constant();
        assert!((c0 - 1.634_308_196_159_335).abs() < 1e-12, "{c0}");
        assert!((c2 - 2.976_696_434_777_082).abs() < 1e-12, "{c2}");
        assert!((c0_quadrature().unwrap() / c0 - 1.0).abs() < 1e-9);
        assert!((c2_quadrature().unwrap() / c2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constants_independent_of_parameters() {
        for &(w, lambda) in &[(0.5, 1.0), (1.0, 3.0), (7.0, 0.2), (0.01, 0.05), (100.0, 40.0)] {
            let p = params(w, lambda);
            assert!((c0_dimensional(&p).unwrap() / c0_constant() - 1.0).abs() < 1e-6);
            assert!((c2_dimensional(&p).unwrap() / c2_constant() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn flipped_signs_break_the_match() {
        let q = c0_quadrature().unwrap();
        let flipped = c0_constant() - 8.0 * PI * si(PI);
        assert!((flipped / q - 1.0).abs() > 1e-2);
        let flipped = c0_constant() + 2.0 * PI * si(2.0 * PI);
        assert!((flipped / q - 1.0).abs() > 1e-2);
    }

    #[test]
    fn bound_invariants() {
        for k in [0.3, 0.7, 2.0] {
            let p = params(1.0, 1.0 / k);
            let d = distortion_bounds(&p).unwrap();
            let g = 1.0 + 2.0 * c1(k);
            assert!((d.sigma_xt_sq_hi / d.sigma_xt_sq_lo / (g * g) - 1.0).abs() < 1e-14);
            assert!(d.sigma_xt_sq_lo <= d.sigma_xt_sq_hi);
            assert_eq!(d.sigma_z_sq_hi, p.n0 * p.w + d.sigma_xt_sq_hi);
            assert!(d.s2_zz_lo < d.s2_zz_hi && d.s2_zz_hi < 0.0);
            let (lo, hi) = sdr_pure_k(k);
            assert!((lo / d.sdr_lo - 1.0).abs() < 1e-12);
            assert!((hi / d.sdr_hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distortion_vanishes_and_tightens_with_k() {
        let mut prev = f64::INFINITY;
        let mut prev_ratio = f64::INFINITY;
        for k in [0.5, 2.0, 10.0, 100.0, 1000.0] {
            let d = distortion_bounds(&params(1.0, 1.0 / k)).unwrap();
            assert!(d.sigma_xt_sq_hi < prev);
            let ratio = d.sdr_hi / d.sdr_lo;
            assert!(ratio < prev_ratio);
            prev = d.sigma_xt_sq_hi;
            prev_ratio = ratio;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn curvature_matches_crossing_rate() {
        // (1/pi) sqrt(-s''/s) = 2W/sqrt(3)
        let (n0, w) = (0.3, 2.5);
        let rate = (-noise_curvature(n0, w) / (n0 * w)).sqrt() / PI;
        assert!((rate - 2.0 * w / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rho_star_below_rho() {
        let p = params(1.0, 1.0);
        let d = distortion_bounds(&p).unwrap();
        let (lo, hi) = rho_star_bounds(&p, &d);
        assert!(lo < hi && hi < p.rho);
    }

    #[test]
    fn uncoupled_beta_rejected() {
        let cfg = ChannelConfig::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let p = crate::channel_params::derive_with_beta(&cfg, 0.9).unwrap();
        assert!(distortion_bounds(&p).is_err());
    }
}

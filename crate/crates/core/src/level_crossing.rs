//! Gaussian level- and curve-crossing statistics for the transition interval,
//! the density of the crossing shift, and the mean excursion duration.

use crate::channel_params::DerivedParams;
use crate::distortion::{c0_constant, c2_constant, distortion_bounds, noise_curvature};
use crate::error::{require_positive, Error, Result};
use crate::quad::{self, CompositeRule};
use crate::special::{erfcx, folded_normal_mean, std_normal_pdf};
use crate::spectrum::{c1, pulse_h};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Autocorrelation function of a stationary zero-mean process together
/// with its first two derivatives.
pub trait AcfModel: Sync {
    fn s(&self, tau: f64) -> f64;
    fn s1(&self, tau: f64) -> f64;
    fn s2(&self, tau: f64) -> f64;

    fn s0(&self) -> f64 {
        self.s(0.0)
    }

    fn s2_zero(&self) -> f64 {
        self.s2(0.0)
    }
}

/// ACF `N0 W sinc(2 W tau)` of ideally lowpass-filtered white noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseAcf {
    pub n0: f64,
    pub w: f64,
}

impl AcfModel for NoiseAcf {
    fn s(&self, tau: f64) -> f64 {
        let x = 2.0 * PI * self.w * tau;
        let v = if x.abs() < 1e-3 {
            let x2 = x * x;
            1.0 - x2 / 6.0 + x2 * x2 / 120.0
        } else {
            x.sin() / x
        };
        self.n0 * self.w * v
    }

    fn s1(&self, tau: f64) -> f64 {
        let a = 2.0 * PI * self.w;
        let x = a * tau;
        let v = if x.abs() < 1e-3 { -x / 3.0 + x.powi(3) / 30.0 } else { (x * x.cos() - x.sin()) / (x * x) };
        self.n0 * self.w * a * v
    }

    fn s2(&self, tau: f64) -> f64 {
        let a = 2.0 * PI * self.w;
        let x = a * tau;
        let v = if x.abs() < 1e-2 {
            let x2 = x * x;
            -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0
        } else {
            ((2.0 - x * x) * x.sin() - 2.0 * x * x.cos()) / x.powi(3)
        };
        self.n0 * self.w * a * a * v
    }

    fn s0(&self) -> f64 {
        self.n0 * self.w
    }

    fn s2_zero(&self) -> f64 {
        noise_curvature(self.n0, self.w)
    }
}

/// Which distortion-variance bound feeds an ACF model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistortionSide {
    Upper,
    Lower,
}

/// ACF of the lowpass distortion, built from the distortion PSD bound with
/// the correlation factor frozen at its band-edge value.
#[derive(Debug, Clone)]
pub struct DistortionAcf {
    scale: f64,
    beta: f64,
    rule: CompositeRule,
    s0: f64,
    s2_zero: f64,
}

const DISTORTION_U_MAX: f64 = 2001.0 * PI;

impl DistortionAcf {
    pub fn new(params: &DerivedParams, side: DistortionSide) -> Self {
        let g = 1.0 + 2.0 * c1(params.k);
        let g = match side {
            DistortionSide::Upper => g,
            DistortionSide::Lower => 1.0 / g,
        };
        let scale = g * params.p_hat * params.beta / (params.t_avg * PI);
        let beta = params.beta;
        Self {
            scale,
            beta,
            rule: CompositeRule::new(PI, DISTORTION_U_MAX, 1000, 12),
            s0: scale * c0_constant() / (2.0 * PI),
            s2_zero: -scale * c2_constant() * PI / (2.0 * beta * beta),
        }
    }
}

impl AcfModel for DistortionAcf {
    fn s(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return self.s0;
        }
        let r = tau / self.beta;
        self.scale * self.rule.apply(|u| pulse_h(u) * (u * r).cos())
    }

    fn s1(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let r = tau / self.beta;
        -self.scale / self.beta * self.rule.apply(|u| u * pulse_h(u) * (u * r).sin())
    }

    fn s2(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return self.s2_zero;
        }
        let r = tau / self.beta;
        -self.scale / (self.beta * self.beta) * self.rule.apply(|u| u * u * pulse_h(u) * (u * r).cos())
    }

    fn s0(&self) -> f64 {
        self.s0
    }

    fn s2_zero(&self) -> f64 {
        self.s2_zero
    }
}

/// Sum of two independent processes.
#[derive(Debug, Clone)]
pub struct SumAcf<A, B>(pub A, pub B);

impl<A: AcfModel, B: AcfModel> AcfModel for SumAcf<A, B> {
    fn s(&self, tau: f64) -> f64 {
        self.0.s(tau) + self.1.s(tau)
    }
    fn s1(&self, tau: f64) -> f64 {
        self.0.s1(tau) + self.1.s1(tau)
    }
    fn s2(&self, tau: f64) -> f64 {
        self.0.s2(tau) + self.1.s2(tau)
    }
    fn s0(&self) -> f64 {
        self.0.s0() + self.1.s0()
    }
    fn s2_zero(&self) -> f64 {
        self.0.s2_zero() + self.1.s2_zero()
    }
}

/// ACF of the total disturbance `z = n + x~` for the given distortion bound.
pub fn disturbance_acf(params: &DerivedParams, side: DistortionSide) -> SumAcf<NoiseAcf, DistortionAcf> {
    SumAcf(NoiseAcf { n0: params.n0, w: params.w }, DistortionAcf::new(params, side))
}

/// Deterministic curve `psi` on `[0, T]` with derivative.
pub trait Curve: Sync {
    fn psi(&self, y: f64) -> f64;
    fn dpsi(&self, y: f64) -> f64;
}

/// `sqrt(P_hat) cos(pi y / beta)`: the level the disturbance must meet to
/// produce a crossing inside the transition interval.
#[derive(Debug, Clone, Copy)]
pub struct SineTransition {
    pub amplitude: f64,
    pub beta: f64,
}

impl SineTransition {
    pub fn new(params: &DerivedParams) -> Self {
        Self { amplitude: params.p_hat.sqrt(), beta: params.beta }
    }
}

impl Curve for SineTransition {
    fn psi(&self, y: f64) -> f64 {
        self.amplitude * (PI * y / self.beta).cos()
    }
    fn dpsi(&self, y: f64) -> f64 {
        -self.amplitude * PI / self.beta * (PI * y / self.beta).sin()
    }
}

/// Constant level.
#[derive(Debug, Clone, Copy)]
pub struct Level(pub f64);

impl Curve for Level {
    fn psi(&self, _: f64) -> f64 {
        self.0
    }
    fn dpsi(&self, _: f64) -> f64 {
        0.0
    }
}

/// Expected number of crossings of `curve` by the process over `[0, t]`.
pub fn expected_curve_crossings<C: Curve + ?Sized, A: AcfModel + ?Sized>(
    curve: &C,
    t: f64,
    acf: &A,
) -> Result<f64> {
    require_positive("T", t)?;
    let sigma = acf.s0().sqrt();
    let sd1 = (-acf.s2_zero()).sqrt();
    if !(sd1 > 0.0) {
        return Err(Error::Domain("expected_curve_crossings: s''(0) must be < 0".into()));
    }
    let density =
        |y: f64| std_normal_pdf(curve.psi(y) / sigma) / sigma * folded_normal_mean(curve.dpsi(y), sd1);
    Ok(quad::adaptive(density, 0.0, t, 1e-13, 1e-10)?.value)
}

/// Integration controls for [`variance_curve_crossings`].
#[derive(Debug, Clone, Copy)]
pub struct VarianceOptions {
    /// Excluded lag as a fraction of `T`.
    pub eps_fraction: f64,
    pub lag_panels: usize,
    pub lag_order: usize,
    pub start_order: usize,
    pub slope_order: usize,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self { eps_fraction: 1e-3, lag_panels: 48, lag_order: 8, start_order: 32, slope_order: 24 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossingMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[N (N - 1)]` over lags `>= eps`.
    pub second_factorial: f64,
    /// Estimate of the part of `E[N (N - 1)]` from lags `< eps`.
    pub excluded_mass: f64,
}

/// Mean and variance of the number of curve crossings over `[0, t]`.
pub fn variance_curve_crossings<C: Curve + ?Sized, A: AcfModel + ?Sized>(
    curve: &C,
    t: f64,
    acf: &A,
    opts: &VarianceOptions,
) -> Result<CrossingMoments> {
    let mean = expected_curve_crossings(curve, t, acf)?;
    let eps = opts.eps_fraction * t;
    let lag_rule = CompositeRule::new(eps, t, opts.lag_panels, opts.lag_order);
    let (gx, gw) = quad::gauss_legendre(opts.start_order);
    let (sx, sw) = quad::gauss_legendre(opts.slope_order);
    let s0 = acf.s0();
    let d0 = -acf.s2_zero();
    let pair = |tau: f64| -> f64 {
        let acf_t = (acf.s(tau), acf.s1(tau), acf.s2(tau));
        let len = t - tau;
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let t1 = 0.5 * len * (x + 1.0);
            acc += 0.5 * len * w * pair_density(curve, t1, tau, s0, d0, acf_t, &sx, &sw);
        }
        acc
    };
    let values: Vec<f64> = lag_rule.nodes.par_iter().map(|&tau| pair(tau)).collect();
    let inner: f64 = values.iter().zip(&lag_rule.weights).map(|(v, w)| v * w).sum();
    let second_factorial = 2.0 * inner;
    // the pair density vanishes linearly at zero lag
    let excluded_mass = pair(eps) * eps;
    Ok(CrossingMoments {
        mean,
        variance: mean - mean * mean + second_factorial,
        second_factorial,
        excluded_mass,
    })
}

/// Product density of crossings at `t1` and `t1 + tau`.
#[allow(clippy::too_many_arguments)]
fn pair_density<C: Curve + ?Sized>(
    curve: &C,
    t1: f64,
    tau: f64,
    s0: f64,
    d0: f64,
    (st, s1t, s2t): (f64, f64, f64),
    nodes: &[f64],
    weights: &[f64],
) -> f64 {
    let t2 = t1 + tau;
    let (x1, x2) = (curve.psi(t1), curve.psi(t2));
    let (p1, p2) = (curve.dpsi(t1), curve.dpsi(t2));
    // joint density of (z1, z2) at (psi1, psi2)
    let det = s0 * s0 - st * st;
    if !(det > 0.0) {
        return 0.0;
    }
    let q = (s0 * x1 * x1 - 2.0 * st * x1 * x2 + s0 * x2 * x2) / det;
    let px = (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
    if px == 0.0 {
        return 0.0;
    }
    // inverse of Sigma_XX times x
    let ix1 = (s0 * x1 - st * x2) / det;
    let ix2 = (-st * x1 + s0 * x2) / det;
    // Sigma_YX = [[0, -s'], [s', 0]]
    let m1 = -s1t * ix2;
    let m2 = s1t * ix1;
    // Sigma_YX Sigma_XX^-1 Sigma_XY
    let k11 = s1t * s1t * s0 / det;
    let k12 = s1t * s1t * st / det;
    let c11 = (d0 - k11).max(0.0);
    let c22 = c11;
    let c12 = -s2t - k12;
    let (a1, a2) = (m1 - p1, m2 - p2);
    px * abs_product_moment(a1, a2, c11, c22, c12, nodes, weights)
}

/// `E|U1| |U2|` for a bivariate normal with means `a1, a2`.
fn abs_product_moment(a1: f64, a2: f64, c11: f64, c22: f64, c12: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    if c11 <= 0.0 {
        return a1.abs() * folded_normal_mean(a2, c22.max(0.0).sqrt());
    }
    let sd1 = c11.sqrt();
    let slope = c12 / c11;
    let cond_sd = (c22 - c12 * slope).max(0.0).sqrt();
    let f = |u: f64| {
        let z = (u - a1) / sd1;
        u.abs() * std_normal_pdf(z) / sd1 * folded_normal_mean(a2 + slope * (u - a1), cond_sd)
    };
    // split at the kink of |u|, truncate at 9 standard deviations
    let lo = a1 - 9.0 * sd1;
    let hi = a1 + 9.0 * sd1;
    let mut acc = 0.0;
    let mut seg = |a: f64, b: f64| {
        if b > a {
            let h = 0.5 * (b - a);
            for (x, w) in nodes.iter().zip(weights) {
                acc += h * w * f(a + h * (x + 1.0));
            }
        }
    };
    if lo < 0.0 && hi > 0.0 {
        seg(lo, 0.0);
        seg(0.0, hi);
    } else {
        seg(lo, hi);
    }
    acc
}

/// Density of the crossing shift on `|s| <= beta/2`. Its total mass is
/// `erf(sqrt(P_hat / (2 sigma_z^2)))`: the remainder is the probability that
/// the disturbance exceeds the peak amplitude.
pub fn pdf_shift(s: f64, beta: f64, p_hat: f64, sigma_z_sq: f64) -> f64 {
    if s.abs() > 0.5 * beta {
        return 0.0;
    }
    let a = p_hat / (2.0 * sigma_z_sq);
    let x = PI * s / beta;
    (PI * a).sqrt() * x.cos() / beta * (-a * x.sin().powi(2)).exp()
}

/// Gaussian approximation of [`pdf_shift`].
pub fn pdf_shift_gauss(s: f64, beta: f64, p_hat: f64, sigma_z_sq: f64) -> f64 {
    let a = p_hat / (2.0 * sigma_z_sq);
    let x = PI * s / beta;
    (PI * a).sqrt() / beta * (-a * x * x).exp()
}

/// Total mass of [`pdf_shift`].
pub fn pdf_shift_mass(p_hat: f64, sigma_z_sq: f64) -> f64 {
    statrs::function::erf::erf((p_hat / (2.0 * sigma_z_sq)).sqrt())
}

/// Variance of the normalized shift density.
pub fn shift_variance(beta: f64, p_hat: f64, sigma_z_sq: f64) -> Result<f64> {
    let h = 0.5 * beta;
    let f = |s: f64| pdf_shift(s, beta, p_hat, sigma_z_sq);
    let mass = quad::adaptive(f, -h, h, 1e-300, 1e-12)?.value;
    let m2 = quad::adaptive(|s| s * s * f(s), -h, h, 1e-300, 1e-12)?.value;
    Ok(m2 / mass)
}

/// Comparison of the exact shift variance against the
/// Gaussian approximation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussCheck {
    pub rho_db: f64,
    pub k: f64,
    pub sigma_s_sq: f64,
    pub exact_variance: f64,
    pub variance_ratio: f64,
    pub sigma_ratio: f64,
}

pub fn gauss_check(params: &DerivedParams, side: DistortionSide) -> Result<GaussCheck> {
    let d = distortion_bounds(params)?;
    let sz = match side {
        DistortionSide::Upper => d.sigma_z_sq_hi,
        DistortionSide::Lower => d.sigma_z_sq_lo,
    };
    let s_sq = crate::bounds::sigma_s_sq(params, sz);
    let exact = shift_variance(params.beta, params.p_hat, sz)?;
    Ok(GaussCheck {
        rho_db: params.rho.log10() * 10.0,
        k: params.k,
        sigma_s_sq: s_sq,
        exact_variance: exact,
        variance_ratio: exact / s_sq,
        sigma_ratio: (exact / s_sq).sqrt(),
    })
}

/// Mean length of an excursion above `sqrt(P_hat)`.
pub fn mean_excursion_duration(p_hat: f64, sigma_z_sq: f64, s2_zz: f64) -> Result<f64> {
    require_positive("sigma_z_sq", sigma_z_sq)?;
    if !(s2_zz < 0.0) {
        return Err(Error::InvalidParameter {
            field: "s2_zz",
            value: s2_zz,
            reason: "ACF curvature at zero must be negative",
        });
    }
    let x = (p_hat / (2.0 * sigma_z_sq)).sqrt();
    Ok(PI * (sigma_z_sq / -s2_zz).sqrt() * erfcx(x))
}

/// Per-transition crossing statistics for one parameter point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionCrossings {
    pub rho_db: f64,
    pub k: f64,
    pub moments: CrossingMoments,
}

pub fn transition_crossings(
    params: &DerivedParams,
    side: DistortionSide,
    opts: &VarianceOptions,
) -> Result<TransitionCrossings> {
    let acf = disturbance_acf(params, side);
    let moments = variance_curve_crossings(&SineTransition::new(params), params.beta, &acf, opts)?;
    Ok(TransitionCrossings { rho_db: 10.0 * params.rho.log10(), k: params.k, moments })
}

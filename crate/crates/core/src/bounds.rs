//! Lower and upper bounds on the mutual-information rate, their pure-`k`
//! normalized forms, the AWGN offset and its optimizing `k`.
//!
//! All rates are in nats/s.

use crate::channel_params::{awgn_capacity, DerivedParams};
use crate::distortion::{c0_constant, c2_constant, distortion_bounds, DistortionBounds};
use crate::error::{require_positive, Error, Result};
use crate::quad;
use crate::special::{acosh1p, acosh1p_from_ln};
use crate::spectrum::c1;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{E, PI};

/// `ln(e / 2 pi)`, the Gaussian-entropy offset of the genie bound.
fn ln_e_over_2pi() -> f64 {
    (E / (2.0 * PI)).ln()
}

/// Shift-error variance for a total distortion variance `sigma_z_sq`.
pub fn sigma_s_sq(params: &DerivedParams, sigma_z_sq: f64) -> f64 {
    sigma_z_sq / (4.0 * PI * PI * params.w * params.w * params.p_hat)
}

/// `∫_{-1/2}^{1/2} ln(1 + a / (1 - cos 2 pi f)) df`, in closed form.
pub fn arcosh_integral(a: f64) -> Result<f64> {
    require_positive("a", a)?;
    Ok(acosh1p(a))
}

/// [`arcosh_integral`] by tanh-sinh quadrature of its defining integral.
pub fn arcosh_integral_quadrature(a: f64) -> Result<f64> {
    require_positive("a", a)?;
    // even integrand; 1 - cos 2 pi f = 2 sin^2 pi f
    let half = quad::tanh_sinh(
        |f, _| {
            let s = (PI * f).sin();
            let two_s2 = 2.0 * s * s;
            if a < two_s2 {
                (a / two_s2).ln_1p()
            } else {
                (a + two_s2).ln() - std::f64::consts::LN_2 - 2.0 * s.ln()
            }
        },
        0.0,
        0.5,
        1e-14,
    )?;
    Ok(2.0 * half)
}

/// Zero-level crossing rate (both directions) of a stationary Gaussian
/// process with variance `sigma_sq` and ACF curvature `s2 < 0`.
pub fn rice_rate(sigma_sq: f64, s2: f64) -> f64 {
    (-s2 / sigma_sq).sqrt() / PI
}

/// Expected received symbols per input symbol, from the level-crossing
/// rate of `sqrt(P_hat)` over a plateau of mean length `1/lambda`.
pub fn rice_mu(params: &DerivedParams, sigma_z_sq: f64, s2_zz: f64) -> Result<f64> {
    require_positive("sigma_z_sq", sigma_z_sq)?;
    if !(s2_zz < 0.0) {
        return Err(Error::InvalidParameter {
            field: "s2_zz",
            value: s2_zz,
            reason: "ACF curvature at zero must be negative",
        });
    }
    let level = (-params.p_hat / (2.0 * sigma_z_sq)).exp();
    Ok(rice_rate(sigma_z_sq, s2_zz) * level / params.lambda + 1.0)
}

/// Expected zero crossings of bandlimited white noise over a window `t`.
pub fn mu0(w: f64, t: f64) -> f64 {
    2.0 / 3f64.sqrt() * w * t
}

/// `(m) ln m - (1 + m) ln(1 + m)`: minus the entropy of a geometric law on
/// `{1, 2, ...}` with mean `1 + m`.
pub fn neg_geometric_entropy(m: f64) -> f64 {
    if m <= 0.0 {
        0.0
    } else if m > 1.0 {
        -m * (1.0 / m).ln_1p() - m.ln_1p()
    } else {
        m * m.ln() - (1.0 + m) * m.ln_1p()
    }
}

/// Maximum entropy of a positive integer variable with mean `mu >= 1`.
pub fn h_vk_upper(mu: f64) -> Result<f64> {
    if !(mu >= 1.0) {
        return Err(Error::InvalidParameter {
            field: "mu",
            value: mu,
            reason: "mean symbol count must be >= 1",
        });
    }
    Ok(-neg_geometric_entropy(mu - 1.0))
}

/// Genie-aided lower bound for a shift variance derived from `sigma_z_sq`.
pub fn genie_lower_rate(params: &DerivedParams, sigma_z_sq: f64) -> Result<f64> {
    require_positive("sigma_z_sq", sigma_z_sq)?;
    let s = sigma_s_sq(params, sigma_z_sq);
    let a = 1.0 / (2.0 * s * params.lambda * params.lambda);
    Ok((ln_e_over_2pi() + acosh1p(a)) / (2.0 * params.t_avg))
}

/// Water level `nu` for input variance `sigma_a_sq` over the shift-noise
/// spectrum `2 sigma_s_sq (1 - cos 2 pi f)`.
pub fn waterfill_nu(sigma_a_sq: f64, sigma_s_sq: f64) -> Result<f64> {
    require_positive("sigma_A_sq", sigma_a_sq)?;
    require_positive("sigma_S_sq", sigma_s_sq)?;
    if sigma_a_sq >= 2.0 * sigma_s_sq {
        return Ok(sigma_a_sq + 2.0 * sigma_s_sq);
    }
    let r = sigma_a_sq / sigma_s_sq;
    // normalized to sigma_S^2 = 1; the poured volume is increasing in nu
    let (mut lo, mut hi) = (0.0, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if waterfill_volume(mid, 1.0) < r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) * sigma_s_sq)
}

/// Half-width of the frequency band where the spectrum is below `nu`.
fn band_edge(nu: f64, sigma_s_sq: f64) -> f64 {
    if nu >= 4.0 * sigma_s_sq {
        0.5
    } else {
        (1.0 - nu / (2.0 * sigma_s_sq)).acos() / (2.0 * PI)
    }
}

/// `∫ (nu - S(f))^+ df` in closed form.
pub fn waterfill_volume(nu: f64, sigma_s_sq: f64) -> f64 {
    let f0 = band_edge(nu, sigma_s_sq);
    2.0 * f0 * (nu - 2.0 * sigma_s_sq) + 2.0 * sigma_s_sq * (2.0 * PI * f0).sin() / PI
}

/// Colored-noise water-filling capacity per symbol, in nats.
pub fn waterfill_per_symbol(sigma_a_sq: f64, sigma_s_sq: f64) -> Result<(f64, f64)> {
    let nu = waterfill_nu(sigma_a_sq, sigma_s_sq)?;
    if nu >= 4.0 * sigma_s_sq {
        return Ok((0.5 * (nu / sigma_s_sq).ln(), nu));
    }
    let f0 = band_edge(nu, sigma_s_sq);
    let ln_ratio = (nu / (4.0 * sigma_s_sq)).ln();
    let v = quad::tanh_sinh(|f, _| ln_ratio - 2.0 * (PI * f).sin().ln(), 0.0, f0, 1e-13)?;
    Ok((v.max(0.0), nu))
}

/// Lower-bound side of the analysis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBound {
    /// Clamped at zero.
    pub rate: f64,
    pub raw: f64,
    pub clamped: bool,
    pub genie: f64,
    pub mu_bar: f64,
    /// `mu_bar` recomputed from the dimensional Rice formula.
    pub mu_bar_dimensional: f64,
    pub h_v_rate: f64,
    pub sigma_z_sq: f64,
    pub sigma_s_sq: f64,
}

/// Upper-bound side of the analysis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpperBound {
    pub rate: f64,
    pub per_symbol: f64,
    pub nu: f64,
    pub sigma_z_sq: f64,
    pub sigma_s_sq: f64,
}

/// Lower bound on the rate using the upper distortion variance and the most
/// negative curvature bound.
pub fn lower_bound_rate(params: &DerivedParams) -> Result<LowerBound> {
    let d = distortion_bounds(params)?;
    lower_from(params, &d)
}

fn lower_from(params: &DerivedParams, d: &DistortionBounds) -> Result<LowerBound> {
    let genie = genie_lower_rate(params, d.sigma_z_sq_hi)?;
    let n = NormalizedLower::new(params.k, params.rho);
    let mu_bar = n.mu_bar;
    let mu_bar_dimensional = rice_mu(params, d.sigma_z_sq_hi, d.s2_zz_lo)?;
    let h_v_rate = h_vk_upper(mu_bar)? / params.t_avg;
    let raw = genie - h_v_rate;
    Ok(LowerBound {
        rate: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
        genie,
        mu_bar,
        mu_bar_dimensional,
        h_v_rate,
        sigma_z_sq: d.sigma_z_sq_hi,
        sigma_s_sq: sigma_s_sq(params, d.sigma_z_sq_hi),
    })
}

/// Water-filling upper bound using the lower distortion variance.
pub fn upper_bound_rate(params: &DerivedParams) -> Result<UpperBound> {
    let d = distortion_bounds(params)?;
    upper_from(params, &d)
}

fn upper_from(params: &DerivedParams, d: &DistortionBounds) -> Result<UpperBound> {
    let s = sigma_s_sq(params, d.sigma_z_sq_lo);
    let (per_symbol, nu) = waterfill_per_symbol(params.sigma_a_sq, s)?;
    Ok(UpperBound {
        rate: per_symbol / params.t_avg,
        per_symbol,
        nu,
        sigma_z_sq: d.sigma_z_sq_lo,
        sigma_s_sq: s,
    })
}

/// Both bounds with every intermediate quantity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport {
    pub w: f64,
    pub lambda: f64,
    pub k: f64,
    pub rho: f64,
    pub lower_rate: f64,
    pub lower_raw: f64,
    pub clamped: bool,
    pub upper_rate: f64,
    pub genie_lower: f64,
    pub genie_upper: f64,
    pub mu_bar: f64,
    pub h_v_rate: f64,
    pub nu: f64,
    /// Shift variance paired with `nu` (upper-bound side).
    pub sigma_s_sq: f64,
    /// Shift variance of the lower-bound side.
    pub sigma_s_sq_hi: f64,
    pub distortion: DistortionBounds,
    pub awgn: f64,
}

pub fn bound_report(params: &DerivedParams) -> Result<BoundReport> {
    let d = distortion_bounds(params)?;
    let lo = lower_from(params, &d)?;
    let up = upper_from(params, &d)?;
    Ok(BoundReport {
        w: params.w,
        lambda: params.lambda,
        k: params.k,
        rho: params.rho,
        lower_rate: lo.rate,
        lower_raw: lo.raw,
        clamped: lo.clamped,
        upper_rate: up.rate,
        genie_lower: lo.genie,
        genie_upper: up.rate,
        mu_bar: lo.mu_bar,
        h_v_rate: lo.h_v_rate,
        nu: up.nu,
        sigma_s_sq: up.sigma_s_sq,
        sigma_s_sq_hi: lo.sigma_s_sq,
        distortion: d,
        awgn: awgn_capacity(params.w, params.rho),
    })
}

/// Evaluates [`bound_report`] over many parameter sets in parallel; the
/// output order follows the input.
pub fn sweep(points: &[DerivedParams]) -> Vec<Result<BoundReport>> {
    points.par_iter().map(bound_report).collect()
}

/// `P_hat / sigma_z^2` as a function of `(k, rho)`; `upper_distortion`
/// selects the upper or lower distortion variance.
pub fn f1(k: f64, rho: f64, upper_distortion: bool) -> f64 {
    let g = 1.0 + 2.0 * c1(k);
    let g = if upper_distortion { g } else { 1.0 / g };
    let q = 0.5 + 2.0 * k;
    (1.0 + 2.0 * k) / q * rho / (1.0 + g * c0_constant() * rho / (2.0 * PI * PI * q))
}

/// Lower bound normalized by `lambda`, valid for arbitrarily large `k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalizedLower {
    pub k: f64,
    pub rho: f64,
    pub f1: f64,
    pub mu_bar: f64,
    /// `ln(mu_bar - 1)`; finite even when `mu_bar - 1` underflows.
    pub ln_mu_excess: f64,
    pub f2: f64,
    /// Bracketed term; the rate is `2k/(2k+1)` times this, times `lambda`.
    pub bracket: f64,
    pub raw: f64,
    pub value: f64,
}

impl NormalizedLower {
    pub fn new(k: f64, rho: f64) -> Self {
        let g = 1.0 + 2.0 * c1(k);
        let q = 0.5 + 2.0 * k;
        let f1 = f1(k, rho, true);
        let num = 4.0 / 3.0 * PI * PI * q + 2.0 * g * c2_constant() * rho;
        let den = PI * PI * q + g * c0_constant() * rho / 2.0;
        let ln_mu_excess = k.ln() + 0.5 * (num / den).ln() - 0.5 * f1;
        let m = ln_mu_excess.exp();
        let f2 = neg_geometric_entropy(m);
        let ln_arg = (2.0 * PI * PI).ln() + 2.0 * k.ln() + f1.ln();
        let bracket = 0.5 * ln_e_over_2pi() + 0.5 * acosh1p_from_ln(ln_arg) + f2;
        let raw = 2.0 * k / (2.0 * k + 1.0) * bracket;
        Self { k, rho, f1, mu_bar: 1.0 + m, ln_mu_excess, f2, bracket, raw, value: raw.max(0.0) }
    }
}

/// Upper bound normalized by `lambda`, valid for arbitrarily large `k`.
pub fn upper_normalized(k: f64, rho: f64) -> Result<f64> {
    let f1 = f1(k, rho, false);
    // sigma_A^2 / sigma_S^2 = 4 pi^2 k^2 P_hat / sigma_z^2
    let ln_r = (4.0 * PI * PI).ln() + 2.0 * k.ln() + f1.ln();
    let per_symbol = if ln_r >= 2f64.ln() {
        0.5 * (ln_r + (2.0 * (-ln_r).exp()).ln_1p())
    } else {
        waterfill_per_symbol(ln_r.exp(), 1.0)?.0
    };
    Ok(2.0 * k / (2.0 * k + 1.0) * per_symbol)
}

/// Offset `ln(C_AWGN / lower)` in nats; infinite where the lower bound
/// vanishes.
pub fn delta_offset(k: f64, rho: f64) -> f64 {
    let lower = NormalizedLower::new(k, rho).raw;
    if lower <= 0.0 {
        return f64::INFINITY;
    }
    (k * rho.ln_1p() / lower).ln()
}

/// Search settings for [`k_opt`].
#[derive(Debug, Clone, Copy)]
pub struct KOptSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub scan_points: usize,
}

impl Default for KOptSearch {
    fn default() -> Self {
        Self { lo: 0.05, hi: 5.0, tol: 1e-4, scan_points: 64 }
    }
}

/// `k` minimizing [`delta_offset`] at SNR `rho`, with the minimum value.
pub fn k_opt(rho: f64, search: &KOptSearch) -> Result<(f64, f64)> {
    require_positive("rho", rho)?;
    if !(search.lo > 0.0 && search.hi > search.lo && search.scan_points >= 3) {
        return Err(Error::Domain("k_opt: invalid search bracket".into()));
    }
    let n = search.scan_points;
    let (llo, lhi) = (search.lo.ln(), search.hi.ln());
    let grid: Vec<f64> = (0..n).map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = grid.iter().map(|&k| delta_offset(k, rho)).collect();
    let best = (0..n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty grid");
    if !vals[best].is_finite() {
        return Err(Error::Domain(format!(
            "k_opt: lower bound vanishes on the whole bracket at rho = {rho}"
        )));
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1v = delta_offset(x1, rho);
    let mut f2v = delta_offset(x2, rho);
    while b - a > search.tol {
        if f1v < f2v {
            b = x2;
            x2 = x1;
            f2v = f1v;
            x1 = b - inv_phi * (b - a);
            f1v = delta_offset(x1, rho);
        } else {
            a = x1;
            x1 = x2;
            f1v = f2v;
            x2 = a + inv_phi * (b - a);
            f2v = delta_offset(x2, rho);
        }
    }
    let k = 0.5 * (a + b);
    Ok((k, delta_offset(k, rho)))
}

/// `rho -> infinity` limit of the lower bound, with the limiting `mu`.
pub fn high_snr_limit(k: f64, w: f64) -> Result<(f64, f64)> {
    require_positive("k", k)?;
    require_positive("W", w)?;
    let g = 1.0 + 2.0 * c1(k);
    let (c0, c2) = (c0_constant(), c2_constant());
    let m = 2.0 * k * (c2 / c0).sqrt() * (-PI * PI * (1.0 + 2.0 * k) / (g * c0)).exp();
    let arg = 4.0 * PI.powi(4) * k * k * (1.0 + 2.0 * k) / (g * c0);
    let bracket = 0.5 * ln_e_over_2pi() + 0.5 * acosh1p(arg) + neg_geometric_entropy(m);
    Ok((2.0 * w / (2.0 * k + 1.0) * bracket, 1.0 + m))
}

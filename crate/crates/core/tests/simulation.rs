use zc_rate::bounds::bound_report;
use zc_rate::channel_params::{derive, ChannelConfig, DerivedParams};
use zc_rate::distortion::distortion_bounds;
use zc_rate::sim::{self, SimOptions};
use zc_rate::spectrum::psd_bounds;

fn params(k: f64, rho_db: f64) -> DerivedParams {
    derive(&ChannelConfig::from_k(k, 1.0, rho_db).unwrap()).unwrap()
}

#[test]
fn crossings_per_symbol_below_mu_bar() {
    for k in [0.5, 1.0] {
        let p = params(k, 10.0);
        let c = sim::chain_experiment(&p, 3000, &SimOptions::default(), 21).unwrap();
        let mu_bar = bound_report(&p).unwrap().mu_bar;
        let se = (c.var_v / c.n_symbols as f64).sqrt();
        assert!(c.mean_v <= mu_bar + 3.0 * se, "k={k}: {} vs {mu_bar}", c.mean_v);
        assert!(c.mean_v >= 1.0 - 3.0 * se);
    }
}

#[test]
fn noise_has_the_requested_variance() {
    let mut rng = sim::trial_rng(5, 0);
    let (n0, w, dt) = (0.3, 2.0, 0.01);
    let n = sim::gen_bandlimited_noise(1 << 18, dt, n0, w, &mut rng).unwrap();
    let rel = n.power() / (n0 * w) - 1.0;
    assert!(rel.abs() < 0.02, "{rel}");
}

#[test]
fn transmitted_power_and_spectrum() {
    let p = params(1.0, 10.0);
    let s = sim::empirical_psd(&p, 20_000, 1000, p.beta / 20.0, 22).unwrap();
    assert!((s.total_power / p.p - 1.0).abs() < 0.01, "{} vs {}", s.total_power, p.p);
    let b = psd_bounds(&p);
    // band-averaged estimate stays between the analytic envelopes
    let bins = 64;
    for chunk in s.omega.chunks(bins).zip(s.psd.chunks(bins)).take(20) {
        let (om, ps) = chunk;
        if om.len() < bins {
            break;
        }
        let est = ps.iter().sum::<f64>() / bins as f64;
        let (lo, hi) = om.iter().fold((0.0, 0.0), |(l, h), &o| {
            let (a, b) = b.at(o).unwrap();
            (l + a.min(b) / bins as f64, h + a.max(b) / bins as f64)
        });
        assert!(est > 0.85 * lo && est < 1.15 * hi, "omega {}: {est} vs [{lo}, {hi}]", om[0]);
    }
}

#[test]
fn lowpass_residual_within_bounds() {
    let p = params(1.0, 10.0);
    let d = distortion_bounds(&p).unwrap();
    let s = sim::lp_distortion_stats(&p, 200_000, 2, 23).unwrap();
    assert!(s.time_variance > d.sigma_xt_sq_lo && s.time_variance < d.sigma_xt_sq_hi);
}

#[test]
fn deletions_vanish_at_wide_bandwidth() {
    let d = sim::deletion_census(10.0, 0.1, 1.0, 20.0, 1000, 1e-3, 24).unwrap();
    assert_eq!(d.n_deletions, 0);
    let narrow = sim::deletion_census(0.5, 0.1, 1.0, 20.0, 1000, 1e-3, 24).unwrap();
    assert!(narrow.n_deletions > 50, "{}", narrow.n_deletions);
}

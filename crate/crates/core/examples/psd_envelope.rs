//! Empirical spectrum of the transmit signal next to its analytic envelopes.

use zc_rate::channel_params::{derive, ChannelConfig};
use zc_rate::sim;
use zc_rate::spectrum::psd_bounds;

fn main() -> zc_rate::error::Result<()> {
    let p = derive(&ChannelConfig::from_k(1.0, 1.0, 10.0)?)?;
    let est = sim::empirical_psd(&p, 20_000, 1000, p.beta / 20.0, 1)?;
    let env = psd_bounds(&p);
    println!("power {:.4} (expected {:.4}), out of band {:.2e}", est.total_power, p.p, est.out_of_band_power);
    let bins = 64;
    for (om, ps) in est.omega.chunks(bins).zip(est.psd.chunks(bins)).take(12) {
        let mid = om[om.len() / 2];
        let avg = ps.iter().sum::<f64>() / ps.len() as f64;
        let (lo, hi) = env.at(mid)?;
        println!(
            "f = {:>6.3}  est {avg:.5}  envelope [{:.5}, {:.5}]",
            mid / std::f64::consts::TAU,
            lo.min(hi),
            lo.max(hi)
        );
    }
    Ok(())
}

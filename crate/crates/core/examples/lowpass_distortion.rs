//! Variance and Gaussianity of the lowpass residual against its analytic bounds.

use zc_rate::channel_params::{derive, ChannelConfig};
use zc_rate::distortion::distortion_bounds;
use zc_rate::sim;

fn main() -> zc_rate::error::Result<()> {
    for k in [0.5, 1.0, 2.0, 4.0] {
        let p = derive(&ChannelConfig::from_k(k, 1.0, 10.0)?)?;
        let d = distortion_bounds(&p)?;
        let s = sim::lp_distortion_stats(&p, 200_000, 500, 5)?;
        println!(
            "k = {k}: time var {:.5}, ensemble var {:.5}, bounds [{:.5}, {:.5}], KL {:.4}",
            s.time_variance, s.ensemble_variance_pooled, d.sigma_xt_sq_lo, d.sigma_xt_sq_hi, s.kl_divergence
        );
    }
    Ok(())
}

//! Crossing counts per transition and shift statistics from the Rice-type integrals.

use zc_rate::channel_params::{derive, ChannelConfig};
use zc_rate::level_crossing::{gauss_check, transition_crossings, DistortionSide, VarianceOptions};
use zc_rate::sim;

fn main() -> zc_rate::error::Result<()> {
    let opts = VarianceOptions::default();
    for rho_db in [0.0, 6.0, 10.0, 20.0] {
        let p = derive(&ChannelConfig::from_k(1.0, 1.0, rho_db)?)?;
        let m = transition_crossings(&p, DistortionSide::Upper, &opts)?.moments;
        let g = gauss_check(&p, DistortionSide::Upper)?;
        println!(
            "rho = {rho_db:>4} dB  E[N] = {:.4}  Var[N] = {:.4}  exact/gauss shift variance = {:.3}",
            m.mean, m.variance, g.variance_ratio
        );
    }
    let r = sim::noise_crossing_rate(1.0, 1.0, 1 << 22, 0.05, 2)?;
    println!("noise zero crossings: {:.5}/s measured, {:.5}/s expected", r.rate, r.expected);
    Ok(())
}

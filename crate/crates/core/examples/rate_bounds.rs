//! Lower and upper rate bounds against AWGN capacity over a k grid.

use zc_rate::bounds::bound_report;
use zc_rate::channel_params::{derive, ChannelConfig};

fn main() -> zc_rate::error::Result<()> {
    let w = 1.0;
    println!("{:>8} {:>6} {:>12} {:>12} {:>12} {:>8}", "rho_dB", "k", "lower", "upper", "awgn", "mu_bar");
    for rho_db in [10.0, 20.0, 30.0] {
        for k in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = bound_report(&derive(&ChannelConfig::from_k(k, w, rho_db)?)?)?;
            let bits = std::f64::consts::LN_2;
            println!(
                "{rho_db:>8.1} {k:>6.2} {:>12.5} {:>12.5} {:>12.5} {:>8.4}",
                r.lower_rate / bits,
                r.upper_rate / bits,
                r.awgn / bits,
                r.mu_bar
            );
        }
    }
    Ok(())
}

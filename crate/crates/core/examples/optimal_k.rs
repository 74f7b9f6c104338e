//! Rate-maximizing k as the SNR grows, and the high-SNR limit it tends to.

use zc_rate::bounds::{high_snr_limit, k_opt, KOptSearch};
use zc_rate::channel_params::db_to_linear;

fn main() -> zc_rate::error::Result<()> {
    let search = KOptSearch::default();
    for rho_db in [10.0, 20.0, 30.0, 40.0, 60.0] {
        let (k, v) = k_opt(db_to_linear(rho_db), &search)?;
        println!("rho = {rho_db:>4} dB  k_opt = {k:.4}  lower/lambda = {v:.5} nat");
    }
    for k in [0.3, 0.7, 2.0] {
        let (rate, mu_g) = high_snr_limit(k, 1.0)?;
        println!("k = {k}: limit {rate:.5} nat/s at W = 1, mu_g = {mu_g:.4}");
    }
    Ok(())
}

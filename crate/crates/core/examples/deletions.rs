//! Deletion counts when the bandwidth is set independently of the transition length.

use zc_rate::sim;

fn main() -> zc_rate::error::Result<()> {
    let beta = 0.1;
    for rho_db in [6.0, 15.0] {
        for f in [0.1, 0.3, 0.5, 1.0, 2.0] {
            let d = sim::deletion_census(f / (2.0 * beta), beta, 1.0, rho_db, 1000, 1e-3, 4)?;
            println!(
                "rho = {rho_db:>4} dB  2W beta = {f:.1}  deletions {:>4}  insertions {:>4}",
                d.n_deletions, d.n_insertions
            );
        }
    }
    Ok(())
}

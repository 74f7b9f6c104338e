//! One block through synthesis, lowpass, noise, quantization and matching.

use zc_rate::channel_params::{derive, ChannelConfig};
use zc_rate::sim::{self, SimOptions};

fn main() -> zc_rate::error::Result<()> {
    let p = derive(&ChannelConfig::from_k(1.0, 1.0, 10.0)?)?;
    let b = sim::chain_block(&p, 1000, &SimOptions::default(), 3, 0)?;
    let r = &b.report;
    println!("tx {} crossings, rx {} crossings", b.tx.len(), b.rx.len());
    println!("insertions {} in {} events, deletions {}", r.n_insertions, r.insertion_events, r.n_deletions);
    let n = r.shift_samples.len() as f64;
    let mean = r.shift_samples.iter().sum::<f64>() / n;
    let var = r.shift_samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    println!("shift mean {mean:.2e} s, std {:.4} beta", var.sqrt() / p.beta);

    let c = sim::chain_experiment(&p, 5000, &SimOptions::default(), 3)?;
    println!("{} symbols: mean V {:.4}, shift variance {:.3e} s^2", c.n_symbols, c.mean_v, c.shift_variance);
    Ok(())
}

//! Cramér-von Mises distance of both pivots over a small (nu, n) grid,
//! against null quantiles of the statistic.

use normreg::simlab::{cvm_null_quantiles, derive_seed, run_replications, SimConfig};

fn main() -> Result<(), normreg::error::Error> {
    let reps = 4_000;
    let q = cvm_null_quantiles(reps, 2_000, &[0.5, 0.95, 0.99], 99)?;
    println!("null quantiles at m = {reps}: {:.3} {:.3} {:.3}", q[0], q[1], q[2]);
    println!("  nu     n    cvm_nw    cvm_ls");
    for nu in [2.4, 4.4, 8.0] {
        for n in [100, 250] {
            let cfg = SimConfig {
                nu,
                n,
                reps,
                seed: derive_seed(derive_seed(0, nu.to_bits()), n as u64),
                ..SimConfig::default()
            };
            let s = run_replications(&cfg)?;
            println!("{nu:>4} {n:>5} {:>9.4} {:>9.4}", s.cvm_nw, s.cvm_ls);
        }
    }
    Ok(())
}

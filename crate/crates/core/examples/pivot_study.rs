//! Monte Carlo coverage of the two slope pivots under a t(2.4) predictor.

use normreg::simlab::{qq_export, run_replications, SimConfig, NOMINAL_SIZES};

fn main() -> Result<(), normreg::error::Error> {
    let cfg = SimConfig {
        reps: 5_000,
        seed: 1,
        ..SimConfig::default()
    };
    let s = run_replications(&cfg)?;
    println!("nominal   nw-coverage   ls-coverage");
    for (i, size) in NOMINAL_SIZES.iter().enumerate() {
        println!("{:>7.2}   {:>11.4}   {:>11.4}", 1.0 - size, s.coverage_nw(i), s.coverage_ls(i));
    }
    println!("CvM distance to N(0,1): nw {:.4}, ls {:.4}", s.cvm_nw, s.cvm_ls);
    println!("lower tail of the QQ table (theoretical, nw, ls):");
    let nw = qq_export(&s.t_nw, 20)?;
    let ls = qq_export(&s.t_ls, 20)?;
    for (a, b) in nw.iter().zip(&ls).take(3) {
        println!("  {:+.3}  {:+.3}  {:+.3}", a.theoretical, a.empirical, b.empirical);
    }
    Ok(())
}

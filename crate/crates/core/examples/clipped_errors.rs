//! One extreme predictor value with a large error dominates the unclipped
//! sandwich. The clipping weight drops that row from the meat.

use nalgebra::DVector;
use normreg::covariance::{cov_norm_weighted, ClipPolicy};
use normreg::design::{build_design, Dataset};
use normreg::estimator::fit_norm_weighted;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), normreg::error::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200;
    let mut z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    z[17] = 5_000.0;
    let mut y: Vec<f64> = z
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            0.5 * v + e
        })
        .collect();
    y[17] += 400.0;
    let ds = Dataset::univariate(&y, &z)?;
    let des = build_design(&ds)?;
    let fit = fit_norm_weighted(&des, &DVector::from_vec(y))?;

    for (label, clip) in [("clipped", ClipPolicy::default()), ("unclipped", ClipPolicy::disabled())] {
        let (cov, dropped) = cov_norm_weighted(&des, &fit, &clip)?;
        println!("{label:>9}: se(slope) = {:.3e}, rows dropped = {dropped}", cov[(1, 1)].sqrt());
    }
    println!("threshold d*n^0.2 = {:.2}", ClipPolicy::default().threshold(n));
    Ok(())
}

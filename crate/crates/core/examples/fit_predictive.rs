//! Fits the norm-weighted and least-squares estimators to one simulated
//! heavy-tailed predictor and prints coefficients with robust standard errors.

use normreg::covariance::{cov_least_squares, cov_norm_weighted, ClipPolicy};
use normreg::design::build_design;
use normreg::estimator::{fit_least_squares, fit_norm_weighted};
use normreg::simlab::{draw_dataset, rng_for, SimConfig};

fn main() -> Result<(), normreg::error::Error> {
    let cfg = SimConfig {
        n: 250,
        ..SimConfig::default()
    };
    let ds = draw_dataset(&cfg, &mut rng_for(7, 0))?;
    let des = build_design(&ds)?;

    let mut nw = fit_norm_weighted(&des, &ds.y)?;
    let (cov, clipped) = cov_norm_weighted(&des, &nw, &ClipPolicy::default())?;
    nw.attach_covariance(cov, clipped);

    let mut ls = fit_least_squares(&des, &ds.y)?;
    let cov = cov_least_squares(&des, &ls)?;
    ls.attach_covariance(cov, 0);

    println!("psi_hat = {:.4}", des.psi_hat[0]);
    for (name, fit) in [("norm-weighted", &nw), ("least squares", &ls)] {
        let se = fit.se.as_ref().unwrap();
        println!(
            "{name:>14}: intercept {:.4} ({:.4})  slope {:.4} ({:.4})",
            fit.beta[0], se[0], fit.beta[1], se[1]
        );
    }
    println!("rows clipped from the meat: {}", nw.clip_count);
    Ok(())
}

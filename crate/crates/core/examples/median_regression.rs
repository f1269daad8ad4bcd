//! Norm-weighted median regression with kernel standard errors, and the
//! scalar case where the fit is the median of the slopes y/x.

use nalgebra::{DMatrix, DVector};
use normreg::design::{build_design, Dataset, Design};
use normreg::quantile::{fit_quantile, fit_quantile_with_cov, MiddleMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

fn main() -> Result<(), normreg::error::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = StudentT::new(2.5).unwrap();
    let z: Vec<f64> = (0..500).map(|_| t.sample(&mut rng)).collect();
    let y: Vec<f64> = z.iter().map(|v| 1.0 + 0.75 * v + t.sample(&mut rng)).collect();
    let ds = Dataset::univariate(&y, &z)?;
    let des = build_design(&ds)?;
    for tau in [0.25, 0.5, 0.75] {
        let fit = fit_quantile_with_cov(&des, &ds.y, tau, None, MiddleMatrix::Gg)?;
        let se = fit.se.as_ref().unwrap();
        println!(
            "tau {tau:.2}: slope {:.4} ({:.4}), bandwidth {:.3}, {} in band",
            fit.beta[1],
            se[1],
            fit.bandwidth.unwrap(),
            fit.in_band_count
        );
    }

    let x = [1.0, -2.0, 0.5, 4.0, 3.0];
    let yy = [2.0, -1.0, 1.0, 3.0, 9.0];
    let scalar = Design::from_rows(DMatrix::from_column_slice(5, 1, &x), DVector::zeros(1), false);
    let fit = fit_quantile(&scalar, &DVector::from_row_slice(&yy), 0.5)?;
    println!("scalar median fit {:.4}; slopes are 2, 0.5, 2, 0.75, 3", fit.beta[0]);
    Ok(())
}

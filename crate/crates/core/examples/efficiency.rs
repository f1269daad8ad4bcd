//! Variance of the sign estimator relative to least squares in the scalar
//! no-intercept model, for Gaussian and Laplace predictors.

use nalgebra::{DMatrix, DVector};
use normreg::design::Design;
use normreg::estimator::{fit_least_squares, fit_norm_weighted};
use normreg::simlab::rng_for;
use normreg::stats::sd;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn ratio(seed: u64, draw: fn(&mut ChaCha8Rng) -> f64) -> f64 {
    let (n, reps) = (200, 4_000);
    let mut nw = Vec::with_capacity(reps);
    let mut ls = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        let mut rng = rng_for(seed, r);
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = DVector::from_iterator(n, x.iter().zip(&noise).map(|(a, e)| a + e));
        let des = Design::from_rows(DMatrix::from_column_slice(n, 1, &x), DVector::zeros(1), false);
        nw.push(fit_norm_weighted(&des, &y).unwrap().beta[0]);
        ls.push(fit_least_squares(&des, &y).unwrap().beta[0]);
    }
    (sd(&nw) / sd(&ls)).powi(2)
}

fn main() {
    let gauss = ratio(1, |rng| StandardNormal.sample(rng));
    let laplace = ratio(2, |rng| {
        let e: f64 = Exp1.sample(rng);
        if rng.random::<bool>() { e } else { -e }
    });
    println!("Var(sign)/Var(LS), gaussian x: {gauss:.3} (pi/2 = {:.3})", std::f64::consts::FRAC_PI_2);
    println!("Var(sign)/Var(LS), laplace x:  {laplace:.3} (2)");
}

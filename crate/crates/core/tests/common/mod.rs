//! Oracles shared by the integration tests and the acceptance suite.

use nalgebra::{DMatrix, DVector};
use normreg::design::Dataset;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, nu: f64) -> Dataset {
    let t = StudentT::new(nu).unwrap();
    let z = DMatrix::from_fn(n, p, |_, _| 0.3 + 2.0 * t.sample(rng));
    let y = DVector::from_fn(n, |j, _| {
        let signal: f64 = (0..p).map(|i| (i as f64 + 1.0) * 0.5 * z[(j, i)]).sum();
        let e: f64 = StandardNormal.sample(rng);
        1.0 + signal + e
    });
    Dataset::new(y, z).unwrap()
}

/// Slope variances written out as in the single-predictor example, and the
/// intercept variances from the same 2×2 sandwich by scalar algebra.
pub struct ClosedForm {
    pub nw: [f64; 2],
    pub ls: [f64; 2],
}

pub fn closed_form(z: &[f64], u_nw: &[f64], u_ls: &[f64], clip_d: f64) -> ClosedForm {
    let n = z.len() as f64;
    let zbar = z.iter().sum::<f64>() / n;
    let dz: Vec<f64> = z.iter().map(|v| v - zbar).collect();
    let r: Vec<f64> = dz.iter().map(|d| (1.0 + d * d).sqrt()).collect();
    let inv_sum: f64 = r.iter().map(|v| 1.0 / v).sum();
    let ztilde = zbar + dz.iter().zip(&r).map(|(d, v)| d / v).sum::<f64>() / inv_sum;
    let mean_abs = dz.iter().map(|d| d.abs()).sum::<f64>() / n;
    let w: Vec<f64> = dz
        .iter()
        .map(|d| if d.abs() / mean_abs < clip_d * n.powf(0.2) { 1.0 } else { 0.0 })
        .collect();

    let num: f64 = (0..z.len())
        .map(|j| w[j] * (z[j] - ztilde).powi(2) * u_nw[j].powi(2) / (1.0 + dz[j] * dz[j]))
        .sum();
    let den: f64 = (0..z.len()).map(|j| (z[j] - ztilde).powi(2) / r[j]).sum();
    let nw_slope = num / (den * den);

    // generic 2×2 sandwich: A = Σ g xᵀ, B = Σ w u² g gᵀ, cov = A⁻¹ B A⁻ᵀ
    let (mut a, mut b) = ([[0.0; 2]; 2], [[0.0; 2]; 2]);
    for j in 0..z.len() {
        let x = [1.0, dz[j]];
        let g = [1.0 / r[j], dz[j] / r[j]];
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += g[p] * x[q];
                b[p][q] += w[j] * u_nw[j] * u_nw[j] * g[p] * g[q];
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let ai = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let quad = |row: [f64; 2]| {
        let mut s = 0.0;
        for p in 0..2 {
            for q in 0..2 {
                s += row[p] * b[p][q] * row[q];
            }
        }
        s
    };
    let nw_intercept = quad(ai[0]);

    let sxx: f64 = dz.iter().map(|d| d * d).sum();
    let ls_slope = dz.iter().zip(u_ls).map(|(d, u)| d * d * u * u).sum::<f64>() / (sxx * sxx);
    let ls_intercept = u_ls.iter().map(|u| u * u).sum::<f64>() / (n * n);
    ClosedForm {
        nw: [nw_intercept, nw_slope],
        ls: [ls_intercept, ls_slope],
    }
}

//! Exact minimiser of `Σ ρ_τ(y_j − x_jᵀb)` by vertex descent.
//!
//! Every iterate is a basic solution: `k` observations (the basis) are fitted
//! exactly. From a vertex the `2k` edge directions are `±` the columns of
//! `X_h⁻¹`; the steepest descending edge is followed with an exact line
//! search (a weighted median along the edge) until no edge descends. The
//! result is then certified by the dual condition: there must be
//! `v_h ∈ [τ−1, τ]^k` with `Σ_{j∉h} ψ_τ(r_j) x_j + X_hᵀ v_h = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::MAX_CONDITION;

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub beta: DVector<f64>,
    pub iterations: usize,
    /// Sup-norm of the smallest subgradient found at `beta`.
    pub certificate: f64,
}

struct Problem<'a> {
    n: usize,
    k: usize,
    /// Row-major copy of the design.
    rows: Vec<f64>,
    y: &'a DVector<f64>,
    tau: f64,
}

impl Problem<'_> {
    fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.k..(j + 1) * self.k]
    }

    fn residuals(&self, b: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.y[j] - dot(self.row(j), b))
            .collect()
    }

    fn basis_matrix(&self, basis: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |i, c| self.row(basis[i])[c])
    }

    fn psi(&self, r: f64) -> f64 {
        if r < 0.0 {
            self.tau - 1.0
        } else {
            self.tau
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn condition_ok(m: &DMatrix<f64>) -> bool {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    min > 0.0 && max / min <= MAX_CONDITION
}

/// Picks `k` rows with the smallest |residual| that give a well-conditioned
/// square system, using Gram–Schmidt on the candidate rows.
fn initial_basis(pb: &Problem, residuals: &[f64]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..pb.n).collect();
    order.sort_by(|&a, &b| residuals[a].abs().total_cmp(&residuals[b].abs()).then(a.cmp(&b)));
    let mut basis = Vec::with_capacity(pb.k);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(pb.k);
    for &j in &order {
        let row = pb.row(j);
        let scale = dot(row, row).sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = row.iter().map(|x| x / scale).collect();
        for q in &ortho {
            let c = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-6 {
            v.iter_mut().for_each(|a| *a /= len);
            ortho.push(v);
            basis.push(j);
            if basis.len() == pb.k {
                break;
            }
        }
    }
    if basis.len() < pb.k {
        return Err(Error::SingularGram {
            which: "quantile basis",
            condition: f64::INFINITY,
        });
    }
    Ok(basis)
}

fn vertex(pb: &Problem, basis: &[usize]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let xh = pb.basis_matrix(basis);
    if !condition_ok(&xh) {
        return Err(Error::SingularGram {
            which: "quantile basis",
            condition: f64::INFINITY,
        });
    }
    let inv = xh.try_inverse().ok_or(Error::SingularGram {
        which: "quantile basis",
        condition: f64::INFINITY,
    })?;
    let yh = DVector::from_fn(pb.k, |i, _| pb.y[basis[i]]);
    Ok((&inv * yh, inv))
}

/// Directional derivative of the loss along `d` for a non-basis row whose
/// residual moves as `r − t·a`.
fn slope_term(tau: f64, r: f64, a: f64) -> f64 {
    if r > 0.0 {
        -tau * a
    } else if r < 0.0 {
        (1.0 - tau) * a
    } else {
        (-tau * a).max((1.0 - tau) * a)
    }
}

/// Smallest subgradient sup-norm given the basis rows are free in `[τ−1, τ]`
/// and other zero-residual rows sit at the midpoint.
fn certify(pb: &Problem, basis: &[usize], inv: &DMatrix<f64>, r: &[f64]) -> f64 {
    let mut in_basis = vec![false; pb.n];
    basis.iter().for_each(|&j| in_basis[j] = true);
    let mut fixed = vec![0.0; pb.k];
    for j in 0..pb.n {
        if in_basis[j] {
            continue;
        }
        let psi = if r[j] == 0.0 { pb.tau - 0.5 } else { pb.psi(r[j]) };
        fixed.iter_mut().zip(pb.row(j)).for_each(|(f, x)| *f += psi * x);
    }
    // X_hᵀ v = −fixed  ⇒  v = −(X_h⁻¹)ᵀ fixed
    let fixed_v = DVector::from_column_slice(&fixed);
    let v = -(inv.transpose() * &fixed_v);
    let clamped = v.map(|vi| vi.clamp(pb.tau - 1.0, pb.tau));
    let mut grad = fixed.clone();
    for (i, &j) in basis.iter().enumerate() {
        grad.iter_mut().zip(pb.row(j)).for_each(|(g, x)| *g += clamped[i] * x);
    }
    grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
}

pub(crate) fn solve(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64, max_iter: usize) -> Result<Solution> {
    let (n, k) = x.shape();
    let rows: Vec<f64> = (0..n).flat_map(|j| x.row(j).iter().copied().collect::<Vec<_>>()).collect();
    let pb = Problem { n, k, rows, y, tau };
    let tolerance = 1e-10 * (n as f64).max(1.0);

    // start from the least-squares fit
    let start = x
        .tr_mul(x)
        .lu()
        .solve(&x.tr_mul(y))
        .unwrap_or_else(|| DVector::zeros(k));
    let r0 = pb.residuals(start.as_slice());
    let mut basis = initial_basis(&pb, &r0)?;
    let (mut beta, mut inv) = vertex(&pb, &basis)?;
    let mut swaps = 0usize;

    for iteration in 0..max_iter {
        let mut r = pb.residuals(beta.as_slice());
        basis.iter().for_each(|&j| r[j] = 0.0);
        let mut in_basis = vec![false; n];
        basis.iter().for_each(|&j| in_basis[j] = true);

        // a[j][i] = x_jᵀ (column i of X_h⁻¹)
        let mut best: Option<(f64, usize, f64)> = None; // (derivative, edge, sign)
        let mut a_cols = vec![0.0; n * k];
        for j in 0..n {
            let row = pb.row(j);
            for i in 0..k {
                a_cols[j * k + i] = (0..k).map(|c| row[c] * inv[(c, i)]).sum();
            }
        }
        for i in 0..k {
            for sign in [1.0, -1.0] {
                let mut deriv = if sign > 0.0 { 1.0 - tau } else { tau };
                for j in 0..n {
                    if !in_basis[j] {
                        deriv += slope_term(tau, r[j], sign * a_cols[j * k + i]);
                    }
                }
                if best.is_none_or(|(d, _, _)| deriv < d) {
                    best = Some((deriv, i, sign));
                }
            }
        }
        let (deriv, edge, sign) = best.expect("k >= 1");

        if deriv >= -1e-12 {
            let certificate = certify(&pb, &basis, &inv, &r);
            if certificate <= tolerance {
                return Ok(Solution {
                    beta,
                    iterations: iteration,
                    certificate,
                });
            }
            // degenerate vertex: try another basis through the same point
            let zero_rows: Vec<usize> = (0..n).filter(|&j| !in_basis[j] && r[j].abs() <= 1e-12).collect();
            if zero_rows.is_empty() || swaps > 4 * k * zero_rows.len() {
                return Err(Error::SolverFail {
                    iterations: iteration,
                    violation: certificate,
                });
            }
            let entering = zero_rows[swaps % zero_rows.len()];
            let leaving = (swaps / zero_rows.len()) % k;
            swaps += 1;
            let mut candidate = basis.clone();
            candidate[leaving] = entering;
            if let Ok((b, i)) = vertex(&pb, &candidate) {
                basis = candidate;
                beta = b;
                inv = i;
            }
            continue;
        }

        // exact line search along sign·column(edge)
        let mut breaks: Vec<(f64, f64, usize)> = (0..n)
            .filter(|&j| !in_basis[j])
            .filter_map(|j| {
                let a = sign * a_cols[j * k + edge];
                if a == 0.0 || r[j] == 0.0 {
                    return None;
                }
                let t = r[j] / a;
                (t > 0.0).then_some((t, a.abs(), j))
            })
            .collect();
        breaks.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.2.cmp(&q.2)));
        let mut slope = deriv;
        let mut entering = None;
        for &(t, jump, j) in &breaks {
            slope += jump;
            if slope >= 0.0 {
                entering = Some((t, j));
                break;
            }
        }
        let Some((_, j_in)) = entering else {
            return Err(Error::SolverFail {
                iterations: iteration,
                violation: f64::INFINITY,
            });
        };
        let mut candidate = basis.clone();
        candidate[edge] = j_in;
        let (b, i) = vertex(&pb, &candidate)?;
        basis = candidate;
        beta = b;
        inv = i;
    }
    let mut r = pb.residuals(beta.as_slice());
    basis.iter().for_each(|&j| r[j] = 0.0);
    Err(Error::SolverFail {
        iterations: max_iter,
        violation: certify(&pb, &basis, &inv, &r),
    })
}

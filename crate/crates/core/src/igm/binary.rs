//! Logistic regression by iteratively reweighted least squares.

use crate::error::SimError;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Coefficient norm beyond which the likelihood is treated as unbounded
/// (perfect separation).
const SEPARATION_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on the score, normalised by the number of
    /// observations (max-abs score component / n).
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal ridge added to the weighted normal equations for
    /// near-singular designs; numerical stabiliser only.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: 1e-8, max_iter: 100, ridge: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModelParams {
    pub coefficients: Vec<f64>,
    pub covariate_names: Vec<String>,
    /// Information-matrix standard errors.
    pub standard_errors: Vec<f64>,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

impl BinaryModelParams {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.coefficients)
            .map(|(x, b)| x * b)
            .sum()
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

#[inline]
pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood at linear predictors `eta`.
pub(crate) fn binary_loglik(eta: &DVector<f64>, y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| {
            // y ln sigma(eta) + (1-y) ln(1 - sigma(eta))
            -softplus(-e) * yi - softplus(e) * (1.0 - yi)
        })
        .sum()
}

/// Maximise the logistic log-likelihood by IRLS with step-halving.
///
/// Errors on a constant outcome, on non-convergence (carrying the last score
/// norm), and when the coefficient norm diverges (perfect separation).
pub fn fit_binary(
    x: &DMatrix<f64>,
    names: &[String],
    y: &[f64],
    opts: &FitOptions,
) -> Result<BinaryModelParams, SimError> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(SimError::Estimation("empty design matrix".into()));
    }
    if y.len() != n {
        return Err(SimError::Estimation(format!(
            "outcome length {} does not match {n} design rows",
            y.len()
        )));
    }
    if names.len() != p {
        return Err(SimError::Estimation("covariate name count mismatch".into()));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == n {
        return Err(SimError::Estimation(format!(
            "constant outcome: {ones} of {n} are 1"
        )));
    }

    let mut beta = DVector::zeros(p);
    let mut eta = x * &beta;
    let mut ll = binary_loglik(&eta, y);
    let mut grad_norm = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        let mu: DVector<f64> = eta.map(sigmoid);
        let resid = DVector::from_iterator(n, y.iter().zip(mu.iter()).map(|(&yi, &m)| yi - m));
        let grad = x.tr_mul(&resid);
        grad_norm = grad.amax() / n as f64;
        if grad_norm < opts.tol {
            check_separation(y, &mu)?;
            return finish(x, names, &beta, &mu, iter - 1, grad_norm, opts);
        }

        // weighted normal equations: (X' W X + ridge I) step = grad
        let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-10)).collect();
        let mut a = weighted_gram(x, &w);
        for d in 0..p {
            a[(d, d)] += opts.ridge;
        }
        let chol = a.clone().cholesky().ok_or_else(|| {
            SimError::Estimation("weighted normal equations are singular".into())
        })?;
        let step = chol.solve(&grad);

        // step-halving keeps the log-likelihood non-decreasing
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * scale;
            let cand_eta = x * &cand;
            let cand_ll = binary_loglik(&cand_eta, y);
            if cand_ll >= ll - 1e-12 {
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // cannot improve; report at the current point
            let mu = eta.map(sigmoid);
            check_separation(y, &mu)?;
            return finish(x, names, &beta, &mu, iter, grad_norm, opts);
        }
        if beta.amax() > SEPARATION_NORM {
            return Err(SimError::Estimation(
                "perfect separation suspected: coefficient norm diverged".into(),
            ));
        }
    }

    Err(SimError::Estimation(format!(
        "logistic fit did not converge in {} iterations; last score norm {grad_norm:.3e}",
        opts.max_iter
    )))
}

/// A maximum-likelihood estimate does not exist when every outcome is fitted
/// exactly: the likelihood keeps improving as coefficients diverge, while
/// IEEE saturation makes the score vanish at large but finite coefficients.
fn check_separation(y: &[f64], mu: &DVector<f64>) -> Result<(), SimError> {
    let max_resid = y
        .iter()
        .zip(mu.iter())
        .map(|(&yi, &m)| (yi - m).abs())
        .fold(0.0f64, f64::max);
    if max_resid < 1e-6 {
        return Err(SimError::Estimation(
            "perfect separation: every outcome is fitted exactly".into(),
        ));
    }
    Ok(())
}

fn finish(
    x: &DMatrix<f64>,
    names: &[String],
    beta: &DVector<f64>,
    mu: &DVector<f64>,
    iterations: usize,
    grad_norm: f64,
    opts: &FitOptions,
) -> Result<BinaryModelParams, SimError> {
    if grad_norm >= opts.tol && iterations > 0 {
        return Err(SimError::Estimation(format!(
            "logistic fit stalled; last score norm {grad_norm:.3e}"
        )));
    }
    let p = x.ncols();
    let w: Vec<f64> = mu.iter().map(|&m| (m * (1.0 - m)).max(1e-10)).collect();
    let info = weighted_gram(x, &w);
    let cov = info
        .try_inverse()
        .unwrap_or_else(|| DMatrix::zeros(p, p));
    let ses: Vec<f64> = (0..p).map(|d| cov[(d, d)].max(0.0).sqrt()).collect();
    Ok(BinaryModelParams {
        coefficients: beta.iter().copied().collect(),
        covariate_names: names.to_vec(),
        standard_errors: ses,
        iterations,
        final_gradient_norm: grad_norm,
    })
}

/// `X' diag(w) X` without materialising the weighted copy. Works down the
/// contiguous column-major storage; each (c, d) entry is one sequential dot
/// product, so parallelism over columns cannot change the result.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    use rayon::prelude::*;
    let n = x.nrows();
    let p = x.ncols();
    let cols: Vec<(usize, Vec<f64>)> = (0..p)
        .into_par_iter()
        .map(|c| {
            let col_c = x.column(c);
            let col_c = col_c.as_slice();
            let mut wc = vec![0.0f64; n];
            for i in 0..n {
                wc[i] = w[i] * col_c[i];
            }
            let row: Vec<f64> = (c..p)
                .map(|d| {
                    let col_d = x.column(d);
                    let col_d = col_d.as_slice();
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += wc[i] * col_d[i];
                    }
                    acc
                })
                .collect();
            (c, row)
        })
        .collect();
    let mut a = DMatrix::zeros(p, p);
    for (c, row) in cols {
        for (off, v) in row.into_iter().enumerate() {
            a[(c, c + off)] = v;
            a[(c + off, c)] = v;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed_normal, keyed_uniform};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    fn simulate_logit(n: usize, beta: &[f64], seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let p = beta.len();
        let mut data = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let mut eta = 0.0;
            for j in 0..p {
                let v = if j == 0 {
                    1.0
                } else {
                    keyed_normal(seed, i as u64, 100 + j as u64)
                };
                data.push(v);
                eta += beta[j] * v;
            }
            let pr = sigmoid(eta);
            y.push(if keyed_uniform(seed, i as u64, 99) < pr { 1.0 } else { 0.0 });
        }
        (DMatrix::from_row_slice(n, p, &data), y)
    }

    #[test]
    fn constant_outcome_is_an_error() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 1.0, 1.0]);
        let y = vec![1.0; 4];
        assert!(fit_binary(&x, &names(1), &y, &FitOptions::default()).is_err());
    }

    #[test]
    fn recovers_known_coefficients_within_three_se() {
        let truth = [-1.0, 2.0];
        let (x, y) = simulate_logit(50_000, &truth, 42);
        let fit = fit_binary(&x, &names(2), &y, &FitOptions::default()).unwrap();
        for j in 0..2 {
            let dev = (fit.coefficients[j] - truth[j]).abs();
            assert!(
                dev <= 3.0 * fit.standard_errors[j],
                "coef {j}: {} vs {} (se {})",
                fit.coefficients[j],
                truth[j],
                fit.standard_errors[j]
            );
        }
    }

    #[test]
    fn null_slopes_within_three_se() {
        let truth = [0.3, 0.0, 0.0];
        let (x, y) = simulate_logit(10_000, &truth, 7);
        let fit = fit_binary(&x, &names(3), &y, &FitOptions::default()).unwrap();
        for j in 1..3 {
            assert!(fit.coefficients[j].abs() <= 3.0 * fit.standard_errors[j]);
        }
    }

    #[test]
    fn score_matches_finite_difference_gradient() {
        let truth = [0.5, -0.8];
        let (x, y) = simulate_logit(2_000, &truth, 3);
        let fit = fit_binary(&x, &names(2), &y, &FitOptions::default()).unwrap();
        // converged: analytic score below tol, and FD gradient agrees
        let beta = DVector::from_vec(fit.coefficients.clone());
        let h = 1e-5;
        for j in 0..2 {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (binary_loglik(&(&x * &up), &y) - binary_loglik(&(&x * &dn), &y)) / (2.0 * h);
            let analytic: f64 = {
                let mu = (&x * &beta).map(sigmoid);
                (0..x.nrows()).map(|i| x[(i, j)] * (y[i] - mu[i])).sum()
            };
            let scale = fd.abs().max(analytic.abs()).max(1.0);
            assert!(
                (fd - analytic).abs() / scale < 1e-4,
                "fd {fd} vs analytic {analytic}"
            );
        }
        assert!(fit.final_gradient_norm < 1e-8);
    }

    #[test]
    fn separation_detected() {
        // outcome exactly determined by the sign of x1
        let n = 200;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let v = if i % 2 == 0 { 1.0 } else { -1.0 };
            data.push(1.0);
            data.push(v);
            y.push(if v > 0.0 { 1.0 } else { 0.0 });
        }
        let x = DMatrix::from_row_slice(n, 2, &data);
        let err = fit_binary(&x, &names(2), &y, &FitOptions { max_iter: 500, ..Default::default() })
            .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("separation") || msg.contains("converge"),
            "unexpected error: {msg}"
        );
    }
}

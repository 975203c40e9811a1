//! Multinomial logit with the reference category fixed at zero.

use crate::error::SimError;
use crate::igm::FitOptions;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const SEPARATION_NORM: f64 = 1e6;
const ROW_CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialModelParams {
    pub outcome_labels: Vec<String>,
    /// One coefficient vector per outcome; the reference (index 0) is
    /// identically zero.
    pub coefficients: Vec<Vec<f64>>,
    pub covariate_names: Vec<String>,
    pub standard_errors: Vec<Vec<f64>>,
    pub iterations: usize,
    pub final_gradient_norm: f64,
}

impl MultinomialModelParams {
    pub fn n_outcomes(&self) -> usize {
        self.coefficients.len()
    }

    /// Outcome probabilities for one design row (softmax over linear
    /// predictors with the reference at zero).
    pub fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let etas: Vec<f64> = self
            .coefficients
            .iter()
            .map(|beta| row.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>())
            .collect();
        softmax(&etas)
    }
}

fn softmax(etas: &[f64]) -> Vec<f64> {
    let m = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = etas.iter().map(|e| (e - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

struct NewtonState {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    ll: f64,
}

/// Gradient, observed information and log-likelihood at `beta`
/// (stacked `(K-1) x p` coefficients, row-major by outcome).
fn newton_state(
    flat_x: &[f64],
    y: &[usize],
    p: usize,
    k: usize,
    beta: &DVector<f64>,
) -> NewtonState {
    let q = (k - 1) * p;
    // chunks are computed in parallel but combined sequentially so the
    // floating-point sums are reproducible across runs
    let partials: Vec<NewtonState> = flat_x
        .par_chunks(ROW_CHUNK * p)
        .enumerate()
        .map(|(chunk_idx, block)| {
            let row0 = chunk_idx * ROW_CHUNK;
            let mut grad = DVector::zeros(q);
            let mut hess = DMatrix::zeros(q, q);
            let mut ll = 0.0;
            let mut etas = vec![0.0; k];
            for (r, row) in block.chunks_exact(p).enumerate() {
                let yi = y[row0 + r];
                etas[0] = 0.0;
                for j in 1..k {
                    let b = &beta.as_slice()[(j - 1) * p..j * p];
                    etas[j] = row.iter().zip(b).map(|(x, c)| x * c).sum();
                }
                let probs = softmax(&etas);
                let m = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let logz = m + etas.iter().map(|e| (e - m).exp()).sum::<f64>().ln();
                ll += etas[yi] - logz;
                for j in 1..k {
                    let resid = (if yi == j { 1.0 } else { 0.0 }) - probs[j];
                    let go = (j - 1) * p;
                    for (c, &xv) in row.iter().enumerate() {
                        grad[go + c] += xv * resid;
                    }
                    for l in j..k {
                        let w = if j == l {
                            probs[j] * (1.0 - probs[j])
                        } else {
                            -probs[j] * probs[l]
                        };
                        if w == 0.0 {
                            continue;
                        }
                        let ho = (l - 1) * p;
                        for c in 0..p {
                            let xc = row[c] * w;
                            if xc == 0.0 {
                                continue;
                            }
                            for d in 0..p {
                                hess[(go + c, ho + d)] += xc * row[d];
                            }
                        }
                    }
                }
            }
            NewtonState { grad, hess, ll }
        })
        .collect();
    partials.into_iter().fold(
        NewtonState { grad: DVector::zeros(q), hess: DMatrix::zeros(q, q), ll: 0.0 },
        |mut a, b| {
            a.grad += b.grad;
            a.hess += b.hess;
            a.ll += b.ll;
            a
        },
    )
}

fn symmetrise_blocks(hess: &mut DMatrix<f64>, p: usize, k: usize) {
    // off-diagonal outcome blocks were accumulated upper-triangular only
    for j in 1..k {
        for l in (j + 1)..k {
            let go = (j - 1) * p;
            let ho = (l - 1) * p;
            for c in 0..p {
                for d in 0..p {
                    hess[(ho + d, go + c)] = hess[(go + c, ho + d)];
                }
            }
        }
    }
}

/// Fit a `k`-outcome multinomial logit by Newton iterations with
/// step-halving. Outcomes in `y` are 0-based; outcome 0 is the reference.
pub fn fit_multinomial(
    x: &DMatrix<f64>,
    names: &[String],
    y: &[usize],
    k: usize,
    labels: &[String],
    opts: &FitOptions,
) -> Result<MultinomialModelParams, SimError> {
    let n = x.nrows();
    let p = x.ncols();
    if k < 2 {
        return Err(SimError::Estimation(format!(
            "multinomial fit needs at least two outcomes, got {k}"
        )));
    }
    if labels.len() != k {
        return Err(SimError::Estimation("outcome label count mismatch".into()));
    }
    if y.len() != n || n == 0 {
        return Err(SimError::Estimation("outcome length mismatch".into()));
    }
    let mut counts = vec![0usize; k];
    for &yi in y {
        if yi >= k {
            return Err(SimError::Estimation(format!("outcome {yi} out of range")));
        }
        counts[yi] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(SimError::Estimation(format!(
            "outcome {missing} is unobserved in the estimation data"
        )));
    }

    // row-major copy for the hot loop
    let flat_x: Vec<f64> = x.transpose().as_slice().to_vec();
    let q = (k - 1) * p;
    let mut beta = DVector::zeros(q);
    let mut state = newton_state(&flat_x, y, p, k, &beta);
    let mut grad_norm = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        grad_norm = state.grad.amax() / n as f64;
        if grad_norm < opts.tol {
            check_separation(&flat_x, y, p, k, &beta)?;
            return finish(&flat_x, y, p, k, n, &beta, names, labels, iter - 1, grad_norm, opts);
        }
        let mut h = state.hess.clone();
        symmetrise_blocks(&mut h, p, k);
        for d in 0..q {
            h[(d, d)] += opts.ridge;
        }
        let chol = h
            .cholesky()
            .ok_or_else(|| SimError::Estimation("multinomial information matrix singular".into()))?;
        let step = chol.solve(&state.grad);

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &beta + &step * scale;
            let cand_state = newton_state(&flat_x, y, p, k, &cand);
            if cand_state.ll >= state.ll - 1e-12 {
                beta = cand;
                state = cand_state;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            check_separation(&flat_x, y, p, k, &beta)?;
            return finish(&flat_x, y, p, k, n, &beta, names, labels, iter, grad_norm, opts);
        }
        if beta.amax() > SEPARATION_NORM {
            return Err(SimError::Estimation(
                "perfect separation suspected: coefficient norm diverged".into(),
            ));
        }
    }

    Err(SimError::Estimation(format!(
        "multinomial fit did not converge in {} iterations; last score norm {grad_norm:.3e}",
        opts.max_iter
    )))
}

/// Perfect separation: every unit's own class probability is fitted to 1.
fn check_separation(
    flat_x: &[f64],
    y: &[usize],
    p: usize,
    k: usize,
    beta: &DVector<f64>,
) -> Result<(), SimError> {
    let mut etas = vec![0.0; k];
    let mut worst = 0.0f64;
    for (r, row) in flat_x.chunks_exact(p).enumerate() {
        etas[0] = 0.0;
        for j in 1..k {
            let b = &beta.as_slice()[(j - 1) * p..j * p];
            etas[j] = row.iter().zip(b).map(|(x, c)| x * c).sum();
        }
        let probs = softmax(&etas);
        worst = worst.max(1.0 - probs[y[r]]);
    }
    if worst < 1e-6 {
        return Err(SimError::Estimation(
            "perfect separation: every outcome is fitted exactly".into(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    flat_x: &[f64],
    y: &[usize],
    p: usize,
    k: usize,
    _n: usize,
    beta: &DVector<f64>,
    names: &[String],
    labels: &[String],
    iterations: usize,
    grad_norm: f64,
    opts: &FitOptions,
) -> Result<MultinomialModelParams, SimError> {
    if grad_norm >= opts.tol && iterations > 0 {
        return Err(SimError::Estimation(format!(
            "multinomial fit stalled; last score norm {grad_norm:.3e}"
        )));
    }
    let q = (k - 1) * p;
    let state = newton_state(flat_x, y, p, k, beta);
    let mut h = state.hess;
    symmetrise_blocks(&mut h, p, k);
    for d in 0..q {
        h[(d, d)] += opts.ridge;
    }
    let cov = h.try_inverse().unwrap_or_else(|| DMatrix::zeros(q, q));

    let mut coefficients = vec![vec![0.0; p]];
    let mut ses = vec![vec![0.0; p]];
    for j in 1..k {
        coefficients.push(beta.as_slice()[(j - 1) * p..j * p].to_vec());
        ses.push(
            (0..p)
                .map(|c| cov[((j - 1) * p + c, (j - 1) * p + c)].max(0.0).sqrt())
                .collect(),
        );
    }
    Ok(MultinomialModelParams {
        outcome_labels: labels.to_vec(),
        coefficients,
        covariate_names: names.to_vec(),
        standard_errors: ses,
        iterations,
        final_gradient_norm: grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::igm::{fit_binary, FitOptions};
    use crate::rng::{keyed_normal, keyed_uniform};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn one_outcome_is_an_error() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert!(
            fit_multinomial(&x, &names(1), &[0, 0, 0], 1, &labels(1), &FitOptions::default())
                .is_err()
        );
    }

    #[test]
    fn two_outcomes_reduce_to_binary() {
        let n = 5_000;
        let truth = [-0.5, 1.2];
        let mut data = Vec::new();
        let mut y01 = Vec::new();
        let mut yk = Vec::new();
        for i in 0..n {
            let v = keyed_normal(5, i as u64, 1);
            data.push(1.0);
            data.push(v);
            let pr = super::super::binary::sigmoid(truth[0] + truth[1] * v);
            let hit = keyed_uniform(5, i as u64, 2) < pr;
            y01.push(if hit { 1.0 } else { 0.0 });
            yk.push(if hit { 1 } else { 0 });
        }
        let x = DMatrix::from_row_slice(n, 2, &data);
        let opts = FitOptions { tol: 1e-10, ..Default::default() };
        let b = fit_binary(&x, &names(2), &y01, &opts).unwrap();
        let m = fit_multinomial(&x, &names(2), &yk, 2, &labels(2), &opts).unwrap();
        for j in 0..2 {
            assert!(
                (b.coefficients[j] - m.coefficients[1][j]).abs() < 1e-6,
                "binary {} vs multinomial {}",
                b.coefficients[j],
                m.coefficients[1][j]
            );
        }
    }

    #[test]
    fn balanced_null_intercepts_match_class_frequencies() {
        let n = 30_000;
        let k = 3;
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            data.push(1.0);
            let u = keyed_uniform(8, i as u64, 1);
            y.push(if u < 1.0 / 3.0 { 0 } else if u < 2.0 / 3.0 { 1 } else { 2 });
        }
        let x = DMatrix::from_row_slice(n, 1, &data);
        let fit =
            fit_multinomial(&x, &names(1), &y, k, &labels(k), &FitOptions::default()).unwrap();
        // intercepts estimate log(p_k / p_0); the truth is 0 for balanced classes
        for j in 1..k {
            let b = fit.coefficients[j][0];
            let se = fit.standard_errors[j][0];
            assert!(b.abs() <= 3.0 * se, "intercept {b} vs 3se {}", 3.0 * se);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let params = MultinomialModelParams {
            outcome_labels: labels(3),
            coefficients: vec![vec![0.0, 0.0], vec![0.4, -0.3], vec![-0.2, 0.8]],
            covariate_names: names(2),
            standard_errors: vec![vec![0.0; 2]; 3],
            iterations: 0,
            final_gradient_norm: 0.0,
        };
        let p = params.probabilities(&[1.0, 0.7]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn unobserved_outcome_is_an_error() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0; 4]);
        let err =
            fit_multinomial(&x, &names(1), &[0, 0, 1, 1], 3, &labels(3), &FitOptions::default())
                .unwrap_err();
        assert!(err.to_string().contains("unobserved"));
    }
}

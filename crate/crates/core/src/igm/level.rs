//! Log-linear level equations fitted by least squares.

use crate::error::SimError;
use crate::igm::FitOptions;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelModelParams {
    pub coefficients: Vec<f64>,
    pub covariate_names: Vec<String>,
    /// Standard deviation of the log-scale disturbance.
    pub residual_sd: f64,
    pub standard_errors: Vec<f64>,
}

impl LevelModelParams {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Ordinary least squares on log levels. Levels must be strictly positive;
/// the first offending row is named in the error.
pub fn fit_level(
    x: &DMatrix<f64>,
    names: &[String],
    levels: &[f64],
    opts: &FitOptions,
) -> Result<LevelModelParams, SimError> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(SimError::Estimation("empty design matrix".into()));
    }
    if levels.len() != n {
        return Err(SimError::Estimation("level count mismatch".into()));
    }
    if n <= p {
        return Err(SimError::Estimation(format!(
            "need more rows ({n}) than covariates ({p}) for a residual sd"
        )));
    }
    for (i, &v) in levels.iter().enumerate() {
        if v <= 0.0 || !v.is_finite() {
            return Err(SimError::Estimation(format!(
                "row {i}: level {v} is not strictly positive"
            )));
        }
    }
    let ly = DVector::from_iterator(n, levels.iter().map(|v| v.ln()));

    // plain least squares; the ridge is a fallback for rank-deficient designs
    let gram = x.tr_mul(x);
    let xty = x.tr_mul(&ly);
    let (gram, chol) = match gram.clone().cholesky() {
        Some(c) => (gram, c),
        None => {
            let mut ridged = gram;
            for d in 0..p {
                ridged[(d, d)] += opts.ridge;
            }
            let c = ridged.clone().cholesky().ok_or_else(|| {
                SimError::Estimation("normal equations singular even with ridge".into())
            })?;
            (ridged, c)
        }
    };
    let beta = chol.solve(&xty);

    let resid = &ly - x * &beta;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let sigma2 = rss / (n - p) as f64;
    let residual_sd = sigma2.sqrt();

    let cov = gram.try_inverse().unwrap_or_else(|| DMatrix::zeros(p, p));
    let ses: Vec<f64> = (0..p)
        .map(|d| (sigma2 * cov[(d, d)]).max(0.0).sqrt())
        .collect();

    Ok(LevelModelParams {
        coefficients: beta.iter().copied().collect(),
        covariate_names: names.to_vec(),
        residual_sd,
        standard_errors: ses,
    })
}

//! Monte Carlo simulation of fitted equations with outcome-consistent draws.
//!
//! For units from the estimation data, the uniform draw is rescaled into the
//! subinterval that reproduces the observed outcome, so re-simulating the
//! estimation data predicts the dependent variable exactly. Draws are
//! retained for subsequent alignment.

use super::binary::BinaryModelParams;
use super::level::LevelModelParams;
use super::multinomial::MultinomialModelParams;
use super::residuals::ResidualStore;
use crate::rng::keyed_uniform;
use rayon::prelude::*;

/// Result of one binary presence simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresenceDraw {
    pub flag: bool,
    /// Retained uniform draw (after any outcome-consistent rescaling).
    pub draw: f64,
    pub probability: f64,
}

/// Simulate presence flags: `flag = u < p`, with `u` keyed by
/// `(seed, person id, stream)`. When `observed` is supplied (estimation
/// data), `u` is rescaled into `[0, p)` for observed ones and `[p, 1)` for
/// observed zeros.
pub fn simulate_presence(
    params: &BinaryModelParams,
    rows: &[Vec<f64>],
    ids: &[u64],
    observed: Option<&[bool]>,
    seed: u64,
    stream: u64,
) -> Vec<PresenceDraw> {
    assert_eq!(rows.len(), ids.len());
    if let Some(obs) = observed {
        assert_eq!(obs.len(), ids.len());
    }
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let p = params.probability(row);
            let raw = keyed_uniform(seed, ids[i], stream);
            let u = match observed.map(|o| o[i]) {
                Some(true) => raw * p,
                Some(false) => p + raw * (1.0 - p),
                None => raw,
            };
            PresenceDraw { flag: u < p, draw: u, probability: p }
        })
        .collect()
}

/// As `simulate_presence`, with per-unit observation status: estimation-data
/// units carry `Some(outcome)`, fresh units `None`.
pub fn simulate_presence_mixed(
    params: &BinaryModelParams,
    rows: &[Vec<f64>],
    ids: &[u64],
    observed: &[Option<bool>],
    seed: u64,
    stream: u64,
) -> Vec<PresenceDraw> {
    assert_eq!(rows.len(), ids.len());
    assert_eq!(rows.len(), observed.len());
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let p = params.probability(row);
            let raw = keyed_uniform(seed, ids[i], stream);
            let u = match observed[i] {
                Some(true) => raw * p,
                Some(false) => p + raw * (1.0 - p),
                None => raw,
            };
            PresenceDraw { flag: u < p, draw: u, probability: p }
        })
        .collect()
}

/// Result of one multinomial simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialDraw {
    pub outcome: usize,
    pub draw: f64,
    pub probabilities: Vec<f64>,
}

/// Simulate a categorical outcome by the cumulative-interval rule. When the
/// observed outcome is supplied, the draw is rescaled into that outcome's
/// interval.
pub fn simulate_multinomial_presence(
    params: &MultinomialModelParams,
    rows: &[Vec<f64>],
    ids: &[u64],
    observed: Option<&[usize]>,
    seed: u64,
    stream: u64,
) -> Vec<MultinomialDraw> {
    assert_eq!(rows.len(), ids.len());
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let probs = params.probabilities(row);
            let raw = keyed_uniform(seed, ids[i], stream);
            let u = match observed.map(|o| o[i]) {
                Some(k) => {
                    let below: f64 = probs[..k].iter().sum();
                    below + raw * probs[k]
                }
                None => raw,
            };
            let mut outcome = probs.len() - 1;
            let mut cum = 0.0;
            for (k, &p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    outcome = k;
                    break;
                }
            }
            MultinomialDraw { outcome, draw: u, probabilities: probs }
        })
        .collect()
}

/// As `simulate_multinomial_presence`, with per-unit observation status.
pub fn simulate_multinomial_mixed(
    params: &MultinomialModelParams,
    rows: &[Vec<f64>],
    ids: &[u64],
    observed: &[Option<usize>],
    seed: u64,
    stream: u64,
) -> Vec<MultinomialDraw> {
    assert_eq!(rows.len(), ids.len());
    assert_eq!(rows.len(), observed.len());
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            let probs = params.probabilities(row);
            let raw = keyed_uniform(seed, ids[i], stream);
            let u = match observed[i] {
                Some(k) => {
                    let below: f64 = probs[..k].iter().sum();
                    below + raw * probs[k]
                }
                None => raw,
            };
            let mut outcome = probs.len() - 1;
            let mut cum = 0.0;
            for (k, &p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    outcome = k;
                    break;
                }
            }
            MultinomialDraw { outcome, draw: u, probabilities: probs }
        })
        .collect()
}

/// Level conditional on presence: `exp(x.theta + eps)` when present, zero
/// otherwise.
pub fn simulate_level(
    params: &LevelModelParams,
    residuals: &ResidualStore,
    rows: &[Vec<f64>],
    ids: &[u64],
    present: &[bool],
) -> Vec<f64> {
    assert_eq!(rows.len(), ids.len());
    assert_eq!(rows.len(), present.len());
    rows.par_iter()
        .enumerate()
        .map(|(i, row)| {
            if present[i] {
                (params.linear_predictor(row) + residuals.epsilon(ids[i])).exp()
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::igm::recover_residuals;

    fn binary_params(coefs: Vec<f64>) -> BinaryModelParams {
        BinaryModelParams {
            covariate_names: (0..coefs.len()).map(|i| format!("x{i}")).collect(),
            coefficients: coefs,
            standard_errors: vec![],
            iterations: 0,
            final_gradient_norm: 0.0,
        }
    }

    #[test]
    fn estimation_data_reproduced_exactly() {
        let params = binary_params(vec![0.2, -0.7]);
        let n = 500;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![1.0, (i as f64 / n as f64) * 4.0 - 2.0])
            .collect();
        let ids: Vec<u64> = (0..n as u64).collect();
        let observed: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let sims = simulate_presence(&params, &rows, &ids, Some(&observed), 5, 1);
        for (s, &o) in sims.iter().zip(&observed) {
            assert_eq!(s.flag, o);
        }
    }

    #[test]
    fn zero_probability_never_fires() {
        let params = binary_params(vec![-80.0]);
        let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![1.0]).collect();
        let ids: Vec<u64> = (0..100).collect();
        let sims = simulate_presence(&params, &rows, &ids, None, 5, 1);
        assert!(sims.iter().all(|s| !s.flag));
    }

    #[test]
    fn fresh_units_hit_the_target_rate() {
        // p = 0.3 for everyone
        let p: f64 = 0.3;
        let intercept = (p / (1.0 - p)).ln();
        let params = binary_params(vec![intercept]);
        let n = 100_000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0]).collect();
        let ids: Vec<u64> = (0..n as u64).collect();
        let sims = simulate_presence(&params, &rows, &ids, None, 11, 2);
        let share = sims.iter().filter(|s| s.flag).count() as f64 / n as f64;
        assert!((share - p).abs() < 0.005, "share {share}");
    }

    #[test]
    fn observed_levels_invert_exactly() {
        let level_params = LevelModelParams {
            coefficients: vec![1.1, 0.4],
            covariate_names: vec!["a".into(), "b".into()],
            residual_sd: 0.5,
            standard_errors: vec![],
        };
        let rows = vec![vec![1.0, 3.0], vec![1.0, -1.0]];
        let ids = vec![10, 11];
        let levels = vec![40.0, 2.5];
        let store =
            recover_residuals(&level_params, &rows, &ids, &levels, 4, 8).unwrap();
        let got = simulate_level(&level_params, &store, &rows, &ids, &[true, true]);
        for (g, l) in got.iter().zip(&levels) {
            assert!((g - l).abs() / l < 1e-9);
        }
    }

    #[test]
    fn absent_levels_are_zero_and_null_model_gives_one() {
        let level_params = LevelModelParams {
            coefficients: vec![0.0],
            covariate_names: vec!["intercept".into()],
            residual_sd: 0.0,
            standard_errors: vec![],
        };
        let store = recover_residuals(&level_params, &[], &[], &[], 4, 8).unwrap();
        let rows = vec![vec![1.0], vec![1.0]];
        let got = simulate_level(&level_params, &store, &rows, &[1, 2], &[false, true]);
        assert_eq!(got[0], 0.0);
        assert!((got[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multinomial_estimation_data_reproduced() {
        let params = MultinomialModelParams {
            outcome_labels: vec!["a".into(), "b".into(), "c".into()],
            coefficients: vec![vec![0.0, 0.0], vec![0.5, -0.2], vec![-0.3, 0.4]],
            covariate_names: vec!["intercept".into(), "z".into()],
            standard_errors: vec![vec![0.0; 2]; 3],
            iterations: 0,
            final_gradient_norm: 0.0,
        };
        let n = 300;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| vec![1.0, (i as f64) / 100.0 - 1.5]).collect();
        let ids: Vec<u64> = (0..n as u64).collect();
        let observed: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let sims =
            simulate_multinomial_presence(&params, &rows, &ids, Some(&observed), 7, 3);
        for (s, &o) in sims.iter().zip(&observed) {
            assert_eq!(s.outcome, o);
        }
    }
}

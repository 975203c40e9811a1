//! Inequality and progressivity indices.

use crate::error::SimError;
use serde::{Deserialize, Serialize};

fn check_weights(n: usize, weights: &[f64]) -> Result<(), SimError> {
    if weights.len() != n {
        return Err(SimError::Indicator("weight length mismatch".into()));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(SimError::Indicator("weights must be non-negative".into()));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(SimError::Indicator("total weight must be positive".into()));
    }
    Ok(())
}

/// Weighted fractional ranks by `key`, mid-ranks for ties: every member of a
/// tie group receives `(weight before the group + half the group weight) / W`.
fn fractional_ranks(key: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = key.len();
    let total: f64 = weights.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]));
    let mut ranks = vec![0.0; n];
    let mut cum = 0.0;
    let mut g = 0;
    while g < n {
        let mut h = g;
        let mut group_w = 0.0;
        while h < n && key[order[h]] == key[order[g]] {
            group_w += weights[order[h]];
            h += 1;
        }
        let r = (cum + group_w / 2.0) / total;
        for &idx in &order[g..h] {
            ranks[idx] = r;
        }
        cum += group_w;
        g = h;
    }
    ranks
}

/// Concentration of `amounts` against the ordering of `ranking`: the
/// covariance form `2 cov_w(a, F) / mean(a)` with fractional mid-ranks.
/// When `ranking` is `amounts` itself this is the weighted Gini.
fn concentration_by(
    amounts: &[f64],
    ranking: &[f64],
    weights: &[f64],
) -> Result<f64, SimError> {
    let n = amounts.len();
    if n == 0 {
        return Err(SimError::Indicator("empty input".into()));
    }
    if ranking.len() != n {
        return Err(SimError::Indicator("ranking length mismatch".into()));
    }
    check_weights(n, weights)?;
    if amounts.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(SimError::Indicator("amounts must be non-negative and finite".into()));
    }
    let total_w: f64 = weights.iter().sum();
    let mean: f64 = amounts
        .iter()
        .zip(weights)
        .map(|(a, w)| a * w)
        .sum::<f64>()
        / total_w;
    if mean == 0.0 {
        return Err(SimError::Indicator("amounts are all zero".into()));
    }
    let ranks = fractional_ranks(ranking, weights);
    // mid-ranks make the weighted mean rank exactly 1/2
    let cov: f64 = amounts
        .iter()
        .zip(&ranks)
        .zip(weights)
        .map(|((a, r), w)| w * a * (r - 0.5))
        .sum::<f64>()
        / total_w;
    Ok(2.0 * cov / mean)
}

/// Weighted Gini coefficient, `sum_i sum_j w_i w_j |x_i - x_j| / (2 W^2 mu)`,
/// computed in the equivalent sort-based form.
pub fn gini(values: &[f64], weights: &[f64]) -> Result<f64, SimError> {
    concentration_by(values, values, weights)
}

/// Concentration index of `amounts` with units ranked by `ranking`.
/// Fractional mid-ranks are used for ties.
pub fn concentration_index(
    amounts: &[f64],
    ranking: &[f64],
    weights: &[f64],
) -> Result<f64, SimError> {
    concentration_by(amounts, ranking, weights)
}

/// Which way the progressivity index is signed. The output always labels the
/// convention used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KakwaniConvention {
    /// `C_benefit(ranked by pre-benefit income) - G_pre`
    ConcentrationMinusGini,
    /// `G_pre - C_benefit(ranked by pre-benefit income)`
    GiniMinusConcentration,
}

impl KakwaniConvention {
    pub fn label(self) -> &'static str {
        match self {
            KakwaniConvention::ConcentrationMinusGini => "concentration_minus_gini",
            KakwaniConvention::GiniMinusConcentration => "gini_minus_concentration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KakwaniIndex {
    pub value: f64,
    pub convention: KakwaniConvention,
}

/// Progressivity of a benefit against pre-benefit income.
pub fn kakwani(
    benefit_amounts: &[f64],
    pre_benefit_income: &[f64],
    weights: &[f64],
    convention: KakwaniConvention,
) -> Result<KakwaniIndex, SimError> {
    let c = concentration_index(benefit_amounts, pre_benefit_income, weights)?;
    let g = gini(pre_benefit_income, weights)?;
    let value = match convention {
        KakwaniConvention::ConcentrationMinusGini => c - g,
        KakwaniConvention::GiniMinusConcentration => g - c,
    };
    Ok(KakwaniIndex { value, convention })
}

/// Redistribution: Gini without the instrument minus Gini with it.
pub fn reynolds_smolensky(
    income_without: &[f64],
    income_with: &[f64],
    weights: &[f64],
) -> Result<f64, SimError> {
    if income_without.len() != income_with.len() {
        return Err(SimError::Indicator(
            "income vectors must cover the same population".into(),
        ));
    }
    Ok(gini(income_without, weights)? - gini(income_with, weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::keyed_uniform;

    /// O(n^2) pairwise oracle.
    fn gini_pairwise(values: &[f64], weights: &[f64]) -> f64 {
        let w_total: f64 = weights.iter().sum();
        let mean: f64 =
            values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / w_total;
        let mut acc = 0.0;
        for (i, &xi) in values.iter().enumerate() {
            for (j, &xj) in values.iter().enumerate() {
                acc += weights[i] * weights[j] * (xi - xj).abs();
            }
        }
        acc / (2.0 * w_total * w_total * mean)
    }

    #[test]
    fn equal_incomes_zero() {
        let v = vec![5.0; 8];
        let w = vec![1.0; 8];
        assert!(gini(&v, &w).unwrap().abs() < 1e-15);
    }

    #[test]
    fn single_holder_three_quarters() {
        let v = vec![0.0, 0.0, 0.0, 100.0];
        let w = vec![1.0; 4];
        let g = gini(&v, &w).unwrap();
        assert!((g - 0.75).abs() < 1e-12, "{g}");
        assert!((g - gini_pairwise(&v, &w)).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let v: Vec<f64> = (0..50).map(|i| keyed_uniform(1, i, 1) * 900.0).collect();
        let w: Vec<f64> = (0..50).map(|i| 0.5 + keyed_uniform(1, i, 2)).collect();
        let g1 = gini(&v, &w).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * 7.3).collect();
        assert!((g1 - gini(&scaled, &w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn matches_pairwise_oracle_with_ties_and_weights() {
        for trial in 0..30u64 {
            let n = 3 + (keyed_uniform(trial, 0, 3) * 40.0) as usize;
            let v: Vec<f64> = (0..n)
                .map(|i| (keyed_uniform(trial, i as u64, 4) * 8.0).floor())
                .collect();
            if v.iter().all(|&x| x == 0.0) {
                continue;
            }
            let w: Vec<f64> =
                (0..n).map(|i| 1.0 + keyed_uniform(trial, i as u64, 5)).collect();
            let fast = gini(&v, &w).unwrap();
            let slow = gini_pairwise(&v, &w);
            assert!((fast - slow).abs() < 1e-12, "trial {trial}: {fast} vs {slow}");
        }
    }

    #[test]
    fn concentration_equals_gini_when_proportional() {
        let y: Vec<f64> = (0..10).map(|i| 10.0 + i as f64 * 3.0).collect();
        let a: Vec<f64> = y.iter().map(|v| v * 0.4).collect();
        let w = vec![1.0; 10];
        let c = concentration_index(&a, &y, &w).unwrap();
        let g = gini(&y, &w).unwrap();
        assert!((c - g).abs() < 1e-12);
    }

    #[test]
    fn concentration_sign_flips_on_rank_reversal() {
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rev: Vec<f64> = y.iter().map(|v| -v).collect();
        let a: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
        let w = vec![1.0; 10];
        let c1 = concentration_index(&a, &y, &w).unwrap();
        let c2 = concentration_index(&a, &rev, &w).unwrap();
        assert!((c1 + c2).abs() < 1e-12);
    }

    #[test]
    fn equal_amounts_zero_concentration() {
        let a = vec![3.0; 6];
        let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
        assert!(concentration_index(&a, &y, &[1.0; 6]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kakwani_conventions_negate() {
        let income: Vec<f64> = (1..=12).map(|i| i as f64 * 100.0).collect();
        let benefit = vec![50.0; 12];
        let w = vec![1.0; 12];
        let a = kakwani(&benefit, &income, &w, KakwaniConvention::ConcentrationMinusGini).unwrap();
        let b = kakwani(&benefit, &income, &w, KakwaniConvention::GiniMinusConcentration).unwrap();
        assert!((a.value + b.value).abs() < 1e-15);
        // flat benefit against unequal income: C = 0 < G
        assert!(a.value < 0.0);
    }

    #[test]
    fn proportional_benefit_kakwani_zero() {
        let income: Vec<f64> = (1..=9).map(|i| i as f64 * 70.0).collect();
        let benefit: Vec<f64> = income.iter().map(|v| v * 0.2).collect();
        let w = vec![1.0; 9];
        for conv in [
            KakwaniConvention::ConcentrationMinusGini,
            KakwaniConvention::GiniMinusConcentration,
        ] {
            assert!(kakwani(&benefit, &income, &w, conv).unwrap().value.abs() < 1e-12);
        }
    }

    #[test]
    fn rs_antisymmetric_and_flat_benefit_redistributes() {
        let base: Vec<f64> = (0..10).map(|i| 100.0 + 60.0 * i as f64).collect();
        let with: Vec<f64> = base.iter().map(|v| v + 50.0).collect();
        let w = vec![1.0; 10];
        let rs = reynolds_smolensky(&base, &with, &w).unwrap();
        assert!(rs > 0.0);
        let back = reynolds_smolensky(&with, &base, &w).unwrap();
        assert!((rs + back).abs() < 1e-15);
        assert!(reynolds_smolensky(&base, &base, &w).unwrap().abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(gini(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(gini(&[], &[]).is_err());
        assert!(gini(&[1.0, -2.0], &[1.0, 1.0]).is_err());
    }
}

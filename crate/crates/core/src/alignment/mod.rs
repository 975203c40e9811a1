//! Calibration of simulated outcomes to external totals.
//!
//! Three alignment variants (binary, multinomial, continuous) plus iterative
//! proportional fitting. Binary selection ranks units by
//! `logit(p) - logit(u)` where `u` is the retained uniform draw from the
//! simulation step; ties break by unit id so runs are reproducible.

use crate::error::SimError;

const LOGIT_CLAMP: f64 = 1e-15;

/// Logit with clamping so retained draws at the interval edges stay finite.
fn logit(x: f64) -> f64 {
    let x = x.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
    (x / (1.0 - x)).ln()
}

/// One unit of a binary alignment problem: the simulated probability and the
/// retained uniform draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedUnit {
    pub id: u64,
    pub probability: f64,
    pub draw: f64,
}

impl RankedUnit {
    pub fn rank_statistic(&self) -> f64 {
        logit(self.probability) - logit(self.draw)
    }
}

/// Select exactly `k` units, highest `logit(p) - logit(u)` first.
/// Returns selection flags in input order.
pub fn align_binary(units: &[RankedUnit], k: usize) -> Result<Vec<bool>, SimError> {
    if k > units.len() {
        return Err(SimError::Alignment(format!(
            "target count {k} exceeds population size {}",
            units.len()
        )));
    }
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| {
        units[b]
            .rank_statistic()
            .total_cmp(&units[a].rank_statistic())
            .then(units[a].id.cmp(&units[b].id))
    });
    let mut selected = vec![false; units.len()];
    for &i in order.iter().take(k) {
        selected[i] = true;
    }
    Ok(selected)
}

/// One unit of a multinomial alignment problem: per-outcome probabilities and
/// the single retained uniform draw that produced the simulated outcome via
/// cumulative intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialUnit {
    pub id: u64,
    pub probabilities: Vec<f64>,
    pub draw: f64,
}

/// Assign each unit one outcome such that realized counts equal the targets
/// exactly.
///
/// Outcomes are processed in index order; at each step the remaining units
/// are reduced to a conditional binary problem (outcome k versus the rest,
/// conditional on not having been assigned yet) and the top `target[k]` by
/// the binary rank statistic are taken. When targets equal the unaligned
/// simulated counts this reproduces the interval assignment exactly for
/// untied ranks.
pub fn align_multinomial(
    units: &[MultinomialUnit],
    targets: &[usize],
) -> Result<Vec<usize>, SimError> {
    let n = units.len();
    let k_outcomes = targets.len();
    if targets.iter().sum::<usize>() != n {
        return Err(SimError::Alignment(format!(
            "targets sum to {}, expected population size {n}",
            targets.iter().sum::<usize>()
        )));
    }
    for (i, u) in units.iter().enumerate() {
        if u.probabilities.len() != k_outcomes {
            return Err(SimError::Alignment(format!(
                "unit {i} has {} outcome probabilities, expected {k_outcomes}",
                u.probabilities.len()
            )));
        }
    }

    let mut assigned: Vec<Option<usize>> = vec![None; n];
    // conditional draw and survival probability, updated as outcomes are taken
    let mut cond_draw: Vec<f64> = units.iter().map(|u| u.draw).collect();
    let mut survive: Vec<f64> = vec![1.0; n];

    for outcome in 0..k_outcomes {
        let remaining: Vec<usize> = (0..n).filter(|&i| assigned[i].is_none()).collect();
        if outcome + 1 == k_outcomes {
            for &i in &remaining {
                assigned[i] = Some(outcome);
            }
            break;
        }
        if targets[outcome] > remaining.len() {
            return Err(SimError::Alignment(format!(
                "outcome {outcome} target {} exceeds remaining units {}",
                targets[outcome],
                remaining.len()
            )));
        }
        let ranked: Vec<RankedUnit> = remaining
            .iter()
            .map(|&i| {
                let p = if survive[i] > 0.0 {
                    (units[i].probabilities[outcome] / survive[i]).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                RankedUnit { id: units[i].id, probability: p, draw: cond_draw[i] }
            })
            .collect();
        let take = align_binary(&ranked, targets[outcome])?;
        for (slot, &i) in remaining.iter().enumerate() {
            if take[slot] {
                assigned[i] = Some(outcome);
            } else {
                // condition the draw on not taking this outcome
                let p = ranked[slot].probability;
                if p < 1.0 {
                    cond_draw[i] = ((cond_draw[i] - p) / (1.0 - p)).clamp(0.0, 1.0 - LOGIT_CLAMP);
                }
                survive[i] = (survive[i] - units[i].probabilities[outcome]).max(0.0);
            }
        }
    }

    Ok(assigned.into_iter().map(|a| a.unwrap()).collect())
}

/// Ratio-scale values so their mean equals the target mean.
pub fn align_continuous_to_mean(values: &[f64], target_mean: f64) -> Result<Vec<f64>, SimError> {
    align_continuous(values, target_mean * values.len() as f64)
}

/// Ratio-scale values so they sum to the target total.
pub fn align_continuous(values: &[f64], target_total: f64) -> Result<Vec<f64>, SimError> {
    let current: f64 = values.iter().sum();
    if current == 0.0 {
        if target_total == 0.0 {
            return Ok(values.to_vec());
        }
        return Err(SimError::Alignment(
            "cannot ratio-scale an all-zero vector to a nonzero total".into(),
        ));
    }
    let ratio = target_total / current;
    Ok(values.iter().map(|v| v * ratio).collect())
}

/// A non-negative seed matrix with target row and column margins.
#[derive(Debug, Clone, PartialEq)]
pub struct IpfProblem {
    /// Row-major seed, `rows x cols`.
    pub seed: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub row_margins: Vec<f64>,
    pub col_margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpfSolution {
    pub matrix: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
}

impl IpfSolution {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix[r * self.cols + c]
    }
}

impl IpfProblem {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.seed.len() != self.rows * self.cols
            || self.row_margins.len() != self.rows
            || self.col_margins.len() != self.cols
        {
            return Err(SimError::Alignment("ipf problem dimensions disagree".into()));
        }
        if self.seed.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(SimError::Alignment("ipf seed must be non-negative".into()));
        }
        if self
            .row_margins
            .iter()
            .chain(self.col_margins.iter())
            .any(|&v| v < 0.0 || !v.is_finite())
        {
            return Err(SimError::Alignment("ipf margins must be non-negative".into()));
        }
        let rs: f64 = self.row_margins.iter().sum();
        let cs: f64 = self.col_margins.iter().sum();
        if (rs - cs).abs() > 1e-9 * rs.abs().max(1.0) {
            return Err(SimError::Alignment(format!(
                "infeasible margins: rows sum to {rs}, columns to {cs}"
            )));
        }
        for r in 0..self.rows {
            let row_sum: f64 = (0..self.cols).map(|c| self.seed[r * self.cols + c]).sum();
            if row_sum == 0.0 && self.row_margins[r] > 0.0 {
                return Err(SimError::Alignment(format!(
                    "row {r} of the seed is all zero but its margin is positive"
                )));
            }
        }
        for c in 0..self.cols {
            let col_sum: f64 = (0..self.rows).map(|r| self.seed[r * self.cols + c]).sum();
            if col_sum == 0.0 && self.col_margins[c] > 0.0 {
                return Err(SimError::Alignment(format!(
                    "column {c} of the seed is all zero but its margin is positive"
                )));
            }
        }
        Ok(())
    }
}

fn max_margin_residual(m: &[f64], rows: usize, cols: usize, rm: &[f64], cm: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..rows {
        let s: f64 = (0..cols).map(|c| m[r * cols + c]).sum();
        worst = worst.max((s - rm[r]).abs());
    }
    for c in 0..cols {
        let s: f64 = (0..rows).map(|r| m[r * cols + c]).sum();
        worst = worst.max((s - cm[c]).abs());
    }
    worst
}

/// Alternating row/column scaling until both margin sets match within `tol`
/// (max absolute residual). Zero cells of the seed and all cross-product
/// ratios are preserved.
pub fn ipf(problem: &IpfProblem, tol: f64, max_iter: usize) -> Result<IpfSolution, SimError> {
    problem.validate()?;
    let (rows, cols) = (problem.rows, problem.cols);
    let mut m = problem.seed.clone();

    let mut residual = max_margin_residual(&m, rows, cols, &problem.row_margins, &problem.col_margins);
    if residual <= tol {
        return Ok(IpfSolution { matrix: m, rows, cols, iterations: 0 });
    }
    for iter in 1..=max_iter {
        for r in 0..rows {
            let s: f64 = (0..cols).map(|c| m[r * cols + c]).sum();
            let scale = if s > 0.0 { problem.row_margins[r] / s } else { 0.0 };
            for c in 0..cols {
                m[r * cols + c] *= scale;
            }
        }
        for c in 0..cols {
            let s: f64 = (0..rows).map(|r| m[r * cols + c]).sum();
            let scale = if s > 0.0 { problem.col_margins[c] / s } else { 0.0 };
            for r in 0..rows {
                m[r * cols + c] *= scale;
            }
        }
        residual = max_margin_residual(&m, rows, cols, &problem.row_margins, &problem.col_margins);
        if residual <= tol {
            return Ok(IpfSolution { matrix: m, rows, cols, iterations: iter });
        }
    }
    Err(SimError::Alignment(format!(
        "ipf did not converge in {max_iter} iterations; final margin residual {residual:.3e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_extremes() {
        let units: Vec<RankedUnit> = (0..5)
            .map(|i| RankedUnit { id: i, probability: 0.4, draw: 0.3 + i as f64 * 0.1 })
            .collect();
        assert!(align_binary(&units, 0).unwrap().iter().all(|&s| !s));
        assert!(align_binary(&units, 5).unwrap().iter().all(|&s| s));
        assert!(align_binary(&units, 6).is_err());
    }

    #[test]
    fn higher_probability_wins_at_equal_draws() {
        let units = vec![
            RankedUnit { id: 0, probability: 0.9, draw: 0.5 },
            RankedUnit { id: 1, probability: 0.5, draw: 0.5 },
            RankedUnit { id: 2, probability: 0.1, draw: 0.5 },
        ];
        let sel = align_binary(&units, 1).unwrap();
        assert_eq!(sel, vec![true, false, false]);
    }

    #[test]
    fn threshold_consistency_reproduces_monte_carlo_outcomes() {
        // targets equal to the realized count select exactly the u < p units
        let units: Vec<RankedUnit> = (0..200)
            .map(|i| RankedUnit {
                id: i,
                probability: crate::rng::keyed_uniform(3, i, 1),
                draw: crate::rng::keyed_uniform(4, i, 2),
            })
            .collect();
        let mc: Vec<bool> = units.iter().map(|u| u.draw < u.probability).collect();
        let k = mc.iter().filter(|&&b| b).count();
        let aligned = align_binary(&units, k).unwrap();
        assert_eq!(aligned, mc);
    }

    #[test]
    fn multinomial_targets_met_exactly() {
        let units: Vec<MultinomialUnit> = (0..120)
            .map(|i| {
                let a = 0.2 + 0.5 * crate::rng::keyed_uniform(9, i, 1);
                let b = (1.0 - a) * 0.6;
                MultinomialUnit {
                    id: i,
                    probabilities: vec![a, b, 1.0 - a - b],
                    draw: crate::rng::keyed_uniform(9, i, 2),
                }
            })
            .collect();
        let targets = [50, 40, 30];
        let got = align_multinomial(&units, &targets).unwrap();
        for (k, t) in targets.iter().enumerate() {
            assert_eq!(got.iter().filter(|&&g| g == k).count(), *t);
        }
    }

    #[test]
    fn multinomial_fixed_point_at_simulated_counts() {
        // unaligned assignment by cumulative interval of the draw
        let units: Vec<MultinomialUnit> = (0..150)
            .map(|i| {
                let a = 0.1 + 0.6 * crate::rng::keyed_uniform(11, i, 1);
                let b = (1.0 - a) * (0.2 + 0.5 * crate::rng::keyed_uniform(11, i, 3));
                MultinomialUnit {
                    id: i,
                    probabilities: vec![a, b, 1.0 - a - b],
                    draw: crate::rng::keyed_uniform(11, i, 2),
                }
            })
            .collect();
        let simulated: Vec<usize> = units
            .iter()
            .map(|u| {
                let mut cum = 0.0;
                for (k, p) in u.probabilities.iter().enumerate() {
                    cum += p;
                    if u.draw < cum {
                        return k;
                    }
                }
                u.probabilities.len() - 1
            })
            .collect();
        let mut targets = vec![0usize; 3];
        for &s in &simulated {
            targets[s] += 1;
        }
        let aligned = align_multinomial(&units, &targets).unwrap();
        assert_eq!(aligned, simulated);
    }

    #[test]
    fn multinomial_all_to_one_outcome() {
        let units: Vec<MultinomialUnit> = (0..10)
            .map(|i| MultinomialUnit {
                id: i,
                probabilities: vec![0.5, 0.5],
                draw: 0.3,
            })
            .collect();
        let got = align_multinomial(&units, &[0, 10]).unwrap();
        assert!(got.iter().all(|&g| g == 1));
    }

    #[test]
    fn multinomial_two_outcomes_matches_binary() {
        let units: Vec<MultinomialUnit> = (0..80)
            .map(|i| {
                let p = 0.1 + 0.8 * crate::rng::keyed_uniform(13, i, 1);
                MultinomialUnit {
                    id: i,
                    probabilities: vec![p, 1.0 - p],
                    draw: crate::rng::keyed_uniform(13, i, 2),
                }
            })
            .collect();
        let k = 33;
        let binary_units: Vec<RankedUnit> = units
            .iter()
            .map(|u| RankedUnit { id: u.id, probability: u.probabilities[0], draw: u.draw })
            .collect();
        let b = align_binary(&binary_units, k).unwrap();
        let m = align_multinomial(&units, &[k, 80 - k]).unwrap();
        for i in 0..80 {
            assert_eq!(b[i], m[i] == 0);
        }
    }

    #[test]
    fn continuous_ratio_scaling() {
        assert_eq!(align_continuous(&[10.0, 30.0], 80.0).unwrap(), vec![20.0, 60.0]);
        let same = align_continuous(&[5.0, 7.0], 12.0).unwrap();
        assert!((same[0] - 5.0).abs() < 1e-12 && (same[1] - 7.0).abs() < 1e-12);
        assert!(align_continuous(&[0.0, 0.0], 100.0).is_err());
    }

    #[test]
    fn continuous_mean_target() {
        let scaled = align_continuous_to_mean(&[10.0, 30.0], 40.0).unwrap();
        let mean: f64 = scaled.iter().sum::<f64>() / 2.0;
        assert!((mean - 40.0).abs() < 1e-12);
        assert!((scaled[1] / scaled[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ipf_two_by_two_ones() {
        let p = IpfProblem {
            seed: vec![1.0, 1.0, 1.0, 1.0],
            rows: 2,
            cols: 2,
            row_margins: vec![1.0, 3.0],
            col_margins: vec![2.0, 2.0],
        };
        let sol = ipf(&p, 1e-8, 1000).unwrap();
        for (got, want) in sol.matrix.iter().zip([0.5, 0.5, 1.5, 1.5]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn ipf_fixed_point_zero_iterations() {
        let p = IpfProblem {
            seed: vec![1.0, 2.0, 3.0, 4.0],
            rows: 2,
            cols: 2,
            row_margins: vec![3.0, 7.0],
            col_margins: vec![4.0, 6.0],
        };
        let sol = ipf(&p, 1e-8, 1000).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.matrix, p.seed);
    }

    #[test]
    fn ipf_infeasible_margins_rejected() {
        let p = IpfProblem {
            seed: vec![1.0; 4],
            rows: 2,
            cols: 2,
            row_margins: vec![2.0, 2.0],
            col_margins: vec![2.0, 3.0],
        };
        assert!(ipf(&p, 1e-8, 100).is_err());
    }

    #[test]
    fn ipf_preserves_zeros_and_odds_ratios() {
        let p = IpfProblem {
            seed: vec![2.0, 1.0, 0.0, 1.0, 3.0, 2.0, 4.0, 1.0, 2.0],
            rows: 3,
            cols: 3,
            row_margins: vec![10.0, 12.0, 8.0],
            col_margins: vec![11.0, 9.0, 10.0],
        };
        let sol = ipf(&p, 1e-10, 2000).unwrap();
        assert_eq!(sol.get(0, 2), 0.0);
        // cross-product ratio of a 2x2 block without zeros
        let seed_or = (p.seed[0] * p.seed[4]) / (p.seed[1] * p.seed[3]);
        let fit_or = (sol.get(0, 0) * sol.get(1, 1)) / (sol.get(0, 1) * sol.get(1, 0));
        assert!((seed_or - fit_or).abs() < 1e-6, "{seed_or} vs {fit_or}");
    }
}

//! Net and relative replacement rates over subsidy recipients.

use crate::error::SimError;

/// One recipient's replacement-rate observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipientRate {
    pub person_id: u64,
    pub rate: f64,
    /// Equivalized adjusted household disposable income (the decile key).
    pub income: f64,
    pub weight: f64,
}

/// Decile panel rows in the published layout: Bottom, 3rd, Median, 7th, Top
/// and the overall average.
#[derive(Debug, Clone, PartialEq)]
pub struct DecilePanel {
    pub rows: Vec<(String, f64)>,
    /// Weighted mean per decile 1..=10.
    pub deciles: [f64; 10],
}

/// Assign weighted deciles by `income`: recipients are sorted and split into
/// ten groups of equal total weight. Returns a decile index per input.
pub fn weighted_deciles(rates: &[RecipientRate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| {
        rates[a]
            .income
            .total_cmp(&rates[b].income)
            .then(rates[a].person_id.cmp(&rates[b].person_id))
    });
    let total: f64 = rates.iter().map(|r| r.weight).sum();
    let mut deciles = vec![0usize; rates.len()];
    let mut cum = 0.0;
    for &i in &order {
        // decile of the weight midpoint, so boundary units land deterministically
        let mid = cum + rates[i].weight / 2.0;
        deciles[i] = (((mid / total) * 10.0).floor() as usize).min(9);
        cum += rates[i].weight;
    }
    deciles
}

fn weighted_mean(values: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, w) in values {
        num += v * w;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Build the published decile panel from per-recipient observations.
pub fn decile_panel(rates: &[RecipientRate]) -> Result<DecilePanel, SimError> {
    if rates.is_empty() {
        return Err(SimError::Indicator("no recipients to panel".into()));
    }
    let deciles = weighted_deciles(rates);
    let mut cell = [f64::NAN; 10];
    for d in 0..10 {
        cell[d] = weighted_mean(
            rates
                .iter()
                .zip(&deciles)
                .filter(|(_, &dd)| dd == d)
                .map(|(r, _)| (r.rate, r.weight)),
        );
    }
    let average = weighted_mean(rates.iter().map(|r| (r.rate, r.weight)));
    let rows = vec![
        ("Bottom".to_string(), cell[0]),
        ("3rd".to_string(), cell[2]),
        ("Median".to_string(), cell[4]),
        ("7th".to_string(), cell[6]),
        ("Top".to_string(), cell[9]),
        ("Average".to_string(), average),
    ];
    Ok(DecilePanel { rows, deciles: cell })
}

/// Net replacement rates: the subsidy payment over equivalized adjusted
/// household disposable income. Recipients with a non-positive denominator
/// are excluded and counted.
#[derive(Debug)]
pub struct RrNetResult {
    pub recipients: Vec<RecipientRate>,
    pub panel: DecilePanel,
    pub excluded_nonpositive: usize,
}

pub fn net_replacement_rate(
    observations: impl Iterator<Item = (u64, f64, f64, f64)>, // (id, payment, eq adj income, weight)
) -> Result<RrNetResult, SimError> {
    let mut recipients = Vec::new();
    let mut excluded = 0usize;
    for (person_id, payment, income, weight) in observations {
        if income <= 0.0 {
            excluded += 1;
            continue;
        }
        recipients.push(RecipientRate {
            person_id,
            rate: payment / income,
            income,
            weight,
        });
    }
    if excluded > 0 {
        eprintln!("warning: net replacement rate excluded {excluded} recipients with non-positive adjusted income");
    }
    let panel = decile_panel(&recipients)?;
    Ok(RrNetResult { recipients, panel, excluded_nonpositive: excluded })
}

/// Band shares of the relative replacement rate, in the published layout
/// plus the share below the lowest band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrRelBands {
    /// Share with rate in [0.7, 0.9).
    pub band_70_89: f64,
    /// Share with rate in [0.9, 1.0).
    pub band_90_99: f64,
    /// Share with rate >= 1.0.
    pub band_100_plus: f64,
    /// Share with rate >= 0.7 (sum of the three bands).
    pub total_70_plus: f64,
    /// Share below 0.7 (not part of the published rows).
    pub below_70: f64,
}

#[derive(Debug)]
pub struct RrRelResult {
    pub recipients: Vec<RecipientRate>,
    pub bands: RrRelBands,
    pub excluded_nonpositive: usize,
}

/// Relative replacement rates: out-of-work adjusted income under the
/// unemployment payment over in-work adjusted income under the subsidy, per
/// recipient. Recipients with non-positive in-work income are excluded and
/// counted.
pub fn relative_replacement_rate(
    observations: impl Iterator<Item = (u64, f64, f64, f64)>, // (id, out_income, in_income, weight)
) -> Result<RrRelResult, SimError> {
    let mut recipients = Vec::new();
    let mut excluded = 0usize;
    for (person_id, out_income, in_income, weight) in observations {
        if in_income <= 0.0 {
            excluded += 1;
            continue;
        }
        recipients.push(RecipientRate {
            person_id,
            rate: out_income / in_income,
            income: in_income,
            weight,
        });
    }
    if recipients.is_empty() {
        return Err(SimError::Indicator("no recipients with positive in-work income".into()));
    }
    let total_w: f64 = recipients.iter().map(|r| r.weight).sum();
    let share = |lo: f64, hi: f64| -> f64 {
        recipients
            .iter()
            .filter(|r| r.rate >= lo && r.rate < hi)
            .map(|r| r.weight)
            .sum::<f64>()
            / total_w
    };
    let bands = RrRelBands {
        band_70_89: share(0.7, 0.9),
        band_90_99: share(0.9, 1.0),
        band_100_plus: share(1.0, f64::INFINITY),
        total_70_plus: share(0.7, f64::INFINITY),
        below_70: share(f64::NEG_INFINITY, 0.7),
    };
    Ok(RrRelResult { recipients, bands, excluded_nonpositive: excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rr_net_definitional_cases() {
        let res = net_replacement_rate(
            vec![
                (1u64, 350.0, 350.0, 1.0), // payment equals income -> 1
                (2, 0.0, 500.0, 1.0),      // zero payment -> 0
                (3, 100.0, -5.0, 1.0),     // excluded
            ]
            .into_iter(),
        )
        .unwrap();
        assert_eq!(res.excluded_nonpositive, 1);
        assert_eq!(res.recipients.len(), 2);
        assert!((res.recipients[0].rate - 1.0).abs() < 1e-15);
        assert_eq!(res.recipients[1].rate, 0.0);
    }

    #[test]
    fn panel_rows_follow_published_layout() {
        let obs = (0..100u64).map(|i| (i, 100.0 + i as f64, 200.0 + 10.0 * i as f64, 1.0));
        let res = net_replacement_rate(obs).unwrap();
        let labels: Vec<&str> = res.panel.rows.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, vec!["Bottom", "3rd", "Median", "7th", "Top", "Average"]);
    }

    #[test]
    fn deciles_partition_into_equal_weight_groups() {
        let rates: Vec<RecipientRate> = (0..1000u64)
            .map(|i| RecipientRate {
                person_id: i,
                rate: 0.5,
                income: i as f64,
                weight: 1.0,
            })
            .collect();
        let d = weighted_deciles(&rates);
        let mut counts = [0usize; 10];
        for &dd in &d {
            counts[dd] += 1;
        }
        for c in counts {
            assert!((c as i64 - 100).abs() <= 1, "{counts:?}");
        }
    }

    #[test]
    fn rr_rel_bands() {
        let obs = vec![
            (1u64, 60.0, 100.0, 1.0),  // 0.6 -> below
            (2, 75.0, 100.0, 1.0),     // 0.75
            (3, 95.0, 100.0, 1.0),     // 0.95
            (4, 130.0, 100.0, 1.0),    // 1.3
            (5, 100.0, 100.0, 1.0),    // 1.0 -> 100+
        ];
        let res = relative_replacement_rate(obs.into_iter()).unwrap();
        assert!((res.bands.band_70_89 - 0.2).abs() < 1e-12);
        assert!((res.bands.band_90_99 - 0.2).abs() < 1e-12);
        assert!((res.bands.band_100_plus - 0.4).abs() < 1e-12);
        assert!((res.bands.total_70_plus - 0.8).abs() < 1e-12);
        assert!((res.bands.below_70 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rr_rel_equal_incomes_is_one() {
        let res = relative_replacement_rate(vec![(1u64, 400.0, 400.0, 1.0)].into_iter()).unwrap();
        assert!((res.recipients[0].rate - 1.0).abs() < 1e-15);
    }
}

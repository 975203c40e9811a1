//! Compensation rates: the subsidy as a share of pre-crisis gross earnings.

use crate::error::SimError;
use crate::money::Cents;
use crate::policy::{TaxBenefitParams, WageSubsidySchedule};

/// Stylized worker-share density used to weight the overall average when no
/// population weights are supplied: a lognormal over weekly earnings shaped
/// like a full-time workforce.
pub const REFERENCE_SHARE_MEDIAN: f64 = 767.0;
pub const REFERENCE_SHARE_SIGMA: f64 = 0.2;

/// Eligible earnings range of the schemes (weekly gross).
pub const ELIGIBLE_RANGE_MIN: f64 = 0.01;
pub const ELIGIBLE_RANGE_MAX: f64 = 1462.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrOptions {
    pub range_min: f64,
    pub range_max: f64,
    /// Earnings level whose decile is reported as the `median` row.
    pub median_reference: f64,
    pub employer_topup_share: f64,
}

impl Default for CrOptions {
    fn default() -> Self {
        CrOptions {
            range_min: ELIGIBLE_RANGE_MIN,
            range_max: ELIGIBLE_RANGE_MAX,
            // all-employee median weekly earnings under the reference shares
            median_reference: 545.0,
            employer_topup_share: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrPanel {
    pub design_id: String,
    /// Equal-weight mean of capped compensation rates per decile of the
    /// eligible range; `None` when the decile holds no eligible point.
    pub decile_means: [Option<f64>; 10],
    /// First decile with eligible points.
    pub bottom: f64,
    /// Decile containing the reference median earnings.
    pub median: f64,
    /// Last decile with eligible points.
    pub top: f64,
    /// Worker-share-weighted average over all eligible points.
    pub average: f64,
    pub excluded_zero_earnings: usize,
    pub excluded_ineligible: usize,
}

/// Uniform evaluation grid over the eligible range.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (max - min) / (n - 1) as f64;
    (0..n).map(|i| min + step * i as f64).collect()
}

/// Lognormal density weights at the given earnings points.
pub fn reference_worker_shares(points: &[f64], median: f64, sigma: f64) -> Vec<f64> {
    let mu = median.ln();
    points
        .iter()
        .map(|&x| {
            if x <= 0.0 {
                0.0
            } else {
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / x
            }
        })
        .collect()
}

/// Compensation-rate panel over an earnings grid or a population's pre-crisis
/// gross earnings.
///
/// Per point: `CR = payment / prev_gross`, capped at 1. Points with
/// non-positive earnings are excluded with a warning; points the design pays
/// nothing at (ineligible earnings) are excluded and counted. Decile cells
/// weight all eligible points in the decile equally; the overall average
/// weights points by the supplied worker shares (uniform when absent).
pub fn compensation_rate(
    schedule: &WageSubsidySchedule,
    tax: &TaxBenefitParams,
    points: &[f64],
    worker_shares: Option<&[f64]>,
    opts: &CrOptions,
) -> Result<CrPanel, SimError> {
    if points.is_empty() {
        return Err(SimError::Indicator("no earnings points supplied".into()));
    }
    if let Some(w) = worker_shares {
        if w.len() != points.len() {
            return Err(SimError::Indicator("worker share length mismatch".into()));
        }
    }
    if opts.range_min >= opts.range_max {
        return Err(SimError::Indicator("bad eligible range".into()));
    }

    let decile_of = |x: f64| -> usize {
        let f = (x - opts.range_min) / (opts.range_max - opts.range_min);
        ((f * 10.0).floor() as usize).min(9)
    };

    let mut sums = [0.0f64; 10];
    let mut counts = [0usize; 10];
    let mut wsum = 0.0;
    let mut wtot = 0.0;
    let mut excluded_zero = 0usize;
    let mut excluded_inelig = 0usize;

    for (i, &e) in points.iter().enumerate() {
        if e <= 0.0 {
            excluded_zero += 1;
            continue;
        }
        if e < opts.range_min || e > opts.range_max {
            excluded_inelig += 1;
            continue;
        }
        let apnp = tax.net_of(e);
        let pay = schedule
            .payment(
                Cents::from_euros(e),
                Cents::from_euros(apnp),
                opts.employer_topup_share,
            )
            .to_euros();
        if pay <= 0.0 {
            excluded_inelig += 1;
            continue;
        }
        let cr = (pay / e).min(1.0);
        let d = decile_of(e);
        sums[d] += cr;
        counts[d] += 1;
        let w = worker_shares.map_or(1.0, |ws| ws[i]);
        wsum += w * cr;
        wtot += w;
    }

    if excluded_zero > 0 {
        eprintln!(
            "warning: compensation rate excluded {excluded_zero} points with non-positive earnings"
        );
    }
    if wtot <= 0.0 {
        return Err(SimError::Indicator(format!(
            "design `{}` pays nothing on the supplied points",
            schedule.id
        )));
    }

    let mut decile_means = [None; 10];
    for d in 0..10 {
        if counts[d] > 0 {
            decile_means[d] = Some(sums[d] / counts[d] as f64);
        }
    }
    let bottom = decile_means
        .iter()
        .flatten()
        .next()
        .copied()
        .expect("at least one eligible decile");
    let top = decile_means
        .iter()
        .flatten()
        .last()
        .copied()
        .expect("at least one eligible decile");
    let median_decile = decile_of(opts.median_reference.clamp(opts.range_min, opts.range_max));
    let median = decile_means[median_decile].unwrap_or(f64::NAN);

    Ok(CrPanel {
        design_id: schedule.id.clone(),
        decile_means,
        bottom,
        median,
        top,
        average: wsum / wtot,
        excluded_zero_earnings: excluded_zero,
        excluded_ineligible: excluded_inelig,
    })
}

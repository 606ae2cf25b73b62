//! Prediction-error metrics and paired comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One minus Harrell's C-index.
///
/// A pair is comparable when the shorter observed time is an event; it is
/// concordant when that sample has the higher risk, and risk ties count one half.
pub fn concordance_error(risk_scores: &[f64], times: &[f64], events: &[bool]) -> Result<f64> {
    let n = risk_scores.len();
    if times.len() != n || events.len() != n {
        return Err(Error::Usage("risk, time and event lengths differ".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut comparable = 0u64;
    let mut concordant = 0.0f64;
    let mut start = 0;
    while start < n {
        // samples sharing a time are never comparable with each other
        let t = times[order[start]];
        let mut end = start;
        while end < n && times[order[end]] == t {
            end += 1;
        }
        let later = &order[end..];
        for &i in order[start..end].iter().filter(|&&i| events[i]) {
            let r = risk_scores[i];
            for &j in later {
                comparable += 1;
                let rj = risk_scores[j];
                if r > rj {
                    concordant += 1.0;
                } else if r == rj {
                    concordant += 0.5;
                }
            }
        }
        start = end;
    }
    if comparable == 0 {
        return Err(Error::MetricUndefined("no comparable pairs".into()));
    }
    Ok(1.0 - concordant / comparable as f64)
}

/// Root-mean-square difference between true and predicted survival at a horizon.
pub fn rmse_at_horizon(true_surv: &[f64], pred_surv: &[f64]) -> Result<f64> {
    if true_surv.len() != pred_surv.len() {
        return Err(Error::Usage(format!(
            "length mismatch: {} true values, {} predictions",
            true_surv.len(),
            pred_surv.len()
        )));
    }
    if true_surv.is_empty() {
        return Err(Error::MetricUndefined("no samples".into()));
    }
    let sq: f64 = true_surv
        .iter()
        .zip(pred_surv)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq / true_surv.len() as f64).sqrt())
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedErrorSummary {
    pub errors_a: Vec<f64>,
    pub errors_b: Vec<f64>,
    /// `errors_a[r] - errors_b[r]`.
    pub deltas: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl PairedErrorSummary {
    pub fn from_errors(errors_a: Vec<f64>, errors_b: Vec<f64>) -> Result<Self> {
        if errors_a.len() != errors_b.len() {
            return Err(Error::Usage(format!(
                "paired runs differ in length: {} vs {}",
                errors_a.len(),
                errors_b.len()
            )));
        }
        if errors_a.is_empty() {
            return Err(Error::MetricUndefined("no repetitions".into()));
        }
        let deltas: Vec<f64> = errors_a.iter().zip(&errors_b).map(|(a, b)| a - b).collect();
        let mut sorted = deltas.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(PairedErrorSummary {
            median: quantile_sorted(&sorted, 0.5),
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
            errors_a,
            errors_b,
            deltas,
        })
    }

    /// Median of the absolute deltas.
    pub fn median_abs(&self) -> f64 {
        let mut abs: Vec<f64> = self.deltas.iter().map(|d| d.abs()).collect();
        abs.sort_by(f64::total_cmp);
        quantile_sorted(&abs, 0.5)
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

pub fn paired_delta(run_a: &[f64], run_b: &[f64]) -> Result<PairedErrorSummary> {
    PairedErrorSummary::from_errors(run_a.to_vec(), run_b.to_vec())
}

//! Kaplan–Meier and Nelson–Aalen estimators evaluated on arbitrary grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Survival,
    CumulativeHazard,
}

impl CurveKind {
    /// Value of the curve before its first knot.
    pub fn initial_value(self) -> f64 {
        match self {
            CurveKind::Survival => 1.0,
            CurveKind::CumulativeHazard => 0.0,
        }
    }
}

/// Right-continuous step function sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    pub kind: CurveKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    /// Value at time `t`: the value at the last grid point `<= t`, the initial
    /// value before the first point, and flat beyond the last.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g <= t);
        if k == 0 {
            self.kind.initial_value()
        } else {
            self.values[k - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Distinct failure times with their event and at-risk counts, ascending.
fn risk_table(times: &[f64], events: &[bool]) -> Vec<(f64, f64, f64)> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_unstable_by(|&a, &b| times[a].total_cmp(&times[b]));
    let n = times.len();
    let mut table = Vec::new();
    let mut k = 0;
    while k < n {
        let t = times[order[k]];
        let at_risk = (n - k) as f64;
        let mut d = 0usize;
        while k < n && times[order[k]] == t {
            d += events[order[k]] as usize;
            k += 1;
        }
        if d > 0 {
            table.push((t, d as f64, at_risk));
        }
    }
    table
}

fn check_inputs(times: &[f64], events: &[bool], eval_grid: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Usage("estimator needs at least one sample".into()));
    }
    if times.len() != events.len() {
        return Err(Error::Usage("times and events differ in length".into()));
    }
    if eval_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("evaluation grid must be strictly increasing".into()));
    }
    Ok(())
}

fn evaluate(
    kind: CurveKind,
    times: &[f64],
    events: &[bool],
    eval_grid: &[f64],
    step: impl Fn(f64, f64, f64) -> f64,
) -> Result<StepCurve> {
    check_inputs(times, events, eval_grid)?;
    let table = risk_table(times, events);
    let mut values = Vec::with_capacity(eval_grid.len());
    let mut current = kind.initial_value();
    let mut k = 0;
    for &t in eval_grid {
        while k < table.len() && table[k].0 <= t {
            let (_, d, y) = table[k];
            current = step(current, d, y);
            k += 1;
        }
        values.push(current);
    }
    Ok(StepCurve {
        kind,
        grid: eval_grid.to_vec(),
        values,
    })
}

/// Product-limit survival estimate `S(t) = prod_{u <= t} (1 - d_u / Y_u)`.
pub fn kaplan_meier(times: &[f64], events: &[bool], eval_grid: &[f64]) -> Result<StepCurve> {
    evaluate(CurveKind::Survival, times, events, eval_grid, |s, d, y| s * (1.0 - d / y))
}

/// Cumulative hazard estimate `H(t) = sum_{u <= t} d_u / Y_u`.
pub fn nelson_aalen(times: &[f64], events: &[bool], eval_grid: &[f64]) -> Result<StepCurve> {
    evaluate(CurveKind::CumulativeHazard, times, events, eval_grid, |h, d, y| h + d / y)
}

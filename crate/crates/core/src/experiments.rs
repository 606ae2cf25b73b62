//! Paired accuracy comparisons of exact and fast splitting.
//!
//! Repetition `r` trains both arms with forest seed `base + r` on the same
//! data, so per-repetition deltas isolate the effect of the split rule.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::forest::{train, ForestModel, ForestParams};
use crate::metrics::{concordance_error, rmse_at_horizon, PairedErrorSummary};
use crate::simgen::{gen_ph, PHConfig};
use crate::split::SplitRule;

pub const DEFAULT_REPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityRow {
    pub rep: usize,
    pub seed: u64,
    pub err_exact: f64,
    pub err_approx: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityReport {
    pub metric: String,
    pub rows: Vec<ParityRow>,
    pub summary: PairedErrorSummary,
    /// Constant-predictor error per repetition, where one exists.
    pub baseline: Vec<f64>,
}

impl ParityReport {
    fn from_rows(metric: &str, rows: Vec<ParityRow>, baseline: Vec<f64>) -> Result<Self> {
        let summary = PairedErrorSummary::from_errors(
            rows.iter().map(|r| r.err_exact).collect(),
            rows.iter().map(|r| r.err_approx).collect(),
        )?;
        Ok(ParityReport {
            metric: metric.to_string(),
            rows,
            summary,
            baseline,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rep,seed,err_exact,err_approx,delta\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.rep, r.seed, r.err_exact, r.err_approx, r.delta);
        }
        out
    }

    /// Rebuilds a report from persisted per-repetition rows.
    pub fn from_csv(metric: &str, text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                row: k + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
            let field = |c: usize, name: &str| -> Result<&str> {
                rec.get(c).ok_or_else(|| Error::Parse {
                    row: k + 1,
                    column: name.into(),
                    message: "missing field".into(),
                })
            };
            let num = |c: usize, name: &str| -> Result<f64> {
                field(c, name)?.parse().map_err(|_| Error::Parse {
                    row: k + 1,
                    column: name.into(),
                    message: "not a number".into(),
                })
            };
            rows.push(ParityRow {
                rep: num(0, "rep")? as usize,
                seed: field(1, "seed")?.parse().map_err(|_| Error::Parse {
                    row: k + 1,
                    column: "seed".into(),
                    message: "not an integer".into(),
                })?,
                err_exact: num(2, "err_exact")?,
                err_approx: num(3, "err_approx")?,
                delta: num(4, "delta")?,
            });
        }
        Self::from_rows(metric, rows, Vec::new())
    }

    pub fn summary_markdown(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        out.push_str("| metric | reps | median delta | q1 | q3 | median abs delta | mean err exact | mean err approx |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|\n");
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(
            out,
            "| {} | {} | {:.2e} | {:.2e} | {:.2e} | {:.2e} | {:.4} | {:.4} |",
            self.metric,
            s.len(),
            s.median,
            s.q1,
            s.q3,
            s.median_abs(),
            mean(&s.errors_a),
            mean(&s.errors_b)
        );
        out
    }
}

fn arm(params: &ForestParams, rule: SplitRule, seed: u64) -> ForestParams {
    let mut p = *params;
    p.tree.split_rule = rule;
    p.tree.rng_seed = seed;
    p
}

fn train_pair(
    data: &SurvivalDataset,
    params: &ForestParams,
    arms: (SplitRule, SplitRule),
    seed: u64,
) -> Result<(ForestModel, ForestModel)> {
    let a = train(data, &arm(params, arms.0, seed))?;
    let b = train(data, &arm(params, arms.1, seed))?;
    if a.fingerprint != b.fingerprint {
        return Err(Error::Training("paired arms saw different datasets".into()));
    }
    Ok((a, b))
}

fn oob_concordance(model: &ForestModel, data: &SurvivalDataset) -> Result<f64> {
    let risk = model.oob_risk_scores(data)?;
    let (mut r, mut t, mut e) = (Vec::new(), Vec::new(), Vec::new());
    for (i, score) in risk.iter().enumerate() {
        if let Some(s) = score {
            r.push(*s);
            t.push(data.times()[i]);
            e.push(data.events()[i]);
        }
    }
    concordance_error(&r, &t, &e)
}

fn oob_rmse(model: &ForestModel, data: &SurvivalDataset, truth: &[f64], horizon: f64) -> Result<f64> {
    let pred = model.oob_survival_at(data, horizon)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (s, p) in truth.iter().zip(&pred) {
        if let Some(p) = p {
            a.push(*s);
            b.push(*p);
        }
    }
    rmse_at_horizon(&a, &b)
}

/// Out-of-bag concordance error of both arms over `reps` seeds on fixed data.
pub fn run_concordance_parity_with(
    data: &SurvivalDataset,
    reps: usize,
    params: &ForestParams,
    arms: (SplitRule, SplitRule),
) -> Result<ParityReport> {
    if reps == 0 {
        return Err(Error::Usage("parity study needs at least one repetition".into()));
    }
    if data.event_count() == 0 {
        return Err(Error::Training("dataset contains no events".into()));
    }
    let mut rows = Vec::with_capacity(reps);
    for rep in 0..reps {
        let seed = params.tree.rng_seed.wrapping_add(rep as u64);
        let (a, b) = train_pair(data, params, arms, seed)?;
        let (ea, eb) = (oob_concordance(&a, data)?, oob_concordance(&b, data)?);
        rows.push(ParityRow {
            rep,
            seed,
            err_exact: ea,
            err_approx: eb,
            delta: ea - eb,
        });
    }
    ParityReport::from_rows("PE_C", rows, Vec::new())
}

/// Concordance parity of exact versus fast splitting.
pub fn run_concordance_parity(data: &SurvivalDataset, reps: usize, params: &ForestParams) -> Result<ParityReport> {
    run_concordance_parity_with(data, reps, params, (SplitRule::Exact, SplitRule::Fast))
}

/// Horizon RMSE of both arms against the generator's exact survival, with a
/// fresh dataset (seed `cfg.seed + r`) per repetition.
pub fn run_rmse_parity_with(
    cfg: &PHConfig,
    reps: usize,
    params: &ForestParams,
    arms: (SplitRule, SplitRule),
) -> Result<ParityReport> {
    if reps == 0 {
        return Err(Error::Usage("parity study needs at least one repetition".into()));
    }
    let mut rows = Vec::with_capacity(reps);
    let mut baseline = Vec::with_capacity(reps);
    for rep in 0..reps {
        let data_cfg = PHConfig {
            seed: cfg.seed.wrapping_add(rep as u64),
            ..cfg.clone()
        };
        let (data, truth) = gen_ph(&data_cfg)?;
        if data.event_count() == 0 {
            return Err(Error::Training("generated dataset contains no events".into()));
        }
        let seed = params.tree.rng_seed.wrapping_add(rep as u64);
        let (a, b) = train_pair(&data, params, arms, seed)?;
        let ea = oob_rmse(&a, &data, &truth, cfg.horizon)?;
        let eb = oob_rmse(&b, &data, &truth, cfg.horizon)?;
        let mean_truth = truth.iter().sum::<f64>() / truth.len() as f64;
        baseline.push(rmse_at_horizon(&truth, &vec![mean_truth; truth.len()])?);
        rows.push(ParityRow {
            rep,
            seed,
            err_exact: ea,
            err_approx: eb,
            delta: ea - eb,
        });
    }
    ParityReport::from_rows("PE_RMSE", rows, baseline)
}

pub fn run_rmse_parity(cfg: &PHConfig, reps: usize, params: &ForestParams) -> Result<ParityReport> {
    run_rmse_parity_with(cfg, reps, params, (SplitRule::Exact, SplitRule::Fast))
}

//! Wall-clock comparison of exact and fast splitting on single trees.
//!
//! Every cell generates one Poisson dataset, runs one untimed warm-up tree per
//! rule, then alternates exact/fast timed runs so drift hits both arms alike.
//! Trees are grown single-threaded.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::quantile_sorted;
use crate::simgen::{gen_poisson_bench, PoissonBenchConfig};
use crate::split::SplitRule;
use crate::tree::{grow_tree, SurvivalTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub p: usize,
    pub target_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub target_m: usize,
    /// Distinct failure times actually generated.
    pub realized_m: usize,
    pub runtime_exact_s: f64,
    pub runtime_approx_s: f64,
    pub speedup: f64,
    pub median_exact_s: f64,
    pub median_approx_s: f64,
    pub repetitions: usize,
    /// Every timed run of a rule produced the same tree as its warm-up run.
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::Usage(format!("unknown table format '{other}'"))),
        }
    }
}

fn timed(data: &crate::data::SurvivalDataset, all: &[usize], params: &TreeParams) -> Result<(f64, SurvivalTree)> {
    let start = Instant::now();
    let tree = black_box(grow_tree(data, all, params)?);
    Ok((start.elapsed().as_secs_f64(), tree))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Times single-tree growth under both rules for one cell. `params.mtry` is
/// capped at the cell's `p`; `params.split_rule` is ignored.
pub fn bench_cell(cell: BenchCell, reps: usize, params: &TreeParams, data_seed: u64) -> Result<BenchRow> {
    if reps == 0 {
        return Err(Error::Usage("benchmark needs at least one repetition".into()));
    }
    let data = gen_poisson_bench(&PoissonBenchConfig::new(cell.n, cell.p, cell.target_m, data_seed))?;
    let all: Vec<usize> = (0..cell.n).collect();
    let with_rule = |rule| TreeParams {
        split_rule: rule,
        mtry: params.mtry.min(cell.p),
        ..*params
    };
    let exact = with_rule(SplitRule::Exact);
    let fast = with_rule(SplitRule::Fast);

    let reference_exact = grow_tree(&data, &all, &exact)?;
    let reference_fast = grow_tree(&data, &all, &fast)?;
    let mut deterministic = true;
    let (mut te, mut tf) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for _ in 0..reps {
        let (t, tree) = timed(&data, &all, &exact)?;
        deterministic &= tree == reference_exact;
        te.push(t);
        let (t, tree) = timed(&data, &all, &fast)?;
        deterministic &= tree == reference_fast;
        tf.push(t);
    }
    let (me, mf) = (mean(&te), mean(&tf));
    Ok(BenchRow {
        n: cell.n,
        p: cell.p,
        target_m: cell.target_m,
        realized_m: data.failure_times().len(),
        runtime_exact_s: me,
        runtime_approx_s: mf,
        speedup: me / mf,
        median_exact_s: median(&te),
        median_approx_s: median(&tf),
        repetitions: reps,
        deterministic,
    })
}

/// Runs [`bench_cell`] over a grid of cells, seeding cell `k` with `seed + k`.
pub fn bench_single_tree(cells: &[BenchCell], reps: usize, params: &TreeParams, seed: u64) -> Result<Vec<BenchRow>> {
    cells
        .iter()
        .enumerate()
        .map(|(k, &cell)| bench_cell(cell, reps, params, seed.wrapping_add(k as u64)))
        .collect()
}

/// The grid of cells the timing table covers: every combination of the given
/// sizes, dimensions and failure-time counts, ordered by M, then p, then n.
pub fn cell_grid(ns: &[usize], ps: &[usize], ms: &[usize]) -> Vec<BenchCell> {
    let mut cells = Vec::new();
    for &target_m in ms {
        for &p in ps {
            for &n in ns {
                cells.push(BenchCell { n, p, target_m });
            }
        }
    }
    cells
}

/// Renders rows with columns n, p, M, exact, approx, speedup first, followed
/// by medians, realized M and the repetition count.
pub fn emit_table(rows: &[BenchRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| n | p | M | Runtime: Exact (s) | Runtime: Approx (s) | Speedup (x) | Median Exact (s) | Median Approx (s) | Realized M | Reps |\n");
            out.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.3} | {:.3} | {:.2} | {:.3} | {:.3} | {} | {} |",
                    r.n,
                    r.p,
                    r.target_m,
                    r.runtime_exact_s,
                    r.runtime_approx_s,
                    r.speedup,
                    r.median_exact_s,
                    r.median_approx_s,
                    r.realized_m,
                    r.repetitions
                );
            }
        }
        TableFormat::Csv => {
            out.push_str("n,p,M,runtime_exact_s,runtime_approx_s,speedup,median_exact_s,median_approx_s,realized_M,reps\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.p,
                    r.target_m,
                    r.runtime_exact_s,
                    r.runtime_approx_s,
                    r.speedup,
                    r.median_exact_s,
                    r.median_approx_s,
                    r.realized_m,
                    r.repetitions
                );
            }
        }
    }
    out
}

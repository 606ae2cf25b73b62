use super::{threshold_between, Best, SplitConstraints};
use crate::data::SplitResult;
use crate::error::Result;
use crate::time_grid::NodeTimeGrid;

/// Left-node counts per grid slot.
#[derive(Debug, Clone)]
pub struct ExactScanState {
    pub y_left: Vec<f64>,
    pub d_left: Vec<f64>,
}

impl ExactScanState {
    pub fn new(m: usize) -> Self {
        ExactScanState {
            y_left: vec![0.0; m],
            d_left: vec![0.0; m],
        }
    }

    /// Moves the sample at node position `pos` into the left node.
    #[inline]
    pub fn push(&mut self, grid: &NodeTimeGrid, pos: usize) {
        if let Some(g) = grid.sample_grid_index[pos] {
            for y in &mut self.y_left[..=g] {
                *y += 1.0;
            }
            if grid.events[pos] {
                self.d_left[g] += 1.0;
            }
        }
    }

    /// Numerator and hypergeometric variance of the log-rank statistic, summed
    /// over every slot.
    #[inline]
    pub fn statistic(&self, grid: &NodeTimeGrid, y_total: &[f64]) -> (f64, f64) {
        const LANES: usize = 4;
        let m = self.y_left.len();
        let (alpha, beta, y_total) = (&grid.alpha[..m], &grid.beta[..m], &y_total[..m]);
        let mut num = [0.0; LANES];
        let mut var = [0.0; LANES];
        // independent accumulators; a single running sum is latency bound
        let chunks = self
            .y_left
            .chunks_exact(LANES)
            .zip(self.d_left.chunks_exact(LANES))
            .zip(alpha.chunks_exact(LANES))
            .zip(beta.chunks_exact(LANES))
            .zip(y_total.chunks_exact(LANES));
        for ((((yl, dl), a), b), y) in chunks {
            for l in 0..LANES {
                num[l] += dl[l] - yl[l] * a[l];
                var[l] += yl[l] * (y[l] - yl[l]) * b[l];
            }
        }
        for t in m - m % LANES..m {
            let yl = self.y_left[t];
            num[0] += self.d_left[t] - yl * alpha[t];
            var[0] += yl * (y_total[t] - yl) * beta[t];
        }
        ((num[0] + num[1]) + (num[2] + num[3]), (var[0] + var[1]) + (var[2] + var[3]))
    }
}

/// Per-candidate values of the exact scan, without constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCandidate {
    pub n_left: usize,
    pub threshold: f64,
    pub numerator: f64,
    pub variance: f64,
    /// `None` when the variance is zero.
    pub criterion_sq: Option<f64>,
}

fn walk(
    sorted: &[(f64, usize)],
    grid: &NodeTimeGrid,
    mut admit: impl FnMut(usize, usize) -> bool,
    mut visit: impl FnMut(usize, f64, f64, f64),
) {
    let y_total: Vec<f64> = grid.y.iter().map(|&y| y as f64).collect();
    let mut state = ExactScanState::new(grid.m());
    let mut ev_left = 0;
    for k in 0..sorted.len().saturating_sub(1) {
        let (x, pos) = sorted[k];
        state.push(grid, pos);
        ev_left += grid.events[pos] as usize;
        let next = sorted[k + 1].0;
        if next > x && admit(k + 1, ev_left) {
            let (num, var) = state.statistic(grid, &y_total);
            visit(k + 1, threshold_between(x, next), num, var);
        }
    }
}

/// Best exact log-rank split on one feature.
pub fn scan_exact(
    feature: usize,
    sorted: &[(f64, usize)],
    grid: &NodeTimeGrid,
    constraints: &SplitConstraints,
) -> Result<SplitResult> {
    let n = sorted.len();
    let mut best = Best::default();
    walk(
        sorted,
        grid,
        |n_left, ev_left| constraints.admits(n_left, n, ev_left, grid.event_count),
        |n_left, threshold, num, var| {
            if var > 0.0 {
                best.offer(num * num / var, threshold, n_left);
            }
        },
    );
    best.finish(feature)
}

/// Every candidate of the exact scan, in scan order.
pub fn trace_exact(sorted: &[(f64, usize)], grid: &NodeTimeGrid) -> Vec<ExactCandidate> {
    let mut out = Vec::new();
    walk(
        sorted,
        grid,
        |_, _| true,
        |n_left, threshold, numerator, variance| {
            out.push(ExactCandidate {
                n_left,
                threshold,
                numerator,
                variance,
                criterion_sq: (variance > 0.0).then(|| numerator * numerator / variance),
            })
        },
    );
    out
}

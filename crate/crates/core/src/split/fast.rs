use super::{threshold_between, Best, SplitConstraints};
use crate::data::{NodeView, SplitResult};
use crate::error::Result;
use crate::time_grid::NodeTimeGrid;

/// Expected-failure sums below this are treated as zero.
pub const E_GUARD: f64 = 1e-12;

/// Running sums of the constant-time scan.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FastScanState {
    /// Sum over the left node of `D_i - gamma_i`.
    pub numerator: f64,
    /// Expected failures on the left.
    pub e1: f64,
    /// Expected failures on the right.
    pub e2: f64,
}

impl FastScanState {
    pub fn new(grid: &NodeTimeGrid) -> Self {
        FastScanState {
            numerator: 0.0,
            e1: 0.0,
            e2: grid.gamma_bar,
        }
    }

    #[inline]
    pub fn push(&mut self, grid: &NodeTimeGrid, pos: usize) {
        let gamma = grid.gamma[pos];
        self.numerator += grid.events[pos] as u8 as f64 - gamma;
        self.e1 += gamma;
        self.e2 = grid.gamma_bar - self.e1;
    }

    /// Squared approximate statistic, `None` if either side expects no failures.
    #[inline]
    pub fn criterion_sq(&self) -> Option<f64> {
        if self.e1 <= E_GUARD || self.e2 <= E_GUARD {
            None
        } else {
            Some(self.numerator * self.numerator * (1.0 / self.e1 + 1.0 / self.e2))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastCandidate {
    pub n_left: usize,
    pub threshold: f64,
    pub numerator: f64,
    pub e1: f64,
    pub e2: f64,
    pub criterion_sq: Option<f64>,
}

/// Best approximate log-rank split on one feature, O(1) work per candidate.
pub fn scan_fast(
    feature: usize,
    sorted: &[(f64, usize)],
    grid: &NodeTimeGrid,
    constraints: &SplitConstraints,
) -> Result<SplitResult> {
    let n = sorted.len();
    let mut state = FastScanState::new(grid);
    let mut ev_left = 0;
    let mut best = Best::default();
    for k in 0..n.saturating_sub(1) {
        let (x, pos) = sorted[k];
        state.push(grid, pos);
        ev_left += grid.events[pos] as usize;
        let next = sorted[k + 1].0;
        if next > x && constraints.admits(k + 1, n, ev_left, grid.event_count) {
            if let Some(c) = state.criterion_sq() {
                best.offer(c, threshold_between(x, next), k + 1);
            }
        }
    }
    best.finish(feature)
}

/// Every candidate of the fast scan, in scan order.
pub fn trace_fast(sorted: &[(f64, usize)], grid: &NodeTimeGrid) -> Vec<FastCandidate> {
    let mut state = FastScanState::new(grid);
    let mut out = Vec::new();
    for k in 0..sorted.len().saturating_sub(1) {
        let (x, pos) = sorted[k];
        state.push(grid, pos);
        let next = sorted[k + 1].0;
        if next > x {
            out.push(FastCandidate {
                n_left: k + 1,
                threshold: threshold_between(x, next),
                numerator: state.numerator,
                e1: state.e1,
                e2: state.e2,
                criterion_sq: state.criterion_sq(),
            });
        }
    }
    out
}

/// Log-rank numerator of the left node given by `left_mask` (indexed by node
/// position), computed from per-sample terms only.
pub fn fast_numerator(node: &NodeView<'_>, grid: &NodeTimeGrid, left_mask: &[bool]) -> f64 {
    debug_assert_eq!(node.len(), left_mask.len());
    left_mask
        .iter()
        .enumerate()
        .filter(|(_, &l)| l)
        .map(|(pos, _)| grid.events[pos] as u8 as f64 - grid.gamma[pos])
        .sum()
}

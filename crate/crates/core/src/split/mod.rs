//! Split scanning over one sorted feature of a node.
//!
//! Candidates sit between consecutive distinct feature values, so samples that
//! share a value always move left together. Both scanners visit candidates in
//! the same order and keep the first maximum, which makes them directly
//! comparable.

mod exact;
mod fast;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SplitResult;
use crate::error::{Error, Result};
use crate::time_grid::NodeTimeGrid;

pub use exact::{scan_exact, trace_exact, ExactCandidate, ExactScanState};
pub use fast::{fast_numerator, scan_fast, trace_fast, FastCandidate, FastScanState, E_GUARD};

/// Which log-rank criterion drives split selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Exact log-rank statistic, O(M) per candidate.
    Exact,
    /// Poissonized-variance approximation, O(1) per candidate.
    Fast,
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitRule::Exact => "exact",
            SplitRule::Fast => "fast",
        })
    }
}

impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SplitRule::Exact),
            "fast" | "approx" => Ok(SplitRule::Fast),
            other => Err(Error::Usage(format!("unknown split rule '{other}' (expected exact or fast)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConstraints {
    /// Minimum number of samples in each child.
    pub min_node_size: usize,
    /// Minimum number of events in each child.
    pub min_events_per_child: usize,
}

impl Default for SplitConstraints {
    fn default() -> Self {
        SplitConstraints {
            min_node_size: 1,
            min_events_per_child: 1,
        }
    }
}

impl SplitConstraints {
    pub fn new(min_node_size: usize, min_events_per_child: usize) -> Result<Self> {
        if min_node_size == 0 || min_events_per_child == 0 {
            return Err(Error::Usage("split constraints must be at least 1".into()));
        }
        Ok(SplitConstraints {
            min_node_size,
            min_events_per_child,
        })
    }

    #[inline]
    pub(crate) fn admits(&self, n_left: usize, n: usize, ev_left: usize, ev_total: usize) -> bool {
        n_left >= self.min_node_size
            && n - n_left >= self.min_node_size
            && ev_left >= self.min_events_per_child
            && ev_total - ev_left >= self.min_events_per_child
    }
}

/// Scans one sorted feature with the given rule.
pub fn scan(
    rule: SplitRule,
    feature: usize,
    sorted: &[(f64, usize)],
    grid: &NodeTimeGrid,
    constraints: &SplitConstraints,
) -> Result<SplitResult> {
    match rule {
        SplitRule::Exact => scan_exact(feature, sorted, grid, constraints),
        SplitRule::Fast => scan_fast(feature, sorted, grid, constraints),
    }
}

/// Threshold between two distinct sorted values. The midpoint is used unless
/// rounding pushes it onto `hi`, in which case `lo` keeps the partition intact.
#[inline]
pub(crate) fn threshold_between(lo: f64, hi: f64) -> f64 {
    let mid = lo * 0.5 + hi * 0.5;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

/// Tracks the running best candidate; strict `>` keeps the first maximum.
#[derive(Default)]
pub(crate) struct Best {
    found: Option<(f64, f64, usize)>,
}

impl Best {
    #[inline]
    pub(crate) fn offer(&mut self, crit_sq: f64, threshold: f64, n_left: usize) {
        match self.found {
            Some((best, _, _)) if crit_sq <= best => {}
            _ => self.found = Some((crit_sq, threshold, n_left)),
        }
    }

    pub(crate) fn finish(self, feature: usize) -> Result<SplitResult> {
        self.found
            .map(|(criterion_sq, threshold, n_left)| SplitResult {
                feature,
                threshold,
                criterion_sq,
                n_left,
            })
            .ok_or(Error::NoValidSplit)
    }
}

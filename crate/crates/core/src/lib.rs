//! Random survival forests with two log-rank split rules.
//!
//! [`SplitRule::Exact`] evaluates the log-rank statistic with its
//! hypergeometric variance, costing O(M) per candidate for M distinct failure
//! times in the node. [`SplitRule::Fast`] keeps the exact numerator but uses
//! the Poissonized variance `(1/E1 + 1/E2)^-1`, where `E1` and `E2` are the
//! expected failures on each side; both pieces are running sums of per-sample
//! terms, so a full scan of one feature is O(n).

pub mod bench;
pub mod data;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod forest;
pub mod io;
pub mod metrics;
pub mod simgen;
pub mod split;
pub mod time_grid;
pub mod tree;

pub use data::{Fingerprint, NodeView, SplitResult, SurvivalDataset};
pub use error::{Error, Result};
pub use estimators::{kaplan_meier, nelson_aalen, CurveKind, StepCurve};
pub use forest::{train, ForestModel, ForestParams, ForestTree, OobPrediction};
pub use metrics::{concordance_error, paired_delta, rmse_at_horizon, PairedErrorSummary};
pub use split::{SplitConstraints, SplitRule};
pub use time_grid::NodeTimeGrid;
pub use tree::{grow_tree, Node, SurvivalTree, TreeParams};

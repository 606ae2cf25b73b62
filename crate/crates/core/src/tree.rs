//! Single survival tree grown by recursive axis-aligned partitioning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{NodeView, RankTable, SplitResult, SurvivalDataset};
use crate::error::{Error, Result};
use crate::split::{self, SplitConstraints, SplitRule};
use crate::time_grid::NodeTimeGrid;

pub const DEFAULT_MIN_NODE_SIZE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Features drawn (without replacement) at each node.
    pub mtry: usize,
    pub min_node_size: usize,
    pub min_events_per_child: usize,
    pub max_depth: Option<usize>,
    pub split_rule: SplitRule,
    pub rng_seed: u64,
}

impl TreeParams {
    /// Defaults for `p` features: `mtry = ceil(sqrt(p))`, minimum node size 15,
    /// one event per child, no depth cap, fast splitting.
    pub fn for_features(p: usize) -> Self {
        TreeParams {
            mtry: ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1)),
            min_node_size: DEFAULT_MIN_NODE_SIZE,
            min_events_per_child: 1,
            max_depth: None,
            split_rule: SplitRule::Fast,
            rng_seed: 42,
        }
    }

    pub fn constraints(&self) -> SplitConstraints {
        SplitConstraints {
            min_node_size: self.min_node_size,
            min_events_per_child: self.min_events_per_child,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.mtry == 0 || self.mtry > p {
            return Err(Error::Usage(format!("mtry must be in 1..={p}, got {}", self.mtry)));
        }
        if self.min_node_size == 0 {
            return Err(Error::Usage("min_node_size must be at least 1".into()));
        }
        if self.min_events_per_child == 0 {
            return Err(Error::Usage("min_events_per_child must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        samples: Vec<usize>,
    },
}

/// Nodes stored in an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTree {
    pub nodes: Vec<Node>,
}

impl SurvivalTree {
    /// Index of the leaf that `x` falls into.
    pub fn route(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return id,
            }
        }
    }

    /// Like [`route`](Self::route) but reads the sample straight from the dataset.
    pub fn route_sample(&self, data: &SurvivalDataset, i: usize) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if data.value(i, *feature) <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return id,
            }
        }
    }

    pub fn leaf_samples(&self, id: usize) -> Option<&[usize]> {
        match &self.nodes[id] {
            Node::Leaf { samples } => Some(samples),
            Node::Internal { .. } => None,
        }
    }

    /// `(node id, samples)` for every leaf, in arena order.
    pub fn leaves(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.nodes.iter().enumerate().filter_map(|(id, n)| match n {
            Node::Leaf { samples } => Some((id, samples.as_slice())),
            Node::Internal { .. } => None,
        })
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &SurvivalTree, id: usize) -> usize {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

/// Deterministic per-node RNG: one ChaCha stream per node id.
fn node_rng(seed: u64, node_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node_id as u64);
    rng
}

/// Best split of a node over the sampled features, or `None` if no feature
/// admits a valid split.
fn best_split(
    view: &NodeView<'_>,
    grid: &NodeTimeGrid,
    features: &[usize],
    ranks: &RankTable,
    params: &TreeParams,
) -> Option<SplitResult> {
    let constraints = params.constraints();
    let mut best: Option<SplitResult> = None;
    for &f in features {
        let sorted = view.sorted_feature_ranked(f, ranks);
        if let Ok(s) = split::scan(params.split_rule, f, &sorted, grid, &constraints) {
            if best.is_none_or(|b| s.criterion_sq > b.criterion_sq) {
                best = Some(s);
            }
        }
    }
    best
}

pub fn grow_tree(data: &SurvivalDataset, sample_indices: &[usize], params: &TreeParams) -> Result<SurvivalTree> {
    if sample_indices.is_empty() {
        return Err(Error::Usage("cannot grow a tree on zero samples".into()));
    }
    params.validate(data.p())?;
    // validates bounds and uniqueness once; children are built from subsets.
    let root = NodeView::new(data, sample_indices.to_vec())?.into_indices();
    let ranks = RankTable::new(data)?;

    let mut nodes = vec![Node::Leaf { samples: Vec::new() }];
    let mut stack = vec![(0usize, root, 0usize)];
    while let Some((id, indices, depth)) = stack.pop() {
        let stop = params.max_depth.is_some_and(|d| depth >= d) || indices.len() < 2 * params.min_node_size;
        let view = NodeView::new_unchecked(data, indices);
        let found = if stop {
            None
        } else {
            match NodeTimeGrid::build(&view) {
                Ok(grid) => {
                    let mut rng = node_rng(params.rng_seed, id);
                    let features = rand::seq::index::sample(&mut rng, data.p(), params.mtry).into_vec();
                    best_split(&view, &grid, &features, &ranks, params)
                }
                Err(Error::NoEvents) => None,
                Err(e) => return Err(e),
            }
        };
        let indices = view.into_indices();
        let Some(s) = found else {
            nodes[id] = Node::Leaf { samples: indices };
            continue;
        };

        let col = data.column(s.feature);
        let (left, right): (Vec<usize>, Vec<usize>) = indices.into_iter().partition(|&i| col[i] <= s.threshold);
        debug_assert_eq!(left.len(), s.n_left);
        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(Node::Leaf { samples: Vec::new() });
        nodes.push(Node::Leaf { samples: Vec::new() });
        nodes[id] = Node::Internal {
            feature: s.feature,
            threshold: s.threshold,
            left: left_id,
            right: right_id,
        };
        stack.push((right_id, right, depth + 1));
        stack.push((left_id, left, depth + 1));
    }
    Ok(SurvivalTree { nodes })
}

//! Ensemble training, survival-curve prediction and model files.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Fingerprint, SurvivalDataset};
use crate::error::{Error, Result};
use crate::estimators::{kaplan_meier, nelson_aalen, CurveKind, StepCurve};
use crate::tree::{grow_tree, Node, SurvivalTree, TreeParams};

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    /// Fraction of samples drawn without replacement for each tree.
    pub sample_fraction: f64,
    /// Tree settings; `tree.rng_seed` is the forest seed and tree `t` grows
    /// with seed `rng_seed + t`.
    pub tree: TreeParams,
    /// Worker threads for training, `None` = all cores. Not persisted, since
    /// it never affects the result.
    #[serde(skip)]
    pub num_threads: Option<usize>,
}

impl ForestParams {
    pub fn for_features(p: usize) -> Self {
        ForestParams {
            num_trees: 500,
            sample_fraction: 0.5,
            tree: TreeParams::for_features(p),
            num_threads: None,
        }
    }

    pub fn tree_seed(&self, t: usize) -> u64 {
        self.tree.rng_seed.wrapping_add(t as u64)
    }

    pub fn inbag_size(&self, n: usize) -> usize {
        ((self.sample_fraction * n as f64).ceil() as usize).clamp(1, n)
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::Usage("num_trees must be at least 1".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Usage(format!(
                "sample_fraction must be in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if self.num_threads == Some(0) {
            return Err(Error::Usage("num_threads must be at least 1".into()));
        }
        self.tree.validate(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestTree {
    #[serde(flatten)]
    pub tree: SurvivalTree,
    /// Sorted in-bag sample indices.
    pub inbag: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u64,
    pub params: ForestParams,
    /// Sorted distinct failure times of the training data.
    pub global_grid: Vec<f64>,
    pub trees: Vec<ForestTree>,
    pub fingerprint: Fingerprint,
    /// Training outcomes, needed to evaluate leaf estimators at prediction time.
    pub train_times: Vec<f64>,
    pub train_events: Vec<bool>,
}

/// Out-of-bag prediction of one training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OobPrediction {
    /// `None` when the sample is in-bag for every tree.
    pub curve: Option<StepCurve>,
    /// Number of trees aggregated.
    pub trees_used: usize,
}

fn draw_inbag(n: usize, params: &ForestParams, t: usize) -> Vec<usize> {
    let k = params.inbag_size(n);
    if k == n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.tree_seed(t));
    // node streams count up from 0; keep the subsample stream clear of them
    rng.set_stream(u64::MAX);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Trains `num_trees` trees on independent subsamples. The result depends
/// only on the data and parameters, never on the thread count.
pub fn train(data: &SurvivalDataset, params: &ForestParams) -> Result<ForestModel> {
    params.validate(data.p())?;
    if data.event_count() == 0 {
        return Err(Error::Training("dataset contains no events".into()));
    }
    let grow = |t: usize| -> Result<ForestTree> {
        let inbag = draw_inbag(data.n(), params, t);
        let tree_params = TreeParams {
            rng_seed: params.tree_seed(t),
            ..params.tree
        };
        let tree = grow_tree(data, &inbag, &tree_params)?;
        Ok(ForestTree { tree, inbag })
    };
    let trees = match params.num_threads {
        Some(1) => (0..params.num_trees).map(grow).collect::<Result<Vec<_>>>()?,
        threads => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::Training(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..params.num_trees).into_par_iter().map(grow).collect::<Result<Vec<_>>>())?
        }
    };
    Ok(ForestModel {
        version: MODEL_VERSION,
        params: *params,
        global_grid: data.failure_times(),
        trees,
        fingerprint: data.fingerprint(),
        train_times: data.times().to_vec(),
        train_events: data.events().to_vec(),
    })
}

/// Evaluates leaf estimators on the global grid, caching per leaf.
struct LeafCurves<'m> {
    model: &'m ForestModel,
    kind: CurveKind,
    cache: Vec<Option<Vec<f64>>>,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl<'m> LeafCurves<'m> {
    fn new(model: &'m ForestModel, kind: CurveKind, tree: usize) -> Self {
        LeafCurves {
            model,
            kind,
            cache: vec![None; model.trees[tree].tree.nodes.len()],
            times: Vec::new(),
            events: Vec::new(),
        }
    }

    fn get(&mut self, tree: &SurvivalTree, leaf: usize) -> &[f64] {
        if self.cache[leaf].is_none() {
            self.cache[leaf] = Some(self.model.leaf_values(tree, leaf, self.kind, &mut self.times, &mut self.events));
        }
        self.cache[leaf].as_deref().unwrap()
    }
}

impl ForestModel {
    pub fn num_features(&self) -> usize {
        self.fingerprint.cols
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Leaf estimator values on the global grid.
    fn leaf_values(
        &self,
        tree: &SurvivalTree,
        leaf: usize,
        kind: CurveKind,
        times: &mut Vec<f64>,
        events: &mut Vec<bool>,
    ) -> Vec<f64> {
        let samples = tree.leaf_samples(leaf).expect("routing ends at a leaf");
        times.clear();
        events.clear();
        times.extend(samples.iter().map(|&i| self.train_times[i]));
        events.extend(samples.iter().map(|&i| self.train_events[i]));
        let curve = match kind {
            CurveKind::Survival => kaplan_meier(times, events, &self.global_grid),
            CurveKind::CumulativeHazard => nelson_aalen(times, events, &self.global_grid),
        };
        // leaves are never empty and the global grid is strictly increasing
        curve.expect("valid leaf").values
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        if p != self.num_features() {
            return Err(Error::Usage(format!(
                "model expects {} covariates, got {p}",
                self.num_features()
            )));
        }
        Ok(())
    }

    fn finish(&self, kind: CurveKind, mut sum: Vec<f64>, count: usize) -> StepCurve {
        let scale = 1.0 / count as f64;
        sum.iter_mut().for_each(|v| *v *= scale);
        StepCurve {
            kind,
            grid: self.global_grid.clone(),
            values: sum,
        }
    }

    /// Forest survival curve for one covariate vector: the pointwise mean of
    /// the leaf Kaplan–Meier curves it reaches.
    pub fn predict_curve(&self, x: &[f64]) -> Result<StepCurve> {
        self.predict_curve_kind(x, CurveKind::Survival)
    }

    pub fn predict_curve_kind(&self, x: &[f64], kind: CurveKind) -> Result<StepCurve> {
        self.check_dim(x.len())?;
        let mut sum = vec![0.0; self.global_grid.len()];
        let (mut times, mut events) = (Vec::new(), Vec::new());
        for ft in &self.trees {
            let leaf = ft.tree.route(x);
            let v = self.leaf_values(&ft.tree, leaf, kind, &mut times, &mut events);
            sum.iter_mut().zip(&v).for_each(|(s, v)| *s += v);
        }
        Ok(self.finish(kind, sum, self.trees.len()))
    }

    /// In-sample style prediction for every row of `data` using all trees.
    pub fn predict_curves(&self, data: &SurvivalDataset, kind: CurveKind) -> Result<Vec<StepCurve>> {
        self.check_dim(data.p())?;
        let g = self.global_grid.len();
        let mut sums = vec![vec![0.0; g]; data.n()];
        for (t, ft) in self.trees.iter().enumerate() {
            let mut leaves = LeafCurves::new(self, kind, t);
            for (i, sum) in sums.iter_mut().enumerate() {
                let leaf = ft.tree.route_sample(data, i);
                let v = leaves.get(&ft.tree, leaf);
                sum.iter_mut().zip(v).for_each(|(s, v)| *s += v);
            }
        }
        Ok(sums
            .into_iter()
            .map(|s| self.finish(kind, s, self.trees.len()))
            .collect())
    }

    fn check_fingerprint(&self, data: &SurvivalDataset) -> Result<()> {
        if data.fingerprint() != self.fingerprint {
            return Err(Error::Usage(
                "dataset does not match the data the model was trained on".into(),
            ));
        }
        Ok(())
    }

    /// Out-of-bag membership: `mask[t][i]` is true when sample `i` is in-bag for tree `t`.
    fn inbag_masks(&self, n: usize) -> Vec<Vec<bool>> {
        self.trees
            .iter()
            .map(|ft| {
                let mut m = vec![false; n];
                ft.inbag.iter().for_each(|&i| m[i] = true);
                m
            })
            .collect()
    }

    /// Out-of-bag survival curves for the training data.
    pub fn predict_oob(&self, data: &SurvivalDataset) -> Result<Vec<OobPrediction>> {
        self.predict_oob_kind(data, CurveKind::Survival)
    }

    pub fn predict_oob_kind(&self, data: &SurvivalDataset, kind: CurveKind) -> Result<Vec<OobPrediction>> {
        self.check_fingerprint(data)?;
        let n = data.n();
        let g = self.global_grid.len();
        let mut sums: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut used = vec![0usize; n];
        for (t, (ft, inbag)) in self.trees.iter().zip(self.inbag_masks(n)).enumerate() {
            let mut leaves = LeafCurves::new(self, kind, t);
            for i in (0..n).filter(|&i| !inbag[i]) {
                let leaf = ft.tree.route_sample(data, i);
                let v = leaves.get(&ft.tree, leaf);
                let sum = sums[i].get_or_insert_with(|| vec![0.0; g]);
                sum.iter_mut().zip(v).for_each(|(s, v)| *s += v);
                used[i] += 1;
            }
        }
        Ok(sums
            .into_iter()
            .zip(used)
            .map(|(sum, trees_used)| OobPrediction {
                curve: sum.map(|s| self.finish(kind, s, trees_used)),
                trees_used,
            })
            .collect())
    }

    /// Out-of-bag average of a per-curve summary. `summary` is applied once per
    /// leaf and the results are averaged, which equals applying it to the
    /// averaged curve whenever the summary is linear in the curve values
    /// (point evaluation, sums).
    pub fn predict_oob_summary(
        &self,
        data: &SurvivalDataset,
        kind: CurveKind,
        summary: impl Fn(&[f64]) -> f64,
    ) -> Result<Vec<Option<f64>>> {
        self.check_fingerprint(data)?;
        let n = data.n();
        let mut sums = vec![0.0; n];
        let mut used = vec![0usize; n];
        let (mut times, mut events) = (Vec::new(), Vec::new());
        for (ft, inbag) in self.trees.iter().zip(self.inbag_masks(n)) {
            let mut cache: Vec<Option<f64>> = vec![None; ft.tree.nodes.len()];
            for i in (0..n).filter(|&i| !inbag[i]) {
                let leaf = ft.tree.route_sample(data, i);
                let v = *cache[leaf].get_or_insert_with(|| {
                    summary(&self.leaf_values(&ft.tree, leaf, kind, &mut times, &mut events))
                });
                sums[i] += v;
                used[i] += 1;
            }
        }
        Ok(sums
            .into_iter()
            .zip(used)
            .map(|(s, u)| (u > 0).then(|| s / u as f64))
            .collect())
    }

    /// Out-of-bag survival probability at `horizon`.
    pub fn oob_survival_at(&self, data: &SurvivalDataset, horizon: f64) -> Result<Vec<Option<f64>>> {
        let k = self.global_grid.partition_point(|&g| g <= horizon);
        self.predict_oob_summary(data, CurveKind::Survival, |v| if k == 0 { 1.0 } else { v[k - 1] })
    }

    /// Out-of-bag risk score: the cumulative hazard summed over the global grid.
    pub fn oob_risk_scores(&self, data: &SurvivalDataset) -> Result<Vec<Option<f64>>> {
        self.predict_oob_summary(data, CurveKind::CumulativeHazard, |v| v.iter().sum())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Corrupt(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Corrupt("missing version field".into()))?;
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let model: ForestModel = serde_json::from_value(value).map_err(|e| Error::Corrupt(e.to_string()))?;
        model.check_structure()?;
        Ok(model)
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.fingerprint.rows;
        if self.train_times.len() != n || self.train_events.len() != n {
            return Err(Error::Corrupt("training outcome length does not match fingerprint".into()));
        }
        if self.global_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Corrupt("global grid is not strictly increasing".into()));
        }
        for ft in &self.trees {
            let len = ft.tree.nodes.len();
            if len == 0 || ft.inbag.iter().any(|&i| i >= n) {
                return Err(Error::Corrupt("tree index out of range".into()));
            }
            for (id, node) in ft.tree.nodes.iter().enumerate() {
                match node {
                    Node::Internal { feature, left, right, .. } => {
                        // children always come after their parent, which rules out cycles
                        if *feature >= self.fingerprint.cols || *left >= len || *right >= len || *left <= id || *right <= id {
                            return Err(Error::Corrupt("tree index out of range".into()));
                        }
                    }
                    Node::Leaf { samples } => {
                        if samples.is_empty() || samples.iter().any(|&i| i >= n) {
                            return Err(Error::Corrupt("invalid leaf".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Corrupt(e.to_string()))?;
        Self::from_json(text)
    }

    /// SHA-256 of the serialized model, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

//! Node-local failure-time grid.
//!
//! Both scanners work on the distinct failure times of a node, remapped to
//! consecutive slots `0..M`. A sample with observed time `T` sits in slot
//! `g` = the largest failure time `<= T`; it is at risk in slots `0..=g` and,
//! if it failed, contributes one event to slot `g`. Samples observed before
//! the first failure time have no slot and are never at risk.

use crate::data::NodeView;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTimeGrid {
    /// Strictly increasing distinct failure times in the node.
    pub failure_times: Vec<f64>,
    /// Events per slot.
    pub d: Vec<usize>,
    /// At-risk count per slot.
    pub y: Vec<usize>,
    /// `d / y` per slot.
    pub alpha: Vec<f64>,
    /// Hypergeometric variance weight per slot, zero when `y <= 1`.
    pub beta: Vec<f64>,
    /// Running sum of `alpha`.
    pub cumulative: Vec<f64>,
    /// Per node position: the sample's slot, if it has one.
    pub sample_grid_index: Vec<Option<usize>>,
    /// Per node position: the event indicator.
    pub events: Vec<bool>,
    /// Per node position: `cumulative[slot]`, or 0 without a slot.
    pub gamma: Vec<f64>,
    pub gamma_bar: f64,
    pub event_count: usize,
}

impl NodeTimeGrid {
    pub fn build(node: &NodeView<'_>) -> Result<Self> {
        let data = node.data();
        let times = data.times();
        let evs = data.events();

        let mut failure_times: Vec<f64> = node
            .indices()
            .iter()
            .filter(|&&i| evs[i])
            .map(|&i| times[i])
            .collect();
        if failure_times.is_empty() {
            return Err(Error::NoEvents);
        }
        failure_times.sort_unstable_by(f64::total_cmp);
        failure_times.dedup();
        let m = failure_times.len();

        let mut d = vec![0usize; m];
        let mut slot_count = vec![0usize; m];
        let mut sample_grid_index = Vec::with_capacity(node.len());
        let mut events = Vec::with_capacity(node.len());
        for &i in node.indices() {
            let t = times[i];
            // number of failure times <= t
            let k = failure_times.partition_point(|&f| f <= t);
            let slot = k.checked_sub(1);
            if let Some(g) = slot {
                slot_count[g] += 1;
                if evs[i] {
                    d[g] += 1;
                }
            }
            sample_grid_index.push(slot);
            events.push(evs[i]);
        }

        let mut y = vec![0usize; m];
        let mut acc = 0usize;
        for g in (0..m).rev() {
            acc += slot_count[g];
            y[g] = acc;
        }

        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        let mut cumulative = Vec::with_capacity(m);
        let mut running = 0.0;
        for g in 0..m {
            let (dt, yt) = (d[g] as f64, y[g] as f64);
            let a = dt / yt;
            alpha.push(a);
            beta.push(if y[g] > 1 {
                ((yt - dt) / (yt - 1.0)) * dt / (yt * yt)
            } else {
                0.0
            });
            running += a;
            cumulative.push(running);
        }

        let gamma: Vec<f64> = sample_grid_index
            .iter()
            .map(|s| s.map_or(0.0, |g| cumulative[g]))
            .collect();
        let gamma_bar = gamma.iter().sum();
        let event_count = d.iter().sum();

        Ok(NodeTimeGrid {
            failure_times,
            d,
            y,
            alpha,
            beta,
            cumulative,
            sample_grid_index,
            events,
            gamma,
            gamma_bar,
            event_count,
        })
    }

    /// Number of distinct failure times.
    pub fn m(&self) -> usize {
        self.failure_times.len()
    }

    /// Number of samples in the node.
    pub fn node_size(&self) -> usize {
        self.gamma.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SurvivalDataset;

    fn dataset(times: &[f64], events: &[u8]) -> SurvivalDataset {
        SurvivalDataset::from_columns(
            vec![(0..times.len()).map(|i| i as f64).collect()],
            times.to_vec(),
            events.iter().map(|&e| e == 1).collect(),
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn d1_fixture() {
        let d = dataset(&[1.0, 2.0, 2.0, 3.0, 4.0], &[1, 1, 0, 1, 1]);
        let g = NodeTimeGrid::build(&d.full_view()).unwrap();
        assert_eq!(g.failure_times, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.d, vec![1, 1, 1, 1]);
        assert_eq!(g.y, vec![5, 4, 2, 1]);
        close(&g.alpha, &[0.2, 0.25, 0.5, 1.0]);
        close(&g.cumulative, &[0.2, 0.45, 0.95, 1.95]);
        close(&g.beta, &[0.04, 0.0625, 0.25, 0.0]);
        close(&g.gamma, &[0.2, 0.45, 0.45, 0.95, 1.95]);
        assert!((g.gamma_bar - 4.0).abs() < 1e-12);
        assert_eq!(g.event_count, 4);
    }

    #[test]
    fn single_event_sample() {
        let d = dataset(&[7.0], &[1]);
        let g = NodeTimeGrid::build(&d.full_view()).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.d, vec![1]);
        assert_eq!(g.y, vec![1]);
        assert_eq!(g.alpha, vec![1.0]);
        assert_eq!(g.beta, vec![0.0]);
    }

    #[test]
    fn all_censored_is_no_events() {
        let d = dataset(&[1.0, 2.0], &[0, 0]);
        assert!(matches!(NodeTimeGrid::build(&d.full_view()), Err(Error::NoEvents)));
    }

    #[test]
    fn early_censored_sample_has_no_slot() {
        let d = dataset(&[0.5, 1.0, 2.0], &[0, 1, 1]);
        let g = NodeTimeGrid::build(&d.full_view()).unwrap();
        assert_eq!(g.sample_grid_index[0], None);
        assert_eq!(g.gamma[0], 0.0);
        assert_eq!(g.y, vec![2, 1]);
    }

    #[test]
    fn censored_tie_with_failure_is_at_risk() {
        let d = dataset(&[2.0, 2.0, 3.0], &[0, 1, 1]);
        let g = NodeTimeGrid::build(&d.full_view()).unwrap();
        assert_eq!(g.sample_grid_index, vec![Some(0), Some(0), Some(1)]);
        assert_eq!(g.y, vec![3, 1]);
    }

    #[test]
    fn respects_node_subset_order() {
        let d = dataset(&[1.0, 2.0, 2.0, 3.0, 4.0], &[1, 1, 0, 1, 1]);
        let v = NodeView::new(&d, vec![4, 2, 0]).unwrap();
        let g = NodeTimeGrid::build(&v).unwrap();
        assert_eq!(g.failure_times, vec![1.0, 4.0]);
        assert_eq!(g.sample_grid_index, vec![Some(1), Some(0), Some(0)]);
        assert_eq!(g.events, vec![true, false, true]);
        assert_eq!(g.y, vec![3, 1]);
    }
}

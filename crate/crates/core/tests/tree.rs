mod common;

use common::*;
use survsplit::split::trace_fast;
use survsplit::{grow_tree, Error, Node, NodeTimeGrid, SplitRule, SurvivalDataset, SurvivalTree, TreeParams};

fn params(rule: SplitRule, p: usize) -> TreeParams {
    TreeParams {
        split_rule: rule,
        ..TreeParams::for_features(p)
    }
}

fn check_structure(tree: &SurvivalTree, data: &SurvivalDataset, indices: &[usize]) {
    let mut seen = vec![0usize; data.n()];
    for (_, samples) in tree.leaves() {
        for &i in samples {
            seen[i] += 1;
        }
    }
    for i in 0..data.n() {
        assert_eq!(seen[i], indices.contains(&i) as usize, "sample {i}");
    }
    // each non-root node has exactly one parent
    let mut parents = vec![0usize; tree.nodes.len()];
    for node in &tree.nodes {
        if let Node::Internal { left, right, .. } = node {
            parents[*left] += 1;
            parents[*right] += 1;
        }
    }
    assert_eq!(parents[0], 0);
    assert!(parents[1..].iter().all(|&c| c == 1));
    for &i in indices {
        let leaf = tree.route_sample(data, i);
        assert!(tree.leaf_samples(leaf).unwrap().contains(&i));
        assert_eq!(tree.route(&data.row(i)), leaf);
    }
}

#[test]
fn all_censored_node_is_a_single_leaf() {
    let d = SurvivalDataset::from_columns(vec![(0..40).map(f64::from).collect()], vec![1.0; 40], vec![false; 40]).unwrap();
    let all: Vec<usize> = (0..40).collect();
    let t = grow_tree(&d, &all, &TreeParams { min_node_size: 1, ..params(SplitRule::Fast, 1) }).unwrap();
    assert_eq!(t.nodes, vec![Node::Leaf { samples: all }]);
}

#[test]
fn depth_zero_is_a_single_leaf() {
    let mut r = rng(3);
    let d = random_node(&mut r, 100, 20);
    let all: Vec<usize> = (0..d.n()).collect();
    let t = grow_tree(&d, &all, &TreeParams { max_depth: Some(0), min_node_size: 1, ..params(SplitRule::Exact, 2) }).unwrap();
    assert_eq!(t.nodes.len(), 1);
    assert_eq!(t.leaf_samples(0).unwrap(), all.as_slice());
}

#[test]
fn empty_indices_rejected() {
    let d = d1();
    assert!(matches!(grow_tree(&d, &[], &params(SplitRule::Fast, 1)), Err(Error::Usage(_))));
}

#[test]
fn d1_root_split_follows_fast_argmax() {
    let d = d1();
    let all: Vec<usize> = (0..5).collect();
    let p = TreeParams {
        min_node_size: 1,
        max_depth: Some(1),
        ..params(SplitRule::Fast, 1)
    };
    let t = grow_tree(&d, &all, &p).unwrap();

    // oracle: enumerate all four candidates from explicit gamma sums
    let gamma = brute_gamma(d.times(), d.events());
    let total: f64 = gamma.iter().sum();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 1..5 {
        let num: f64 = (0..k).map(|i| d.events()[i] as u8 as f64 - gamma[i]).sum();
        let e1: f64 = gamma[..k].iter().sum();
        let crit = num * num * (1.0 / e1 + 1.0 / (total - e1));
        if crit > best.0 {
            best = (crit, k);
        }
    }
    let x = d.column(0);
    let want = (x[best.1 - 1] + x[best.1]) / 2.0;
    match &t.nodes[0] {
        Node::Internal { feature, threshold, .. } => {
            assert_eq!(*feature, 0);
            assert!((threshold - want).abs() < 1e-15);
        }
        other => panic!("root did not split: {other:?}"),
    }
    // same as the scanner trace
    let g = NodeTimeGrid::build(&d.full_view()).unwrap();
    let trace = trace_fast(&d.full_view().sorted_feature(0), &g);
    let tr = trace
        .iter()
        .filter(|c| c.criterion_sq.is_some())
        .fold(None::<(f64, f64)>, |acc, c| match acc {
            Some((v, _)) if c.criterion_sq.unwrap() <= v => acc,
            _ => Some((c.criterion_sq.unwrap(), c.threshold)),
        })
        .unwrap();
    assert!((tr.1 - want).abs() < 1e-15);
}

#[test]
fn structure_invariants_and_determinism() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let d = random_node(&mut r, 200, 30);
        let idx: Vec<usize> = (0..d.n()).filter(|i| i % 3 != 0).collect();
        if idx.is_empty() {
            continue;
        }
        for rule in [SplitRule::Exact, SplitRule::Fast] {
            let p = TreeParams {
                min_node_size: 3,
                rng_seed: seed,
                ..params(rule, 2)
            };
            let t = grow_tree(&d, &idx, &p).unwrap();
            check_structure(&t, &d, &idx);
            let again = grow_tree(&d, &idx, &p).unwrap();
            assert_eq!(serde_json::to_string(&t).unwrap(), serde_json::to_string(&again).unwrap());
            // children partition parents and respect the size floor
            for (_, samples) in t.leaves() {
                assert!(samples.len() >= p.min_node_size || t.nodes.len() == 1);
            }
        }
    }
}

#[test]
fn internal_nodes_partition_by_threshold() {
    let mut r = rng(77);
    let d = random_node(&mut r, 200, 40);
    let all: Vec<usize> = (0..d.n()).collect();
    let t = grow_tree(&d, &all, &TreeParams { min_node_size: 2, ..params(SplitRule::Exact, 2) }).unwrap();
    fn collect(t: &SurvivalTree, id: usize) -> Vec<usize> {
        match &t.nodes[id] {
            Node::Leaf { samples } => samples.clone(),
            Node::Internal { left, right, .. } => {
                let mut v = collect(t, *left);
                v.extend(collect(t, *right));
                v
            }
        }
    }
    for node in &t.nodes {
        if let Node::Internal { feature, threshold, left, right } = node {
            assert!(collect(&t, *left).iter().all(|&i| d.value(i, *feature) <= *threshold));
            assert!(collect(&t, *right).iter().all(|&i| d.value(i, *feature) > *threshold));
        }
    }
}

#[test]
fn bad_mtry_rejected() {
    let d = d1();
    let p = TreeParams { mtry: 2, ..params(SplitRule::Fast, 1) };
    assert!(grow_tree(&d, &[0, 1], &p).is_err());
}

//! Brute-force oracles. Everything here recounts from raw samples and set
//! definitions, without touching the crate's grid or scan state.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survsplit::SurvivalDataset;

/// D1: times [1,2,2,3,4], events [1,1,0,1,1], feature ordered like the times.
pub fn d1() -> SurvivalDataset {
    SurvivalDataset::from_columns(
        vec![vec![0.1, 0.2, 0.3, 0.4, 0.5]],
        vec![1.0, 2.0, 2.0, 3.0, 4.0],
        vec![true, true, false, true, true],
    )
    .unwrap()
}

/// Random node: integer times on `1..=max_t`, censoring with probability
/// `censor`, one feature with occasional ties. At least one event.
pub fn random_node(rng: &mut ChaCha8Rng, max_n: usize, max_t: usize) -> SurvivalDataset {
    let n = rng.random_range(2..=max_n);
    let top = rng.random_range(1..=max_t);
    let censor: f64 = rng.random_range(0.0..=0.8);
    let tie_grid = rng.random_range(2..=3 * n) as f64;
    let times: Vec<f64> = (0..n).map(|_| rng.random_range(1..=top) as f64).collect();
    let mut events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() >= censor).collect();
    if !events.iter().any(|&e| e) {
        let k = rng.random_range(0..n);
        events[k] = true;
    }
    let x: Vec<f64> = (0..n)
        .map(|_| (rng.random::<f64>() * tie_grid).floor() / tie_grid)
        .collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    SurvivalDataset::from_columns(vec![x, x2], times, events).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinct failure times, with `d_t` and `Y_t` counted from their definitions.
pub fn brute_grid(times: &[f64], events: &[bool]) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let mut ft: Vec<f64> = times.iter().zip(events).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    ft.sort_by(f64::total_cmp);
    ft.dedup();
    let d = ft
        .iter()
        .map(|&t| times.iter().zip(events).filter(|(&ti, &e)| ti == t && e).count())
        .collect();
    let y = ft.iter().map(|&t| times.iter().filter(|&&ti| ti >= t).count()).collect();
    (ft, d, y)
}

/// Exact log-rank numerator and variance for the left set `left`
/// (sample indices), rebuilt from scratch.
pub fn brute_logrank(times: &[f64], events: &[bool], left: &[bool]) -> (f64, f64) {
    let (ft, d, y) = brute_grid(times, events);
    let mut num = 0.0;
    let mut var = 0.0;
    for (k, &t) in ft.iter().enumerate() {
        let (dt, yt) = (d[k] as f64, y[k] as f64);
        let dl = (0..times.len()).filter(|&i| left[i] && times[i] == t && events[i]).count() as f64;
        let yl = (0..times.len()).filter(|&i| left[i] && times[i] >= t).count() as f64;
        let alpha = dt / yt;
        let beta = if yt > 1.0 { (yt - dt) / (yt - 1.0) * dt / (yt * yt) } else { 0.0 };
        num += dl - yl * alpha;
        var += yl * (yt - yl) * beta;
    }
    (num, var)
}

/// `gamma_i = sum_t 1{T_i >= t} alpha_t`, summed directly.
pub fn brute_gamma(times: &[f64], events: &[bool]) -> Vec<f64> {
    let (ft, d, y) = brute_grid(times, events);
    times
        .iter()
        .map(|&ti| {
            ft.iter()
                .enumerate()
                .filter(|(_, &t)| ti >= t)
                .map(|(k, _)| d[k] as f64 / y[k] as f64)
                .sum()
        })
        .collect()
}

/// Left-set masks for every candidate split of `x`, in ascending threshold
/// order: one per distinct value except the largest.
pub fn candidate_masks(x: &[f64]) -> Vec<(f64, Vec<bool>)> {
    let mut vals = x.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals[..vals.len().saturating_sub(1)]
        .iter()
        .map(|&c| (c, x.iter().map(|&v| v <= c).collect()))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

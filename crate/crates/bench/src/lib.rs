//! Shared fixtures for the criterion benchmarks.

use survsplit::simgen::{gen_poisson_bench, PoissonBenchConfig};
use survsplit::SurvivalDataset;

/// Poisson benchmark data with 10% censoring and a fixed seed.
pub fn fixture(n: usize, p: usize, target_m: usize) -> SurvivalDataset {
    gen_poisson_bench(&PoissonBenchConfig::new(n, p, target_m, 2024)).expect("benchmark fixture")
}

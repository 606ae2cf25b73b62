//! Synthetic survival data.
//!
//! [`gen_poisson_bench`] produces integer event times with a controlled number
//! of distinct failure times, for timing studies. [`gen_ph`] produces a
//! proportional-hazards sample together with its exact survival probability at
//! a horizon, for accuracy studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonBenchConfig {
    pub n: usize,
    pub p: usize,
    /// Approximate number of distinct failure times.
    pub target_m: usize,
    pub censor_rate: f64,
    pub seed: u64,
}

impl PoissonBenchConfig {
    pub fn new(n: usize, p: usize, target_m: usize, seed: u64) -> Self {
        PoissonBenchConfig {
            n,
            p,
            target_m,
            censor_rate: 0.10,
            seed,
        }
    }
}

/// Relative tolerance on the realized number of distinct failure times.
pub const TARGET_M_TOLERANCE: f64 = 0.15;

const MAX_CALIBRATION_STEPS: usize = 200;

fn uniform_columns(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn outcome_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn poisson_outcomes(n: usize, lambda: f64, censor_rate: f64, seed: u64) -> Result<(Vec<f64>, Vec<bool>)> {
    let pois = Poisson::new(lambda).map_err(|e| Error::Config(format!("poisson rate {lambda}: {e}")))?;
    let mut rng = outcome_rng(seed);
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let t: f64 = pois.sample(&mut rng);
        let censored = rng.random::<f64>() < censor_rate;
        // always consume the redraw so the stream stays aligned across units
        let redraw = rng.random_range(0..=t as u64) as f64;
        if censored {
            times.push(redraw);
            events.push(false);
        } else {
            times.push(t);
            events.push(true);
        }
    }
    Ok((times, events))
}

fn distinct_failure_times(times: &[f64], events: &[bool]) -> usize {
    let mut f: Vec<u64> = times
        .iter()
        .zip(events)
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t as u64)
        .collect();
    f.sort_unstable();
    f.dedup();
    f.len()
}

/// Finds a Poisson rate whose draw (under the config seed) realizes a number of
/// distinct failure times within the tolerance of `target_m`. Starts at
/// `target_m`, brackets by doubling or halving, then bisects on a log scale.
pub fn calibrate_poisson_rate(cfg: &PoissonBenchConfig) -> Result<f64> {
    let lo_ok = (cfg.target_m as f64 * (1.0 - TARGET_M_TOLERANCE)).ceil() as usize;
    let hi_ok = (cfg.target_m as f64 * (1.0 + TARGET_M_TOLERANCE)).floor() as usize;
    let count = |lambda: f64| -> Result<usize> {
        let (t, e) = poisson_outcomes(cfg.n, lambda, cfg.censor_rate, cfg.seed)?;
        Ok(distinct_failure_times(&t, &e))
    };

    let mut lambda = cfg.target_m as f64;
    let mut below: Option<f64> = None;
    let mut above: Option<f64> = None;
    for _ in 0..MAX_CALIBRATION_STEPS {
        let m = count(lambda)?;
        if (lo_ok..=hi_ok).contains(&m) {
            return Ok(lambda);
        }
        if m < lo_ok {
            below = Some(lambda);
        } else {
            above = Some(lambda);
        }
        lambda = match (below, above) {
            (Some(b), Some(a)) => (b * a).sqrt(),
            (Some(b), None) => b * 2.0,
            (None, Some(a)) => a / 2.0,
            (None, None) => unreachable!(),
        };
        if !(1e-12..=1e15).contains(&lambda) {
            break;
        }
    }
    Err(Error::Config(format!(
        "cannot calibrate a Poisson rate giving {} distinct failure times with n = {}",
        cfg.target_m, cfg.n
    )))
}

fn validate_common(n: usize, p: usize, censor_rate: f64) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::Config("n and p must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&censor_rate) {
        return Err(Error::Config(format!("censor_rate must be in [0, 1), got {censor_rate}")));
    }
    Ok(())
}

/// Uniform(0,1) covariates, Poisson event times, and independent censoring
/// of each unit with probability `censor_rate` at a time drawn uniformly from
/// `{0, ..., T}`.
pub fn gen_poisson_bench(cfg: &PoissonBenchConfig) -> Result<SurvivalDataset> {
    validate_common(cfg.n, cfg.p, cfg.censor_rate)?;
    if cfg.target_m == 0 {
        return Err(Error::Config("target_m must be at least 1".into()));
    }
    let lambda = calibrate_poisson_rate(cfg)?;
    let (times, events) = poisson_outcomes(cfg.n, lambda, cfg.censor_rate, cfg.seed)?;
    SurvivalDataset::from_columns(uniform_columns(cfg.n, cfg.p, cfg.seed), times, events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PHConfig {
    pub n: usize,
    pub p: usize,
    pub baseline_rate: f64,
    /// Log hazard ratios, one per covariate.
    pub coef: Vec<f64>,
    /// Target fraction of censored samples.
    pub censor_rate: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl PHConfig {
    /// Three informative covariates (log hazard ratios 1.5, -1.0, 0.75), the
    /// rest noise; unit baseline hazard, 30% censoring, horizon 0.5.
    pub fn standard(n: usize, p: usize, seed: u64) -> Self {
        let coef = (0..p)
            .map(|j| match j {
                0 => 1.5,
                1 => -1.0,
                2 => 0.75,
                _ => 0.0,
            })
            .collect();
        PHConfig {
            n,
            p,
            baseline_rate: 1.0,
            coef,
            censor_rate: 0.3,
            horizon: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_common(self.n, self.p, self.censor_rate)?;
        if !(self.baseline_rate > 0.0 && self.baseline_rate.is_finite()) {
            return Err(Error::Config("baseline rate must be positive".into()));
        }
        if self.coef.len() != self.p {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                self.p,
                self.coef.len()
            )));
        }
        if self.coef.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("horizon must be non-negative".into()));
        }
        Ok(())
    }

    /// Hazard rate `baseline * exp(x . coef)`.
    pub fn hazard(&self, x: &[f64]) -> f64 {
        let lin: f64 = x.iter().zip(&self.coef).map(|(a, b)| a * b).sum();
        self.baseline_rate * lin.exp()
    }

    /// Exact `S(horizon; x)`.
    pub fn true_survival(&self, x: &[f64]) -> f64 {
        (-self.hazard(x) * self.horizon).exp()
    }
}

/// Rate of exponential censoring that censors `target` of the samples in
/// expectation, given their event hazards. With `C ~ Exp(c)` and
/// `T ~ Exp(r)`, `P(C < T) = c / (c + r)`, which increases in `c`.
fn censoring_rate_for(hazards: &[f64], target: f64) -> f64 {
    let frac = |c: f64| hazards.iter().map(|r| c / (c + r)).sum::<f64>() / hazards.len() as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while frac(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Proportional-hazards sample with exponential event and censoring times.
/// Returns the dataset and the exact survival probability at the horizon for
/// every sample.
pub fn gen_ph(cfg: &PHConfig) -> Result<(SurvivalDataset, Vec<f64>)> {
    cfg.validate()?;
    let columns = uniform_columns(cfg.n, cfg.p, cfg.seed);
    let hazards: Vec<f64> = (0..cfg.n)
        .map(|i| {
            let x: Vec<f64> = columns.iter().map(|c| c[i]).collect();
            cfg.hazard(&x)
        })
        .collect();
    let censor = (cfg.censor_rate > 0.0)
        .then(|| Exp::new(censoring_rate_for(&hazards, cfg.censor_rate)))
        .transpose()
        .map_err(|e| Error::Config(format!("censoring distribution: {e}")))?;

    let mut rng = outcome_rng(cfg.seed);
    let mut times = Vec::with_capacity(cfg.n);
    let mut events = Vec::with_capacity(cfg.n);
    for &rate in &hazards {
        let t: f64 = Exp::new(rate)
            .map_err(|e| Error::Config(format!("event distribution: {e}")))?
            .sample(&mut rng);
        match &censor {
            Some(c) => {
                let ct: f64 = c.sample(&mut rng);
                times.push(t.min(ct));
                events.push(t <= ct);
            }
            None => {
                times.push(t);
                events.push(true);
            }
        }
    }
    let truth = hazards.iter().map(|r| (-r * cfg.horizon).exp()).collect();
    Ok((SurvivalDataset::from_columns(columns, times, events)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_calibration_hits_target() {
        let d = gen_poisson_bench(&PoissonBenchConfig::new(20_000, 2, 20, 7)).unwrap();
        let m = d.failure_times().len();
        assert!((17..=23).contains(&m), "realized M = {m}");
    }

    #[test]
    fn poisson_without_censoring_has_all_events() {
        let cfg = PoissonBenchConfig {
            censor_rate: 0.0,
            ..PoissonBenchConfig::new(2_000, 3, 50, 1)
        };
        let d = gen_poisson_bench(&cfg).unwrap();
        assert!(d.events().iter().all(|&e| e));
    }

    #[test]
    fn poisson_is_deterministic() {
        let cfg = PoissonBenchConfig::new(3_000, 4, 130, 11);
        assert_eq!(gen_poisson_bench(&cfg).unwrap(), gen_poisson_bench(&cfg).unwrap());
    }

    #[test]
    fn poisson_infeasible_target_is_config_error() {
        let cfg = PoissonBenchConfig::new(50, 1, 500, 1);
        assert!(matches!(gen_poisson_bench(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn ph_without_effect_has_constant_truth() {
        let cfg = PHConfig {
            coef: vec![0.0; 3],
            baseline_rate: 1.0,
            horizon: std::f64::consts::LN_2,
            ..PHConfig::standard(200, 3, 5)
        };
        let (_, truth) = gen_ph(&cfg).unwrap();
        assert!(truth.iter().all(|s| (s - 0.5).abs() < 1e-15));
    }

    #[test]
    fn ph_censoring_fraction_matches_target() {
        let cfg = PHConfig::standard(5_000, 10, 3);
        let (d, _) = gen_ph(&cfg).unwrap();
        let frac = 1.0 - d.event_count() as f64 / d.n() as f64;
        assert!((frac - cfg.censor_rate).abs() <= 0.03, "censored fraction {frac}");
    }

    #[test]
    fn ph_rejects_bad_config() {
        let mut cfg = PHConfig::standard(10, 2, 0);
        cfg.baseline_rate = 0.0;
        assert!(gen_ph(&cfg).is_err());
        let mut cfg = PHConfig::standard(10, 2, 0);
        cfg.coef.push(1.0);
        assert!(gen_ph(&cfg).is_err());
    }
}

//! Percentile bootstrap intervals on top of maximum-likelihood refits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ArrivalDist;
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, Dataset, FitOptions, FitResult};

/// Intervals are reported only with at least this many resamples.
pub const MIN_RESAMPLES: usize = 100;
/// Largest tolerated share of failed refits.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub alpha: f64,
    pub master_seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { resamples: 1000, alpha: 0.05, master_seed: 0 }
    }
}

/// Replicate values and percentile interval for one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStatistic {
    /// A parameter name or `mean_journey`.
    pub name: String,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    /// Values from converged replicates, in replicate order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub alpha: f64,
    pub resamples: usize,
    pub refit_failures: usize,
    /// Every parameter followed by the mean journey time.
    pub statistics: Vec<BootstrapStatistic>,
}

impl BootstrapResult {
    pub fn statistic(&self, name: &str) -> Option<&BootstrapStatistic> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

/// RNG for replicate `index` of a run seeded with `master_seed`. Streams
/// depend only on the pair, never on scheduling.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `p (n - 1)` in the sorted sample).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let below = pos.floor() as usize;
    let above = (below + 1).min(sorted.len() - 1);
    let frac = pos - below as f64;
    sorted[below] + frac * (sorted[above] - sorted[below])
}

/// Resamples `data` with replacement `spec.resamples` times, refits each
/// replicate from the baseline estimate, and reports `(α/2, 1 - α/2)`
/// percentile intervals for every parameter and the mean journey time.
pub fn bootstrap_ci(
    data: &Dataset,
    baseline: &FitResult,
    arrival: &ArrivalDist,
    spec: &BootstrapSpec,
) -> Result<BootstrapResult> {
    if data.is_empty() {
        return Err(Error::EmptyInput("bootstrap needs at least one record".into()));
    }
    if spec.resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {}",
            spec.resamples
        )));
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", spec.alpha)));
    }
    if !baseline.converged {
        return Err(Error::InvalidParameter("baseline fit did not converge".into()));
    }

    let family = baseline.model.journey.family();
    let options = FitOptions { init: Some(baseline.params.clone()), ..Default::default() };
    let replicates: Vec<Option<(Vec<f64>, f64)>> = (0..spec.resamples)
        .into_par_iter()
        .map(|j| {
            let mut rng = replicate_rng(spec.master_seed, j as u64);
            let sample = data.resample(&mut rng);
            match fit_mle(&sample, family, arrival, &options) {
                Ok(fit) if fit.converged => Some((fit.params, fit.mean_journey)),
                _ => None,
            }
        })
        .collect();

    let failures = replicates.iter().filter(|r| r.is_none()).count();
    if failures as f64 > MAX_FAILURE_SHARE * spec.resamples as f64 {
        return Err(Error::InsufficientReplicates { failed: failures, total: spec.resamples });
    }
    let ok: Vec<&(Vec<f64>, f64)> = replicates.iter().flatten().collect();

    let mut columns: Vec<(String, f64, Vec<f64>)> = baseline
        .param_names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.clone(), baseline.params[i], ok.iter().map(|r| r.0[i]).collect()))
        .collect();
    columns.push(("mean_journey".into(), baseline.mean_journey, ok.iter().map(|r| r.1).collect()));

    let statistics = columns
        .into_iter()
        .map(|(name, point, values)| {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            BootstrapStatistic {
                name,
                point,
                lo: percentile(&sorted, spec.alpha / 2.0),
                hi: percentile(&sorted, 1.0 - spec.alpha / 2.0),
                values,
            }
        })
        .collect();

    Ok(BootstrapResult { alpha: spec.alpha, resamples: spec.resamples, refit_failures: failures, statistics })
}

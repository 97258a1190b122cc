//! Goodness of fit against the truncated journey-time marginal, and
//! datasets replicated from a fitted model.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Dataset, FitResult};
use crate::geometry::TimeTimePoint;
use crate::model::JourneyModel;

/// Proposals after which a low acceptance rate aborts rejection sampling.
pub const RUNAWAY_PROPOSALS: u64 = 100_000;
pub const MIN_ACCEPTANCE: f64 = 1e-4;
const KOLMOGOROV_TERMS: i32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub alpha: f64,
    /// `c(α) / √n`.
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Asymptotic constant `c(α) = sqrt(-ln(α/2) / 2)`; 1.358 at 0.05 and
/// 1.628 at 0.01.
pub fn ks_critical_constant(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{j-1} e^{-2 j² λ²}`,
/// truncated at 20 terms and clamped to `[0, 1]`.
pub fn kolmogorov_p_value(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let sum: f64 = (1..=KOLMOGOROV_TERMS)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `sup |F_n - F|` over sorted journey times, `F` the model marginal CDF.
pub fn ks_statistic(journey_times: &[f64], model: &JourneyModel) -> Result<f64> {
    let density = model.density()?;
    let mut sorted = journey_times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = density.marginal_journey_cdf(t);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.abs().max(below.abs())
        })
        .reduce(|| 0.0, f64::max))
}

/// One-sample K-S test of the observed journey times against the fitted
/// truncated marginal.
pub fn ks_test(data: &Dataset, fit: &FitResult, alpha: f64) -> Result<KsReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("K-S test needs at least one record".into()));
    }
    let times: Vec<f64> = data.journey_times().collect();
    let statistic = ks_statistic(&times, &fit.model)?;
    let n = data.len();
    let root_n = (n as f64).sqrt();
    let critical_value = ks_critical_constant(alpha) / root_n;
    Ok(KsReport {
        statistic,
        n,
        alpha,
        critical_value,
        p_value: kolmogorov_p_value(root_n * statistic),
        reject: statistic > critical_value,
    })
}

/// A dataset drawn from a model by rejection, with the proposal count.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub dataset: Dataset,
    pub proposals: u64,
    /// Accepted share of proposals; an independent estimate of `C(θ)`.
    pub acceptance_rate: f64,
}

/// Draws `n` observable records from `model` by proposing `x ~ h`,
/// `t ~ g` and keeping Zone 2 points.
pub fn sample_truncated<R: Rng + ?Sized>(model: &JourneyModel, n: usize, rng: &mut R) -> Result<Replicate> {
    let mut records = Vec::with_capacity(n);
    let mut proposals: u64 = 0;
    while records.len() < n {
        proposals += 1;
        let p = TimeTimePoint::new(model.arrival.sample_one(rng), model.journey.sample_one(rng));
        if model.windows.is_observable(p) {
            records.push(p);
        }
        if proposals == RUNAWAY_PROPOSALS {
            let rate = records.len() as f64 / proposals as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::RunawayRejection { rate });
            }
        }
    }
    let acceptance_rate = if proposals == 0 { f64::NAN } else { n as f64 / proposals as f64 };
    Ok(Replicate { dataset: Dataset::new(records, model.windows)?, proposals, acceptance_rate })
}

/// `n` records replicated from a fitted model, deterministic in `seed`.
pub fn replicate_dataset(fit: &FitResult, n: usize, seed: u64) -> Result<Replicate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_truncated(&fit.model, n, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{JourneyDist, JourneyFamily};
    use crate::estimation::{fit_mle, FitOptions};
    use crate::geometry::SurveyWindows;

    fn case1_model(rate: f64) -> JourneyModel {
        let w = SurveyWindows::new(6.0, 9.0, 7.0, 10.0, 0.0, 6.0).unwrap();
        JourneyModel::uniform(JourneyDist::exponential(rate).unwrap(), w).unwrap()
    }

    fn fitted(n: usize, seed: u64) -> (Dataset, FitResult) {
        let m = case1_model(0.5);
        let rep = sample_truncated(&m, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let fit = fit_mle(&rep.dataset, JourneyFamily::Exponential, &m.arrival, &FitOptions::default()).unwrap();
        (rep.dataset, fit)
    }

    #[test]
    fn critical_constants() {
        assert!((ks_critical_constant(0.05) - 1.358).abs() < 1e-3);
        assert!((ks_critical_constant(0.01) - 1.628).abs() < 1e-3);
    }

    #[test]
    fn kolmogorov_series_values() {
        // Q(1.358) ≈ 0.05, Q(1.628) ≈ 0.01.
        assert!((kolmogorov_p_value(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_p_value(1.628) - 0.01).abs() < 5e-4);
        assert_eq!(kolmogorov_p_value(0.0), 1.0);
        assert!(kolmogorov_p_value(5.0) < 1e-20);
    }

    #[test]
    fn single_record_at_median() {
        let (_, mut fit) = fitted(500, 1);
        fit.model = case1_model(0.5);
        let d = fit.model.density().unwrap();
        // Bisection for the marginal median.
        let (mut lo, mut hi) = (0.0, 4.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if d.marginal_journey_cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let one = Dataset::new(vec![TimeTimePoint::new(8.0, lo)], fit.model.windows).unwrap();
        let r = ks_test(&one, &fit, 0.05).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-9);
        assert_eq!(r.n, 1);
    }

    #[test]
    fn statistic_ignores_order_and_detects_shift() {
        let (data, fit) = fitted(800, 2);
        let a = ks_test(&data, &fit, 0.05).unwrap();
        let mut recs = data.records().to_vec();
        recs.reverse();
        let b = ks_test(&Dataset::new(recs.clone(), *data.windows()).unwrap(), &fit, 0.05).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert!((0.0..=1.0).contains(&a.statistic));
        // Shifting by +0.5 h; drop records leaving the zone.
        let shifted: Vec<TimeTimePoint> = recs.iter().map(|r| TimeTimePoint::new(r.x, r.t + 0.5)).collect();
        let (shifted, _) = Dataset::partition(shifted, *data.windows());
        let c = ks_test(&shifted, &fit, 0.05).unwrap();
        assert!(c.statistic > a.statistic);
    }

    #[test]
    fn replicate_properties() {
        let (_, fit) = fitted(300, 3);
        let empty = replicate_dataset(&fit, 0, 9).unwrap();
        assert!(empty.dataset.is_empty());
        let r1 = replicate_dataset(&fit, 400, 9).unwrap();
        let r2 = replicate_dataset(&fit, 400, 9).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.dataset.records().iter().all(|p| fit.model.windows.is_observable(*p)));
    }

    #[test]
    fn runaway_rejection() {
        // Journeys of ~10^5 h almost never reach a 1-hour downstream window.
        let w = SurveyWindows::new(6.0, 9.0, 7.0, 8.0, 0.0, 24.0).unwrap();
        let m = JourneyModel::uniform(JourneyDist::exponential(1e-5).unwrap(), w).unwrap();
        let r = sample_truncated(&m, 10, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(Error::RunawayRejection { .. })));
    }

    #[test]
    fn refit_self_test_is_conservative() {
        // With refitting the asymptotic critical value is conservative; the
        // rate is reported rather than gated.
        let (_, fit) = fitted(400, 4);
        let reps = 60;
        let rejections = (0..reps)
            .filter(|&i| {
                let rep = replicate_dataset(&fit, 400, 1000 + i).unwrap();
                let refit =
                    fit_mle(&rep.dataset, JourneyFamily::Exponential, &fit.model.arrival, &FitOptions::default()).unwrap();
                ks_test(&rep.dataset, &refit, 0.05).unwrap().reject
            })
            .count();
        assert!(rejections as f64 / reps as f64 <= 0.10, "{rejections}");
    }
}

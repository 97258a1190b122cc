mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twopoint_core::evaluation::{ks_statistic, sample_truncated};
use twopoint_core::{
    bootstrap_ci, fit_mle, ks_test, replicate_dataset, ArrivalDist, BootstrapSpec, FitOptions, JourneyFamily,
};

#[test]
fn large_replicate_tracks_marginal_cdf() {
    let m = case1_model(0.5);
    let rep = sample_truncated(&m, 1_000_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let t: Vec<f64> = rep.dataset.journey_times().collect();
    assert!(ks_statistic(&t, &m).unwrap() < 0.005);
    let c = m.normalization().unwrap().value;
    let sigma = (c * (1.0 - c) / rep.proposals as f64).sqrt();
    assert!((rep.acceptance_rate - c).abs() < 3.0 * sigma);
}

#[test]
fn parametric_self_test_rejection_rate() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let base = observed(&case1_model(0.5), 2000, 1);
    let fit = fit_mle(&base, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
    let reps = 200;
    let rejected = (0..reps)
        .filter(|&i| {
            let r = replicate_dataset(&fit, 2000, 500 + i).unwrap();
            ks_test(&r.dataset, &fit, 0.05).unwrap().reject
        })
        .count();
    let rate = rejected as f64 / reps as f64;
    assert!((0.005..=0.10).contains(&rate), "{rate}");
}

#[test]
fn bootstrap_case1_contains_truth_and_agrees_with_fisher() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let d = observed(&case1_model(0.5), 12_000, 2);
    let fit = fit_mle(&d, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
    let spec = BootstrapSpec { resamples: 500, alpha: 0.05, master_seed: 9 };
    let b = bootstrap_ci(&d, &fit, &a, &spec).unwrap();
    assert_eq!(b.refit_failures, 0);
    let mean = b.statistic("mean_journey").unwrap();
    assert!(mean.lo <= 2.0 && 2.0 <= mean.hi, "[{}, {}]", mean.lo, mean.hi);
    assert!(mean.lo <= mean.point && mean.point <= mean.hi);

    let fisher = fit.ci_fisher.as_ref().unwrap().mean.unwrap();
    let overlap = (fisher.hi.min(mean.hi) - fisher.lo.max(mean.lo)).max(0.0);
    let union = fisher.hi.max(mean.hi) - fisher.lo.min(mean.lo);
    assert!(overlap / union > 0.5, "jaccard {}", overlap / union);

    let again = bootstrap_ci(&d, &fit, &a, &spec).unwrap();
    assert_eq!(b, again);
}

#[test]
fn bootstrap_independent_of_thread_count() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let d = observed(&case1_model(0.5), 500, 4);
    let fit = fit_mle(&d, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
    let spec = BootstrapSpec { resamples: 120, alpha: 0.1, master_seed: 1 };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| bootstrap_ci(&d, &fit, &a, &spec).unwrap());
    assert_eq!(serial, bootstrap_ci(&d, &fit, &a, &spec).unwrap());
}

#[test]
fn weibull_bootstrap_runs() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let m = case1_model(0.5).with_journey(twopoint_core::JourneyDist::weibull(0.8, 2.0).unwrap());
    let d = observed(&m, 1500, 5);
    let fit = fit_mle(&d, JourneyFamily::Weibull, &a, &FitOptions::default()).unwrap();
    let b = bootstrap_ci(&d, &fit, &a, &BootstrapSpec { resamples: 100, alpha: 0.05, master_seed: 2 }).unwrap();
    assert_eq!(b.statistics.len(), 3);
    for s in &b.statistics {
        assert!(s.lo <= s.hi);
    }
}

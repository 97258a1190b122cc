mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twopoint_core::estimation::LogLikelihood;
use twopoint_core::{
    fisher_ci, fit_mle, observed_information, score, simulate_survey, total_log_likelihood, ArrivalDist, FitOptions,
    JourneyDist, JourneyFamily, JourneyModel, SimConfig,
};

fn case1_sim(population: usize, seed: u64) -> SimConfig {
    SimConfig {
        windows: case1(),
        journey: JourneyDist::exponential_with_mean(2.0).unwrap(),
        arrival: ArrivalDist::uniform(6.0, 9.0).unwrap(),
        population,
        seed,
    }
}

#[test]
fn exponential_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..50 {
        let w = random_windows(&mut rng, 0.0..0.5);
        let arrival = random_arrival(&mut rng, &w);
        let truth = JourneyModel::new(JourneyDist::exponential(rng.random_range(0.2..2.0)).unwrap(), arrival, w).unwrap();
        let d = observed(&truth, 200, case);
        let rate = rng.random_range(0.1..3.0);
        let m = truth.with_journey(JourneyDist::exponential(rate).unwrap());
        let ll = LogLikelihood::new(&d, JourneyFamily::Exponential, &m.arrival).unwrap();
        let an_s = score(&d, &m).unwrap()[0];
        let fd_s = ll.numeric_gradient(&[rate]).unwrap()[0];
        assert!((an_s - fd_s).abs() / an_s.abs().max(fd_s.abs()).max(1.0) < 1e-5, "score {an_s} vs {fd_s}");
        let an_i = observed_information(&d, &m).unwrap()[0][0];
        let fd_i = -ll.numeric_hessian(&[rate]).unwrap()[0][0];
        assert!(rel_err(an_i, fd_i) < 1e-4, "info {an_i} vs {fd_i}");
    }
}

#[test]
fn likelihood_peaks_at_estimate() {
    let s = simulate_survey(&case1_sim(10_000, 42)).unwrap();
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let fit = fit_mle(&s.survivors, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let u: f64 = rng.random_range(0.01..0.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let m = fit.model.with_journey(JourneyDist::exponential(fit.params[0] * u.exp()).unwrap());
        assert!(fit.loglik > total_log_likelihood(&s.survivors, &m).unwrap());
    }
    let truth = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), case1()).unwrap();
    assert!(fit.loglik >= total_log_likelihood(&s.survivors, &truth).unwrap());
    assert!(score(&s.survivors, &fit.model).unwrap()[0].abs() < 1e-6 * s.survivors.len() as f64);
}

#[test]
fn truncation_reduces_information() {
    let s = simulate_survey(&case1_sim(20_000, 5)).unwrap();
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let fit = fit_mle(&s.survivors, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
    let per_obs = fit.observed_info[0][0] / fit.n as f64;
    assert!(per_obs < 1.0 / (fit.params[0] * fit.params[0]));
}

#[test]
fn truncation_corrects_bias_on_every_seed() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    for seed in 0..50 {
        let s = simulate_survey(&case1_sim(20_000, seed)).unwrap();
        let fit = fit_mle(&s.survivors, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
        assert!(fit.naive_mean < 2.0);
        assert!(fit.naive_mean < fit.mean_journey);
        assert!((fit.mean_journey - 2.0).abs() < (fit.naive_mean - 2.0).abs(), "seed {seed}");
    }
}

#[test]
fn interval_width_scales_with_root_n() {
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let width = |population| {
        let s = simulate_survey(&case1_sim(population, 77)).unwrap();
        let fit = fit_mle(&s.survivors, JourneyFamily::Exponential, &a, &FitOptions::default()).unwrap();
        fisher_ci(&fit, 0.05).unwrap().mean.unwrap().width()
    };
    let ratio = width(5_000) / width(20_000);
    assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
}

#[test]
fn weibull_recovery_case2() {
    let mut c = case1_sim(20_000, 2);
    c.journey = JourneyDist::weibull(0.75, 2.0).unwrap();
    c.windows.max_journey = 24.0;
    let s = simulate_survey(&c).unwrap();
    let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
    let fit = fit_mle(&s.survivors, JourneyFamily::Weibull, &a, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!((fit.params[0] / 0.75 - 1.0).abs() < 0.10, "{:?}", fit.params);
    assert!((fit.params[1] / 2.0 - 1.0).abs() < 0.10, "{:?}", fit.params);
    assert!((fit.mean_journey / 2.38 - 1.0).abs() < 0.07);
    let s_hat = score(&s.survivors, &fit.model).unwrap();
    assert!(s_hat.iter().all(|v| v.abs() < 1e-6 * fit.n as f64), "{s_hat:?}");
}

#[test]
fn weibull_derivatives_consistent() {
    // Finite-difference score of the frozen likelihood against a wider-step
    // central difference of the unfrozen one.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..10 {
        let w = random_windows(&mut rng, 0.05..0.5);
        let truth = JourneyModel::uniform(random_journey(&mut rng), w).unwrap();
        let d = observed(&truth, 200, 100 + case);
        let k = rng.random_range(0.6..2.0);
        let lam = rng.random_range(0.8..3.0);
        let ll = LogLikelihood::new(&d, JourneyFamily::Weibull, &truth.arrival).unwrap();
        let g = ll.numeric_gradient(&[k, lam]).unwrap();
        for j in 0..2 {
            let h = 1e-3;
            let mut p = vec![k, lam];
            p[j] += h;
            let up = ll.value(&p).unwrap();
            p[j] -= 2.0 * h;
            let down = ll.value(&p).unwrap();
            let wide = (up - down) / (2.0 * h);
            assert!((g[j] - wide).abs() / g[j].abs().max(1.0) < 1e-3, "{} vs {wide}", g[j]);
        }
    }
}

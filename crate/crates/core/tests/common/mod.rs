#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twopoint_core::evaluation::sample_truncated;
use twopoint_core::{ArrivalDist, Dataset, JourneyDist, JourneyModel, SurveyWindows};

pub fn case1() -> SurveyWindows {
    SurveyWindows::new(6.0, 9.0, 7.0, 10.0, 0.0, 6.0).unwrap()
}

pub fn case1_model(rate: f64) -> JourneyModel {
    JourneyModel::uniform(JourneyDist::exponential(rate).unwrap(), case1()).unwrap()
}

pub fn observed(model: &JourneyModel, n: usize, seed: u64) -> Dataset {
    sample_truncated(model, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().dataset
}

/// Random valid windows with `t_ff` drawn from `tff`.
pub fn random_windows<R: Rng>(rng: &mut R, tff: std::ops::Range<f64>) -> SurveyWindows {
    loop {
        let xs = rng.random_range(0.0..10.0);
        let w = SurveyWindows::new(
            xs,
            xs + rng.random_range(1.0..5.0),
            xs + rng.random_range(0.0..3.0),
            xs + rng.random_range(3.0..9.0),
            rng.random_range(tff.clone()),
            rng.random_range(5.0..12.0),
        );
        if let Ok(w) = w {
            return w;
        }
    }
}

pub fn random_journey<R: Rng>(rng: &mut R) -> JourneyDist {
    if rng.random_bool(0.5) {
        JourneyDist::exponential(rng.random_range(0.2..2.0)).unwrap()
    } else {
        JourneyDist::weibull(rng.random_range(0.6..2.5), rng.random_range(0.5..4.0)).unwrap()
    }
}

/// Piecewise-linear arrival density on the window with random knot heights.
pub fn random_arrival<R: Rng>(rng: &mut R, w: &SurveyWindows) -> ArrivalDist {
    if rng.random_bool(0.5) {
        return ArrivalDist::uniform(w.upstream_start, w.upstream_end).unwrap();
    }
    let n = 6;
    let times: Vec<f64> = (0..n)
        .map(|i| w.upstream_start + (w.upstream_end - w.upstream_start) * i as f64 / (n - 1) as f64)
        .collect();
    let heights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    let mass: f64 = (1..n).map(|i| 0.5 * (heights[i] + heights[i - 1]) * (times[i] - times[i - 1])).sum();
    ArrivalDist::empirical(
        times
            .iter()
            .zip(&heights)
            .map(|(&time, &h)| twopoint_core::Knot { time, density: h / mass })
            .collect(),
    )
    .unwrap()
}

/// Recursive adaptive Simpson, independent of the library's quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// Adaptive Simpson on each piece between sorted interior `breaks`.
pub fn piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|s| adaptive_simpson(f, s[0], s[1], tol)).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

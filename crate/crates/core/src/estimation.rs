//! Maximum-likelihood fitting of the truncated model, observed information
//! and asymptotic confidence intervals.
//!
//! Parameters are optimized on the log scale so every step stays positive.
//! The exponential family has closed-form score and information built from
//! three one-dimensional integrals over the upstream window; the Weibull
//! family uses central finite differences of the log-likelihood.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distributions::{ArrivalDist, JourneyDist, JourneyFamily};
use crate::error::{Error, Result};
use crate::geometry::{SurveyWindows, TimeTimePoint, Zone};
use crate::model::{x_breakpoints, zone2_integral, JourneyModel, MIN_MASS};
use crate::optimize::{solve, spd_inverse, NelderMead};
use crate::quadrature::integrate;

/// One re-identified vehicle: upstream arrival `x` and journey time `t`.
pub type ReidRecord = TimeTimePoint;

/// Exponential rate search interval.
pub const RATE_BOUNDS: (f64, f64) = (1e-6, 1e3);
const RATE_SWEEP_POINTS: usize = 91;
const SCORE_STEP: f64 = 1e-6;
const HESSIAN_STEP: f64 = 1e-4;
const POLISH_STEPS: usize = 8;

/// Re-identified records, all inside the observable zone of `windows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<ReidRecord>,
    windows: SurveyWindows,
}

impl Dataset {
    /// Fails with the indices of records outside Zone 2.
    pub fn new(records: Vec<ReidRecord>, windows: SurveyWindows) -> Result<Self> {
        let bad: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| windows.classify(**r) != Zone::Zone2)
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::OutsideObservableZone(bad));
        }
        Ok(Self { records, windows })
    }

    /// Keeps the observable records and returns the indices of the rest.
    pub fn partition(records: Vec<ReidRecord>, windows: SurveyWindows) -> (Self, Vec<usize>) {
        let mut kept = Vec::with_capacity(records.len());
        let mut excluded = Vec::new();
        for (i, r) in records.into_iter().enumerate() {
            if windows.classify(r) == Zone::Zone2 {
                kept.push(r);
            } else {
                excluded.push(i);
            }
        }
        (Self { records: kept, windows }, excluded)
    }

    pub fn records(&self) -> &[ReidRecord] {
        &self.records
    }

    pub fn windows(&self) -> &SurveyWindows {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn journey_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    pub fn upstream_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.x).collect()
    }

    /// Sample mean of journey times, ignoring truncation.
    pub fn naive_mean(&self) -> f64 {
        self.journey_times().sum::<f64>() / self.len() as f64
    }

    /// Same size, drawn with replacement.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Dataset {
        let n = self.records.len();
        let records = (0..n).map(|_| self.records[rng.random_range(0..n)]).collect();
        Dataset { records, windows: self.windows }
    }

    /// Concatenation with itself `k` times.
    pub fn repeated(&self, k: usize) -> Dataset {
        let records = (0..k).flat_map(|_| self.records.iter().copied()).collect();
        Dataset { records, windows: self.windows }
    }
}

/// Log-likelihood of a dataset as a function of the journey parameters, with
/// the data-dependent sums precomputed.
#[derive(Debug, Clone)]
pub struct LogLikelihood<'a> {
    family: JourneyFamily,
    arrival: &'a ArrivalDist,
    windows: SurveyWindows,
    journey_times: Vec<f64>,
    n: f64,
    sum_t: f64,
    sum_ln_t: f64,
    /// Σ ln h(x_i) with h normalized.
    sum_ln_h: f64,
    arrival_mass: f64,
    rule: Option<Vec<usize>>,
}

impl<'a> LogLikelihood<'a> {
    pub fn new(data: &Dataset, family: JourneyFamily, arrival: &'a ArrivalDist) -> Result<Self> {
        let windows = *data.windows();
        let arrival_mass = arrival.total_mass();
        let mut sum_ln_h = 0.0;
        for (i, r) in data.records().iter().enumerate() {
            let h = arrival.density(r.x) / arrival_mass;
            if windows.classify(*r) != Zone::Zone2 || !(h > 0.0) {
                return Err(Error::NonFinite(format!("record {i} ({}, {}) has zero model density", r.x, r.t)));
            }
            sum_ln_h += h.ln();
        }
        let journey_times: Vec<f64> = data.journey_times().collect();
        Ok(Self {
            family,
            arrival,
            windows,
            n: journey_times.len() as f64,
            sum_t: journey_times.iter().sum(),
            sum_ln_t: journey_times.iter().map(|t| t.ln()).sum(),
            journey_times,
            sum_ln_h,
            arrival_mass,
            rule: None,
        })
    }

    pub fn family(&self) -> JourneyFamily {
        self.family
    }

    /// Copy whose normalization quadrature reuses the panels chosen at
    /// `params`, making it smooth in a neighborhood of `params`.
    pub fn frozen_at(&self, params: &[f64]) -> Result<Self> {
        let dist = JourneyDist::from_params(self.family, params)?;
        let q = zone2_integral(&self.windows, self.arrival, &dist, None);
        Ok(Self { rule: Some(q.rule), ..self.clone() })
    }

    pub fn ln_normalization(&self, dist: &JourneyDist) -> Result<f64> {
        let q = zone2_integral(&self.windows, self.arrival, dist, self.rule.as_deref());
        let c = q.value / self.arrival_mass;
        if !(c >= MIN_MASS) {
            return Err(Error::DegenerateZone { mass: c });
        }
        Ok(c.ln())
    }

    pub fn value(&self, params: &[f64]) -> Result<f64> {
        if self.n == 0.0 {
            return Ok(0.0);
        }
        let dist = JourneyDist::from_params(self.family, params)?;
        let sum_ln_g = match dist {
            JourneyDist::Exponential { rate } => self.n * rate.ln() - rate * self.sum_t,
            JourneyDist::Weibull { shape, scale } => {
                let power_sum: f64 = self.journey_times.iter().map(|t| (t / scale).powf(shape)).sum();
                self.n * (shape.ln() - shape * scale.ln()) + (shape - 1.0) * self.sum_ln_t - power_sum
            }
        };
        let ll = sum_ln_g + self.sum_ln_h - self.n * self.ln_normalization(&dist)?;
        if ll.is_finite() {
            Ok(ll)
        } else {
            Err(Error::NonFinite(format!("log-likelihood at {params:?} is {ll}")))
        }
    }

    /// Central-difference gradient with step `1e-6 * max(1, |θ_j|)`.
    pub fn numeric_gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        let frozen = self.frozen_at(params)?;
        (0..params.len())
            .map(|j| {
                let h = SCORE_STEP * params[j].abs().max(1.0);
                let mut p = params.to_vec();
                p[j] = params[j] + h;
                let up = frozen.value(&p)?;
                p[j] = params[j] - h;
                let down = frozen.value(&p)?;
                Ok((up - down) / (2.0 * h))
            })
            .collect()
    }

    /// Central second-difference Hessian with step `1e-4 * max(1, |θ_j|)`,
    /// symmetrized.
    pub fn numeric_hessian(&self, params: &[f64]) -> Result<Vec<Vec<f64>>> {
        let frozen = self.frozen_at(params)?;
        let k = params.len();
        let steps: Vec<f64> = params.iter().map(|p| HESSIAN_STEP * p.abs().max(1.0)).collect();
        let at = |shifts: &[(usize, f64)]| -> Result<f64> {
            let mut p = params.to_vec();
            for &(j, d) in shifts {
                p[j] += d;
            }
            frozen.value(&p)
        };
        let center = frozen.value(params)?;
        let mut hess = vec![vec![0.0; k]; k];
        for i in 0..k {
            let hi = steps[i];
            hess[i][i] = (at(&[(i, hi)])? - 2.0 * center + at(&[(i, -hi)])?) / (hi * hi);
            for j in 0..i {
                let hj = steps[j];
                let v = (at(&[(i, hi), (j, hj)])? - at(&[(i, hi), (j, -hj)])? - at(&[(i, -hi), (j, hj)])?
                    + at(&[(i, -hi), (j, -hj)])?)
                    / (4.0 * hi * hj);
                hess[i][j] = v;
                hess[j][i] = v;
            }
        }
        Ok(symmetrize(hess))
    }
}

fn symmetrize(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = m.len();
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
    m
}

/// The truncation integrals of the exponential score and information,
/// each divided by `v`:
///
/// `v = ∫ h (e^{-λ b_l} - e^{-λ b_u})`,
/// `u = ∫ h (b_l e^{-λ b_l} - b_u e^{-λ b_u})`,
/// `w = ∫ h (b_l² e^{-λ b_l} - b_u² e^{-λ b_u})`.
///
/// Exponentials are shifted by the smallest observable journey time so that
/// large rates do not underflow; the shift cancels in the ratios.
#[derive(Debug, Clone, Copy)]
struct ExpTruncationTerms {
    u_over_v: f64,
    w_over_v: f64,
}

fn exp_truncation_terms(windows: &SurveyWindows, arrival: &ArrivalDist, rate: f64) -> Result<ExpTruncationTerms> {
    let shift = windows.min_observable_journey();
    let breaks = x_breakpoints(windows, arrival, &[]);
    let moment = |power: i32| {
        integrate(
            |x| match windows.bounds_at(x) {
                Some((lo, hi)) => {
                    let el = (-rate * (lo - shift)).exp();
                    let eu = (-rate * (hi - shift)).exp();
                    arrival.density(x) * (lo.powi(power) * el - hi.powi(power) * eu)
                }
                None => 0.0,
            },
            windows.upstream_start,
            windows.upstream_end,
            &breaks,
        )
        .value
    };
    let v = moment(0);
    if !(v > 0.0) {
        return Err(Error::DegenerateZone { mass: v });
    }
    Ok(ExpTruncationTerms { u_over_v: moment(1) / v, w_over_v: moment(2) / v })
}

fn exp_score_terms(data_n: f64, sum_t: f64, rate: f64, terms: ExpTruncationTerms) -> (f64, f64) {
    let score = data_n / rate - sum_t + data_n * terms.u_over_v;
    let second = -data_n / (rate * rate) - data_n * (terms.w_over_v - terms.u_over_v * terms.u_over_v);
    (score, second)
}

/// Sum of [`JourneyModel::log_pdf`] over the records.
pub fn total_log_likelihood(data: &Dataset, model: &JourneyModel) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let d = Dataset { records: data.records.clone(), windows: model.windows };
    LogLikelihood::new(&d, model.journey.family(), &model.arrival)?.value(&model.journey.params())
}

/// Gradient of the total log-likelihood with respect to the parameters in
/// [`JourneyDist::params`] order.
pub fn score(data: &Dataset, model: &JourneyModel) -> Result<Vec<f64>> {
    match model.journey {
        JourneyDist::Exponential { rate } => {
            let terms = exp_truncation_terms(&model.windows, &model.arrival, rate)?;
            let sum_t: f64 = data.journey_times().sum();
            Ok(vec![exp_score_terms(data.len() as f64, sum_t, rate, terms).0])
        }
        JourneyDist::Weibull { .. } => {
            let d = Dataset { records: data.records.clone(), windows: model.windows };
            LogLikelihood::new(&d, JourneyFamily::Weibull, &model.arrival)?.numeric_gradient(&model.journey.params())
        }
    }
}

/// Negative Hessian of the total log-likelihood.
pub fn observed_information(data: &Dataset, model: &JourneyModel) -> Result<Vec<Vec<f64>>> {
    match model.journey {
        JourneyDist::Exponential { rate } => {
            let terms = exp_truncation_terms(&model.windows, &model.arrival, rate)?;
            let sum_t: f64 = data.journey_times().sum();
            Ok(vec![vec![-exp_score_terms(data.len() as f64, sum_t, rate, terms).1]])
        }
        JourneyDist::Weibull { .. } => {
            let d = Dataset { records: data.records.clone(), windows: model.windows };
            let hess = LogLikelihood::new(&d, JourneyFamily::Weibull, &model.arrival)?
                .numeric_hessian(&model.journey.params())?;
            Ok(hess.into_iter().map(|row| row.into_iter().map(|v| -v).collect()).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Starting parameters; defaults to untruncated moment estimates.
    pub init: Option<Vec<f64>>,
    /// Holds the Weibull shape fixed and fits the scale only.
    pub fixed_shape: Option<f64>,
    pub alpha: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { init: None, fixed_shape: None, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Wald intervals from the observed information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherIntervals {
    pub alpha: f64,
    pub z: f64,
    /// One interval per free parameter.
    pub params: Vec<Interval>,
    /// Mean journey time; exponential only.
    pub mean: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: JourneyModel,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Parameters the information matrix, standard errors and intervals
    /// refer to (all of them unless the shape was held fixed).
    pub free_params: Vec<String>,
    pub mean_journey: f64,
    pub loglik: f64,
    pub observed_info: Vec<Vec<f64>>,
    pub info_positive_definite: bool,
    pub se: Option<Vec<f64>>,
    pub ci_fisher: Option<FisherIntervals>,
    pub survivor_fraction: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
    /// Σt/n, the estimate that ignores truncation.
    pub naive_mean: f64,
}

/// Two-sided standard normal quantile `z^{1 - α/2}`.
pub fn normal_quantile(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Wald intervals `θ̂_j ± z sqrt([I⁻¹]_jj)`. The exponential mean interval
/// maps the rate endpoints through `1/λ`.
pub fn fisher_ci(fit: &FitResult, alpha: f64) -> Result<FisherIntervals> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let cov = spd_inverse(&fit.observed_info).ok_or(Error::NotPositiveDefinite)?;
    let z = normal_quantile(alpha);
    let free: Vec<f64> = fit
        .free_params
        .iter()
        .map(|name| fit.params[fit.param_names.iter().position(|p| p == name).unwrap()])
        .collect();
    let params: Vec<Interval> = free
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let half = z * cov[j][j].sqrt();
            Interval { lo: v - half, hi: v + half }
        })
        .collect();
    let mean = match fit.model.journey {
        JourneyDist::Exponential { .. } if params[0].lo > 0.0 => {
            Some(Interval { lo: 1.0 / params[0].hi, hi: 1.0 / params[0].lo })
        }
        _ => None,
    };
    Ok(FisherIntervals { alpha, z, params, mean })
}

struct Optimum {
    params: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Maximizes the truncated log-likelihood of `data` for the given journey
/// family and arrival density.
pub fn fit_mle(data: &Dataset, family: JourneyFamily, arrival: &ArrivalDist, options: &FitOptions) -> Result<FitResult> {
    let need = family.min_records();
    if data.len() < need {
        return Err(Error::InsufficientData { got: data.len(), need });
    }
    let model = JourneyModel::new(JourneyDist::from_params(family, &default_init(data, family))?, arrival.clone(), *data.windows())?;
    let ll = LogLikelihood::new(data, family, arrival)?;
    if let Some(init) = &options.init {
        JourneyDist::from_params(family, init)?;
    }

    let opt = match family {
        JourneyFamily::Exponential => fit_exponential(data, &ll, options)?,
        JourneyFamily::Weibull => fit_weibull(data, &ll, options)?,
    };

    let journey = JourneyDist::from_params(family, &opt.params)?;
    let model = model.with_journey(journey);
    let loglik = ll.value(&opt.params)?;
    let survivor_fraction = model.normalization()?.value;

    let full_info = observed_information(data, &model)?;
    let (free_params, observed_info): (Vec<String>, Vec<Vec<f64>>) = match options.fixed_shape {
        Some(_) if family == JourneyFamily::Weibull => (vec!["scale".into()], vec![vec![full_info[1][1]]]),
        _ => (family.param_names().iter().map(|s| s.to_string()).collect(), full_info),
    };

    let mut fit = FitResult {
        param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
        params: opt.params,
        free_params,
        mean_journey: journey.mean(),
        loglik,
        info_positive_definite: spd_inverse(&observed_info).is_some(),
        observed_info,
        se: None,
        ci_fisher: None,
        survivor_fraction,
        converged: opt.converged,
        iterations: opt.iterations,
        n: data.len(),
        naive_mean: data.naive_mean(),
        model,
    };
    if fit.info_positive_definite {
        let cov = spd_inverse(&fit.observed_info).expect("checked positive definite");
        fit.se = Some((0..cov.len()).map(|j| cov[j][j].sqrt()).collect());
        fit.ci_fisher = fisher_ci(&fit, options.alpha).ok();
    }
    Ok(fit)
}

fn default_init(data: &Dataset, family: JourneyFamily) -> Vec<f64> {
    let mean = data.naive_mean().max(1e-6);
    match family {
        JourneyFamily::Exponential => vec![1.0 / mean],
        JourneyFamily::Weibull => vec![1.0, mean],
    }
}

/// Log-grid sweep of the score over [`RATE_BOUNDS`] to bracket the maxima,
/// then safeguarded Newton on `ln λ` inside the smallest-rate bracket.
/// More than one bracket, or none, leaves `converged = false`.
fn fit_exponential(data: &Dataset, ll: &LogLikelihood<'_>, options: &FitOptions) -> Result<Optimum> {
    let n = data.len() as f64;
    let sum_t: f64 = data.journey_times().sum();
    let windows = *data.windows();
    let arrival = ll.arrival;
    let eval = |eta: f64| -> Result<(f64, f64)> {
        let rate = eta.exp();
        let terms = exp_truncation_terms(&windows, arrival, rate)?;
        let (s, d2) = exp_score_terms(n, sum_t, rate, terms);
        // Chain rule onto η = ln λ.
        Ok((rate * s, rate * rate * d2 + rate * s))
    };

    let (lo, hi) = (RATE_BOUNDS.0.ln(), RATE_BOUNDS.1.ln());
    let grid: Vec<f64> =
        (0..RATE_SWEEP_POINTS).map(|i| lo + (hi - lo) * i as f64 / (RATE_SWEEP_POINTS - 1) as f64).collect();
    let scores: Vec<f64> = grid.iter().map(|&e| eval(e).map(|v| v.0)).collect::<Result<_>>()?;
    let brackets: Vec<usize> = (0..grid.len() - 1).filter(|&i| scores[i] > 0.0 && scores[i + 1] <= 0.0).collect();

    let Some(&first) = brackets.first() else {
        // Monotone likelihood: report the better end of the interval.
        let end = if scores[0] > 0.0 { hi } else { lo };
        return Ok(Optimum { params: vec![end.exp()], converged: false, iterations: 0 });
    };
    let (mut a, mut b) = (grid[first], grid[first + 1]);
    let start = options.init.as_ref().map(|p| p[0].ln()).unwrap_or_else(|| (1.0 / data.naive_mean()).ln());
    let mut eta = if start > a && start < b { start } else { 0.5 * (a + b) };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 200 {
        iterations += 1;
        let (g, h) = eval(eta)?;
        if g > 0.0 {
            a = eta;
        } else {
            b = eta;
        }
        let mut next = if h < 0.0 { eta - g / h } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = next - eta;
        eta = next;
        if step.abs() < 1e-12 || b - a < 1e-14 {
            converged = true;
            break;
        }
    }
    Ok(Optimum { params: vec![eta.exp()], converged: converged && brackets.len() == 1, iterations })
}

/// Nelder–Mead on `-LL(exp η)`, then Newton polishing with finite-difference
/// derivatives on a frozen quadrature rule.
fn fit_weibull(data: &Dataset, ll: &LogLikelihood<'_>, options: &FitOptions) -> Result<Optimum> {
    let init = options.init.clone().unwrap_or_else(|| default_init(data, JourneyFamily::Weibull));
    let nm = NelderMead::default();

    let (mut params, nm_converged, mut iterations) = match options.fixed_shape {
        Some(shape) => {
            if !(shape > 0.0 && shape.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed shape must be > 0, got {shape}")));
            }
            let r = nm.minimize(|e| -ll.value(&[shape, e[0].exp()]).unwrap_or(f64::NEG_INFINITY), &[init[1].ln()]);
            (vec![shape, r.x[0].exp()], r.converged, r.iterations)
        }
        None => {
            let r = nm.minimize(
                |e| -ll.value(&[e[0].exp(), e[1].exp()]).unwrap_or(f64::NEG_INFINITY),
                &[init[0].ln(), init[1].ln()],
            );
            (vec![r.x[0].exp(), r.x[1].exp()], r.converged, r.iterations)
        }
    };

    let free: Vec<usize> = if options.fixed_shape.is_some() { vec![1] } else { vec![0, 1] };
    for _ in 0..POLISH_STEPS {
        let frozen = ll.frozen_at(&params)?;
        let grad = frozen.numeric_gradient(&params)?;
        let hess = frozen.numeric_hessian(&params)?;
        let g: Vec<f64> = free.iter().map(|&i| grad[i]).collect();
        let h: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| -hess[i][j]).collect()).collect();
        // Newton step only where the surface is locally concave.
        if spd_inverse(&h).is_none() {
            break;
        }
        let Some(delta) = solve(&h, &g) else { break };
        let mut candidate = params.clone();
        for (k, &i) in free.iter().enumerate() {
            candidate[i] += delta[k];
        }
        if candidate.iter().any(|&v| !(v > 0.0)) {
            break;
        }
        let (now, next) = (frozen.value(&params)?, frozen.value(&candidate));
        match next {
            Ok(v) if v >= now => {
                iterations += 1;
                let small = free.iter().zip(&delta).all(|(&i, d)| d.abs() <= 1e-12 * params[i].abs().max(1.0));
                params = candidate;
                if small {
                    break;
                }
            }
            _ => break,
        }
    }
    Ok(Optimum { params, converged: nm_converged, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn case1() -> SurveyWindows {
        SurveyWindows::new(6.0, 9.0, 7.0, 10.0, 0.0, 6.0).unwrap()
    }

    fn sample_observed(model: &JourneyModel, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recs = Vec::with_capacity(n);
        while recs.len() < n {
            let p = TimeTimePoint::new(model.arrival.sample_one(&mut rng), model.journey.sample_one(&mut rng));
            if model.windows.is_observable(p) {
                recs.push(p);
            }
        }
        Dataset::new(recs, model.windows).unwrap()
    }

    #[test]
    fn dataset_rejects_and_partitions() {
        let w = case1();
        let recs = vec![TimeTimePoint::new(6.5, 1.0), TimeTimePoint::new(6.5, 4.0), TimeTimePoint::new(5.0, 3.0)];
        assert_eq!(Dataset::new(recs.clone(), w).unwrap_err(), Error::OutsideObservableZone(vec![1, 2]));
        let (d, excluded) = Dataset::partition(recs, w);
        assert_eq!(d.len(), 1);
        assert_eq!(excluded, vec![1, 2]);
    }

    #[test]
    fn empty_dataset_has_zero_likelihood() {
        let m = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), case1()).unwrap();
        let d = Dataset::new(vec![], case1()).unwrap();
        assert_eq!(total_log_likelihood(&d, &m).unwrap(), 0.0);
    }

    #[test]
    fn likelihood_matches_pointwise_sum_and_doubles() {
        let m = JourneyModel::uniform(JourneyDist::weibull(0.9, 1.5).unwrap(), case1()).unwrap();
        let d = sample_observed(&m, 200, 4);
        let dens = m.density().unwrap();
        let pointwise: f64 = d.records().iter().map(|r| dens.log_pdf(*r)).sum();
        let total = total_log_likelihood(&d, &m).unwrap();
        assert!((pointwise - total).abs() < 1e-9 * total.abs());
        let doubled = total_log_likelihood(&d.repeated(2), &m).unwrap();
        assert!((doubled - 2.0 * total).abs() < 1e-9 * total.abs());
    }

    #[test]
    fn untruncated_limit_closed_forms() {
        // Downstream window swallows every journey up to t_max = 200 h.
        let w = SurveyWindows::new(6.0, 9.0, 6.0, 209.0, 0.0, 200.0).unwrap();
        let m = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), w).unwrap();
        let d = sample_observed(&m, 500, 8);
        let sum_t: f64 = d.journey_times().sum();
        let n = d.len() as f64;
        let s = score(&d, &m).unwrap()[0];
        assert!((s - (n / 0.5 - sum_t)).abs() < 1e-6 * n, "{s}");
        let fit = fit_mle(&d, JourneyFamily::Exponential, &m.arrival, &FitOptions::default()).unwrap();
        let closed = n / sum_t;
        assert!(((fit.params[0] - closed) / closed).abs() < 1e-8);
        let info = fit.observed_info[0][0];
        let expected = n / (fit.params[0] * fit.params[0]);
        assert!(((info - expected) / expected).abs() < 1e-8, "{info} vs {expected}");
    }

    #[test]
    fn exponential_score_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..20 {
            let xs = rng.random_range(0.0..10.0);
            let w = SurveyWindows::new(
                xs,
                xs + rng.random_range(1.0..5.0),
                xs + rng.random_range(0.0..3.0),
                xs + rng.random_range(4.0..9.0),
                rng.random_range(0.0..0.4),
                rng.random_range(5.0..12.0),
            )
            .unwrap();
            let truth = JourneyModel::uniform(JourneyDist::exponential(rng.random_range(0.2..2.0)).unwrap(), w).unwrap();
            let d = sample_observed(&truth, 300, case);
            let rate = rng.random_range(0.1..3.0);
            let m = truth.with_journey(JourneyDist::exponential(rate).unwrap());
            let ll = LogLikelihood::new(&d, JourneyFamily::Exponential, &m.arrival).unwrap();
            let fd = ll.numeric_gradient(&[rate]).unwrap()[0];
            let an = score(&d, &m).unwrap()[0];
            assert!((an - fd).abs() / an.abs().max(fd.abs()).max(1.0) < 1e-5, "{an} vs {fd}");
        }
    }

    #[test]
    fn fit_is_stationary_and_information_positive() {
        let m = JourneyModel::uniform(JourneyDist::weibull(0.75, 2.0).unwrap(), case1()).unwrap();
        let d = sample_observed(&m, 3000, 11);
        let fit = fit_mle(&d, JourneyFamily::Weibull, &m.arrival, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let s = score(&d, &fit.model).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-6 * d.len() as f64), "{s:?}");
        assert!(fit.info_positive_definite);
        assert!(fit.ci_fisher.as_ref().unwrap().mean.is_none());
        assert!(fit.loglik >= total_log_likelihood(&d, &m).unwrap());
    }

    #[test]
    fn weibull_with_unit_shape_recovers_exponential() {
        let m = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), case1()).unwrap();
        let d = sample_observed(&m, 2000, 12);
        let e = fit_mle(&d, JourneyFamily::Exponential, &m.arrival, &FitOptions::default()).unwrap();
        let opts = FitOptions { fixed_shape: Some(1.0), ..Default::default() };
        let w = fit_mle(&d, JourneyFamily::Weibull, &m.arrival, &opts).unwrap();
        let rate = 1.0 / w.params[1];
        assert!(((rate - e.params[0]) / e.params[0]).abs() < 1e-6, "{rate} vs {}", e.params[0]);
        assert_eq!(w.free_params, vec!["scale".to_string()]);
        assert_eq!(w.observed_info.len(), 1);
    }

    #[test]
    fn weibull_needs_three_records() {
        let w = case1();
        let d = Dataset::new(vec![TimeTimePoint::new(7.0, 1.0), TimeTimePoint::new(8.0, 1.5)], w).unwrap();
        let a = ArrivalDist::uniform(6.0, 9.0).unwrap();
        assert_eq!(
            fit_mle(&d, JourneyFamily::Weibull, &a, &FitOptions::default()).unwrap_err(),
            Error::InsufficientData { got: 2, need: 3 }
        );
        let empty = Dataset::new(vec![], w).unwrap();
        assert!(fit_mle(&empty, JourneyFamily::Exponential, &a, &FitOptions::default()).is_err());
    }

    #[test]
    fn quantile_and_ci_shape() {
        assert!((normal_quantile(0.05) - 1.959_964).abs() < 1e-6);
        assert!((normal_quantile(0.5) - 0.674_490).abs() < 1e-6);
        let m = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), case1()).unwrap();
        let d = sample_observed(&m, 1000, 13);
        let fit = fit_mle(&d, JourneyFamily::Exponential, &m.arrival, &FitOptions::default()).unwrap();
        let ci = fisher_ci(&fit, 0.05).unwrap();
        let rate = ci.params[0];
        assert!(rate.lo < fit.params[0] && fit.params[0] < rate.hi);
        let mean = ci.mean.unwrap();
        assert!((mean.lo - 1.0 / rate.hi).abs() < 1e-15 && (mean.hi - 1.0 / rate.lo).abs() < 1e-15);
        assert!(fisher_ci(&fit, 1.5).is_err());
    }

    #[test]
    fn not_positive_definite_is_reported() {
        let m = JourneyModel::uniform(JourneyDist::exponential(0.5).unwrap(), case1()).unwrap();
        let d = sample_observed(&m, 50, 14);
        let mut fit = fit_mle(&d, JourneyFamily::Exponential, &m.arrival, &FitOptions::default()).unwrap();
        fit.observed_info = vec![vec![-1.0]];
        assert_eq!(fisher_ci(&fit, 0.05).unwrap_err(), Error::NotPositiveDefinite);
    }
}

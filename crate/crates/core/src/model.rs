//! Truncated joint density of `(x, t)` over the observable zone.
//!
//! With independent arrival density `h(x)` and journey density `g(t; θ)`, the
//! observed density is
//!
//! ```text
//! f(x, t; θ) = h(x) g(t; θ) / C(θ),   C(θ) = ∫ h(x) [G(b_u(x)) - G(b_l(x))] dx
//! ```
//!
//! for `(x, t)` in Zone 2 and zero elsewhere. `h` is normalized to unit mass
//! on the upstream window before use, so `C(θ)` is the expected fraction of
//! the upstream population that is re-identified.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{build_empirical_arrival, ArrivalDist, JourneyDist, JourneyFamily, DEFAULT_BIN_WIDTH};
use crate::error::{Error, Result};
use crate::geometry::{SurveyWindows, TimeTimePoint, Zone};
use crate::quadrature::{integrate, integrate_with_rule, Quadrature};

/// Smallest normalization mass accepted before the zone is declared degenerate.
pub const MIN_MASS: f64 = 1e-300;

/// How the upstream arrival density is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalModel {
    Uniform,
    Empirical { bin_width: f64 },
}

impl ArrivalModel {
    /// Builds the arrival density over the upstream window. `upstream_times`
    /// is only consulted for the empirical variant.
    pub fn build(&self, windows: &SurveyWindows, upstream_times: &[f64]) -> Result<ArrivalDist> {
        match *self {
            ArrivalModel::Uniform => ArrivalDist::uniform(windows.upstream_start, windows.upstream_end),
            ArrivalModel::Empirical { bin_width } => {
                build_empirical_arrival(upstream_times, windows.upstream_start, windows.upstream_end, bin_width)
            }
        }
    }
}

/// One of the four journey × arrival model combinations, named
/// `exp-uniform`, `exp-empirical`, `weibull-uniform` or `weibull-empirical`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub journey: JourneyFamily,
    pub arrival: ArrivalModel,
}

impl ModelSpec {
    pub const NAMES: [&'static str; 4] = ["exp-uniform", "exp-empirical", "weibull-uniform", "weibull-empirical"];

    pub fn new(journey: JourneyFamily, arrival: ArrivalModel) -> Self {
        Self { journey, arrival }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrival = match self.arrival {
            ArrivalModel::Uniform => "uniform",
            ArrivalModel::Empirical { .. } => "empirical",
        };
        write!(f, "{}-{}", self.journey.name(), arrival)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (journey, arrival) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model {s:?}; expected one of {:?}", Self::NAMES)))?;
        let journey = match journey {
            "exp" => JourneyFamily::Exponential,
            "weibull" => JourneyFamily::Weibull,
            _ => return Err(Error::InvalidParameter(format!("unknown journey family {journey:?}"))),
        };
        let arrival = match arrival {
            "uniform" => ArrivalModel::Uniform,
            "empirical" => ArrivalModel::Empirical { bin_width: DEFAULT_BIN_WIDTH },
            _ => return Err(Error::InvalidParameter(format!("unknown arrival model {arrival:?}"))),
        };
        Ok(Self { journey, arrival })
    }
}

/// Journey family with parameters, arrival density, and survey windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JourneyModel {
    pub journey: JourneyDist,
    pub arrival: ArrivalDist,
    pub windows: SurveyWindows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResult {
    /// Probability mass of the untruncated density inside Zone 2.
    pub value: f64,
    pub quadrature_panels: usize,
    pub est_abs_error: f64,
}

/// Box-conditional masses of Zones 1-3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMasses {
    pub zone1: f64,
    pub zone2: f64,
    pub zone3: f64,
    /// Unconditional mass of the interest box (`t` in `[t_ff, t_max]`).
    pub box_mass: f64,
    /// Observed count divided by the Zone 2 share: estimated number of
    /// vehicles in the interest box.
    pub implied_population: Option<f64>,
}

impl JourneyModel {
    pub fn new(journey: JourneyDist, arrival: ArrivalDist, windows: SurveyWindows) -> Result<Self> {
        windows.validate()?;
        let (lo, hi) = arrival.support();
        let tol = 1e-9 * (1.0 + windows.upstream_end.abs());
        if (lo - windows.upstream_start).abs() > tol || (hi - windows.upstream_end).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "arrival support [{lo}, {hi}] differs from upstream window [{}, {}]",
                windows.upstream_start, windows.upstream_end
            )));
        }
        Ok(Self { journey, arrival, windows })
    }

    /// Uniform-arrival model over the windows' upstream interval.
    pub fn uniform(journey: JourneyDist, windows: SurveyWindows) -> Result<Self> {
        let arrival = ArrivalDist::uniform(windows.upstream_start, windows.upstream_end)?;
        Self::new(journey, arrival, windows)
    }

    pub fn with_journey(&self, journey: JourneyDist) -> Self {
        Self { journey, arrival: self.arrival.clone(), windows: self.windows }
    }

    fn x_breakpoints(&self, extra: &[f64]) -> Vec<f64> {
        x_breakpoints(&self.windows, &self.arrival, extra)
    }

    fn arrival_mass(&self) -> f64 {
        self.arrival.total_mass()
    }

    pub(crate) fn zone2_integral(&self, rule: Option<&[usize]>) -> Quadrature {
        zone2_integral(&self.windows, &self.arrival, &self.journey, rule)
    }

    /// Probability mass `C(θ)` of the observable zone.
    pub fn normalization(&self) -> Result<NormalizationResult> {
        let q = self.zone2_integral(None);
        let mass = self.arrival_mass();
        let value = q.value / mass;
        if !(value >= MIN_MASS) {
            return Err(Error::DegenerateZone { mass: value });
        }
        Ok(NormalizationResult { value, quadrature_panels: q.panels, est_abs_error: q.est_abs_error / mass })
    }

    /// Evaluation context with `C(θ)` computed once.
    pub fn density(&self) -> Result<TruncatedDensity<'_>> {
        let norm = self.normalization()?;
        Ok(TruncatedDensity { model: self, normalization: norm.value, arrival_mass: self.arrival_mass() })
    }

    pub fn log_pdf(&self, p: TimeTimePoint) -> Result<f64> {
        Ok(self.density()?.log_pdf(p))
    }

    pub fn marginal_journey_cdf(&self, t: f64) -> Result<f64> {
        Ok(self.density()?.marginal_journey_cdf(t))
    }

    pub fn downstream_arrival_density(&self, y: f64) -> Result<f64> {
        Ok(self.density()?.downstream_arrival_density(y))
    }

    /// Masses of Zones 1-3 under the untruncated density restricted to the
    /// interest box and renormalized over it.
    pub fn unobserved_mass(&self, n_observed: Option<usize>) -> Result<ZoneMasses> {
        let w = &self.windows;
        let g = &self.journey;
        let (tff, tmax) = (w.free_flow_time, w.max_journey);
        let box_mass = g.survival(tff) - g.survival(tmax);
        if !(box_mass >= MIN_MASS) {
            return Err(Error::DegenerateZone { mass: box_mass });
        }
        let mass = self.arrival_mass();
        let breaks = self.x_breakpoints(&[]);
        let zone1 = integrate(
            |x| {
                let top = tmax.min(w.downstream_start - x);
                if top > tff {
                    self.arrival.density(x) * (g.survival(tff) - g.survival(top))
                } else {
                    0.0
                }
            },
            w.upstream_start,
            w.upstream_end,
            &breaks,
        )
        .value
            / mass;
        let zone3 = integrate(
            |x| {
                let bottom = tff.max(w.downstream_end - x);
                if bottom < tmax {
                    self.arrival.density(x) * (g.survival(bottom) - g.survival(tmax))
                } else {
                    0.0
                }
            },
            w.upstream_start,
            w.upstream_end,
            &breaks,
        )
        .value
            / mass;
        let zone2 = self.zone2_integral(None).value / mass;
        let (zone1, zone2, zone3) = (zone1 / box_mass, zone2 / box_mass, zone3 / box_mass);
        let implied_population = n_observed.filter(|_| zone2 > 0.0).map(|n| n as f64 / zone2);
        Ok(ZoneMasses { zone1, zone2, zone3, box_mass, implied_population })
    }
}

pub(crate) fn x_breakpoints(windows: &SurveyWindows, arrival: &ArrivalDist, extra: &[f64]) -> Vec<f64> {
    let mut b = windows.breakpoints();
    b.extend(arrival.breakpoints());
    b.extend_from_slice(extra);
    b
}

/// `∫ h(x) [G(b_u) - G(b_l)] dx` before dividing by the arrival mass.
pub(crate) fn zone2_integral(
    windows: &SurveyWindows,
    arrival: &ArrivalDist,
    journey: &JourneyDist,
    rule: Option<&[usize]>,
) -> Quadrature {
    let integrand = |x: f64| match windows.bounds_at(x) {
        Some((lo, hi)) => arrival.density(x) * (journey.survival(lo) - journey.survival(hi)),
        None => 0.0,
    };
    let breaks = x_breakpoints(windows, arrival, &[]);
    match rule {
        Some(r) => integrate_with_rule(integrand, windows.upstream_start, windows.upstream_end, &breaks, r),
        None => integrate(integrand, windows.upstream_start, windows.upstream_end, &breaks),
    }
}

/// A [`JourneyModel`] with its normalization constant resolved.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedDensity<'a> {
    model: &'a JourneyModel,
    normalization: f64,
    arrival_mass: f64,
}

impl<'a> TruncatedDensity<'a> {
    pub fn model(&self) -> &'a JourneyModel {
        self.model
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn log_pdf(&self, p: TimeTimePoint) -> f64 {
        let m = self.model;
        if m.windows.classify(p) != Zone::Zone2 {
            return f64::NEG_INFINITY;
        }
        (m.arrival.density(p.x) / self.arrival_mass).ln() + m.journey.ln_pdf(p.t) - self.normalization.ln()
    }

    pub fn pdf(&self, p: TimeTimePoint) -> f64 {
        self.log_pdf(p).exp()
    }

    /// CDF of the observed journey-time marginal.
    pub fn marginal_journey_cdf(&self, t: f64) -> f64 {
        let m = self.model;
        let w = &m.windows;
        if t < w.min_observable_journey() {
            return 0.0;
        }
        if t >= w.max_observable_journey() {
            return 1.0;
        }
        let g = &m.journey;
        let integrand = |x: f64| match w.bounds_at(x) {
            Some((lo, hi)) if t > lo => m.arrival.density(x) * (g.survival(lo) - g.survival(t.min(hi))),
            _ => 0.0,
        };
        let breaks = m.x_breakpoints(&[w.downstream_start - t, w.downstream_end - t]);
        let q = integrate(integrand, w.upstream_start, w.upstream_end, &breaks);
        (q.value / self.arrival_mass / self.normalization).clamp(0.0, 1.0)
    }

    /// Density of the observed journey-time marginal.
    pub fn marginal_journey_pdf(&self, t: f64) -> f64 {
        let m = self.model;
        let w = &m.windows;
        if t < w.free_flow_time || t > w.max_journey {
            return 0.0;
        }
        let lo = w.upstream_start.max(w.downstream_start - t);
        let hi = w.upstream_end.min(w.downstream_end - t);
        if hi <= lo {
            return 0.0;
        }
        let h_mass = (m.arrival.cdf(hi) - m.arrival.cdf(lo)) / self.arrival_mass;
        m.journey.pdf(t) * h_mass / self.normalization
    }

    /// Journey-time interval observable for vehicles reaching downstream at `y`.
    fn downstream_slice(&self, y: f64) -> Option<(f64, f64)> {
        let w = &self.model.windows;
        if !(w.downstream_start..=w.downstream_end).contains(&y) {
            return None;
        }
        let lo = w.free_flow_time.max(y - w.upstream_end);
        let hi = w.max_journey.min(y - w.upstream_start);
        (lo < hi).then_some((lo, hi))
    }

    /// Density of the downstream arrival time `y = x + t` among observed
    /// vehicles; zero outside the downstream window.
    pub fn downstream_arrival_density(&self, y: f64) -> f64 {
        let Some((lo, hi)) = self.downstream_slice(y) else {
            return 0.0;
        };
        let m = self.model;
        let g = &m.journey;
        let scale = self.arrival_mass * self.normalization;
        match &m.arrival {
            ArrivalDist::Uniform { .. } => m.arrival.density(y - lo) * (g.survival(lo) - g.survival(hi)) / scale,
            ArrivalDist::Empirical { knots } => {
                // Integrate h(y - t) g(t) dt on the survival scale s = S(t),
                // which absorbs g and removes its singularity at t = 0.
                let (s_hi, s_lo) = (g.survival(lo), g.survival(hi));
                let t_of = |s: f64| inverse_survival(g, s);
                let breaks: Vec<f64> = knots.iter().map(|k| g.survival(y - k.time)).collect();
                let q = integrate(|s| m.arrival.density(y - t_of(s)), s_lo, s_hi, &breaks);
                q.value / scale
            }
        }
    }
}

fn inverse_survival(g: &JourneyDist, s: f64) -> f64 {
    let h = -s.ln();
    match *g {
        JourneyDist::Exponential { rate } => h / rate,
        JourneyDist::Weibull { shape, scale } => scale * h.powf(1.0 / shape),
    }
}

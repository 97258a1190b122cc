//! Untruncated journey-time families and upstream arrival densities.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Default histogram bin width for empirical arrival densities, hours.
pub const DEFAULT_BIN_WIDTH: f64 = 0.25;

/// Parametric family of the journey-time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JourneyFamily {
    Exponential,
    Weibull,
}

impl JourneyFamily {
    pub fn n_params(self) -> usize {
        match self {
            JourneyFamily::Exponential => 1,
            JourneyFamily::Weibull => 2,
        }
    }

    /// Fewest records a fit of this family accepts.
    pub fn min_records(self) -> usize {
        match self {
            JourneyFamily::Exponential => 1,
            JourneyFamily::Weibull => 3,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            JourneyFamily::Exponential => &["rate"],
            JourneyFamily::Weibull => &["shape", "scale"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JourneyFamily::Exponential => "exp",
            JourneyFamily::Weibull => "weibull",
        }
    }
}

/// Journey-time distribution `g(t; θ)`.
///
/// The exponential is parameterized by rate (mean `1/rate`); the Weibull by
/// shape `k` and scale `λ` (mean `λ Γ(1 + 1/k)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JourneyDist {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl JourneyDist {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("rate", rate)?;
        Ok(JourneyDist::Exponential { rate })
    }

    /// Exponential with the given mean journey time.
    pub fn exponential_with_mean(mean: f64) -> Result<Self> {
        check_positive("mean", mean)?;
        Ok(JourneyDist::Exponential { rate: 1.0 / mean })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("scale", scale)?;
        Ok(JourneyDist::Weibull { shape, scale })
    }

    /// Builds a distribution of `family` from its parameter vector, in the
    /// order given by [`JourneyFamily::param_names`].
    pub fn from_params(family: JourneyFamily, params: &[f64]) -> Result<Self> {
        match (family, params) {
            (JourneyFamily::Exponential, [rate]) => Self::exponential(*rate),
            (JourneyFamily::Weibull, [shape, scale]) => Self::weibull(*shape, *scale),
            _ => Err(Error::InvalidParameter(format!(
                "{} expects {} parameters, got {}",
                family.name(),
                family.n_params(),
                params.len()
            ))),
        }
    }

    pub fn family(&self) -> JourneyFamily {
        match self {
            JourneyDist::Exponential { .. } => JourneyFamily::Exponential,
            JourneyDist::Weibull { .. } => JourneyFamily::Weibull,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            JourneyDist::Exponential { rate } => vec![rate],
            JourneyDist::Weibull { shape, scale } => vec![shape, scale],
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            JourneyDist::Exponential { rate } => rate * (-rate * t).exp(),
            JourneyDist::Weibull { shape, scale } => {
                let z = t / scale;
                shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
            }
        }
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            JourneyDist::Exponential { rate } => rate.ln() - rate * t,
            JourneyDist::Weibull { shape, scale } => {
                let z = t / scale;
                shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape)
            }
        }
    }

    /// Cumulative hazard `-ln(1 - G(t))`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            JourneyDist::Exponential { rate } => rate * t,
            JourneyDist::Weibull { shape, scale } => (t / scale).powf(shape),
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        -(-self.cumulative_hazard(t)).exp_m1()
    }

    /// Inverse CDF for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let h = -(-p).ln_1p();
        match *self {
            JourneyDist::Exponential { rate } => h / rate,
            JourneyDist::Weibull { shape, scale } => scale * h.powf(1.0 / shape),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JourneyDist::Exponential { rate } => 1.0 / rate,
            JourneyDist::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Draw conditioned on `t >= lower`, by inverse CDF on `[G(lower), 1)`.
    pub fn sample_above<R: Rng + ?Sized>(&self, rng: &mut R, lower: f64) -> f64 {
        let u: f64 = rng.random();
        if lower <= 0.0 {
            return self.quantile(u);
        }
        // Work on the survival scale to keep precision in the tail.
        let h0 = self.cumulative_hazard(lower);
        let h = h0 - (-u).ln_1p();
        match *self {
            JourneyDist::Exponential { rate } => h / rate,
            JourneyDist::Weibull { shape, scale } => scale * h.powf(1.0 / shape),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

/// One knot of a piecewise-linear arrival density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub time: f64,
    pub density: f64,
}

/// Upstream arrival-time density `h(x)` over the upstream window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalDist {
    /// Constant arrival rate. `rate` only sets the level; it cancels in every
    /// truncated-model quantity. Absent means the unit-mass density.
    Uniform {
        start: f64,
        end: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
    },
    /// Piecewise-linear density through sorted knots, zero outside them.
    Empirical { knots: Vec<Knot> },
}

impl ArrivalDist {
    pub fn uniform(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidParameter(format!("uniform arrival needs start < end, got [{start}, {end}]")));
        }
        Ok(ArrivalDist::Uniform { start, end, rate: None })
    }

    /// Uniform arrivals with an explicit (unnormalized) rate.
    pub fn uniform_rate(start: f64, end: f64, rate: f64) -> Result<Self> {
        check_positive("arrival rate", rate)?;
        let ArrivalDist::Uniform { start, end, .. } = Self::uniform(start, end)? else {
            unreachable!()
        };
        Ok(ArrivalDist::Uniform { start, end, rate: Some(rate) })
    }

    pub fn empirical(knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter("empirical arrival needs at least two knots".into()));
        }
        if knots.iter().any(|k| !k.time.is_finite() || !k.density.is_finite() || k.density < 0.0) {
            return Err(Error::InvalidParameter("knots must be finite with nonnegative density".into()));
        }
        if knots.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidParameter("knot times must be strictly increasing".into()));
        }
        let d = ArrivalDist::Empirical { knots };
        let mass = d.total_mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("empirical density integrates to {mass}, not 1")));
        }
        Ok(d)
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            ArrivalDist::Uniform { start, end, .. } => (*start, *end),
            ArrivalDist::Empirical { knots } => (knots[0].time, knots[knots.len() - 1].time),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            ArrivalDist::Uniform { start, end, rate } => {
                if (*start..=*end).contains(&x) {
                    rate.unwrap_or(1.0 / (end - start))
                } else {
                    0.0
                }
            }
            ArrivalDist::Empirical { knots } => {
                let (lo, hi) = (knots[0].time, knots[knots.len() - 1].time);
                if !(lo..=hi).contains(&x) {
                    return 0.0;
                }
                let i = knots.partition_point(|k| k.time <= x).clamp(1, knots.len() - 1);
                let (a, b) = (knots[i - 1], knots[i]);
                let s = (x - a.time) / (b.time - a.time);
                a.density + s * (b.density - a.density)
            }
        }
    }

    /// Integral of the density from the support start to `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ArrivalDist::Uniform { start, end, rate } => {
                let level = rate.unwrap_or(1.0 / (end - start));
                level * (x.clamp(*start, *end) - start)
            }
            ArrivalDist::Empirical { knots } => {
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if x <= a.time {
                        break;
                    }
                    let right = x.min(b.time);
                    let d_right = a.density + (right - a.time) / (b.time - a.time) * (b.density - a.density);
                    acc += 0.5 * (a.density + d_right) * (right - a.time);
                }
                acc
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf(self.support().1)
    }

    /// Interior points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ArrivalDist::Uniform { .. } => Vec::new(),
            ArrivalDist::Empirical { knots } => knots[1..knots.len() - 1].iter().map(|k| k.time).collect(),
        }
    }

    /// Draw one arrival time by inverse CDF.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            ArrivalDist::Uniform { start, end, .. } => start + u * (end - start),
            ArrivalDist::Empirical { knots } => {
                let mut target = u * self.total_mass();
                for w in knots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let width = b.time - a.time;
                    let mass = 0.5 * (a.density + b.density) * width;
                    if target <= mass || std::ptr::eq(&w[1], knots.last().unwrap()) {
                        let slope = (b.density - a.density) / width;
                        let disc = (a.density * a.density + 2.0 * slope * target).max(0.0);
                        let denom = a.density + disc.sqrt();
                        let s = if denom > 0.0 { 2.0 * target / denom } else { 0.0 };
                        return (a.time + s).min(b.time);
                    }
                    target -= mass;
                }
                knots[knots.len() - 1].time
            }
        }
    }
}

/// Histogram density of upstream arrivals on uniform bins over
/// `[start, end]`, linearly interpolated through the bin centers and held
/// flat out to the window edges, renormalized to unit integral.
///
/// The bin count is `ceil((end - start) / bin_width)`; the actual width is
/// adjusted so bins tile the window exactly.
pub fn build_empirical_arrival(upstream_times: &[f64], start: f64, end: f64, bin_width: f64) -> Result<ArrivalDist> {
    check_positive("bin width", bin_width)?;
    if !(start.is_finite() && end.is_finite() && start < end) {
        return Err(Error::InvalidParameter(format!("arrival window needs start < end, got [{start}, {end}]")));
    }
    let n_bins = ((end - start) / bin_width).ceil().max(1.0) as usize;
    let width = (end - start) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut inside = 0usize;
    for &x in upstream_times {
        if (start..=end).contains(&x) {
            let i = (((x - start) / width) as usize).min(n_bins - 1);
            counts[i] += 1;
            inside += 1;
        }
    }
    if inside == 0 {
        return Err(Error::EmptyInput(format!("no upstream arrivals inside [{start}, {end}]")));
    }

    let heights: Vec<f64> = counts.iter().map(|&c| c as f64 / (inside as f64 * width)).collect();
    let mut knots = Vec::with_capacity(n_bins + 2);
    knots.push(Knot { time: start, density: heights[0] });
    for (i, &h) in heights.iter().enumerate() {
        knots.push(Knot { time: start + (i as f64 + 0.5) * width, density: h });
    }
    knots.push(Knot { time: end, density: heights[n_bins - 1] });

    let mass: f64 = knots.windows(2).map(|w| 0.5 * (w[0].density + w[1].density) * (w[1].time - w[0].time)).sum();
    for k in &mut knots {
        k.density = (k.density / mass).max(0.0);
    }
    ArrivalDist::empirical(knots)
}

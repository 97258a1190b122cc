//! Monte Carlo surveys with both observed and unobserved vehicles, and
//! coverage studies built on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::replicate_rng;
use crate::distributions::{ArrivalDist, JourneyDist};
use crate::error::{Error, Result};
use crate::estimation::{fisher_ci, fit_mle, Dataset, FitOptions};
use crate::geometry::{SurveyWindows, TimeTimePoint, Zone};
use crate::model::ModelSpec;

pub const MIN_REPLICATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub windows: SurveyWindows,
    pub journey: JourneyDist,
    pub arrival: ArrivalDist,
    /// Vehicles arriving upstream during the upstream window.
    pub population: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimVehicle {
    pub x: f64,
    pub t: f64,
    pub zone: Zone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSurvey {
    pub vehicles: Vec<SimVehicle>,
    /// Exactly the Zone 2 vehicles, in draw order.
    pub survivors: Dataset,
    pub survivor_fraction: f64,
    /// Vehicle counts indexed by `Zone::index`.
    pub zone_counts: [usize; 5],
}

impl SimulatedSurvey {
    /// Mean journey time over every simulated vehicle.
    pub fn population_mean(&self) -> f64 {
        self.vehicles.iter().map(|v| v.t).sum::<f64>() / self.vehicles.len() as f64
    }

    pub fn upstream_times(&self) -> Vec<f64> {
        self.vehicles.iter().map(|v| v.x).collect()
    }
}

fn simulate_with<R: rand::Rng + ?Sized>(c: &SimConfig, rng: &mut R) -> Result<SimulatedSurvey> {
    let w = &c.windows;
    let mut vehicles = Vec::with_capacity(c.population);
    let mut zone_counts = [0usize; 5];
    let mut survivors = Vec::new();
    for _ in 0..c.population {
        let x = c.arrival.sample_one(rng);
        let t = c.journey.sample_above(rng, w.free_flow_time);
        let p = TimeTimePoint::new(x, t);
        let zone = w.classify(p);
        zone_counts[zone.index()] += 1;
        if zone == Zone::Zone2 {
            survivors.push(p);
        }
        vehicles.push(SimVehicle { x, t, zone });
    }
    let survivor_fraction =
        if c.population == 0 { 0.0 } else { survivors.len() as f64 / c.population as f64 };
    Ok(SimulatedSurvey { vehicles, survivors: Dataset::new(survivors, *w)?, survivor_fraction, zone_counts })
}

/// Draws `population` vehicles with `x ~ arrival` and `t ~ journey`
/// conditioned on `t ≥ t_ff`, and labels each by zone.
pub fn simulate_survey(c: &SimConfig) -> Result<SimulatedSurvey> {
    c.windows.validate()?;
    if c.arrival.support() != (c.windows.upstream_start, c.windows.upstream_end) {
        return Err(Error::InvalidParameter("arrival support must equal the upstream window".into()));
    }
    simulate_with(c, &mut ChaCha8Rng::seed_from_u64(c.seed))
}

/// Outcome of one simulate, fit and interval cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub replication: usize,
    pub survivors: usize,
    pub params: Vec<f64>,
    pub mean_journey: f64,
    pub mean_covered: Option<bool>,
    pub params_covered: Vec<bool>,
    /// Why the replication was excluded, if it was.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: String,
    pub alpha: f64,
    pub replications: usize,
    pub failures: usize,
    pub true_params: Vec<f64>,
    pub true_mean: f64,
    /// Share of successful replications whose mean interval holds the true
    /// mean; `None` when the family has no mean interval.
    pub mean_coverage: Option<f64>,
    /// Coverage per fitted parameter, in parameter order.
    pub param_coverage: Vec<f64>,
    pub records: Vec<CoverageRecord>,
}

fn one_replication(c: &SimConfig, spec: ModelSpec, alpha: f64, r: usize, truth: &[f64]) -> CoverageRecord {
    let mut record = CoverageRecord {
        replication: r,
        survivors: 0,
        params: vec![],
        mean_journey: f64::NAN,
        mean_covered: None,
        params_covered: vec![],
        failure: None,
    };
    let mut attempt = || -> Result<()> {
        let survey = simulate_with(c, &mut replicate_rng(c.seed, r as u64))?;
        record.survivors = survey.survivors.len();
        let arrival = spec.arrival.build(&c.windows, &survey.upstream_times())?;
        let fit = fit_mle(&survey.survivors, spec.journey, &arrival, &FitOptions { alpha, ..Default::default() })?;
        if !fit.converged {
            return Err(Error::NonFinite("fit did not converge".into()));
        }
        let ci = fisher_ci(&fit, alpha)?;
        record.params_covered = ci.params.iter().zip(truth).map(|(iv, &v)| iv.contains(v)).collect();
        record.mean_covered = ci.mean.map(|iv| iv.contains(c.journey.mean()));
        record.params = fit.params;
        record.mean_journey = fit.mean_journey;
        Ok(())
    };
    if let Err(e) = attempt() {
        record.failure = Some(e.to_string());
    }
    record
}

/// Runs `replications` independent simulate, fit and Fisher-interval cycles
/// and reports how often the intervals hold the true values. Failed fits are
/// excluded and counted.
pub fn coverage_study(c: &SimConfig, spec: ModelSpec, replications: usize, alpha: f64) -> Result<CoverageReport> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::InvalidParameter(format!(
            "coverage needs at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if c.journey.family() != spec.journey {
        return Err(Error::InvalidParameter(format!(
            "simulated family {} differs from fitted family {}",
            c.journey.family().name(),
            spec.journey.name()
        )));
    }
    c.windows.validate()?;
    let truth = c.journey.params();
    let records: Vec<CoverageRecord> =
        (0..replications).into_par_iter().map(|r| one_replication(c, spec, alpha, r, &truth)).collect();

    let ok: Vec<&CoverageRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let failures = replications - ok.len();
    let share = |hits: usize| if ok.is_empty() { f64::NAN } else { hits as f64 / ok.len() as f64 };
    let mean_coverage = if ok.iter().all(|r| r.mean_covered.is_some()) && !ok.is_empty() {
        Some(share(ok.iter().filter(|r| r.mean_covered == Some(true)).count()))
    } else {
        None
    };
    let param_coverage =
        (0..truth.len()).map(|j| share(ok.iter().filter(|r| r.params_covered[j]).count())).collect();

    Ok(CoverageReport {
        model: spec.to_string(),
        alpha,
        replications,
        failures,
        true_params: truth,
        true_mean: c.journey.mean(),
        mean_coverage,
        param_coverage,
        records,
    })
}

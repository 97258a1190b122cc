//! Subcommand bodies. Each writes its outputs into a directory and returns
//! the paths it wrote.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use twopoint_core::bootstrap::replicate_rng;
use twopoint_core::{
    bootstrap_ci, coverage_study, fit_mle, ks_test, replicate_dataset, simulate_survey, BootstrapResult, BootstrapSpec,
    CoverageReport, Dataset, FitOptions, FitResult, KsReport, SurveyWindows, ZoneMasses,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::records::{parse_records, write_records, ExcludedRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const GRID_BINS: usize = 100;

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub input: PathBuf,
    pub model: String,
    pub rows_read: usize,
    pub excluded: Vec<ExcludedRow>,
    pub fit: FitResult,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonesReport {
    pub windows: SurveyWindows,
    pub observed: usize,
    pub masses: ZoneMasses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsOutput {
    pub version: String,
    pub fit: PathBuf,
    pub input: PathBuf,
    pub rows_read: usize,
    pub excluded: usize,
    pub ks: KsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEntry {
    pub file: PathBuf,
    pub seed: u64,
    pub records: usize,
    pub proposals: u64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageOutput {
    pub version: String,
    pub config: RunConfig,
    pub coverage: CoverageReport,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let wrap = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_fit_report(path: &Path) -> CliResult<FitReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: not a fit report: {e}", path.display())))
}

/// Counts of `values` in `bins` equal bins over `[lo, hi]`; values outside
/// are dropped.
fn histogram(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for v in values.filter(|v| (lo..=hi).contains(v)) {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    counts
}

fn write_marginals(path: &Path, data: &Dataset, fit: &FitResult) -> CliResult<()> {
    let density = fit.model.density()?;
    let w = data.windows();
    let lo = w.min_observable_journey();
    let hi = w.max_observable_journey();
    let width = (hi - lo) / GRID_BINS as f64;
    let n = data.len() as f64;
    let mut sorted: Vec<f64> = data.journey_times().collect();
    sorted.sort_by(f64::total_cmp);
    let counts = histogram(sorted.iter().copied(), lo, hi, GRID_BINS);
    let rows = (0..GRID_BINS).map(|b| {
        let t = lo + (b as f64 + 0.5) * width;
        let ecdf = sorted.partition_point(|&s| s <= t) as f64 / n;
        vec![
            t,
            density.marginal_journey_pdf(t),
            density.marginal_journey_cdf(t),
            counts[b] as f64 / (n * width),
            ecdf,
        ]
    });
    write_csv(path, &["journey_time", "model_pdf", "model_cdf", "empirical_pdf", "empirical_cdf"], rows.collect::<Vec<_>>())
}

fn write_downstream_rate(path: &Path, data: &Dataset, fit: &FitResult) -> CliResult<()> {
    let density = fit.model.density()?;
    let w = data.windows();
    let (lo, hi) = (w.downstream_start, w.downstream_end);
    let width = (hi - lo) / GRID_BINS as f64;
    let n = data.len() as f64;
    let counts = histogram(data.records().iter().map(|r| r.downstream_time()), lo, hi, GRID_BINS);
    let rows = (0..GRID_BINS).map(|b| {
        let y = lo + (b as f64 + 0.5) * width;
        let d = density.downstream_arrival_density(y);
        vec![y, d, n * d, counts[b] as f64 / width]
    });
    write_csv(path, &["downstream_time", "model_density", "model_rate", "observed_rate"], rows.collect::<Vec<_>>())
}

/// `fit`: maximum-likelihood fit with Fisher and bootstrap intervals.
pub fn fit(config: &RunConfig, input: &Path, out: &Path) -> CliResult<(FitReport, Vec<PathBuf>)> {
    let spec = config.model_spec()?;
    let parsed = parse_records(input, &config.windows)?;
    let data = &parsed.dataset;
    let arrival = spec.arrival.build(&config.windows, &data.upstream_times())?;
    let options = FitOptions { alpha: config.alpha, ..Default::default() };
    let result = fit_mle(data, spec.journey, &arrival, &options)?;

    let bootstrap = if result.converged && config.bootstrap.resamples > 0 {
        let bspec = BootstrapSpec { resamples: config.bootstrap.resamples, alpha: config.alpha, master_seed: config.seed };
        Some(bootstrap_ci(data, &result, &arrival, &bspec)?)
    } else {
        None
    };

    let report = FitReport {
        version: VERSION.into(),
        seed: config.seed,
        config: config.clone(),
        input: input.to_path_buf(),
        model: spec.to_string(),
        rows_read: parsed.rows_read,
        excluded: parsed.excluded.clone(),
        fit: result,
        bootstrap,
    };
    ensure_dir(out)?;
    let paths: Vec<PathBuf> =
        ["fit.json", "marginals.csv", "downstream_rate.csv", "zones.json"].iter().map(|f| out.join(f)).collect();
    write_json(&paths[0], &report)?;
    if !report.fit.converged {
        return Err(CliError::Numerical(format!(
            "fit did not converge after {} iterations; best estimate written to {}",
            report.fit.iterations,
            paths[0].display()
        )));
    }
    write_marginals(&paths[1], data, &report.fit)?;
    write_downstream_rate(&paths[2], data, &report.fit)?;
    let masses = report.fit.model.unobserved_mass(Some(data.len()))?;
    write_json(&paths[3], &ZonesReport { windows: config.windows, observed: data.len(), masses })?;
    Ok((report, paths))
}

/// `simulate`: a synthetic survey with zone labels and its survivors.
pub fn simulate(config: &RunConfig, out: &Path) -> CliResult<(twopoint_core::SimulatedSurvey, Vec<PathBuf>)> {
    let survey = simulate_survey(&config.sim_config()?)?;
    ensure_dir(out)?;
    let survey_path = out.join("survey.csv");
    let mut w = csv::Writer::from_path(&survey_path).map_err(|e| CliError::io(&survey_path, e.into()))?;
    let wrap = |e: csv::Error| CliError::io(&survey_path, e.into());
    w.write_record(["upstream_time", "journey_time", "downstream_time", "zone"]).map_err(wrap)?;
    for v in &survey.vehicles {
        w.write_record([v.x.to_string(), v.t.to_string(), (v.x + v.t).to_string(), v.zone.label().to_string()])
            .map_err(wrap)?;
    }
    w.flush().map_err(io_err(&survey_path))?;

    let survivors_path = out.join("survivors.csv");
    let file = fs::File::create(&survivors_path).map_err(io_err(&survivors_path))?;
    write_records(BufWriter::new(file), survey.survivors.records()).map_err(io_err(&survivors_path))?;
    Ok((survey, vec![survey_path, survivors_path]))
}

/// `evaluate`: K-S test of records against a saved fit.
pub fn evaluate(fit_path: &Path, input: &Path, alpha: f64, out: &Path) -> CliResult<(KsOutput, PathBuf)> {
    let report = read_fit_report(fit_path)?;
    if !report.fit.converged {
        return Err(CliError::Numerical(format!("{} holds a non-converged fit", fit_path.display())));
    }
    let parsed = parse_records(input, &report.fit.model.windows)?;
    let ks = ks_test(&parsed.dataset, &report.fit, alpha)?;
    let output = KsOutput {
        version: VERSION.into(),
        fit: fit_path.to_path_buf(),
        input: input.to_path_buf(),
        rows_read: parsed.rows_read,
        excluded: parsed.excluded.len(),
        ks,
    };
    ensure_dir(out)?;
    let path = out.join("ks.json");
    write_json(&path, &output)?;
    Ok((output, path))
}

/// `replicate`: `m` datasets of `n` records drawn from a saved fit.
pub fn replicate(
    fit_path: &Path,
    n: Option<usize>,
    m: usize,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<Vec<ReplicateEntry>> {
    let report = read_fit_report(fit_path)?;
    if !report.fit.converged {
        return Err(CliError::Numerical(format!("{} holds a non-converged fit", fit_path.display())));
    }
    let n = n.unwrap_or(report.fit.n);
    let master = seed.unwrap_or(report.seed);
    let digits = m.max(1).to_string().len().max(3);
    ensure_dir(out)?;
    let mut entries = Vec::with_capacity(m);
    for j in 0..m {
        let seed: u64 = replicate_rng(master, j as u64).random();
        let rep = replicate_dataset(&report.fit, n, seed)?;
        let path = out.join(format!("replicate_{:0digits$}.csv", j + 1));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        write_records(BufWriter::new(file), rep.dataset.records()).map_err(io_err(&path))?;
        entries.push(ReplicateEntry {
            file: path,
            seed,
            records: n,
            proposals: rep.proposals,
            acceptance_rate: rep.acceptance_rate,
        });
    }
    write_json(&out.join("replicates.json"), &entries)?;
    Ok(entries)
}

/// `coverage`: repeated simulate and fit cycles scoring Fisher intervals.
pub fn coverage(config: &RunConfig, replications: usize, out: &Path) -> CliResult<(CoverageOutput, PathBuf)> {
    let report = coverage_study(&config.sim_config()?, config.model_spec()?, replications, config.alpha)?;
    let output = CoverageOutput { version: VERSION.into(), config: config.clone(), coverage: report };
    ensure_dir(out)?;
    let path = out.join("coverage.json");
    write_json(&path, &output)?;
    Ok((output, path))
}

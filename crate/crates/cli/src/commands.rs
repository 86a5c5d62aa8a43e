use std::fmt;
use std::fs::{self, File};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use gphrf::config::{PriorMean, RunConfig};
use gphrf::evalx::{self, BenchmarkRow};
use gphrf::synth::generate_run;
use gphrf::{io, Error, FitResult, KernelParams, Paradigm, SamplingGrid};
use nalgebra::DVector;
use serde::Serialize;

use crate::output::Outputs;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            code: 3,
            message: format!("IoError: {}: {e}", path.display()),
        }
    }

    fn config(e: Error) -> Self {
        CliError {
            code: 2,
            message: format!("config: {}: {e}", e.name()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. } => 2,
            Error::Io(_) => 3,
            Error::Parse { .. } | Error::DegenerateTruth => 4,
            _ => 5,
        };
        CliError {
            code,
            message: format!("{}: {e}", e.name()),
        }
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            RunConfig::from_toml(&text, &p.display().to_string()).map_err(CliError::config)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn read_paradigm(path: &Path) -> Result<Paradigm, CliError> {
    Ok(io::read_paradigm(open(path)?, &path.display().to_string())?)
}

/// Reads a timeseries and rejects constant signals, which cannot be scored.
fn read_timeseries(path: &Path) -> Result<(SamplingGrid, DVector<f64>), CliError> {
    let (grid, y) = io::read_timeseries(open(path)?, &path.display().to_string())?;
    let mean = y.mean();
    if y.iter().all(|v| *v == mean) {
        return Err(CliError {
            code: 4,
            message: format!("{}: {}: {}", Error::DegenerateTruth.name(), path.display(), Error::DegenerateTruth),
        });
    }
    Ok((grid, y))
}

fn progress(msg: impl fmt::Display) {
    eprintln!("{msg}");
}

#[derive(Serialize)]
struct SimulationMetadata {
    seed: u64,
    n_events: usize,
    n_conditions: usize,
    n_samples: usize,
    repetition_time: f64,
    noise_sd: f64,
    /// Timeseries equals the clean signal.
    noise_free: bool,
    snr_db: Option<f64>,
    true_peak_time: f64,
    beta_true: Vec<f64>,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let synth = cfg.synth_config();
    let run = generate_run(&synth, &cfg.support()?)?;
    let meta = SimulationMetadata {
        seed: synth.seed,
        n_events: run.paradigm.events().len(),
        n_conditions: run.paradigm.n_conditions(),
        n_samples: run.grid.n_samples,
        repetition_time: run.grid.repetition_time,
        noise_sd: synth.noise_sd,
        noise_free: run.signal.y == run.signal.y_clean,
        snr_db: run.signal.snr_db,
        true_peak_time: synth.hrf_peak_time,
        beta_true: synth.beta().iter().copied().collect(),
    };
    let mut files = Outputs::new();
    files.add_with("paradigm.tsv", |w| io::write_paradigm(w, &run.paradigm))?;
    files.add_with("timeseries.csv", |w| io::write_timeseries(w, &run.grid, &run.signal.y))?;
    files.add_with("timeseries_clean.csv", |w| io::write_timeseries(w, &run.grid, &run.signal.y_clean))?;
    files.add_json("metadata.json", &meta);
    report_paths(files.commit(out)?);
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    labels: Vec<String>,
    beta: Vec<f64>,
    kernel_params: KernelParams,
    noise_variance: f64,
    loglik_trace: Vec<f64>,
    objective_trace: Vec<f64>,
    converged: bool,
    n_iterations: usize,
    hrf_scale: f64,
    /// Location of the maximum of the posterior mean.
    peak_time: f64,
}

fn peak_time(result: &FitResult) -> f64 {
    let post = &result.hrf_posterior;
    post.query_abscissae[post.mean.imax()]
}

fn summary(result: &FitResult, paradigm: &Paradigm) -> FitSummary {
    FitSummary {
        labels: paradigm.labels().to_vec(),
        beta: result.beta.iter().copied().collect(),
        kernel_params: result.kernel_params,
        noise_variance: result.noise_variance,
        loglik_trace: result.loglik_trace.clone(),
        objective_trace: result.objective_trace.clone(),
        converged: result.converged,
        n_iterations: result.n_iterations,
        hrf_scale: result.hrf_scale,
        peak_time: peak_time(result),
    }
}

fn fit_files(cfg: &RunConfig, paradigm: &Path, timeseries: &Path) -> Result<(Paradigm, SamplingGrid, FitResult), CliError> {
    let paradigm = read_paradigm(paradigm)?;
    let (grid, y) = read_timeseries(timeseries)?;
    progress(format_args!(
        "fitting {} events, {} conditions, {} samples",
        paradigm.events().len(),
        paradigm.n_conditions(),
        grid.n_samples
    ));
    let result = gphrf::fit(&y, &paradigm, &grid, &cfg.support()?, &cfg.prior()?, &cfg.fit_config())?;
    Ok((paradigm, grid, result))
}

pub fn fit(cfg: &RunConfig, paradigm: &Path, timeseries: &Path, out: &Path) -> Result<(), CliError> {
    let (paradigm, _, result) = fit_files(cfg, paradigm, timeseries)?;
    let mut files = Outputs::new();
    files.add_json("fit.json", &summary(&result, &paradigm));
    files.add_with("hrf.csv", |w| io::write_hrf_plot(w, &result.hrf_posterior))?;
    report_paths(files.commit(out)?);
    Ok(())
}

#[derive(Serialize)]
struct ScoreOutput {
    fit: FitSummary,
    score: evalx::ScoreReport,
}

pub fn score(cfg: &RunConfig, train: (&Path, &Path), test: (&Path, &Path), out: &Path) -> Result<(), CliError> {
    let (paradigm, _, result) = fit_files(cfg, train.0, train.1)?;
    let test_paradigm = read_paradigm(test.0)?;
    let (test_grid, y) = read_timeseries(test.1)?;
    let method = match cfg.prior.mean {
        PriorMean::Gamma => format!("gp_mean_peak{}", cfg.prior.mean_peak_time),
        PriorMean::Zero => "gp_zero_mean".to_owned(),
    };
    let dataset = test.1.display().to_string();
    let report = evalx::score_fit(&result, &test_paradigm, &test_grid, &y, &method, &dataset)?;
    progress(format_args!(
        "prediction R2 {:.4}, projection R2 {:.4}, pearson {:.4}",
        report.prediction_r2, report.projection_r2, report.pearson
    ));
    let mut files = Outputs::new();
    files.add_json(
        "score.json",
        &ScoreOutput {
            fit: summary(&result, &paradigm),
            score: report,
        },
    );
    files.add_with("hrf.csv", |w| io::write_hrf_plot(w, &result.hrf_posterior))?;
    report_paths(files.commit(out)?);
    Ok(())
}

pub fn benchmark(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let bench = cfg.benchmark_config();
    let total = bench.n_cells();
    let done = AtomicUsize::new(0);
    let on_cell = |row: &BenchmarkRow| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        let status = match &row.outcome {
            Ok(r) => format!("prediction {:.4} projection {:.4}", r.prediction_r2, r.projection_r2),
            Err(e) => format!("failed: {e}"),
        };
        progress(format_args!(
            "[{k}/{total}] peak {} noise {} seed {} {}: {status}",
            row.dataset_peak, row.noise_sd, row.seed, row.method
        ));
    };
    let rows = evalx::benchmark_grid(&bench, &on_cell)?;
    let summary = evalx::summarize(&rows);
    let mut files = Outputs::new();
    files.add_with("scores.csv", |w| io::write_scores(w, &rows))?;
    files.add_json("summary.json", &summary);
    report_paths(files.commit(out)?);
    Ok(())
}

#[derive(Serialize)]
struct GammaStudyRecord {
    gamma: f64,
    roughness: f64,
    peak_time: f64,
    gram_file: String,
    hrf_file: String,
}

pub fn gamma_study(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut synth = cfg.synth_config();
    synth.noise_sd = cfg.gamma_study.noise_sd;
    let support = cfg.support()?;
    let run = generate_run(&synth, &support)?;
    let entries = evalx::gamma_study(&run, &cfg.prior()?, &cfg.gamma_study.gammas, &support, &cfg.fit_config())?;
    let mut files = Outputs::new();
    let mut records = Vec::new();
    for e in &entries {
        progress(format_args!("gamma {}: roughness {:.6e}", e.gamma, e.roughness));
        let gram_file = format!("gram_gamma{}.csv", e.gamma);
        let hrf_file = format!("hrf_gamma{}.csv", e.gamma);
        files.add_with(gram_file.clone(), |w| io::write_matrix(w, &e.gram))?;
        files.add_with(hrf_file.clone(), |w| io::write_hrf_plot(w, &e.fit.hrf_posterior))?;
        records.push(GammaStudyRecord {
            gamma: e.gamma,
            roughness: e.roughness,
            peak_time: peak_time(&e.fit),
            gram_file,
            hrf_file,
        });
    }
    files.add_json("gamma_study.json", &records);
    report_paths(files.commit(out)?);
    Ok(())
}

fn report_paths(paths: Vec<std::path::PathBuf>) {
    for p in paths {
        progress(format_args!("wrote {}", p.display()));
    }
}

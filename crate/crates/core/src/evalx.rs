//! Scoring of fitted models on held-out runs and the estimator benchmark.
//!
//! Two protocols are supported. *Prediction* applies the fitted activations
//! and HRF to a held-out run. *Projection* keeps only the HRF, refits the
//! activations on the held-out run by least squares and reports the explained
//! variance of that projection, which scores the HRF shape on its own.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_beta, fit, FitConfig, FitResult, NoiseMode};
use crate::gp::GPPrior;
use crate::kernel::{Kernel, KernelParams};
use crate::signal::{
    build_design_matrix, GammaDiffHrf, GammaDiffParams, HRFSupport, Paradigm, SamplingGrid,
    TimeFunction, ZeroFunction,
};
use crate::synth::{derive_seed, generate_run, SynthConfig, SyntheticRun};

/// Explained variance `1 - |y - y_hat|^2 / |y - mean(y)|^2`.
pub fn r2_score(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<f64> {
    check_pair(y_true, y_pred)?;
    let mean = y_true.mean();
    let total: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::DegenerateTruth);
    }
    let resid = (y_true - y_pred).norm_squared();
    Ok(1.0 - resid / total)
}

/// Sample correlation coefficient.
pub fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "pearson inputs",
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateInput("pearson needs at least two points"));
    }
    let (ma, mb) = (a.mean(), b.mean());
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateInput("pearson input is constant"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn check_pair(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction length",
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::DegenerateInput("scoring needs at least two samples"));
    }
    Ok(())
}

/// Support covered by the fitted output grid.
fn fitted_support(fit: &FitResult) -> Result<HRFSupport> {
    let q = &fit.hrf_posterior.query_abscissae;
    HRFSupport::new(q[q.len() - 1])
}

/// `X_h beta` on a held-out paradigm, with `h` the fitted posterior mean.
pub fn predict(fit: &FitResult, paradigm: &Paradigm, grid: &SamplingGrid) -> Result<DVector<f64>> {
    if paradigm.n_conditions() != fit.beta.len() {
        return Err(Error::DimensionMismatch {
            what: "held-out conditions",
            expected: fit.beta.len(),
            found: paradigm.n_conditions(),
        });
    }
    let support = fitted_support(fit)?;
    let x = build_design_matrix(paradigm, grid, &fit.hrf_curve(), &support);
    Ok(x * &fit.beta)
}

pub fn prediction_score(
    fit: &FitResult,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    y: &DVector<f64>,
) -> Result<f64> {
    let y_hat = predict(fit, paradigm, grid)?;
    r2_score(y, &y_hat)
}

/// Least-squares projection of `y` onto the span of the design built with `hrf`.
pub fn project(
    hrf: &dyn TimeFunction,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    support: &HRFSupport,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    if y.len() != grid.n_samples {
        return Err(Error::DimensionMismatch {
            what: "held-out samples",
            expected: grid.n_samples,
            found: y.len(),
        });
    }
    let x = build_design_matrix(paradigm, grid, hrf, support);
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let beta = estimate_beta(&x, y);
    Ok(x * beta)
}

pub fn projection_score(
    hrf: &dyn TimeFunction,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    support: &HRFSupport,
    y: &DVector<f64>,
) -> Result<f64> {
    let y_hat = project(hrf, paradigm, grid, support, y)?;
    r2_score(y, &y_hat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub method_id: String,
    pub dataset_id: String,
    pub prediction_r2: f64,
    pub projection_r2: f64,
    /// Correlation between the prediction and the held-out signal.
    pub pearson: f64,
}

/// Prediction and projection scores of a fit on one held-out run.
pub fn score_fit(
    fit: &FitResult,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    y: &DVector<f64>,
    method_id: &str,
    dataset_id: &str,
) -> Result<ScoreReport> {
    let y_hat = predict(fit, paradigm, grid)?;
    let support = fitted_support(fit)?;
    let projection_r2 = projection_score(&fit.hrf_curve(), paradigm, grid, &support, y)?;
    Ok(ScoreReport {
        method_id: method_id.to_owned(),
        dataset_id: dataset_id.to_owned(),
        prediction_r2: r2_score(y, &y_hat)?,
        projection_r2,
        pearson: pearson(&y_hat, y)?,
    })
}

/// Estimator compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Least squares with a fixed gamma-difference HRF.
    ClassicGlm { peak: f64 },
    /// GP fit with a gamma-difference prior mean.
    GpMean { peak: f64 },
    GpZeroMean,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ClassicGlm { peak } => write!(f, "glm_peak{peak}"),
            Method::GpMean { peak } => write!(f, "gp_mean_peak{peak}"),
            Method::GpZeroMean => f.write_str("gp_zero_mean"),
        }
    }
}

impl Method {
    /// Peak time of the method's fixed HRF or prior mean.
    pub fn peak(&self) -> Option<f64> {
        match self {
            Method::ClassicGlm { peak } | Method::GpMean { peak } => Some(*peak),
            Method::GpZeroMean => None,
        }
    }

    pub fn is_gp(&self) -> bool {
        !matches!(self, Method::ClassicGlm { .. })
    }
}

/// Signal the held-out scores are computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeldoutTarget {
    /// Noise-free held-out signal.
    #[default]
    Clean,
    /// Held-out signal including its own noise draw.
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub data_peaks: Vec<f64>,
    pub method_peaks: Vec<f64>,
    pub include_zero_mean: bool,
    pub noise_levels: Vec<f64>,
    pub n_seeds: u64,
    pub base_seed: u64,
    /// Paradigm and amplitude settings; peak, noise and seed are set per cell.
    pub synth: SynthConfig,
    pub kernel: KernelParams,
    /// Initial GP noise variance.
    pub prior_noise_variance: f64,
    pub fit: FitConfig,
    pub support: HRFSupport,
    pub heldout_target: HeldoutTarget,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let peaks = vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        BenchmarkConfig {
            data_peaks: peaks.clone(),
            method_peaks: peaks,
            include_zero_mean: true,
            noise_levels: vec![0.1, 1.0, 2.0],
            n_seeds: 5,
            base_seed: 0,
            synth: SynthConfig::default(),
            kernel: KernelParams::default(),
            prior_noise_variance: 0.1,
            fit: FitConfig {
                optimize_hyperparams: false,
                ..FitConfig::default()
            },
            support: HRFSupport::default(),
            heldout_target: HeldoutTarget::Clean,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data_peaks.is_empty() {
            return Err(Error::invalid("data_peaks", "must not be empty"));
        }
        if self.noise_levels.is_empty() {
            return Err(Error::invalid("noise_levels", "must not be empty"));
        }
        if self.n_seeds == 0 {
            return Err(Error::invalid("n_seeds", "must be positive"));
        }
        if self.methods().is_empty() {
            return Err(Error::invalid("method_peaks", "no method selected"));
        }
        for &p in self.data_peaks.iter().chain(&self.method_peaks) {
            GammaDiffParams::with_peak(p).validate()?;
        }
        if self.noise_levels.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("noise_levels", "must be nonnegative"));
        }
        if !(self.prior_noise_variance.is_finite() && self.prior_noise_variance > 0.0) {
            return Err(Error::invalid("prior_noise_variance", "must be positive"));
        }
        self.kernel.validate()?;
        self.synth.validate()?;
        self.fit.validate()?;
        HRFSupport::new(self.support.length)?;
        Ok(())
    }

    /// Classic GLMs first, then GP fits, in peak order.
    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.method_peaks.iter().map(|&peak| Method::ClassicGlm { peak }).collect();
        m.extend(self.method_peaks.iter().map(|&peak| Method::GpMean { peak }));
        if self.include_zero_mean {
            m.push(Method::GpZeroMean);
        }
        m
    }

    pub fn n_cells(&self) -> usize {
        self.data_peaks.len() * self.noise_levels.len() * self.n_seeds as usize * self.methods().len()
    }
}

/// One cell of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset_peak: f64,
    pub method: String,
    pub noise_sd: f64,
    pub seed: u64,
    pub outcome: std::result::Result<ScoreReport, String>,
}

impl BenchmarkRow {
    pub fn report(&self) -> Option<&ScoreReport> {
        self.outcome.as_ref().ok()
    }
}

/// Runs every (dataset peak, noise, seed, method) cell.
///
/// Run A trains, run B (fresh paradigm and noise, same generative HRF) scores.
/// All methods of a dataset share the same two runs. Datasets are evaluated in
/// parallel; each owns seeds derived from its indices, so the table does not
/// depend on scheduling. `progress` is called once per finished cell.
pub fn benchmark_grid(
    cfg: &BenchmarkConfig,
    progress: &(dyn Fn(&BenchmarkRow) + Sync),
) -> Result<Vec<BenchmarkRow>> {
    cfg.validate()?;
    let methods = cfg.methods();
    let mut datasets = Vec::new();
    for (pi, &peak) in cfg.data_peaks.iter().enumerate() {
        for (ni, &noise) in cfg.noise_levels.iter().enumerate() {
            for seed in 0..cfg.n_seeds {
                datasets.push((pi as u64, peak, ni as u64, noise, seed));
            }
        }
    }
    let rows: Vec<Vec<BenchmarkRow>> = datasets
        .par_iter()
        .map(|&(pi, peak, ni, noise, seed)| {
            let seeds = [
                derive_seed(cfg.base_seed, &[pi, ni, seed, 0]),
                derive_seed(cfg.base_seed, &[pi, ni, seed, 1]),
            ];
            let runs = make_runs(cfg, peak, noise, seeds);
            methods
                .iter()
                .map(|method| {
                    let outcome = match &runs {
                        Ok((a, b)) => {
                            let dataset_id = format!("peak{peak}_noise{noise}_seed{seed}");
                            run_cell(cfg, method, a, b, &dataset_id).map_err(|e| e.to_string())
                        }
                        Err(e) => Err(e.to_string()),
                    };
                    let row = BenchmarkRow {
                        dataset_peak: peak,
                        method: method.to_string(),
                        noise_sd: noise,
                        seed,
                        outcome,
                    };
                    progress(&row);
                    row
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn make_runs(
    cfg: &BenchmarkConfig,
    peak: f64,
    noise: f64,
    seeds: [u64; 2],
) -> Result<(SyntheticRun, SyntheticRun)> {
    let gen = |seed| {
        let synth = SynthConfig {
            hrf_peak_time: peak,
            noise_sd: noise,
            seed,
            ..cfg.synth.clone()
        };
        generate_run(&synth, &cfg.support)
    };
    Ok((gen(seeds[0])?, gen(seeds[1])?))
}

fn target(cfg: &BenchmarkConfig, run: &SyntheticRun) -> DVector<f64> {
    match cfg.heldout_target {
        HeldoutTarget::Clean => run.signal.y_clean.clone(),
        HeldoutTarget::Noisy => run.signal.y.clone(),
    }
}

fn run_cell(
    cfg: &BenchmarkConfig,
    method: &Method,
    train: &SyntheticRun,
    test: &SyntheticRun,
    dataset_id: &str,
) -> Result<ScoreReport> {
    let y_test = target(cfg, test);
    let method_id = method.to_string();
    match *method {
        Method::ClassicGlm { peak } => {
            let hrf = GammaDiffHrf::new(GammaDiffParams::with_peak(peak), cfg.support.length)?;
            let report = classic_glm_report(&hrf, train, test, &y_test, &cfg.support)?;
            Ok(ScoreReport {
                method_id,
                dataset_id: dataset_id.to_owned(),
                ..report
            })
        }
        Method::GpMean { .. } | Method::GpZeroMean => {
            let prior = gp_prior(cfg, method)?;
            let result = fit(
                &train.signal.y,
                &train.paradigm,
                &train.grid,
                &cfg.support,
                &prior,
                &cfg.fit,
            )?;
            score_fit(&result, &test.paradigm, &test.grid, &y_test, &method_id, dataset_id)
        }
    }
}

/// GP prior of a benchmark method.
pub fn gp_prior(cfg: &BenchmarkConfig, method: &Method) -> Result<GPPrior> {
    let noise = match cfg.fit.noise_mode {
        NoiseMode::Fixed(v) => v,
        NoiseMode::ReEstimate => cfg.prior_noise_variance,
    };
    match method.peak() {
        Some(peak) if method.is_gp() => {
            let mean = GammaDiffHrf::new(GammaDiffParams::with_peak(peak), cfg.support.length)?;
            GPPrior::new(std::sync::Arc::new(mean), cfg.kernel, noise)
        }
        _ => GPPrior::new(std::sync::Arc::new(ZeroFunction), cfg.kernel, noise),
    }
}

fn classic_glm_report(
    hrf: &dyn TimeFunction,
    train: &SyntheticRun,
    test: &SyntheticRun,
    y_test: &DVector<f64>,
    support: &HRFSupport,
) -> Result<ScoreReport> {
    let x_train = build_design_matrix(&train.paradigm, &train.grid, hrf, support);
    if x_train.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let beta = estimate_beta(&x_train, &train.signal.y);
    let x_test: DMatrix<f64> = build_design_matrix(&test.paradigm, &test.grid, hrf, support);
    let y_hat = x_test * beta;
    Ok(ScoreReport {
        method_id: String::new(),
        dataset_id: String::new(),
        prediction_r2: r2_score(y_test, &y_hat)?,
        projection_r2: projection_score(hrf, &test.paradigm, &test.grid, support, y_test)?,
        pearson: pearson(&y_hat, y_test)?,
    })
}

/// Median scores of one method, optionally restricted to one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub method: String,
    pub noise_sd: Option<f64>,
    pub n_cells: usize,
    pub n_failed: usize,
    pub median_prediction_r2: Option<f64>,
    pub median_projection_r2: Option<f64>,
    pub median_pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub n_cells: usize,
    pub n_failed: usize,
    /// Per method over all noise levels, then per method and noise level.
    pub entries: Vec<SummaryEntry>,
    pub failures: Vec<String>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

pub fn summarize(rows: &[BenchmarkRow]) -> BenchmarkSummary {
    let mut methods: Vec<&str> = Vec::new();
    let mut noises: Vec<f64> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !noises.contains(&r.noise_sd) {
            noises.push(r.noise_sd);
        }
    }
    let entry = |method: &str, noise: Option<f64>| {
        let cells: Vec<&BenchmarkRow> = rows
            .iter()
            .filter(|r| r.method == method && noise.is_none_or(|s| r.noise_sd == s))
            .collect();
        let ok: Vec<&ScoreReport> = cells.iter().filter_map(|r| r.report()).collect();
        let col = |f: fn(&ScoreReport) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        SummaryEntry {
            method: method.to_owned(),
            noise_sd: noise,
            n_cells: cells.len(),
            n_failed: cells.len() - ok.len(),
            median_prediction_r2: col(|r| r.prediction_r2),
            median_projection_r2: col(|r| r.projection_r2),
            median_pearson: col(|r| r.pearson),
        }
    };
    let mut entries: Vec<SummaryEntry> = methods.iter().map(|m| entry(m, None)).collect();
    for m in &methods {
        entries.extend(noises.iter().map(|&s| entry(m, Some(s))));
    }
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.outcome.as_ref().err().map(|e| {
                format!("{} peak={} noise={} seed={}: {e}", r.method, r.dataset_peak, r.noise_sd, r.seed)
            })
        })
        .collect();
    BenchmarkSummary {
        n_cells: rows.len(),
        n_failed: failures.len(),
        entries,
        failures,
    }
}

/// Sum of squared second differences of a sampled curve.
pub fn roughness(values: &[f64]) -> f64 {
    values.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2)).sum()
}

/// Fit and prior Gram matrix for one kernel length scale.
#[derive(Debug, Clone)]
pub struct GammaStudyEntry {
    pub gamma: f64,
    /// Kernel matrix over the output grid.
    pub gram: DMatrix<f64>,
    pub fit: FitResult,
    /// [`roughness`] of the fitted posterior mean.
    pub roughness: f64,
}

/// Fits the same run once per length scale with the hyperparameters frozen.
pub fn gamma_study(
    run: &SyntheticRun,
    prior: &GPPrior,
    gammas: &[f64],
    support: &HRFSupport,
    fit_cfg: &FitConfig,
) -> Result<Vec<GammaStudyEntry>> {
    let cfg = FitConfig {
        optimize_hyperparams: false,
        ..fit_cfg.clone()
    };
    let grid = support.grid(cfg.output_grid_step);
    gammas
        .iter()
        .map(|&gamma| {
            let params = KernelParams::new(prior.kernel.params().amplitude, gamma)?;
            let kernel: Kernel = params.into();
            let result = fit(&run.signal.y, &run.paradigm, &run.grid, support, &prior.with_kernel(kernel), &cfg)?;
            Ok(GammaStudyEntry {
                gamma,
                gram: kernel.gram(&grid, &grid),
                roughness: roughness(result.hrf_posterior.mean.as_slice()),
                fit: result,
            })
        })
        .collect()
}

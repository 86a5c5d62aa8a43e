//! Run configuration shared by the command-line tools.
//!
//! One TOML file with flat sections. Every field has a default, so an empty
//! file is a valid configuration; unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//!
//! [synth]
//! noise_sd = 0.01
//! hrf_peak_time = 3.0
//!
//! [prior]
//! mean = "gamma"
//! mean_peak_time = 5.0
//!
//! [fit]
//! optimize_hyperparams = false
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FitConfig, Normalization, NoiseMode};
use crate::evalx::{BenchmarkConfig, HeldoutTarget};
use crate::gp::{GPPrior, HyperOptConfig, LooMetric};
use crate::kernel::KernelParams;
use crate::signal::{GammaDiffHrf, GammaDiffParams, HRFSupport, ZeroFunction};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the simulation, the benchmark and the smoothness study.
    pub seed: u64,
    pub synth: SynthSection,
    pub kernel: KernelSection,
    pub prior: PriorSection,
    pub fit: FitSection,
    pub support: SupportSection,
    pub benchmark: BenchmarkSection,
    pub gamma_study: GammaStudySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_conditions: usize,
    pub n_events_total: usize,
    pub mean_isi: f64,
    pub isi_jitter_halfwidth: f64,
    pub repetition_time: f64,
    pub noise_sd: f64,
    pub hrf_peak_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_true: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            n_conditions: d.n_conditions,
            n_events_total: d.n_events_total,
            mean_isi: d.mean_isi,
            isi_jitter_halfwidth: d.isi_jitter_halfwidth,
            repetition_time: d.repetition_time,
            noise_sd: d.noise_sd,
            hrf_peak_time: d.hrf_peak_time,
            beta_true: d.beta_true,
            n_samples: d.n_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub amplitude: f64,
    pub length_scale: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        let d = KernelParams::default();
        KernelSection {
            amplitude: d.amplitude,
            length_scale: d.length_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMean {
    Gamma,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub mean: PriorMean,
    pub mean_peak_time: f64,
    /// Initial GP noise variance; ignored when the fit fixes the noise.
    pub noise_variance: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            mean: PriorMean::Gamma,
            mean_peak_time: 5.0,
            noise_variance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModeName {
    ReEstimate,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub max_outer_iterations: usize,
    pub convergence_tol: f64,
    pub output_grid_step: f64,
    pub optimize_hyperparams: bool,
    pub noise_mode: NoiseModeName,
    /// Used when `noise_mode = "fixed"`.
    pub fixed_noise_variance: f64,
    pub normalization: Normalization,
    pub hyperopt_initial_step: f64,
    pub hyperopt_max_iterations: usize,
    pub hyperopt_gradient_tolerance: f64,
    pub hyperopt_max_halvings: usize,
    pub loo_early_stop: bool,
    pub loo_metric: LooMetric,
    pub loo_tolerance: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitConfig::default();
        let h = f.hyperopt;
        FitSection {
            max_outer_iterations: f.max_outer_iterations,
            convergence_tol: f.convergence_tol,
            output_grid_step: f.output_grid_step,
            optimize_hyperparams: f.optimize_hyperparams,
            noise_mode: NoiseModeName::ReEstimate,
            fixed_noise_variance: 1e-4,
            normalization: f.normalization,
            hyperopt_initial_step: h.initial_step,
            hyperopt_max_iterations: h.max_iterations,
            hyperopt_gradient_tolerance: h.gradient_tolerance,
            hyperopt_max_halvings: h.max_halvings,
            loo_early_stop: h.loo_early_stop,
            loo_metric: h.loo_metric,
            loo_tolerance: h.loo_tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportSection {
    pub length: f64,
}

impl Default for SupportSection {
    fn default() -> Self {
        SupportSection {
            length: HRFSupport::default().length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub data_peaks: Vec<f64>,
    pub method_peaks: Vec<f64>,
    pub include_zero_mean: bool,
    pub noise_levels: Vec<f64>,
    pub n_seeds: u64,
    pub heldout_target: HeldoutTarget,
    /// Overrides `fit.optimize_hyperparams` for benchmark fits.
    pub optimize_hyperparams: bool,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        let d = BenchmarkConfig::default();
        BenchmarkSection {
            data_peaks: d.data_peaks,
            method_peaks: d.method_peaks,
            include_zero_mean: d.include_zero_mean,
            noise_levels: d.noise_levels,
            n_seeds: d.n_seeds,
            heldout_target: d.heldout_target,
            optimize_hyperparams: d.fit.optimize_hyperparams,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaStudySection {
    /// Kernel length scales, each fitted with hyperparameters frozen.
    pub gammas: Vec<f64>,
    pub noise_sd: f64,
}

impl Default for GammaStudySection {
    fn default() -> Self {
        GammaStudySection {
            gammas: vec![0.5, 2.0, 8.0, 32.0],
            noise_sd: 0.01,
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document. Syntax errors carry the line.
    pub fn from_toml(text: &str, path: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Parse {
                path: path.to_owned(),
                line,
                reason: e.message().to_owned(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.synth_config().validate()?;
        self.kernel_params()?;
        self.support()?;
        self.fit_config().validate()?;
        if !(self.prior.noise_variance.is_finite() && self.prior.noise_variance > 0.0) {
            return Err(Error::invalid("prior.noise_variance", "must be positive"));
        }
        GammaDiffParams::with_peak(self.prior.mean_peak_time).validate()?;
        self.benchmark_config().validate()?;
        if self.gamma_study.gammas.is_empty() {
            return Err(Error::invalid("gamma_study.gammas", "must not be empty"));
        }
        for &g in &self.gamma_study.gammas {
            KernelParams::new(self.kernel.amplitude, g)?;
        }
        if !(self.gamma_study.noise_sd.is_finite() && self.gamma_study.noise_sd >= 0.0) {
            return Err(Error::invalid("gamma_study.noise_sd", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            n_conditions: s.n_conditions,
            n_events_total: s.n_events_total,
            mean_isi: s.mean_isi,
            isi_jitter_halfwidth: s.isi_jitter_halfwidth,
            repetition_time: s.repetition_time,
            noise_sd: s.noise_sd,
            hrf_peak_time: s.hrf_peak_time,
            beta_true: s.beta_true.clone(),
            n_samples: s.n_samples,
            seed: self.seed,
        }
    }

    pub fn kernel_params(&self) -> Result<KernelParams> {
        KernelParams::new(self.kernel.amplitude, self.kernel.length_scale)
    }

    pub fn support(&self) -> Result<HRFSupport> {
        HRFSupport::new(self.support.length)
    }

    pub fn fit_config(&self) -> FitConfig {
        let f = &self.fit;
        FitConfig {
            max_outer_iterations: f.max_outer_iterations,
            convergence_tol: f.convergence_tol,
            output_grid_step: f.output_grid_step,
            optimize_hyperparams: f.optimize_hyperparams,
            hyperopt: HyperOptConfig {
                initial_step: f.hyperopt_initial_step,
                max_iterations: f.hyperopt_max_iterations,
                gradient_tolerance: f.hyperopt_gradient_tolerance,
                max_halvings: f.hyperopt_max_halvings,
                loo_early_stop: f.loo_early_stop,
                loo_metric: f.loo_metric,
                loo_tolerance: f.loo_tolerance,
            },
            noise_mode: match f.noise_mode {
                NoiseModeName::ReEstimate => NoiseMode::ReEstimate,
                NoiseModeName::Fixed => NoiseMode::Fixed(f.fixed_noise_variance),
            },
            normalization: f.normalization,
        }
    }

    /// Prior for `fit` and the smoothness study.
    pub fn prior(&self) -> Result<GPPrior> {
        let kernel = self.kernel_params()?;
        let noise = match self.fit_config().noise_mode {
            NoiseMode::Fixed(v) => v,
            NoiseMode::ReEstimate => self.prior.noise_variance,
        };
        match self.prior.mean {
            PriorMean::Gamma => {
                let mean = GammaDiffHrf::new(GammaDiffParams::with_peak(self.prior.mean_peak_time), self.support.length)?;
                GPPrior::new(Arc::new(mean), kernel, noise)
            }
            PriorMean::Zero => GPPrior::new(Arc::new(ZeroFunction), kernel, noise),
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        let b = &self.benchmark;
        BenchmarkConfig {
            data_peaks: b.data_peaks.clone(),
            method_peaks: b.method_peaks.clone(),
            include_zero_mean: b.include_zero_mean,
            noise_levels: b.noise_levels.clone(),
            n_seeds: b.n_seeds,
            base_seed: self.seed,
            synth: self.synth_config(),
            kernel: KernelParams {
                amplitude: self.kernel.amplitude,
                length_scale: self.kernel.length_scale,
            },
            prior_noise_variance: self.prior.noise_variance,
            fit: FitConfig {
                optimize_hyperparams: b.optimize_hyperparams,
                ..self.fit_config()
            },
            support: HRFSupport {
                length: self.support.length,
            },
            heldout_target: b.heldout_target,
        }
    }
}

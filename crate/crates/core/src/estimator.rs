//! Alternating estimation of activations and HRF.
//!
//! Starting from `beta = 1`, each outer iteration
//!
//! 1. turns every sample into a linear measurement of the HRF at the current
//!    `beta` and conditions the GP on them (HRF step),
//! 2. rebuilds the design matrix from the posterior mean at the lags and
//!    solves least squares for `beta`,
//! 3. optionally re-estimates the noise variance from the residuals and
//!    re-tunes the kernel hyperparameters,
//!
//! until the relative change of the conditional log-likelihood falls below
//! the tolerance.
//!
//! The bilinear model is invariant under `(c h, beta / c)`. The GP prior pins
//! the scale during iteration; the reported HRF and activations are rescaled
//! afterwards so that the posterior mean has unit maximum absolute value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{
    self, optimize_hyperparams, Factorized, GPPosterior, GPPrior, HyperOptConfig, LinearMeasurement,
};
use crate::kernel::{Kernel, KernelParams};
use crate::linalg::min_norm_lstsq;
use crate::signal::{
    collect_rho, design_from_rho_values, measurements_from_rho, HRFSupport, InterpolatedHrf,
    Paradigm, RhoSet, SamplingGrid,
};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const MIN_NOISE_VARIANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Fixed(f64),
    /// Start from the prior's noise variance, then use `RSS / (N - P)`.
    ReEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    UnitPeak,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_outer_iterations: usize,
    /// Relative change of the conditional log-likelihood.
    pub convergence_tol: f64,
    pub output_grid_step: f64,
    pub optimize_hyperparams: bool,
    pub hyperopt: HyperOptConfig,
    pub noise_mode: NoiseMode,
    pub normalization: Normalization,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_outer_iterations: 20,
            convergence_tol: 1e-4,
            output_grid_step: 0.1,
            optimize_hyperparams: true,
            hyperopt: HyperOptConfig::default(),
            noise_mode: NoiseMode::ReEstimate,
            normalization: Normalization::UnitPeak,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(Error::invalid("max_outer_iterations", "must be positive"));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::invalid("convergence_tol", "must be positive"));
        }
        if !(self.output_grid_step.is_finite() && self.output_grid_step > 0.0) {
            return Err(Error::invalid("output_grid_step", "must be positive"));
        }
        if let NoiseMode::Fixed(v) = self.noise_mode {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("noise_variance", "fixed noise variance must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    /// HRF posterior on the output grid over `[0, L]`.
    pub hrf_posterior: GPPosterior,
    pub kernel_params: KernelParams,
    pub noise_variance: f64,
    /// Conditional log-likelihood `log p(y | h, beta)` after each outer
    /// iteration.
    pub loglik_trace: Vec<f64>,
    /// Penalized objective `log p(y | h, beta) - |h - mu|^2_K / 2` after each
    /// outer iteration, evaluated at the noise variance of that iteration's
    /// HRF step. This is the quantity both half-steps maximize, so with fixed
    /// noise and kernel it never decreases.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub n_iterations: usize,
    /// Factor the HRF was divided by (and `beta` multiplied by) for reporting.
    pub hrf_scale: f64,
    /// Distinct lags of the training data and the (reported-scale) posterior
    /// mean there.
    pub rho_points: Vec<f64>,
    pub rho_mean: DVector<f64>,
    /// Design matrix of the final iteration, at the reported scale.
    pub design: DMatrix<f64>,
}

impl FitResult {
    /// Posterior mean as a piecewise-linear curve on the output grid.
    pub fn hrf_curve(&self) -> InterpolatedHrf {
        let q = &self.hrf_posterior.query_abscissae;
        let step = if q.len() > 1 { q[1] - q[0] } else { 1.0 };
        InterpolatedHrf::new(q[0], step, self.hrf_posterior.mean.iter().copied().collect())
            .expect("output grid is nonempty with positive step")
    }

    /// In-sample prediction `X_h beta`.
    pub fn fitted(&self) -> DVector<f64> {
        &self.design * &self.beta
    }
}

pub fn estimate_beta(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    min_norm_lstsq(x, y)
}

/// Output of one HRF step.
#[derive(Debug, Clone)]
pub struct HStep {
    pub rho_points: Vec<f64>,
    pub rho_mean: DVector<f64>,
    pub posterior: GPPosterior,
    pub n_dropped: usize,
}

/// Conditions the HRF prior on the samples at fixed activations.
pub fn estimate_h_step(
    y: &DVector<f64>,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    support: &HRFSupport,
    beta: &DVector<f64>,
    prior: &GPPrior,
    output_grid: &[f64],
) -> Result<HStep> {
    check_inputs(y, grid)?;
    if beta.len() != paradigm.n_conditions() {
        return Err(Error::DimensionMismatch {
            what: "beta",
            expected: paradigm.n_conditions(),
            found: beta.len(),
        });
    }
    let rho = collect_rho(paradigm, grid, support)?;
    let state = h_step(paradigm, &rho, beta, y, prior)?;
    let posterior = gp::posterior_from(prior, &state.measurements, &state.fac, output_grid);
    Ok(HStep {
        rho_points: rho.points,
        rho_mean: state.rho_mean,
        posterior,
        n_dropped: state.n_dropped,
    })
}

struct HState {
    measurements: Vec<LinearMeasurement>,
    fac: Factorized,
    rho_mean: DVector<f64>,
    n_dropped: usize,
}

impl HState {
    /// `|h - mu|^2_K / 2` of the posterior mean, `alpha' (S11 - s2 I) alpha / 2`.
    fn rkhs_penalty(&self, noise_variance: f64) -> f64 {
        let alpha = &self.fac.alpha;
        0.5 * (alpha.dot(&self.fac.centered) - noise_variance * alpha.norm_squared())
    }
}

fn h_step(
    paradigm: &Paradigm,
    rho: &RhoSet,
    beta: &DVector<f64>,
    y: &DVector<f64>,
    prior: &GPPrior,
) -> Result<HState> {
    let hm = measurements_from_rho(paradigm, rho, beta, y);
    if hm.measurements.is_empty() {
        return Err(Error::DegenerateBeta);
    }
    let fac = Factorized::new(prior, &hm.measurements)?;
    let rho_mean = gp::posterior_mean_from(prior, &hm.measurements, &fac.alpha, &rho.points);
    Ok(HState {
        measurements: hm.measurements,
        fac,
        rho_mean,
        n_dropped: hm.dropped.len(),
    })
}

fn check_inputs(y: &DVector<f64>, grid: &SamplingGrid) -> Result<()> {
    if y.len() != grid.n_samples {
        return Err(Error::DimensionMismatch {
            what: "signal",
            expected: grid.n_samples,
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    Ok(())
}

fn conditional_loglik(rss: f64, n: usize, noise_variance: f64) -> f64 {
    -0.5 * n as f64 * (LN_2PI + noise_variance.ln()) - rss / (2.0 * noise_variance)
}

/// Joint estimation of activations and HRF.
pub fn fit(
    y: &DVector<f64>,
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    support: &HRFSupport,
    prior: &GPPrior,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    check_inputs(y, grid)?;
    let n = grid.n_samples;
    let p = paradigm.n_conditions();
    let rho = collect_rho(paradigm, grid, support)?;
    let output_grid = support.grid(cfg.output_grid_step);

    let mut beta = DVector::from_element(p, 1.0);
    let mut noise_variance = match cfg.noise_mode {
        NoiseMode::Fixed(v) => v,
        NoiseMode::ReEstimate => prior.noise_variance.max(MIN_NOISE_VARIANCE),
    };
    let mut kernel: Kernel = prior.kernel;
    let mut trace = Vec::new();
    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut last = None;

    for _ in 0..cfg.max_outer_iterations {
        let current = prior.with_kernel(kernel).with_noise_variance(noise_variance);
        let state = h_step(paradigm, &rho, &beta, y, &current)?;
        let x = design_from_rho_values(paradigm, &rho, state.rho_mean.as_slice());
        beta = estimate_beta(&x, y);
        let rss = (y - &x * &beta).norm_squared();
        if let NoiseMode::ReEstimate = cfg.noise_mode {
            let dof = if n > p { n - p } else { n };
            noise_variance = (rss / dof as f64).max(MIN_NOISE_VARIANCE);
        }
        let ll = conditional_loglik(rss, n, noise_variance);
        if !ll.is_finite() {
            return Err(Error::NonFinite("conditional log-likelihood"));
        }
        let previous = trace.last().copied();
        trace.push(ll);
        objective_trace.push(
            conditional_loglik(rss, n, current.noise_variance) - state.rkhs_penalty(current.noise_variance),
        );
        last = Some((current, state, x));

        if let Some(prev) = previous {
            if ((ll - prev) / ll).abs() < cfg.convergence_tol {
                converged = true;
                break;
            }
        }
        if cfg.optimize_hyperparams {
            let hm = measurements_from_rho(paradigm, &rho, &beta, y);
            if hm.measurements.len() >= 2 {
                let tuned_prior = prior.with_kernel(kernel).with_noise_variance(noise_variance);
                kernel = optimize_hyperparams(&tuned_prior, &hm.measurements, &cfg.hyperopt)?
                    .params
                    .into();
            }
        }
    }

    let (used_prior, state, x) = last.expect("at least one outer iteration");
    let mut posterior = gp::posterior_from(&used_prior, &state.measurements, &state.fac, &output_grid);
    let mut rho_mean = state.rho_mean;
    let mut design = x;
    let scale = match cfg.normalization {
        Normalization::UnitPeak => {
            let s = posterior.mean.amax();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        }
        Normalization::None => 1.0,
    };
    if scale != 1.0 {
        posterior.mean /= scale;
        posterior.covariance /= scale * scale;
        rho_mean /= scale;
        design /= scale;
        beta *= scale;
    }

    Ok(FitResult {
        beta,
        hrf_posterior: posterior,
        kernel_params: used_prior.kernel.params(),
        noise_variance: used_prior.noise_variance,
        n_iterations: trace.len(),
        loglik_trace: trace,
        objective_trace,
        converged,
        hrf_scale: scale,
        rho_points: rho.points,
        rho_mean,
        design,
    })
}

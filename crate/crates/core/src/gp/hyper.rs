//! Marginal-likelihood hyperparameter search with leave-one-out early stopping.

use serde::{Deserialize, Serialize};

use super::{evaluate_objective, marginal_loglik, GPPrior, LinearMeasurement};
use crate::error::{Error, Result};
use crate::kernel::{KernelParams, N_HYPER};

/// Leave-one-out criterion watched for early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LooMetric {
    /// Mean squared residual, as [`super::loo_error`].
    SquaredError,
    /// Mean negative log predictive density, as [`super::loo_log_loss`].
    LogLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperOptConfig {
    /// Initial step length along the gradient direction, in log-domain units.
    pub initial_step: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Halvings of the step before a line search gives up.
    pub max_halvings: usize,
    /// Stop as soon as the LOO error increases.
    pub loo_early_stop: bool,
    pub loo_metric: LooMetric,
    /// Relative LOO change treated as noise: a step only counts as an
    /// increase when it exceeds the best value seen by more than this.
    pub loo_tolerance: f64,
}

impl Default for HyperOptConfig {
    fn default() -> Self {
        HyperOptConfig {
            initial_step: 0.1,
            max_iterations: 100,
            gradient_tolerance: 1e-5,
            max_halvings: 40,
            loo_early_stop: true,
            loo_metric: LooMetric::SquaredError,
            loo_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperOptOutcome {
    /// Parameters with the lowest LOO error among accepted iterates, or the
    /// last iterate when LOO early stopping is disabled.
    pub params: KernelParams,
    /// Last accepted iterate, regardless of LOO.
    pub last_params: KernelParams,
    pub iterations: usize,
    pub gradient_converged: bool,
    pub loo_stopped: bool,
    /// Line search found no ascent step.
    pub stalled: bool,
    pub loglik: f64,
    /// LOO criterion at `params`, in the configured metric.
    pub loo: f64,
    pub gradient: [f64; N_HYPER],
}

/// Gradient ascent on the log marginal likelihood in `(log gamma, log C)`.
///
/// Each iteration starts from `initial_step` (a log-domain step length along
/// the gradient direction) and halves it until the likelihood increases.
/// After every accepted step the LOO error is evaluated; with early stopping
/// enabled the search stops once it rises above the best value seen (beyond
/// `loo_tolerance`) and returns the latest iterate whose LOO error was within
/// tolerance of the best.
pub fn optimize_hyperparams(
    prior: &GPPrior,
    ms: &[LinearMeasurement],
    cfg: &HyperOptConfig,
) -> Result<HyperOptOutcome> {
    if ms.len() < 2 {
        return Err(Error::DegenerateInput("hyperparameter search needs at least two measurements"));
    }
    let mut theta = prior.kernel.log_params();
    let metric = |o: &super::Objective| match cfg.loo_metric {
        LooMetric::SquaredError => o.loo,
        LooMetric::LogLoss => o.loo_log_loss,
    };
    let mut current = evaluate_objective(prior, ms)?;
    let mut best = (prior.kernel.params(), metric(&current), current.loglik, current.grad);
    let mut best_loo_at = best.1;

    let mut outcome = HyperOptOutcome {
        params: prior.kernel.params(),
        last_params: prior.kernel.params(),
        iterations: 0,
        gradient_converged: false,
        loo_stopped: false,
        stalled: false,
        loglik: current.loglik,
        loo: metric(&current),
        gradient: current.grad,
    };

    for it in 0..cfg.max_iterations {
        let gnorm = current.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < cfg.gradient_tolerance {
            outcome.gradient_converged = true;
            break;
        }
        let mut step = cfg.initial_step;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = theta;
            for (t, g) in trial.iter_mut().zip(&current.grad) {
                *t += step * g / gnorm;
            }
            let kernel = prior.kernel.with_log_params(trial);
            match marginal_loglik(&prior.with_kernel(kernel), ms) {
                Ok(ll) if ll > current.loglik => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) | Err(Error::SingularCovariance) | Err(Error::NonFinite(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some(trial) = accepted else {
            outcome.stalled = true;
            break;
        };
        theta = trial;
        let kernel = prior.kernel.with_log_params(theta);
        current = evaluate_objective(&prior.with_kernel(kernel), ms)?;
        outcome.iterations = it + 1;
        outcome.last_params = kernel.params();
        let loo = metric(&current);
        let slack = cfg.loo_tolerance * best.1.abs();
        if loo <= best.1 + slack {
            // later iterates win ties: they have higher likelihood
            let floor = best.1.min(loo);
            best = (kernel.params(), floor, current.loglik, current.grad);
            best_loo_at = loo;
        } else if cfg.loo_early_stop {
            outcome.loo_stopped = true;
            break;
        }
    }

    if cfg.loo_early_stop {
        outcome.params = best.0;
        outcome.loo = best_loo_at;
        outcome.loglik = best.2;
        outcome.gradient = best.3;
    } else {
        outcome.params = outcome.last_params;
        outcome.loo = metric(&current);
        outcome.loglik = current.loglik;
        outcome.gradient = current.grad;
    }
    Ok(outcome)
}

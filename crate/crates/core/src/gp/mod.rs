//! Gaussian-process inference from noisy linear combinations of function
//! evaluations.
//!
//! A measurement `phi_n = sum_i eta_{i,n} f(x_{i,n}) + eps_n` is a
//! [`LinearMeasurement`]. Conditioning on a set of them gives the posterior of
//! `f` at arbitrary query points:
//!
//! ```text
//! mean = mu(x') + S21 S11^-1 (a - E[phi])
//! cov  = S22 - S21 S11^-1 S21^T
//! ```
//!
//! where `S11` is the measurement covariance (kernel double sums plus noise)
//! and `S21` the query/measurement cross covariance. All solves go through a
//! jittered Cholesky factorization of `S11`.

mod hyper;

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, N_HYPER};
use crate::linalg::{jittered_cholesky, log_det};
use crate::signal::{TimeFunction, ZeroFunction};

pub use hyper::{optimize_hyperparams, HyperOptConfig, HyperOptOutcome, LooMetric};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// One noisy linear combination of latent-function evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeasurement {
    pub abscissae: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub value: f64,
}

impl LinearMeasurement {
    pub fn new(abscissae: Vec<f64>, coefficients: Vec<f64>, value: f64) -> Result<Self> {
        if abscissae.is_empty() {
            return Err(Error::invalid("abscissae", "must be nonempty"));
        }
        if abscissae.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                what: "measurement coefficients",
                expected: abscissae.len(),
                found: coefficients.len(),
            });
        }
        if abscissae.iter().chain(&coefficients).any(|v| !v.is_finite()) || !value.is_finite() {
            return Err(Error::NonFinite("linear measurement"));
        }
        Ok(LinearMeasurement {
            abscissae,
            coefficients,
            value,
        })
    }

    /// A direct observation `f(x) + eps`.
    pub fn direct(x: f64, value: f64) -> Self {
        LinearMeasurement {
            abscissae: vec![x],
            coefficients: vec![1.0],
            value,
        }
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.abscissae
            .iter()
            .copied()
            .zip(self.coefficients.iter().copied())
    }
}

/// Prior `f ~ GP(mean, kernel)` with i.i.d. measurement noise.
#[derive(Clone)]
pub struct GPPrior {
    pub mean: Arc<dyn TimeFunction>,
    pub kernel: Kernel,
    pub noise_variance: f64,
}

impl fmt::Debug for GPPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GPPrior")
            .field("kernel", &self.kernel)
            .field("noise_variance", &self.noise_variance)
            .finish_non_exhaustive()
    }
}

impl GPPrior {
    pub fn new(
        mean: Arc<dyn TimeFunction>,
        kernel: impl Into<Kernel>,
        noise_variance: f64,
    ) -> Result<Self> {
        let kernel = kernel.into();
        kernel.params().validate()?;
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::invalid("noise_variance", "must be finite and >= 0"));
        }
        Ok(GPPrior {
            mean,
            kernel,
            noise_variance,
        })
    }

    pub fn zero_mean(kernel: impl Into<Kernel>, noise_variance: f64) -> Result<Self> {
        Self::new(Arc::new(ZeroFunction), kernel, noise_variance)
    }

    pub fn with_kernel(&self, kernel: Kernel) -> Self {
        GPPrior {
            kernel,
            ..self.clone()
        }
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Self {
        GPPrior {
            noise_variance,
            ..self.clone()
        }
    }
}

/// Conditional distribution of the latent function at query points.
#[derive(Debug, Clone, PartialEq)]
pub struct GPPosterior {
    pub query_abscissae: Vec<f64>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GPPosterior {
    /// Pointwise standard deviation, clamping round-off negatives to zero.
    pub fn std_dev(&self) -> Vec<f64> {
        self.covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }
}

/// Kernel double sum between two measurements.
#[inline]
fn pair_cov(kernel: &Kernel, a: &LinearMeasurement, b: &LinearMeasurement) -> f64 {
    let mut acc = 0.0;
    for (xa, ea) in a.terms() {
        for (xb, eb) in b.terms() {
            acc += ea * eb * kernel.eval(xa, xb);
        }
    }
    acc
}

/// Measurement covariance `S11` (N x N), noise included.
pub fn measurement_cov(prior: &GPPrior, ms: &[LinearMeasurement]) -> DMatrix<f64> {
    let n = ms.len();
    let mut cov = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = pair_cov(&prior.kernel, &ms[i], &ms[j]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(j, j)] += prior.noise_variance;
    }
    cov
}

/// `S11` together with its derivatives in the log-domain hyperparameters.
pub(crate) fn measurement_cov_with_grad(
    prior: &GPPrior,
    ms: &[LinearMeasurement],
) -> (DMatrix<f64>, [DMatrix<f64>; N_HYPER]) {
    let n = ms.len();
    let mut cov = DMatrix::zeros(n, n);
    let mut grads = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    for j in 0..n {
        for i in j..n {
            let mut v = 0.0;
            let mut g = [0.0; N_HYPER];
            for (xa, ea) in ms[i].terms() {
                for (xb, eb) in ms[j].terms() {
                    let (k, dk) = prior.kernel.eval_with_log_grad(xa, xb);
                    let w = ea * eb;
                    v += w * k;
                    g[0] += w * dk[0];
                    g[1] += w * dk[1];
                }
            }
            cov[(i, j)] = v;
            cov[(j, i)] = v;
            for h in 0..N_HYPER {
                grads[h][(i, j)] = g[h];
                grads[h][(j, i)] = g[h];
            }
        }
        cov[(j, j)] += prior.noise_variance;
    }
    (cov, grads)
}

/// Cross covariance `S21` (N' x N) between query values and measurements.
pub fn cross_cov(prior: &GPPrior, ms: &[LinearMeasurement], query: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(query.len(), ms.len(), |k, n| {
        ms[n]
            .terms()
            .map(|(x, eta)| eta * prior.kernel.eval(query[k], x))
            .sum()
    })
}

/// Prior expectation of each measurement, `sum_i eta_i mu(x_i)`.
pub fn measurement_mean(prior: &GPPrior, ms: &[LinearMeasurement]) -> DVector<f64> {
    DVector::from_iterator(
        ms.len(),
        ms.iter()
            .map(|m| m.terms().map(|(x, eta)| eta * prior.mean.eval(x)).sum()),
    )
}

/// Factorized measurement system shared by conditioning, likelihood and LOO.
pub(crate) struct Factorized {
    pub chol: Cholesky<f64, Dyn>,
    /// `a - E[phi]`
    pub centered: DVector<f64>,
    /// `S11^-1 (a - E[phi])`
    pub alpha: DVector<f64>,
}

impl Factorized {
    pub fn new(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<Self> {
        Self::from_cov(prior, ms, measurement_cov(prior, ms))
    }

    pub fn from_cov(prior: &GPPrior, ms: &[LinearMeasurement], cov: DMatrix<f64>) -> Result<Self> {
        let chol = jittered_cholesky(cov)?;
        let values = DVector::from_iterator(ms.len(), ms.iter().map(|m| m.value));
        let centered = values - measurement_mean(prior, ms);
        if centered.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement values"));
        }
        let alpha = chol.solve(&centered);
        Ok(Factorized {
            chol,
            centered,
            alpha,
        })
    }

    pub fn loglik(&self) -> f64 {
        let n = self.centered.len() as f64;
        -0.5 * self.centered.dot(&self.alpha) - 0.5 * log_det(&self.chol) - 0.5 * n * LN_2PI
    }
}

/// Posterior of the latent function at `query` given the measurements.
pub fn condition(prior: &GPPrior, ms: &[LinearMeasurement], query: &[f64]) -> Result<GPPosterior> {
    if ms.is_empty() {
        return Ok(GPPosterior {
            query_abscissae: query.to_vec(),
            mean: DVector::from_iterator(query.len(), query.iter().map(|&x| prior.mean.eval(x))),
            covariance: prior.kernel.gram(query, query),
        });
    }
    let fac = Factorized::new(prior, ms)?;
    Ok(posterior_from(prior, ms, &fac, query))
}

/// Full posterior at `query` from an existing factorization.
pub(crate) fn posterior_from(
    prior: &GPPrior,
    ms: &[LinearMeasurement],
    fac: &Factorized,
    query: &[f64],
) -> GPPosterior {
    let prior_mean = DVector::from_iterator(query.len(), query.iter().map(|&x| prior.mean.eval(x)));
    let s21 = cross_cov(prior, ms, query);
    let mean = prior_mean + &s21 * &fac.alpha;
    // S21 S11^-1 S21^T = V^T V with V = L^-1 S21^T
    let mut v = s21.transpose();
    fac.chol.l_dirty().solve_lower_triangular_mut(&mut v);
    let mut covariance = prior.kernel.gram(query, query) - v.transpose() * &v;
    symmetrize(&mut covariance);
    GPPosterior {
        query_abscissae: query.to_vec(),
        mean,
        covariance,
    }
}

/// Posterior mean only; skips the `O(N'^2 N)` covariance.
pub fn condition_mean(
    prior: &GPPrior,
    ms: &[LinearMeasurement],
    query: &[f64],
) -> Result<DVector<f64>> {
    if ms.is_empty() {
        return Ok(DVector::from_iterator(
            query.len(),
            query.iter().map(|&x| prior.mean.eval(x)),
        ));
    }
    let fac = Factorized::new(prior, ms)?;
    Ok(posterior_mean_from(prior, ms, &fac.alpha, query))
}

/// `mu(q) + sum_n alpha_n sum_i eta_{i,n} k(q, x_{i,n})`, flattened over terms.
pub(crate) fn posterior_mean_from(
    prior: &GPPrior,
    ms: &[LinearMeasurement],
    alpha: &DVector<f64>,
    query: &[f64],
) -> DVector<f64> {
    let (xs, ws): (Vec<f64>, Vec<f64>) = ms
        .iter()
        .zip(alpha.iter())
        .flat_map(|(m, &a)| m.terms().map(move |(x, eta)| (x, eta * a)))
        .unzip();
    DVector::from_iterator(
        query.len(),
        query.iter().map(|&q| {
            let corr: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| w * prior.kernel.eval(q, x))
                .sum();
            prior.mean.eval(q) + corr
        }),
    )
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Log marginal likelihood of the mean-centered measurement values.
pub fn marginal_loglik(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<f64> {
    let ll = Factorized::new(prior, ms)?.loglik();
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFinite("marginal log-likelihood"))
    }
}

/// Gradient of [`marginal_loglik`] over `(log gamma, log C)`:
/// `0.5 tr((alpha alpha^T - S11^-1) dS11)`.
pub fn marginal_loglik_grad(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<[f64; N_HYPER]> {
    Ok(evaluate_objective(prior, ms)?.grad)
}

/// Mean squared leave-one-out residual, from the precision matrix.
pub fn loo_error(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<f64> {
    if ms.len() < 2 {
        return Err(Error::DegenerateInput("leave-one-out needs at least two measurements"));
    }
    let fac = Factorized::new(prior, ms)?;
    let inv = fac.chol.inverse();
    Ok(loo_from(&fac.alpha, &inv))
}

/// Mean negative log leave-one-out predictive density.
pub fn loo_log_loss(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<f64> {
    if ms.len() < 2 {
        return Err(Error::DegenerateInput("leave-one-out needs at least two measurements"));
    }
    let fac = Factorized::new(prior, ms)?;
    let inv = fac.chol.inverse();
    Ok(loo_log_loss_from(&fac.alpha, &inv))
}

fn loo_log_loss_from(alpha: &DVector<f64>, inv: &DMatrix<f64>) -> f64 {
    let n = alpha.len();
    alpha
        .iter()
        .enumerate()
        .map(|(i, a)| {
            // predictive variance 1 / [S^-1]_ii, residual a / [S^-1]_ii
            let prec = inv[(i, i)];
            0.5 * (LN_2PI - prec.ln() + a * a / prec)
        })
        .sum::<f64>()
        / n as f64
}

fn loo_from(alpha: &DVector<f64>, inv: &DMatrix<f64>) -> f64 {
    let n = alpha.len();
    alpha
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let r = a / inv[(i, i)];
            r * r
        })
        .sum::<f64>()
        / n as f64
}

/// Log-likelihood, its gradient and LOO error from one factorization.
pub(crate) struct Objective {
    pub loglik: f64,
    pub grad: [f64; N_HYPER],
    pub loo: f64,
    pub loo_log_loss: f64,
}

pub(crate) fn evaluate_objective(prior: &GPPrior, ms: &[LinearMeasurement]) -> Result<Objective> {
    let (cov, grads) = measurement_cov_with_grad(prior, ms);
    let fac = Factorized::from_cov(prior, ms, cov)?;
    let inv = fac.chol.inverse();
    let mut grad = [0.0; N_HYPER];
    for (g, d) in grad.iter_mut().zip(&grads) {
        let fit = fac.alpha.dot(&(d * &fac.alpha));
        let trace = inv.component_mul(d).sum();
        *g = 0.5 * (fit - trace);
    }
    let loglik = fac.loglik();
    let (loo, loo_log_loss) = if ms.len() >= 2 {
        (loo_from(&fac.alpha, &inv), loo_log_loss_from(&fac.alpha, &inv))
    } else {
        (f64::NAN, f64::NAN)
    };
    if !loglik.is_finite() {
        return Err(Error::NonFinite("marginal log-likelihood"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("marginal log-likelihood gradient"));
    }
    Ok(Objective {
        loglik,
        grad,
        loo,
        loo_log_loss,
    })
}

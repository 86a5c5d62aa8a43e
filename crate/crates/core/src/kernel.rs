//! Covariance kernels on the HRF time axis.
//!
//! Only the squared-exponential family is implemented:
//! `k(s, t) = C exp(-(s - t)^2 / gamma)`, where `C` is the amplitude (prior
//! variance) and `gamma` the squared length scale. Hyperparameters are
//! optimized in log-domain, so [`Kernel`] exposes derivatives with respect to
//! `(log gamma, log C)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Prior variance `C`.
    pub amplitude: f64,
    /// `gamma`, in squared time units.
    pub length_scale: f64,
}

impl KernelParams {
    pub fn new(amplitude: f64, length_scale: f64) -> Result<Self> {
        let params = KernelParams {
            amplitude,
            length_scale,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::invalid("amplitude", "must be positive and finite"));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::invalid("length_scale", "must be positive and finite"));
        }
        Ok(())
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            amplitude: 1.0,
            length_scale: 4.0,
        }
    }
}

#[inline]
pub fn eval_kernel(params: &KernelParams, s: f64, t: f64) -> f64 {
    let d = s - t;
    params.amplitude * (-(d * d) / params.length_scale).exp()
}

pub fn gram(params: &KernelParams, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| eval_kernel(params, a[i], b[j]))
}

/// Partial derivatives `(dk/dgamma, dk/dC)` in natural parameters.
#[inline]
pub fn kernel_grad(params: &KernelParams, s: f64, t: f64) -> (f64, f64) {
    let d = s - t;
    let d2 = d * d;
    let unit = (-d2 / params.length_scale).exp();
    let k = params.amplitude * unit;
    (k * d2 / (params.length_scale * params.length_scale), unit)
}

/// Kernel handle used by the GP layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    SquaredExponential(KernelParams),
}

/// Number of log-domain hyperparameters of every kernel family.
pub const N_HYPER: usize = 2;

impl Kernel {
    pub fn squared_exponential(params: KernelParams) -> Self {
        Kernel::SquaredExponential(params)
    }

    #[inline]
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            Kernel::SquaredExponential(p) => eval_kernel(p, s, t),
        }
    }

    /// Value together with derivatives in `(log gamma, log C)`.
    #[inline]
    pub fn eval_with_log_grad(&self, s: f64, t: f64) -> (f64, [f64; N_HYPER]) {
        match self {
            Kernel::SquaredExponential(p) => {
                let d = s - t;
                let d2 = d * d;
                let k = p.amplitude * (-d2 / p.length_scale).exp();
                (k, [k * d2 / p.length_scale, k])
            }
        }
    }

    pub fn params(&self) -> KernelParams {
        match self {
            Kernel::SquaredExponential(p) => *p,
        }
    }

    /// Prior variance at a single point.
    pub fn variance(&self) -> f64 {
        self.params().amplitude
    }

    pub fn log_params(&self) -> [f64; N_HYPER] {
        let p = self.params();
        [p.length_scale.ln(), p.amplitude.ln()]
    }

    pub fn with_log_params(&self, log_params: [f64; N_HYPER]) -> Self {
        match self {
            Kernel::SquaredExponential(_) => Kernel::SquaredExponential(KernelParams {
                amplitude: log_params[1].exp(),
                length_scale: log_params[0].exp(),
            }),
        }
    }

    pub fn gram(&self, a: &[f64], b: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(a.len(), b.len(), |i, j| self.eval(a[i], b[j]))
    }
}

impl From<KernelParams> for Kernel {
    fn from(params: KernelParams) -> Self {
        Kernel::SquaredExponential(params)
    }
}

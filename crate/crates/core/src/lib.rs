//! Joint estimation of condition activations and a continuous impulse
//! response (HRF) from regularly sampled signals driven by irregularly
//! timed events.
//!
//! The HRF is modeled as a Gaussian process. Each sample of the signal is a
//! noisy linear combination of HRF evaluations at the lags between the
//! sample time and the preceding event onsets, so the HRF can be conditioned
//! on the data directly in continuous time. Activations and HRF are then
//! estimated by alternating GP conditioning with least squares.
//!
//! Module map:
//!
//! - [`kernel`]: covariance kernels and their hyperparameter derivatives.
//! - [`gp`]: conditioning on linear-functional observations, marginal
//!   likelihood, leave-one-out error and hyperparameter search.
//! - [`signal`]: paradigms, HRF shapes, lag collection and design matrices.
//! - [`estimator`]: the alternating activation/HRF fit.
//! - [`synth`]: synthetic paradigms and signals.
//! - [`evalx`]: scoring and the estimator benchmark grid.
//! - [`io`] and [`config`]: file formats and run configuration.

pub mod config;
pub mod error;
pub mod estimator;
pub mod evalx;
pub mod gp;
pub mod io;
pub mod kernel;
mod linalg;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use estimator::{fit, FitConfig, FitResult, Normalization, NoiseMode};
pub use gp::{GPPosterior, GPPrior, LinearMeasurement};
pub use kernel::{Kernel, KernelParams};
pub use signal::{
    Event, GammaDiffHrf, GammaDiffParams, HRFSupport, Paradigm, SamplingGrid, TimeFunction,
};

//! HRF shapes: the gamma-difference family and piecewise-linear curves.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::TimeFunction;
use crate::error::{Error, Result};

/// Grid step used to locate the maximum for unit-peak normalization.
const NORMALIZATION_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaDiffParams {
    pub peak_time: f64,
    pub undershoot_time: f64,
    pub peak_dispersion: f64,
    pub undershoot_dispersion: f64,
    pub undershoot_ratio: f64,
}

impl Default for GammaDiffParams {
    fn default() -> Self {
        GammaDiffParams {
            peak_time: 6.0,
            undershoot_time: 16.0,
            peak_dispersion: 1.0,
            undershoot_dispersion: 1.0,
            undershoot_ratio: 1.0 / 6.0,
        }
    }
}

impl GammaDiffParams {
    /// Canonical shape with the main peak moved to `peak_time`.
    pub fn with_peak(peak_time: f64) -> Self {
        GammaDiffParams {
            peak_time,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, field: &'static str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, "must be positive and finite"))
            }
        };
        positive(self.peak_time, "peak_time")?;
        positive(self.undershoot_time, "undershoot_time")?;
        positive(self.peak_dispersion, "peak_dispersion")?;
        positive(self.undershoot_dispersion, "undershoot_dispersion")?;
        if self.undershoot_time <= self.peak_time {
            return Err(Error::invalid("undershoot_time", "must exceed peak_time"));
        }
        if !(0.0..1.0).contains(&self.undershoot_ratio) {
            return Err(Error::invalid("undershoot_ratio", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Log gamma density whose mode sits at `mode` for scale `dispersion`.
fn ln_gamma_pdf_with_mode(t: f64, mode: f64, dispersion: f64) -> f64 {
    let shape = mode / dispersion + 1.0;
    (shape - 1.0) * t.ln() - t / dispersion - ln_gamma(shape) - shape * dispersion.ln()
}

/// Difference-of-gammas HRF, normalized to unit maximum on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDiffHrf {
    params: GammaDiffParams,
    normalizer: f64,
}

impl GammaDiffHrf {
    pub fn new(params: GammaDiffParams, support_length: f64) -> Result<Self> {
        params.validate()?;
        if !(support_length.is_finite() && support_length > 0.0) {
            return Err(Error::invalid("support_length", "must be positive and finite"));
        }
        let raw = GammaDiffHrf {
            params,
            normalizer: 1.0,
        };
        let steps = (support_length / NORMALIZATION_STEP).round() as usize;
        let max = (0..=steps)
            .map(|i| raw.eval(i as f64 * NORMALIZATION_STEP))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::invalid("support_length", "HRF has no positive lobe on the support"));
        }
        Ok(GammaDiffHrf {
            params,
            normalizer: max,
        })
    }

    pub fn params(&self) -> &GammaDiffParams {
        &self.params
    }
}

impl TimeFunction for GammaDiffHrf {
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 || !t.is_finite() {
            return 0.0;
        }
        let p = &self.params;
        let main = ln_gamma_pdf_with_mode(t, p.peak_time, p.peak_dispersion).exp();
        let under = ln_gamma_pdf_with_mode(t, p.undershoot_time, p.undershoot_dispersion).exp();
        (main - p.undershoot_ratio * under) / self.normalizer
    }
}

/// Piecewise-linear curve on a regular grid, zero outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedHrf {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl InterpolatedHrf {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("step", "must be positive and finite"));
        }
        if values.is_empty() {
            return Err(Error::invalid("values", "must be nonempty"));
        }
        Ok(InterpolatedHrf {
            start,
            step,
            values,
        })
    }

    /// Builds a curve from sorted, evenly spaced abscissae.
    pub fn from_samples(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "curve values",
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::invalid("times", "need at least two samples"));
        }
        let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (i, t) in times.iter().enumerate() {
            if (times[0] + i as f64 * step - t).abs() > 1e-6 {
                return Err(Error::invalid("times", "samples must be evenly spaced"));
            }
        }
        Self::new(times[0], step, values.to_vec())
    }

    pub fn end(&self) -> f64 {
        self.start + (self.values.len() - 1) as f64 * self.step
    }
}

impl TimeFunction for InterpolatedHrf {
    fn eval(&self, t: f64) -> f64 {
        let u = (t - self.start) / self.step;
        let last = self.values.len() - 1;
        if !(u >= 0.0) || u > last as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(last);
        if i == last {
            return self.values[last];
        }
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

//! Event paradigms and the link between a continuous HRF and the sampled
//! signal.
//!
//! A sample at `t_n` sees the HRF at every lag `rho = t_n - tau` to a
//! preceding onset `tau`, as long as `rho` lies in the support `[0, L]`. The
//! design matrix sums those evaluations per condition; the same lags, with
//! coefficients `alpha * beta_p`, turn each sample into a linear measurement
//! of the HRF.

mod hrf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::LinearMeasurement;

pub use hrf::{GammaDiffHrf, GammaDiffParams, InterpolatedHrf};

/// Lags closer than this are merged into one distinct lag.
pub const RHO_SNAP_TOLERANCE: f64 = 1e-9;

/// A real function of time (an HRF shape or a GP mean).
pub trait TimeFunction: Send + Sync {
    fn eval(&self, t: f64) -> f64;
}

impl<F> TimeFunction for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroFunction;

impl TimeFunction for ZeroFunction {
    fn eval(&self, _t: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Zero-based condition index.
    pub condition: usize,
    pub onset: f64,
    pub modulation: f64,
}

impl Event {
    pub fn new(condition: usize, onset: f64) -> Self {
        Event {
            condition,
            onset,
            modulation: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paradigm {
    events: Vec<Event>,
    labels: Vec<String>,
}

impl Paradigm {
    /// Paradigm with generated labels `cond1..condP`.
    pub fn new(events: Vec<Event>, n_conditions: usize) -> Result<Self> {
        let labels = (1..=n_conditions).map(|p| format!("cond{p}")).collect();
        Self::with_labels(events, labels)
    }

    pub fn with_labels(events: Vec<Event>, labels: Vec<String>) -> Result<Self> {
        let n_conditions = labels.len();
        if n_conditions == 0 {
            return Err(Error::invalid("n_conditions", "must be positive"));
        }
        let mut counts = vec![0usize; n_conditions];
        for e in &events {
            if e.condition >= n_conditions {
                return Err(Error::invalid(
                    "condition",
                    format!("index {} out of range for {n_conditions} conditions", e.condition),
                ));
            }
            if !(e.onset.is_finite() && e.onset >= 0.0) {
                return Err(Error::invalid("onset", "must be finite and >= 0"));
            }
            if !e.modulation.is_finite() {
                return Err(Error::invalid("modulation", "must be finite"));
            }
            counts[e.condition] += 1;
        }
        if let Some(p) = counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(
                "condition",
                format!("condition `{}` has no events", labels[p]),
            ));
        }
        Ok(Paradigm { events, labels })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_conditions(&self) -> usize {
        self.labels.len()
    }

    /// Onset of the latest event.
    pub fn last_onset(&self) -> f64 {
        self.events.iter().map(|e| e.onset).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub repetition_time: f64,
    pub n_samples: usize,
}

impl SamplingGrid {
    pub fn new(repetition_time: f64, n_samples: usize) -> Result<Self> {
        if !(repetition_time.is_finite() && repetition_time > 0.0) {
            return Err(Error::invalid("repetition_time", "must be positive and finite"));
        }
        if n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be positive"));
        }
        Ok(SamplingGrid {
            repetition_time,
            n_samples,
        })
    }

    /// Time of sample `n` (zero-based), i.e. `(n + 1) * TR`.
    #[inline]
    pub fn time(&self, n: usize) -> f64 {
        (n + 1) as f64 * self.repetition_time
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|n| self.time(n)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HRFSupport {
    pub length: f64,
}

impl Default for HRFSupport {
    fn default() -> Self {
        HRFSupport { length: 25.0 }
    }
}

impl HRFSupport {
    pub fn new(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("support_length", "must be positive and finite"));
        }
        Ok(HRFSupport { length })
    }

    #[inline]
    pub fn contains(&self, rho: f64) -> bool {
        (0.0..=self.length).contains(&rho)
    }

    /// Regular grid `0, step, ..., L` (the last point clamped to `L`).
    pub fn grid(&self, step: f64) -> Vec<f64> {
        let n = (self.length / step).round() as usize;
        (0..=n).map(|i| (i as f64 * step).min(self.length)).collect()
    }
}

/// One in-support lag of measurement `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhoTerm {
    /// Index into [`RhoSet::points`].
    pub rho_index: usize,
    /// Index into [`Paradigm::events`].
    pub event_index: usize,
    pub condition: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoSet {
    /// Sorted distinct lags in `[0, L]`.
    pub points: Vec<f64>,
    /// Per measurement, the lags that contribute to it.
    pub terms: Vec<Vec<RhoTerm>>,
}

impl RhoSet {
    pub fn n_terms(&self) -> usize {
        self.terms.iter().map(Vec::len).sum()
    }
}

/// Collects every in-support lag `t_n - tau` and merges near-duplicates.
pub fn collect_rho(paradigm: &Paradigm, grid: &SamplingGrid, support: &HRFSupport) -> Result<RhoSet> {
    // (rho, n, event)
    let mut raw = Vec::new();
    for n in 0..grid.n_samples {
        let t = grid.time(n);
        for (m, e) in paradigm.events.iter().enumerate() {
            let rho = t - e.onset;
            if support.contains(rho) {
                raw.push((rho, n, m));
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptySupport);
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut points: Vec<f64> = Vec::new();
    let mut terms = vec![Vec::new(); grid.n_samples];
    let mut cluster_start = f64::NEG_INFINITY;
    for &(rho, n, m) in &raw {
        if points.is_empty() || rho - cluster_start > RHO_SNAP_TOLERANCE {
            points.push(rho);
            cluster_start = rho;
        }
        terms[n].push(RhoTerm {
            rho_index: points.len() - 1,
            event_index: m,
            condition: paradigm.events[m].condition,
        });
    }
    for t in &mut terms {
        t.sort_by_key(|term| term.event_index);
    }
    Ok(RhoSet { points, terms })
}

/// `X[n, p] = sum_m alpha_{m,p} h(t_n - tau_{m,p})` over in-support lags.
pub fn build_design_matrix(
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    h: &dyn TimeFunction,
    support: &HRFSupport,
) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(grid.n_samples, paradigm.n_conditions());
    for n in 0..grid.n_samples {
        let t = grid.time(n);
        for e in &paradigm.events {
            let rho = t - e.onset;
            if support.contains(rho) {
                x[(n, e.condition)] += e.modulation * h.eval(rho);
            }
        }
    }
    x
}

/// Design matrix from HRF values at the distinct lags of `rho`.
pub fn design_from_rho_values(paradigm: &Paradigm, rho: &RhoSet, values: &[f64]) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(rho.terms.len(), paradigm.n_conditions());
    for (n, terms) in rho.terms.iter().enumerate() {
        for term in terms {
            let e = &paradigm.events[term.event_index];
            x[(n, term.condition)] += e.modulation * values[term.rho_index];
        }
    }
    x
}

/// Samples turned into linear measurements of the HRF at fixed activations.
#[derive(Debug, Clone)]
pub struct HMeasurements {
    pub rho: RhoSet,
    pub measurements: Vec<LinearMeasurement>,
    /// Sample index of each measurement.
    pub kept: Vec<usize>,
    /// Samples without any nonzero coefficient.
    pub dropped: Vec<usize>,
}

/// One measurement per sample: abscissae are the in-support lags,
/// coefficients `alpha_{m,p} beta_p`. Samples with no nonzero coefficient are
/// dropped and reported.
pub fn build_h_measurements(
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    support: &HRFSupport,
    beta: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<HMeasurements> {
    if beta.len() != paradigm.n_conditions() {
        return Err(Error::DimensionMismatch {
            what: "beta",
            expected: paradigm.n_conditions(),
            found: beta.len(),
        });
    }
    if y.len() != grid.n_samples {
        return Err(Error::DimensionMismatch {
            what: "signal",
            expected: grid.n_samples,
            found: y.len(),
        });
    }
    let rho = collect_rho(paradigm, grid, support)?;
    let m = measurements_from_rho(paradigm, &rho, beta, y);
    Ok(HMeasurements {
        rho,
        measurements: m.measurements,
        kept: m.kept,
        dropped: m.dropped,
    })
}

pub(crate) struct RhoMeasurements {
    pub measurements: Vec<LinearMeasurement>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

pub(crate) fn measurements_from_rho(
    paradigm: &Paradigm,
    rho: &RhoSet,
    beta: &DVector<f64>,
    y: &DVector<f64>,
) -> RhoMeasurements {
    let mut measurements = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (n, terms) in rho.terms.iter().enumerate() {
        let mut abscissae = Vec::with_capacity(terms.len());
        let mut coefficients = Vec::with_capacity(terms.len());
        for term in terms {
            let eta = paradigm.events[term.event_index].modulation * beta[term.condition];
            if eta != 0.0 {
                abscissae.push(rho.points[term.rho_index]);
                coefficients.push(eta);
            }
        }
        if abscissae.is_empty() {
            dropped.push(n);
        } else {
            measurements.push(LinearMeasurement {
                abscissae,
                coefficients,
                value: y[n],
            });
            kept.push(n);
        }
    }
    RhoMeasurements {
        measurements,
        kept,
        dropped,
    }
}

#[cfg(test)]
mod tests;

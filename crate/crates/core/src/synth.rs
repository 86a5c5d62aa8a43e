//! Synthetic event-related paradigms and signals.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{build_design_matrix, Event, HRFSupport, Paradigm, SamplingGrid, TimeFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_conditions: usize,
    pub n_events_total: usize,
    pub mean_isi: f64,
    pub isi_jitter_halfwidth: f64,
    pub repetition_time: f64,
    pub noise_sd: f64,
    pub hrf_peak_time: f64,
    /// Activation per condition; all ones when absent.
    pub beta_true: Option<Vec<f64>>,
    /// Number of samples; when absent the grid covers the last onset plus
    /// the HRF support.
    pub n_samples: Option<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_conditions: 6,
            n_events_total: 200,
            mean_isi: 6.0,
            isi_jitter_halfwidth: 2.0,
            repetition_time: 2.0,
            noise_sd: 0.01,
            hrf_peak_time: 6.0,
            beta_true: None,
            n_samples: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_conditions == 0 {
            return Err(Error::invalid("n_conditions", "must be positive"));
        }
        if self.n_events_total < self.n_conditions {
            return Err(Error::invalid("n_events_total", "must be at least n_conditions"));
        }
        if !(self.isi_jitter_halfwidth >= 0.0 && self.mean_isi > self.isi_jitter_halfwidth) {
            return Err(Error::invalid(
                "mean_isi",
                "must exceed isi_jitter_halfwidth, which must be >= 0",
            ));
        }
        if !(self.repetition_time.is_finite() && self.repetition_time > 0.0) {
            return Err(Error::invalid("repetition_time", "must be positive"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid("noise_sd", "must be finite and >= 0"));
        }
        if !(self.hrf_peak_time.is_finite() && self.hrf_peak_time > 0.0) {
            return Err(Error::invalid("hrf_peak_time", "must be positive"));
        }
        if let Some(b) = &self.beta_true {
            if b.len() != self.n_conditions {
                return Err(Error::invalid(
                    "beta_true",
                    format!("expected {} values, found {}", self.n_conditions, b.len()),
                ));
            }
        }
        if self.n_samples == Some(0) {
            return Err(Error::invalid("n_samples", "must be positive"));
        }
        Ok(())
    }

    pub fn beta(&self) -> DVector<f64> {
        match &self.beta_true {
            Some(b) => DVector::from_column_slice(b),
            None => DVector::from_element(self.n_conditions, 1.0),
        }
    }

    /// Sampling grid for a paradigm generated from this config.
    pub fn grid_for(&self, paradigm: &Paradigm, support: &HRFSupport) -> Result<SamplingGrid> {
        let n = self.n_samples.unwrap_or_else(|| {
            ((paradigm.last_onset() + support.length) / self.repetition_time).ceil() as usize
        });
        SamplingGrid::new(self.repetition_time, n)
    }
}

/// Seeded generator; paradigm and noise use separate streams of one seed.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Jittered event-related paradigm with i.i.d. uniform condition labels.
pub fn generate_paradigm(cfg: &SynthConfig) -> Result<Paradigm> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, 0);
    let lo = cfg.mean_isi - cfg.isi_jitter_halfwidth;
    let hi = cfg.mean_isi + cfg.isi_jitter_halfwidth;
    let mut onset = 0.0;
    let onsets: Vec<f64> = (0..cfg.n_events_total)
        .map(|_| {
            onset += if hi > lo { rng.random_range(lo..=hi) } else { cfg.mean_isi };
            onset
        })
        .collect();
    let labels = loop {
        let labels: Vec<usize> = (0..cfg.n_events_total)
            .map(|_| rng.random_range(0..cfg.n_conditions))
            .collect();
        let mut seen = vec![false; cfg.n_conditions];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            break labels;
        }
    };
    let events = onsets
        .into_iter()
        .zip(labels)
        .map(|(onset, condition)| Event::new(condition, onset))
        .collect();
    Paradigm::new(events, cfg.n_conditions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSignal {
    pub y: DVector<f64>,
    pub y_clean: DVector<f64>,
    /// `10 log10(var(clean) / noise_sd^2)`; `None` without noise.
    pub snr_db: Option<f64>,
}

/// `y = X_h beta + noise_sd * N(0, 1)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_signal(
    paradigm: &Paradigm,
    grid: &SamplingGrid,
    hrf_true: &dyn TimeFunction,
    support: &HRFSupport,
    beta_true: &DVector<f64>,
    noise_sd: f64,
    seed: u64,
) -> Result<SimulatedSignal> {
    if beta_true.len() != paradigm.n_conditions() {
        return Err(Error::DimensionMismatch {
            what: "beta_true",
            expected: paradigm.n_conditions(),
            found: beta_true.len(),
        });
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::invalid("noise_sd", "must be finite and >= 0"));
    }
    let x = build_design_matrix(paradigm, grid, hrf_true, support);
    let y_clean = x * beta_true;
    let mut rng = rng_for(seed, 1);
    let y = if noise_sd > 0.0 {
        y_clean.map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + noise_sd * z
        })
    } else {
        y_clean.clone()
    };
    let snr_db = (noise_sd > 0.0).then(|| 10.0 * (variance(y_clean.as_slice()) / (noise_sd * noise_sd)).log10());
    Ok(SimulatedSignal { y, y_clean, snr_db })
}

/// Population variance.
pub(crate) fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Paradigm, grid and signal of one synthetic run.
#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub paradigm: Paradigm,
    pub grid: SamplingGrid,
    pub signal: SimulatedSignal,
}

/// Generates a full run with the gamma-difference HRF peaking at
/// `cfg.hrf_peak_time`.
pub fn generate_run(cfg: &SynthConfig, support: &HRFSupport) -> Result<SyntheticRun> {
    let hrf = crate::signal::GammaDiffHrf::new(
        crate::signal::GammaDiffParams::with_peak(cfg.hrf_peak_time),
        support.length,
    )?;
    generate_run_with(cfg, support, &hrf)
}

pub fn generate_run_with(
    cfg: &SynthConfig,
    support: &HRFSupport,
    hrf: &dyn TimeFunction,
) -> Result<SyntheticRun> {
    let paradigm = generate_paradigm(cfg)?;
    let grid = cfg.grid_for(&paradigm, support)?;
    let signal = simulate_signal(&paradigm, &grid, hrf, support, &cfg.beta(), cfg.noise_sd, cfg.seed)?;
    Ok(SyntheticRun {
        paradigm,
        grid,
        signal,
    })
}

/// Mixes a base seed with indices into an independent 64-bit seed.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    // splitmix64 finalizer over the running state
    let mut state = base;
    for &i in indices {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(i.wrapping_mul(0xD1B5_4A32_D192_ED03));
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

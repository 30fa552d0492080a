//! Simulated MQ3 alcohol sensor and IR eye sensor.
//!
//! Ground truth (ppm, eye state) comes from a scenario; these functions turn
//! it into the raw readings the controller sees. Noise is opt-in and driven
//! by an RNG the caller owns, so identical inputs always give identical
//! samples.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Millis;

/// Full scale of the 10-bit ADC the MQ3 is read through.
pub const ADC_MAX: u16 = 1023;
/// Upper end of the MQ3 detection band; readings saturate here.
pub const MQ3_SPAN_PPM: f64 = 500.0;
/// Lower end of the MQ3 detection band.
pub const MQ3_MIN_DETECT_PPM: f64 = 25.0;
/// Largest concentration a scenario may specify.
pub const MAX_GROUND_TRUTH_PPM: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("alcohol concentration must be a finite value >= 0 ppm, got {0}")]
    NegativePpm(f64),
    #[error("eye_flip_prob must lie in [0, 1], got {0}")]
    FlipProbability(f64),
    #[error("alcohol_jitter must be a finite value >= 0, got {0}")]
    Jitter(f64),
}

/// One timestamped reading pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorSample {
    pub at: Millis,
    pub alcohol_raw: u16,
    pub eyes_closed: bool,
}

/// Sensor noise configuration. The default is noise-free.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    /// Standard deviation of additive gaussian jitter, in ADC counts.
    pub alcohol_jitter: f64,
    /// Probability that an eye reading is inverted.
    pub eye_flip_prob: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.alcohol_jitter.is_finite() && self.alcohol_jitter >= 0.0) {
            return Err(SensorError::Jitter(self.alcohol_jitter));
        }
        if !(0.0..=1.0).contains(&self.eye_flip_prob) {
            return Err(SensorError::FlipProbability(self.eye_flip_prob));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.alcohol_jitter == 0.0 && self.eye_flip_prob == 0.0
    }
}

/// What the driver and cabin are really doing at some instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub eyes_closed: bool,
    pub ppm: f64,
    pub noise: NoiseSpec,
}

impl GroundTruth {
    /// True when the physical quantities (not the noise model) differ.
    pub fn sensed_differs(&self, other: &GroundTruth) -> bool {
        self.eyes_closed != other.eyes_closed || self.ppm != other.ppm
    }
}

/// MQ3 transfer curve: linear from 0 to [`MQ3_SPAN_PPM`] onto the 10-bit ADC,
/// saturating above the span.
pub fn mq3_raw(ppm: f64) -> Result<u16, SensorError> {
    if ppm.is_nan() || ppm < 0.0 {
        return Err(SensorError::NegativePpm(ppm));
    }
    let clamped = ppm.min(MQ3_SPAN_PPM);
    Ok((clamped * f64::from(ADC_MAX) / MQ3_SPAN_PPM).round() as u16)
}

/// Alcohol is present when the reading strictly exceeds the threshold.
pub fn classify_alcohol(raw: u16, threshold: u16) -> bool {
    raw > threshold
}

/// Reads both sensors at `at`.
///
/// The RNG is only consumed when the corresponding noise term is non-zero.
pub fn sample_sensors<R: Rng + ?Sized>(
    truth: &GroundTruth,
    at: Millis,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<SensorSample, SensorError> {
    noise.validate()?;
    let mut raw = f64::from(mq3_raw(truth.ppm)?);
    if noise.alcohol_jitter > 0.0 {
        let normal = Normal::new(0.0, noise.alcohol_jitter)
            .map_err(|_| SensorError::Jitter(noise.alcohol_jitter))?;
        raw += normal.sample(rng);
    }
    let alcohol_raw = raw.round().clamp(0.0, f64::from(ADC_MAX)) as u16;

    let mut eyes_closed = truth.eyes_closed;
    if noise.eye_flip_prob > 0.0 && rng.random::<f64>() < noise.eye_flip_prob {
        eyes_closed = !eyes_closed;
    }
    Ok(SensorSample {
        at,
        alcohol_raw,
        eyes_closed,
    })
}

//! Scenario scripts: a time-ordered list of ground-truth changes (eye state,
//! alcohol concentration, sensor noise) ending at a fixed time.
//!
//! ```text
//! # comments run to end of line
//! scenario "about to sleep"
//! at 0s eyes open
//! at 5s eyes closed
//! end 60s
//! ```
//!
//! Values are piecewise constant and take effect at their own timestamp.
//! Before the first event the driver's eyes are open, there is no alcohol
//! and the sensors are noise-free.

mod format;
mod parser;

pub use format::format_scenario;
pub use parser::{parse_scenario, parse_scenario_bytes, Diagnostic, Parsed, Severity};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::{GroundTruth, NoiseSpec};
use crate::time::{secs_to_ms, Millis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum ScenarioEvent {
    Eyes { closed: bool },
    Alcohol { ppm: f64 },
    Noise(NoiseSpec),
}

impl ScenarioEvent {
    pub fn keyword(&self) -> &'static str {
        match self {
            ScenarioEvent::Eyes { .. } => "eyes",
            ScenarioEvent::Alcohol { .. } => "alcohol",
            ScenarioEvent::Noise(_) => "noise",
        }
    }

    fn apply(&self, truth: &mut GroundTruth) {
        match *self {
            ScenarioEvent::Eyes { closed } => truth.eyes_closed = closed,
            ScenarioEvent::Alcohol { ppm } => truth.ppm = ppm,
            ScenarioEvent::Noise(spec) => truth.noise = spec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    /// Seconds from the start of the run.
    pub at: f64,
    #[serde(flatten)]
    pub event: ScenarioEvent,
}

impl TimedEvent {
    pub fn at_ms(&self) -> Millis {
        secs_to_ms(self.at)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub name: String,
    pub events: Vec<TimedEvent>,
    /// Seconds.
    pub end_at: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("t = {t} s is outside the scenario [0, {end_at}] s")]
    OutOfRange { t: f64, end_at: f64 },
}

impl ScenarioScript {
    pub fn end_ms(&self) -> Millis {
        secs_to_ms(self.end_at)
    }

    /// Ground truth at `t` seconds: the latest value set at or before `t`.
    pub fn ground_truth_at(&self, t: f64) -> Result<GroundTruth, ScenarioError> {
        if !(t >= 0.0 && t <= self.end_at) {
            return Err(ScenarioError::OutOfRange {
                t,
                end_at: self.end_at,
            });
        }
        let mut truth = GroundTruth::default();
        for e in self.events.iter().take_while(|e| e.at <= t) {
            e.event.apply(&mut truth);
        }
        Ok(truth)
    }

    /// Ground truth at a virtual millisecond, with event times floored to
    /// whole milliseconds. Not range-checked.
    pub fn truth_at_ms(&self, t: Millis) -> GroundTruth {
        let mut truth = GroundTruth::default();
        for e in self.events.iter().take_while(|e| e.at_ms() <= t) {
            e.event.apply(&mut truth);
        }
        truth
    }

    /// Net ground-truth values after each distinct event millisecond, in
    /// time order.
    pub fn truth_timeline(&self) -> Vec<(Millis, GroundTruth)> {
        let mut out: Vec<(Millis, GroundTruth)> = Vec::new();
        let mut truth = GroundTruth::default();
        for e in &self.events {
            e.event.apply(&mut truth);
            match out.last_mut() {
                Some((t, last)) if *t == e.at_ms() => *last = truth,
                _ => out.push((e.at_ms(), truth)),
            }
        }
        out
    }
}

//! Simulation of the controller against a scenario.
//!
//! [`run`] is the discrete-event engine: a virtual clock and an event queue
//! ordered by `(time, insertion sequence)`. [`oracle_run`] is a brute-force
//! reference that walks every millisecond; the two must produce the same
//! trace.
//!
//! Sampling rules shared by both:
//!
//! * both sensors are read together, as one [`SensorSample`](crate::sensors::SensorSample);
//! * a sample is taken on every multiple of the alcohol and eye sampling
//!   periods, whenever the scenario changes what the sensors would see, and
//!   at every controller deadline (recheck or end of ramp);
//! * requests that fall on the same millisecond produce a single sample;
//! * within a millisecond, channel deliveries are recorded before the sample;
//! * nothing at or after the scenario end is processed, and a run that
//!   reaches STOPPED ends once the channel has drained.

mod engine;
mod oracle;
mod plant;
mod trace;

pub use engine::{run, EventKind, SimEvent, Simulator, Snapshot};
pub use oracle::{compare_traces, oracle_run, Divergence};
pub use trace::{
    export_trace, import_jsonl, read_transcript_jsonl, write_transcript_jsonl, ExportError,
    ExportFormat, ImportError, RecordData, Trace, TraceRecord, CSV_HEADER,
};

use thiserror::Error;

use crate::channel::{ChannelConfigError, FrameError, TranscriptEntry};
use crate::controller::{ConfigError, PhaseKind, ResetError, StepError};
use crate::sensors::SensorError;
use crate::time::Millis;
use crate::vehicle::VehicleError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid controller config: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid channel config: {0}")]
    Channel(#[from] ChannelConfigError),
    #[error("controller: {0}")]
    Step(#[from] StepError),
    #[error("motor: {0}")]
    Vehicle(#[from] VehicleError),
    #[error("sensor: {0}")]
    Sensor(#[from] SensorError),
    #[error("alert framing: {0}")]
    Frame(#[from] FrameError),
    #[error("reset: {0}")]
    Reset(#[from] ResetError),
    #[error("internal invariant: event at {at} ms dequeued after the clock reached {now} ms")]
    SchedulingInversion { now: Millis, at: Millis },
}

/// Result of a scripted run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub trace: Trace,
    pub transcript: Vec<TranscriptEntry>,
    pub final_phase: PhaseKind,
    /// Virtual time at which the run ended.
    pub ended_at: Millis,
}

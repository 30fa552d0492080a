//! Driver-safety controller and its deterministic simulation: sensor and
//! vehicle models, the framed alert link to the phone, the scenario language
//! and the discrete-event engine that ties them together.

pub mod channel;
pub mod controller;
pub mod live;
pub mod scenario;
pub mod sensors;
pub mod sim;
pub mod time;
pub mod vehicle;

pub use controller::{ControllerConfig, ControllerState, PhaseKind};
pub use scenario::{parse_scenario, ScenarioScript};
pub use sim::{oracle_run, run, SimRun};

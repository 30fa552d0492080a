//! Driver-safety state machine.
//!
//! The controller is a pure step function: given its current state, one
//! sensor sample and the virtual time, it returns the next state, the
//! actuator outputs and any alerts for the phone. It never reads a clock;
//! callers are responsible for delivering samples in time order and for
//! sampling again at [`ControllerState::next_deadline`].
//!
//! Escalation paths:
//!
//! ```text
//! alcohol: NORMAL -> ALCOHOL_WARNING --(T_A, still over)--> RAMP_DOWN -> STOPPED
//! eyes:    NORMAL -> EYE_SUSPECT --(T_E)--> EYE_WARNING --(T_E)--> RAMP_DOWN -> STOPPED
//! ```
//!
//! Alcohol is checked before the eyes on every step. Detected alcohol takes
//! over from an eye escalation in progress; while the alcohol warning runs,
//! closed eyes do not start a new eye escalation. A recheck that finds the
//! condition cleared goes back to NORMAL. Once the ramp has started it runs
//! to STOPPED, and STOPPED only ends through [`ControllerState::reset`].

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::channel::{AlertCode, AlertMessage};
use crate::sensors::{classify_alcohol, SensorSample, ADC_MAX};
use crate::time::{secs_to_ms, Millis};
use crate::vehicle::MotorCommand;

pub const MIN_STOP_DURATION: f64 = 10.0;
pub const MAX_STOP_DURATION: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Raw ADC counts; alcohol is present when a reading exceeds this.
    pub alcohol_threshold: u16,
    /// Seconds between alcohol detection and its recheck.
    pub t_alcohol_recheck: f64,
    /// Seconds between eye-closure rechecks.
    pub t_eye_recheck: f64,
    /// Seconds from ramp start to standstill.
    pub stop_duration: f64,
    pub eye_sample_period: f64,
    pub alcohol_sample_period: f64,
    /// PWM duty the motor runs at in normal driving.
    pub cruise_speed: u8,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            alcohol_threshold: 400,
            t_alcohol_recheck: 20.0,
            t_eye_recheck: 2.0,
            stop_duration: 12.5,
            eye_sample_period: 2.0,
            alcohol_sample_period: 1.0,
            cruise_speed: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be at least 1 ms, got {value} s")]
    NonPositive { field: &'static str, value: f64 },
    #[error("stop_duration outside [10,15]: {0} s")]
    StopDuration(f64),
    #[error("alcohol_threshold outside [0,1023]: {0}")]
    Threshold(u16),
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let durations = [
            ("t_alcohol_recheck", self.t_alcohol_recheck),
            ("t_eye_recheck", self.t_eye_recheck),
            ("stop_duration", self.stop_duration),
            ("eye_sample_period", self.eye_sample_period),
            ("alcohol_sample_period", self.alcohol_sample_period),
        ];
        for (field, value) in durations {
            if !(value.is_finite() && value > 0.0 && secs_to_ms(value) > 0) {
                return Err(ConfigError::NonPositive { field, value });
            }
        }
        if !(MIN_STOP_DURATION..=MAX_STOP_DURATION).contains(&self.stop_duration) {
            return Err(ConfigError::StopDuration(self.stop_duration));
        }
        if self.alcohol_threshold > ADC_MAX {
            return Err(ConfigError::Threshold(self.alcohol_threshold));
        }
        Ok(())
    }

    pub fn alcohol_recheck_ms(&self) -> Millis {
        secs_to_ms(self.t_alcohol_recheck)
    }

    pub fn eye_recheck_ms(&self) -> Millis {
        secs_to_ms(self.t_eye_recheck)
    }

    pub fn stop_ms(&self) -> Millis {
        secs_to_ms(self.stop_duration)
    }

    pub fn eye_period_ms(&self) -> Millis {
        secs_to_ms(self.eye_sample_period)
    }

    pub fn alcohol_period_ms(&self) -> Millis {
        secs_to_ms(self.alcohol_sample_period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseKind {
    Normal,
    EyeSuspect,
    EyeWarning,
    AlcoholWarning,
    RampDown,
    Stopped,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Normal => "NORMAL",
            PhaseKind::EyeSuspect => "EYE_SUSPECT",
            PhaseKind::EyeWarning => "EYE_WARNING",
            PhaseKind::AlcoholWarning => "ALCOHOL_WARNING",
            PhaseKind::RampDown => "RAMP_DOWN",
            PhaseKind::Stopped => "STOPPED",
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RampCause {
    Eye,
    Alcohol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Normal,
    EyeSuspect {
        recheck_at: Millis,
    },
    EyeWarning {
        recheck_at: Millis,
    },
    AlcoholWarning {
        recheck_at: Millis,
    },
    RampDown {
        cause: RampCause,
        started_at: Millis,
        initial_speed: u8,
    },
    Stopped {
        cause: RampCause,
    },
}

impl Phase {
    pub fn kind(&self) -> PhaseKind {
        match self {
            Phase::Normal => PhaseKind::Normal,
            Phase::EyeSuspect { .. } => PhaseKind::EyeSuspect,
            Phase::EyeWarning { .. } => PhaseKind::EyeWarning,
            Phase::AlcoholWarning { .. } => PhaseKind::AlcoholWarning,
            Phase::RampDown { .. } => PhaseKind::RampDown,
            Phase::Stopped { .. } => PhaseKind::Stopped,
        }
    }

    pub fn ramp_cause(&self) -> Option<RampCause> {
        match *self {
            Phase::RampDown { cause, .. } | Phase::Stopped { cause } => Some(cause),
            _ => None,
        }
    }
}

/// Everything the driver can see, hear or feel, plus the motor drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActuatorState {
    pub alarm: bool,
    pub red_lamp: bool,
    pub green_lamp: bool,
    pub vibration: bool,
    pub motor: MotorCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub at: Millis,
    pub from: PhaseKind,
    pub to: PhaseKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("sample at {now} ms is older than the last processed sample at {last} ms")]
    OutOfOrder { last: Millis, now: Millis },
    #[error("sample is stamped {sample_at} ms but the step is at {now} ms")]
    SampleTime { sample_at: Millis, now: Millis },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResetError {
    #[error("reset only from latched stop (phase is {0})")]
    NotStopped(PhaseKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub state: ControllerState,
    pub actuators: ActuatorState,
    pub alerts: Vec<AlertMessage>,
    pub transitions: Vec<Transition>,
    /// The controller was already stopped; nothing changed.
    pub latched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    config: ControllerConfig,
    pub phase: Phase,
    pub phase_entered_at: Millis,
    /// Latest alcohol classification.
    pub alcohol_detected: bool,
    /// Latest eye reading.
    pub eyes_closed: bool,
    pub vehicle_operating: bool,
    pub last_sample_at: Option<Millis>,
    next_alert_seq: u16,
}

impl ControllerState {
    /// Initial state: normal driving, green lamp on, motor at cruise speed.
    pub fn new(config: ControllerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            phase: Phase::Normal,
            phase_entered_at: 0,
            alcohol_detected: false,
            eyes_closed: false,
            vehicle_operating: true,
            last_sample_at: None,
            next_alert_seq: 0,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn kind(&self) -> PhaseKind {
        self.phase.kind()
    }

    /// Sequence number the next alert will carry.
    pub fn next_alert_seq(&self) -> u16 {
        self.next_alert_seq
    }

    /// Outputs implied by the current phase.
    pub fn actuators(&self) -> ActuatorState {
        let run = MotorCommand::Run {
            speed: self.config.cruise_speed,
        };
        let warning = |vibration, motor| ActuatorState {
            alarm: true,
            red_lamp: true,
            green_lamp: false,
            vibration,
            motor,
        };
        match self.phase {
            Phase::Normal | Phase::EyeSuspect { .. } => ActuatorState {
                alarm: false,
                red_lamp: false,
                green_lamp: true,
                vibration: false,
                motor: run,
            },
            Phase::EyeWarning { .. } => warning(true, run),
            Phase::AlcoholWarning { .. } => warning(false, run),
            Phase::RampDown {
                cause,
                started_at,
                initial_speed,
            } => warning(
                cause == RampCause::Eye,
                MotorCommand::Ramp {
                    started_at,
                    initial_speed,
                },
            ),
            Phase::Stopped { cause } => warning(cause == RampCause::Eye, MotorCommand::Stop),
        }
    }

    /// The next instant at which the controller needs a fresh sample, if any:
    /// a recheck deadline or the end of the ramp.
    pub fn next_deadline(&self) -> Option<Millis> {
        match self.phase {
            Phase::EyeSuspect { recheck_at }
            | Phase::EyeWarning { recheck_at }
            | Phase::AlcoholWarning { recheck_at } => Some(recheck_at),
            Phase::RampDown { started_at, .. } => Some(started_at + self.config.stop_ms()),
            Phase::Normal | Phase::Stopped { .. } => None,
        }
    }

    /// Processes one sample taken at `now`.
    pub fn step(&self, sample: &SensorSample, now: Millis) -> Result<StepOutcome, StepError> {
        if let Phase::Stopped { .. } = self.phase {
            return Ok(StepOutcome {
                state: self.clone(),
                actuators: self.actuators(),
                alerts: Vec::new(),
                transitions: Vec::new(),
                latched: true,
            });
        }
        if let Some(last) = self.last_sample_at {
            if now < last {
                return Err(StepError::OutOfOrder { last, now });
            }
        }
        if sample.at != now {
            return Err(StepError::SampleTime {
                sample_at: sample.at,
                now,
            });
        }

        let mut step = Stepper {
            state: self.clone(),
            now,
            alerts: Vec::new(),
            transitions: Vec::new(),
        };
        step.state.last_sample_at = Some(now);
        step.state.alcohol_detected =
            classify_alcohol(sample.alcohol_raw, self.config.alcohol_threshold);
        step.state.eyes_closed = sample.eyes_closed;
        step.run(sample.alcohol_raw);

        let Stepper {
            state,
            alerts,
            transitions,
            ..
        } = step;
        Ok(StepOutcome {
            actuators: state.actuators(),
            state,
            alerts,
            transitions,
            latched: false,
        })
    }

    /// Leaves a latched stop. Everything but the alert sequence counter and
    /// the last-sample time goes back to its initial value.
    pub fn reset(&self) -> Result<ControllerState, ResetError> {
        if self.kind() != PhaseKind::Stopped {
            return Err(ResetError::NotStopped(self.kind()));
        }
        let mut fresh = ControllerState::new(self.config.clone())
            .expect("config was validated when this state was created");
        fresh.next_alert_seq = self.next_alert_seq;
        fresh.last_sample_at = self.last_sample_at;
        fresh.phase_entered_at = self.last_sample_at.unwrap_or(self.phase_entered_at);
        Ok(fresh)
    }
}

struct Stepper {
    state: ControllerState,
    now: Millis,
    alerts: Vec<AlertMessage>,
    transitions: Vec<Transition>,
}

impl Stepper {
    fn run(&mut self, alcohol_raw: u16) {
        let now = self.now;
        let cfg = self.state.config.clone();

        match self.state.phase {
            Phase::RampDown {
                cause, started_at, ..
            } => {
                if now >= started_at + cfg.stop_ms() {
                    self.enter(Phase::Stopped { cause });
                    self.state.vehicle_operating = false;
                    self.alert(AlertCode::MotorStopped, "vehicle stopped");
                }
                return;
            }
            Phase::AlcoholWarning { recheck_at } => {
                if now < recheck_at {
                    return;
                }
                if self.state.alcohol_detected {
                    self.start_ramp(RampCause::Alcohol);
                    self.alert(
                        AlertCode::MotorRamp,
                        &format!("alcohol persists raw={alcohol_raw}"),
                    );
                    return;
                }
                self.enter(Phase::Normal);
                // fall through: the eyes get checked on this same sample
            }
            Phase::Normal | Phase::EyeSuspect { .. } | Phase::EyeWarning { .. } => {
                if self.state.alcohol_detected {
                    self.enter(Phase::AlcoholWarning {
                        recheck_at: now + cfg.alcohol_recheck_ms(),
                    });
                    self.alert(AlertCode::AlertAlcohol, &format!("raw={alcohol_raw}"));
                    return;
                }
            }
            Phase::Stopped { .. } => unreachable!("latched phase handled by caller"),
        }

        let closed = self.state.eyes_closed;
        match self.state.phase {
            Phase::Normal => {
                if closed {
                    self.enter(Phase::EyeSuspect {
                        recheck_at: now + cfg.eye_recheck_ms(),
                    });
                    self.alert(AlertCode::AlertEyesClosed, "eyes closed");
                } else if now.is_multiple_of(cfg.eye_period_ms()) {
                    self.alert(AlertCode::StatusEyesOpen, "eyes open, driver alert");
                }
            }
            Phase::EyeSuspect { recheck_at } if now >= recheck_at => {
                if closed {
                    self.enter(Phase::EyeWarning {
                        recheck_at: now + cfg.eye_recheck_ms(),
                    });
                    self.alert(AlertCode::AlertDrowsy, "eyes still closed");
                } else {
                    self.enter(Phase::Normal);
                }
            }
            Phase::EyeWarning { recheck_at } if now >= recheck_at => {
                if closed {
                    self.start_ramp(RampCause::Eye);
                    self.alert(AlertCode::AlertUrgentSleep, "eyes closed, stop driving");
                    self.alert(AlertCode::MotorRamp, "slowing to stop");
                } else {
                    self.enter(Phase::Normal);
                }
            }
            _ => {}
        }
    }

    fn start_ramp(&mut self, cause: RampCause) {
        self.enter(Phase::RampDown {
            cause,
            started_at: self.now,
            initial_speed: self.state.config.cruise_speed,
        });
    }

    fn enter(&mut self, phase: Phase) {
        let from = self.state.phase.kind();
        self.state.phase = phase;
        self.state.phase_entered_at = self.now;
        self.transitions.push(Transition {
            at: self.now,
            from,
            to: phase.kind(),
        });
    }

    fn alert(&mut self, code: AlertCode, detail: &str) {
        let seq = self.state.next_alert_seq;
        self.state.next_alert_seq = seq.wrapping_add(1);
        self.alerts.push(AlertMessage {
            seq,
            at: self.now,
            code,
            detail: detail.to_owned(),
        });
    }
}

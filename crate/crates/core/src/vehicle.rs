//! Motor/relay model.
//!
//! Speed is a PWM duty in `[0, 255]`. Under a ramp the speed falls linearly
//! from the speed held when the ramp began to zero over the configured stop
//! duration. The ramp is evaluated from `(initial, start, now)` rather than
//! integrated, so any sampling schedule sees the same value at the same
//! instant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{secs_to_ms, Millis};

pub const MAX_DUTY: f64 = 255.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("time went backwards: ramp started at {ramp_start} ms, asked for {now} ms")]
    Monotonicity { ramp_start: Millis, now: Millis },
    #[error("cannot ramp a stopped motor")]
    RampWhileStopped,
    #[error("stop duration must be positive, got {0} s")]
    StopDuration(f64),
}

/// Motor drive requested by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MotorCommand {
    Run {
        speed: u8,
    },
    Ramp {
        started_at: Millis,
        initial_speed: u8,
    },
    Stop,
}

/// Linear ramp evaluated at `now`.
pub fn speed_at(
    initial: f64,
    ramp_start: Millis,
    now: Millis,
    stop_duration_secs: f64,
) -> Result<f64, VehicleError> {
    if now < ramp_start {
        return Err(VehicleError::Monotonicity { ramp_start, now });
    }
    if stop_duration_secs.is_nan() || stop_duration_secs <= 0.0 {
        return Err(VehicleError::StopDuration(stop_duration_secs));
    }
    Ok(ramp_speed(
        initial,
        now - ramp_start,
        secs_to_ms(stop_duration_secs),
    ))
}

fn ramp_speed(initial: f64, elapsed_ms: Millis, stop_ms: Millis) -> f64 {
    if elapsed_ms >= stop_ms {
        return 0.0;
    }
    let remaining = 1.0 - elapsed_ms as f64 / stop_ms as f64;
    (initial * remaining).clamp(0.0, initial)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorState {
    pub speed: f64,
    pub command: MotorCommand,
    pub ramp_started_at: Millis,
    pub ramp_initial_speed: f64,
    stop_ms: Millis,
}

impl MotorState {
    /// A motor running at `speed` whose ramps last `stop_duration_secs`.
    pub fn running(speed: u8, stop_duration_secs: f64) -> Self {
        Self {
            speed: f64::from(speed),
            command: MotorCommand::Run { speed },
            ramp_started_at: 0,
            ramp_initial_speed: 0.0,
            stop_ms: secs_to_ms(stop_duration_secs),
        }
    }

    /// Applies a command issued at `now` and returns the resulting state,
    /// with `speed` evaluated at `now`.
    pub fn apply(&self, cmd: MotorCommand, now: Millis) -> Result<MotorState, VehicleError> {
        let mut next = *self;
        match cmd {
            MotorCommand::Run { speed } => {
                next.speed = f64::from(speed);
            }
            MotorCommand::Ramp { started_at, .. } => {
                if self.command == MotorCommand::Stop {
                    return Err(VehicleError::RampWhileStopped);
                }
                if now < started_at {
                    return Err(VehicleError::Monotonicity {
                        ramp_start: started_at,
                        now,
                    });
                }
                let already = matches!(
                    self.command,
                    MotorCommand::Ramp { started_at: s, .. } if s == started_at
                );
                if !already {
                    // current speed becomes the ramp's starting point
                    next.ramp_started_at = started_at;
                    next.ramp_initial_speed = self.speed;
                }
                next.speed = ramp_speed(next.ramp_initial_speed, now - started_at, self.stop_ms);
            }
            MotorCommand::Stop => {
                next.speed = 0.0;
            }
        }
        next.command = cmd;
        Ok(next)
    }

    /// Speed at `now` without changing the command.
    pub fn speed_now(&self, now: Millis) -> f64 {
        match self.command {
            MotorCommand::Run { .. } => self.speed,
            MotorCommand::Ramp { .. } => ramp_speed(
                self.ramp_initial_speed,
                now.saturating_sub(self.ramp_started_at),
                self.stop_ms,
            ),
            MotorCommand::Stop => 0.0,
        }
    }
}

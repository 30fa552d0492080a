use serde::{Deserialize, Serialize};
use std::fmt;

use crate::time::Millis;

/// Longest allowed detail text, in UTF-8 bytes.
pub const MAX_DETAIL_BYTES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[repr(u8)]
pub enum AlertCode {
    StatusEyesOpen = 0,
    AlertEyesClosed = 1,
    AlertDrowsy = 2,
    AlertUrgentSleep = 3,
    AlertAlcohol = 4,
    MotorRamp = 5,
    MotorStopped = 6,
}

impl AlertCode {
    pub const ALL: [AlertCode; 7] = [
        AlertCode::StatusEyesOpen,
        AlertCode::AlertEyesClosed,
        AlertCode::AlertDrowsy,
        AlertCode::AlertUrgentSleep,
        AlertCode::AlertAlcohol,
        AlertCode::MotorRamp,
        AlertCode::MotorStopped,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.get(usize::from(b)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AlertCode::StatusEyesOpen => "STATUS_EYES_OPEN",
            AlertCode::AlertEyesClosed => "ALERT_EYES_CLOSED",
            AlertCode::AlertDrowsy => "ALERT_DROWSY",
            AlertCode::AlertUrgentSleep => "ALERT_URGENT_SLEEP",
            AlertCode::AlertAlcohol => "ALERT_ALCOHOL",
            AlertCode::MotorRamp => "MOTOR_RAMP",
            AlertCode::MotorStopped => "MOTOR_STOPPED",
        }
    }
}

impl fmt::Display for AlertCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One notification for the driver's phone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlertMessage {
    pub seq: u16,
    pub at: Millis,
    pub code: AlertCode,
    pub detail: String,
}

//! JSON messages exchanged with the driver console over a WebSocket.
//!
//! ```text
//! client -> server   {"type":"input","eyes":"closed"}
//!                    {"type":"input","alcohol_ppm":450}
//!                    {"type":"reset"}
//! server -> client   {"type":"state","t_ms":..,"phase":"NORMAL","speed":200.0,...}
//!                    {"type":"alert","seq":3,"code":"ALERT_DROWSY","detail":"..."}
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::AlertCode;
use crate::sensors::GroundTruth;
use crate::sim::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeInput {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClientMessage {
    Input {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eyes: Option<EyeInput>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alcohol_ppm: Option<f64>,
    },
    Reset,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InputError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("input carries neither `eyes` nor `alcohol_ppm`")]
    Empty,
    #[error("alcohol_ppm must be within [0, 1000], got {0}")]
    Ppm(f64),
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let msg: ClientMessage =
            serde_json::from_str(text).map_err(|e| InputError::Malformed(e.to_string()))?;
        if let ClientMessage::Input { eyes, alcohol_ppm } = msg {
            if eyes.is_none() && alcohol_ppm.is_none() {
                return Err(InputError::Empty);
            }
            if let Some(ppm) = alcohol_ppm {
                if !(0.0..=crate::sensors::MAX_GROUND_TRUTH_PPM).contains(&ppm) {
                    return Err(InputError::Ppm(ppm));
                }
            }
        }
        Ok(msg)
    }

    /// Applies an input to the current ground truth. Resets leave it as is.
    pub fn apply(&self, truth: &GroundTruth) -> GroundTruth {
        let mut next = *truth;
        if let ClientMessage::Input { eyes, alcohol_ppm } = self {
            if let Some(e) = eyes {
                next.eyes_closed = *e == EyeInput::Closed;
            }
            if let Some(p) = alcohol_ppm {
                next.ppm = *p;
            }
        }
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    State(Snapshot),
    Alert {
        seq: u16,
        code: AlertCode,
        detail: String,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

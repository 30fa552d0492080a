//! Alert channel to the driver's phone.
//!
//! Alerts are framed ([`frame`]), pushed over a simulated lossy serial link
//! with stop-and-wait retransmission ([`link`]), and the resulting transcript
//! is summarised into rate, delay and error-correction figures ([`metrics`]).

pub mod frame;
pub mod link;
pub mod message;
pub mod metrics;

pub use frame::{decode_frame, encode_frame, FrameError};
pub use link::{
    transmit, Attempt, ChannelConfig, ChannelConfigError, DeliveryOutcome, Transmission,
};
pub use message::{AlertCode, AlertMessage, MAX_DETAIL_BYTES};
pub use metrics::{compute_metrics, ChannelMetrics, Direction, MetricsError, TranscriptEntry};

//! Seeded lossy serial link with stop-and-wait retransmission.
//!
//! An attempt occupies the link for `len / data_rate` seconds and reaches the
//! phone one propagation delay later. Each bit is flipped independently with
//! the configured bit error rate. A corrupted attempt is NAKed (the NAK takes
//! one more propagation delay to come back) and the frame is resent, up to
//! `max_retries` times.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{Direction, TranscriptEntry};

/// 2.1 Mb/s expressed in bytes per second.
pub const MAX_DATA_RATE: f64 = 262_500.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelConfigError {
    #[error("data_rate must be in (0, {MAX_DATA_RATE}] bytes/s, got {0}")]
    DataRate(f64),
    #[error("propagation_delay must be a finite value >= 0 ms, got {0}")]
    Delay(f64),
    #[error("bit_error_rate must be in [0, 1], got {0}")]
    BitErrorRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Bytes per second.
    pub data_rate: f64,
    /// One-way delay, milliseconds.
    pub propagation_delay: f64,
    pub bit_error_rate: f64,
    pub seed: u64,
    pub max_retries: u32,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            data_rate: 960.0,
            propagation_delay: 3.0,
            bit_error_rate: 0.0,
            seed: 0,
            max_retries: 3,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelConfigError> {
        if !(self.data_rate > 0.0 && self.data_rate <= MAX_DATA_RATE) {
            return Err(ChannelConfigError::DataRate(self.data_rate));
        }
        if !(self.propagation_delay.is_finite() && self.propagation_delay >= 0.0) {
            return Err(ChannelConfigError::Delay(self.propagation_delay));
        }
        if !(0.0..=1.0).contains(&self.bit_error_rate) {
            return Err(ChannelConfigError::BitErrorRate(self.bit_error_rate));
        }
        Ok(())
    }

    /// Time the frame occupies the wire, in milliseconds.
    pub fn serialization_ms(&self, frame_len: usize) -> f64 {
        frame_len as f64 * 1000.0 / self.data_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start_ms: f64,
    /// When the last bit reaches the receiver.
    pub end_ms: f64,
    pub corrupted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeliveryOutcome {
    Delivered { at: f64, retries: u32 },
    Lost { at: f64 },
}

impl DeliveryOutcome {
    pub fn at(&self) -> f64 {
        match *self {
            DeliveryOutcome::Delivered { at, .. } | DeliveryOutcome::Lost { at } => at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub outcome: DeliveryOutcome,
    pub attempts: Vec<Attempt>,
    pub frame_len: usize,
}

impl Transmission {
    /// Errors seen on this message: one per corrupted attempt.
    pub fn errors(&self) -> u32 {
        self.attempts.iter().filter(|a| a.corrupted).count() as u32
    }

    /// One if the message got through after at least one retry.
    pub fn corrected(&self) -> u32 {
        matches!(self.outcome, DeliveryOutcome::Delivered { retries, .. } if retries > 0) as u32
    }

    /// When the link is free for the next frame.
    pub fn link_free_at(&self) -> f64 {
        self.outcome.at()
    }

    /// Transcript records for this message, in time order.
    pub fn transcript(&self, seq: u16) -> Vec<TranscriptEntry> {
        let bytes = self.frame_len as u64;
        let mut out = Vec::with_capacity(self.attempts.len() * 2);
        for a in &self.attempts {
            out.push(TranscriptEntry {
                t_ms: a.start_ms,
                dir: Direction::Send,
                seq,
                bytes,
            });
            out.push(TranscriptEntry {
                t_ms: a.end_ms,
                dir: if a.corrupted {
                    Direction::Corrupt
                } else {
                    Direction::Deliver
                },
                seq,
                bytes,
            });
        }
        out
    }
}

/// Sends one frame starting at `now_ms`. The caller must pass a validated
/// config; loss is reported as an outcome, not an error.
pub fn transmit<R: Rng + ?Sized>(
    frame: &[u8],
    config: &ChannelConfig,
    now_ms: f64,
    rng: &mut R,
) -> Transmission {
    let wire = config.serialization_ms(frame.len());
    let bits = frame.len() * 8;
    let mut attempts = Vec::new();
    let mut start = now_ms;
    for attempt in 0..=config.max_retries {
        let end = start + wire + config.propagation_delay;
        let corrupted = corrupts(bits, config.bit_error_rate, rng);
        attempts.push(Attempt {
            start_ms: start,
            end_ms: end,
            corrupted,
        });
        if !corrupted {
            return Transmission {
                outcome: DeliveryOutcome::Delivered {
                    at: end,
                    retries: attempt,
                },
                attempts,
                frame_len: frame.len(),
            };
        }
        start = end + config.propagation_delay;
    }
    let at = attempts.last().map_or(now_ms, |a| a.end_ms);
    Transmission {
        outcome: DeliveryOutcome::Lost { at },
        attempts,
        frame_len: frame.len(),
    }
}

/// Draws one uniform per bit; any flipped bit spoils the attempt.
fn corrupts<R: Rng + ?Sized>(bits: usize, ber: f64, rng: &mut R) -> bool {
    if ber <= 0.0 {
        return false;
    }
    let mut flipped = false;
    for _ in 0..bits {
        flipped |= rng.random::<f64>() < ber;
    }
    flipped
}

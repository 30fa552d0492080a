//! Link metrics over a finished transcript: data rate (bytes delivered over
//! elapsed time), per-message delay (delivery minus first send) and the
//! error-correction ratio (corrected over total errors).

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Send,
    Deliver,
    Corrupt,
}

/// One line of the transcript JSONL export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub t_ms: f64,
    pub dir: Direction,
    pub seq: u16,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("transcript entry {index} at {t_ms} ms precedes the entry before it")]
    OutOfOrder { index: usize, t_ms: f64 },
    #[error("transcript entry {index}: {dir:?} for seq {seq} without a send")]
    Orphan {
        index: usize,
        seq: u16,
        dir: Direction,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub bytes_delivered: u64,
    /// Seconds between the first and last transcript entry.
    pub elapsed: f64,
    /// `None` when nothing elapsed, so the rate is undefined.
    pub measured_data_rate: Option<f64>,
    /// Per delivered message, in delivery order, milliseconds.
    pub delays_ms: Vec<f64>,
    pub errors_total: u64,
    pub errors_corrected: u64,
    pub ec_ratio: f64,
    /// Set when there were no errors and `ec_ratio` is 1.0 by convention.
    pub ec_ratio_vacuous: bool,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_lost: u64,
}

impl ChannelMetrics {
    /// Nearest-rank percentile of the delays, `p` in `[0, 100]`.
    pub fn delay_percentile(&self, p: f64) -> Option<f64> {
        if self.delays_ms.is_empty() {
            return None;
        }
        let mut sorted = self.delays_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
        Some(sorted[rank.clamp(1, sorted.len()) - 1])
    }

    pub fn max_delay(&self) -> Option<f64> {
        self.delays_ms.iter().copied().reduce(f64::max)
    }
}

struct InFlight {
    first_send: f64,
    had_error: bool,
    awaiting_retry: bool,
}

pub fn compute_metrics(transcript: &[TranscriptEntry]) -> Result<ChannelMetrics, MetricsError> {
    let mut in_flight: HashMap<u16, InFlight> = HashMap::new();
    let mut bytes_delivered = 0u64;
    let mut delays_ms = Vec::new();
    let (mut errors_total, mut errors_corrected) = (0u64, 0u64);
    let (mut sent, mut delivered, mut lost) = (0u64, 0u64, 0u64);

    for (index, e) in transcript.iter().enumerate() {
        if index > 0 && e.t_ms < transcript[index - 1].t_ms {
            return Err(MetricsError::OutOfOrder {
                index,
                t_ms: e.t_ms,
            });
        }
        match e.dir {
            Direction::Send => match in_flight.get_mut(&e.seq) {
                Some(m) if m.awaiting_retry => m.awaiting_retry = false,
                other => {
                    if other.is_some() {
                        // re-used seq with no verdict on the old message
                        lost += 1;
                    }
                    sent += 1;
                    in_flight.insert(
                        e.seq,
                        InFlight {
                            first_send: e.t_ms,
                            had_error: false,
                            awaiting_retry: false,
                        },
                    );
                }
            },
            Direction::Corrupt => {
                let m = in_flight.get_mut(&e.seq).ok_or(MetricsError::Orphan {
                    index,
                    seq: e.seq,
                    dir: e.dir,
                })?;
                m.had_error = true;
                m.awaiting_retry = true;
                errors_total += 1;
            }
            Direction::Deliver => {
                let m = in_flight.remove(&e.seq).ok_or(MetricsError::Orphan {
                    index,
                    seq: e.seq,
                    dir: e.dir,
                })?;
                bytes_delivered += e.bytes;
                delays_ms.push(e.t_ms - m.first_send);
                delivered += 1;
                errors_corrected += u64::from(m.had_error);
            }
        }
    }
    lost += in_flight.len() as u64;

    let elapsed = match (transcript.first(), transcript.last()) {
        (Some(a), Some(b)) => (b.t_ms - a.t_ms) / 1000.0,
        _ => 0.0,
    };
    let measured_data_rate = (elapsed > 0.0).then(|| bytes_delivered as f64 / elapsed);
    let ec_ratio_vacuous = errors_total == 0;
    let ec_ratio = if ec_ratio_vacuous {
        1.0
    } else {
        errors_corrected as f64 / errors_total as f64
    };

    Ok(ChannelMetrics {
        bytes_delivered,
        elapsed,
        measured_data_rate,
        delays_ms,
        errors_total,
        errors_corrected,
        ec_ratio,
        ec_ratio_vacuous,
        messages_sent: sent,
        messages_delivered: delivered,
        messages_lost: lost,
    })
}

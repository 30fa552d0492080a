//! Fixed-step reference simulator. It walks every virtual millisecond and
//! decides afresh whether a sample is due, with no event queue. Slow, and
//! meant to be: it shares only the plant with the event engine.

use std::collections::VecDeque;

use thiserror::Error;

use super::plant::{Link, PendingDelivery, Plant};
use super::trace::{RecordData, Trace, TraceRecord};
use super::{SimError, SimRun};
use crate::channel::ChannelConfig;
use crate::controller::ControllerConfig;
use crate::scenario::ScenarioScript;
use crate::sensors::GroundTruth;
use crate::time::Millis;

pub fn oracle_run(
    script: &ScenarioScript,
    config: ControllerConfig,
    channel: ChannelConfig,
) -> Result<SimRun, SimError> {
    let alcohol_period = config.alcohol_period_ms();
    let eye_period = config.eye_period_ms();
    let mut trace = Vec::new();
    let mut plant = Plant::new(config, &mut trace)?;
    let mut link = Link::new(channel)?;
    let mut pending: VecDeque<PendingDelivery> = VecDeque::new();
    let end = script.end_ms();
    let mut prev_truth: Option<GroundTruth> = None;
    let mut t: Millis = 0;
    let ended_at = loop {
        if t >= end {
            break end;
        }
        let truth = script.truth_at_ms(t);
        while pending.front().is_some_and(|d| d.due == t) {
            let d = pending.pop_front().expect("front checked");
            trace.push(d.record());
        }
        let edge = prev_truth.is_some_and(|p| truth.sensed_differs(&p));
        let grid = t.is_multiple_of(alcohol_period) || t.is_multiple_of(eye_period);
        let deadline = plant.controller.next_deadline() == Some(t);
        if (edge || grid || deadline) && !plant.is_stopped() {
            for alert in plant.step(t, &truth, &mut trace)? {
                pending.push_back(link.send(&alert, t)?);
            }
        }
        prev_truth = Some(truth);
        if plant.is_stopped() && pending.is_empty() {
            break t;
        }
        t += 1;
    };
    Ok(SimRun {
        final_phase: plant.controller.kind(),
        ended_at,
        trace: Trace { records: trace },
        transcript: link.transcript,
    })
}

/// First point where two traces disagree.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("traces diverge at record {index}: {left:?} vs {right:?}")]
pub struct Divergence {
    pub index: usize,
    pub left: Option<TraceRecord>,
    pub right: Option<TraceRecord>,
}

/// Records must match one for one. Timestamps may differ by at most 1 ms;
/// everything else must be equal.
pub fn compare_traces(a: &Trace, b: &Trace) -> Result<(), Divergence> {
    let n = a.len().max(b.len());
    for i in 0..n {
        let (l, r) = (a.records.get(i), b.records.get(i));
        let same = match (l, r) {
            (Some(l), Some(r)) => l.t_ms.abs_diff(r.t_ms) <= 1 && same_data(&l.data, &r.data),
            _ => false,
        };
        if !same {
            return Err(Divergence {
                index: i,
                left: l.cloned(),
                right: r.cloned(),
            });
        }
    }
    Ok(())
}

fn same_data(a: &RecordData, b: &RecordData) -> bool {
    match (a, b) {
        (
            RecordData::AlertDelivered {
                seq: s1,
                code: c1,
                retries: r1,
                latency_ms: l1,
            },
            RecordData::AlertDelivered {
                seq: s2,
                code: c2,
                retries: r2,
                latency_ms: l2,
            },
        ) => s1 == s2 && c1 == c2 && r1 == r2 && (l1 - l2).abs() <= 1e-9,
        _ => a == b,
    }
}

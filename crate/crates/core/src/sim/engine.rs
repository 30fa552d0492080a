use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::plant::{Link, PendingDelivery, Plant};
use super::trace::{Trace, TraceRecord};
use super::{SimError, SimRun};
use crate::channel::ChannelConfig;
use crate::controller::{ControllerConfig, PhaseKind};
use crate::scenario::ScenarioScript;
use crate::sensors::GroundTruth;
use crate::time::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Alcohol sampling period boundary.
    AlcoholTick,
    /// Eye sampling period boundary.
    EyeTick,
    /// The ground truth changed what the sensors would see.
    Edge,
    /// A controller recheck or ramp end may be due.
    Deadline,
    /// An alert frame resolves (delivered or lost).
    Delivery(usize),
    ScenarioEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub at: Millis,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (at, seq)
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Externally visible state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t_ms: Millis,
    pub phase: PhaseKind,
    pub speed: f64,
    pub alarm: bool,
    pub red: bool,
    pub green: bool,
    pub vibration: bool,
}

/// Discrete-event simulator. Drives a scripted run through [`run`], or a
/// live session through [`Simulator::set_truth`] and
/// [`Simulator::advance_to`].
pub struct Simulator {
    plant: Plant,
    link: Link,
    queue: BinaryHeap<SimEvent>,
    next_seq: u64,
    clock: Millis,
    truth: GroundTruth,
    /// Pending ground-truth changes, in time order.
    timeline: VecDeque<(Millis, GroundTruth)>,
    /// Last truth handed to the timeline, for edge detection.
    latest_truth: GroundTruth,
    deliveries: Vec<Option<PendingDelivery>>,
    in_flight: usize,
    scheduled_deadline: Option<Millis>,
    trace: Vec<TraceRecord>,
    /// Scripted runs end here; live sessions have no end.
    end_at: Option<Millis>,
    finished: Option<Millis>,
}

impl Simulator {
    pub fn new(config: ControllerConfig, channel: ChannelConfig) -> Result<Self, SimError> {
        let mut trace = Vec::new();
        let plant = Plant::new(config, &mut trace)?;
        let link = Link::new(channel)?;
        let mut sim = Self {
            plant,
            link,
            queue: BinaryHeap::new(),
            next_seq: 0,
            clock: 0,
            truth: GroundTruth::default(),
            timeline: VecDeque::new(),
            latest_truth: GroundTruth::default(),
            deliveries: Vec::new(),
            in_flight: 0,
            scheduled_deadline: None,
            trace,
            end_at: None,
            finished: None,
        };
        sim.push(0, EventKind::AlcoholTick);
        sim.push(0, EventKind::EyeTick);
        Ok(sim)
    }

    /// Loads a script's ground-truth changes and its end time.
    pub fn with_script(
        script: &ScenarioScript,
        config: ControllerConfig,
        channel: ChannelConfig,
    ) -> Result<Self, SimError> {
        let mut sim = Self::new(config, channel)?;
        for (at, truth) in script.truth_timeline() {
            sim.set_truth(at, truth)?;
        }
        sim.end_at = Some(script.end_ms());
        sim.push(script.end_ms(), EventKind::ScenarioEnd);
        Ok(sim)
    }

    /// Ground truth from `at` onwards. `at` must not precede the last
    /// change or the clock.
    pub fn set_truth(&mut self, at: Millis, truth: GroundTruth) -> Result<(), SimError> {
        let floor = self
            .timeline
            .back()
            .map_or(self.clock, |(t, _)| (*t).max(self.clock));
        if at < floor {
            return Err(SimError::SchedulingInversion { now: floor, at });
        }
        if truth.sensed_differs(&self.latest_truth) {
            self.push(at, EventKind::Edge);
        }
        self.latest_truth = truth;
        self.timeline.push_back((at, truth));
        Ok(())
    }

    pub fn clock(&self) -> Millis {
        self.clock
    }

    pub fn phase(&self) -> PhaseKind {
        self.plant.controller.kind()
    }

    /// Time the run ended, once it has.
    pub fn finished(&self) -> Option<Millis> {
        self.finished
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn records_since(&self, idx: usize) -> &[TraceRecord] {
        self.trace.get(idx..).unwrap_or(&[])
    }

    /// Hands over the records so far and forgets them. Live sessions call
    /// this to keep memory bounded.
    pub fn drain_records(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn snapshot(&self) -> Snapshot {
        let a = self.plant.controller.actuators();
        Snapshot {
            t_ms: self.clock,
            phase: self.phase(),
            speed: self.plant.speed_at(self.clock),
            alarm: a.alarm,
            red: a.red_lamp,
            green: a.green_lamp,
            vibration: a.vibration,
        }
    }

    /// Leaves a latched stop at the current virtual time.
    pub fn reset(&mut self) -> Result<(), SimError> {
        self.plant.reset(self.clock, &mut self.trace)?;
        self.scheduled_deadline = None;
        Ok(())
    }

    /// Processes every event up to and including `t`, then moves the clock
    /// to `t`.
    pub fn advance_to(&mut self, t: Millis) -> Result<(), SimError> {
        while self.finished.is_none() {
            match self.queue.peek() {
                Some(ev) if ev.at <= t => {
                    let at = ev.at;
                    self.process_batch(at)?;
                }
                _ => break,
            }
        }
        if self.finished.is_none() {
            self.clock = self.clock.max(t);
        }
        Ok(())
    }

    /// Runs until the scenario ends or the controller stops with an idle
    /// channel.
    pub fn run_to_completion(&mut self) -> Result<Millis, SimError> {
        while self.finished.is_none() {
            let Some(ev) = self.queue.peek() else {
                self.finished = Some(self.clock);
                break;
            };
            let at = ev.at;
            self.process_batch(at)?;
        }
        Ok(self.finished.unwrap_or(self.clock))
    }

    pub fn into_run(self) -> SimRun {
        SimRun {
            final_phase: self.phase(),
            ended_at: self.finished.unwrap_or(self.clock),
            trace: Trace {
                records: self.trace,
            },
            transcript: self.link.transcript,
        }
    }

    fn push(&mut self, at: Millis, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(SimEvent { at, seq, kind });
    }

    fn process_batch(&mut self, t: Millis) -> Result<(), SimError> {
        if t < self.clock {
            return Err(SimError::SchedulingInversion {
                now: self.clock,
                at: t,
            });
        }
        self.clock = t;
        let mut batch = Vec::new();
        while let Some(ev) = self.queue.peek() {
            if ev.at != t {
                break;
            }
            batch.push(*ev);
            self.queue.pop();
        }
        if batch.iter().any(|e| e.kind == EventKind::ScenarioEnd) {
            self.finished = Some(t);
            return Ok(());
        }
        while let Some(&(at, truth)) = self.timeline.front() {
            if at > t {
                break;
            }
            self.truth = truth;
            self.timeline.pop_front();
        }

        for ev in &batch {
            if let EventKind::Delivery(idx) = ev.kind {
                if let Some(d) = self.deliveries[idx].take() {
                    self.trace.push(d.record());
                    self.in_flight -= 1;
                }
            }
        }

        let cfg = self.plant.controller.config().clone();
        let mut wants_sample = false;
        for ev in &batch {
            match ev.kind {
                EventKind::AlcoholTick => {
                    wants_sample = true;
                    self.push(t + cfg.alcohol_period_ms(), EventKind::AlcoholTick);
                }
                EventKind::EyeTick => {
                    wants_sample = true;
                    self.push(t + cfg.eye_period_ms(), EventKind::EyeTick);
                }
                EventKind::Edge => wants_sample = true,
                EventKind::Deadline => {
                    wants_sample |= self.plant.controller.next_deadline() == Some(t)
                }
                EventKind::Delivery(_) | EventKind::ScenarioEnd => {}
            }
        }

        if wants_sample && !self.plant.is_stopped() {
            let truth = self.truth;
            let alerts = self.plant.step(t, &truth, &mut self.trace)?;
            for alert in &alerts {
                let pending = self.link.send(alert, t)?;
                let due = pending.due;
                self.deliveries.push(Some(pending));
                self.in_flight += 1;
                self.push(due, EventKind::Delivery(self.deliveries.len() - 1));
            }
            let deadline = self.plant.controller.next_deadline();
            if deadline != self.scheduled_deadline {
                self.scheduled_deadline = deadline;
                if let Some(d) = deadline {
                    self.push(d, EventKind::Deadline);
                }
            }
        }

        if self.plant.is_stopped() && self.in_flight == 0 && self.end_at.is_some() {
            self.finished = Some(t);
        }
        Ok(())
    }
}

/// Runs a script to completion with the event engine.
pub fn run(
    script: &ScenarioScript,
    config: ControllerConfig,
    channel: ChannelConfig,
) -> Result<SimRun, SimError> {
    let mut sim = Simulator::with_script(script, config, channel)?;
    sim.run_to_completion()?;
    Ok(sim.into_run())
}

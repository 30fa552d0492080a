//! State shared by the event engine and the fixed-step oracle: controller,
//! motor, sensor RNG and the alert link, plus the trace bookkeeping. The two
//! schedulers differ only in *when* they call into this.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::trace::{RecordData, TraceRecord};
use super::SimError;
use crate::channel::{
    encode_frame, transmit, AlertCode, AlertMessage, ChannelConfig, DeliveryOutcome,
    TranscriptEntry,
};
use crate::controller::{ActuatorState, ControllerConfig, ControllerState, PhaseKind};
use crate::sensors::{sample_sensors, GroundTruth, NoiseSpec};
use crate::time::Millis;
use crate::vehicle::MotorState;

pub(crate) struct Plant {
    pub controller: ControllerState,
    motor: MotorState,
    noise: NoiseSpec,
    sensor_rng: ChaCha8Rng,
    lamps: Option<(bool, bool, bool, bool)>,
    speed: Option<f64>,
}

impl Plant {
    pub fn new(config: ControllerConfig, trace: &mut Vec<TraceRecord>) -> Result<Self, SimError> {
        let controller = ControllerState::new(config)?;
        let cfg = controller.config();
        let motor = MotorState::running(cfg.cruise_speed, cfg.stop_duration);
        let noise = NoiseSpec::default();
        let mut plant = Self {
            controller,
            motor,
            noise,
            sensor_rng: ChaCha8Rng::seed_from_u64(noise.seed),
            lamps: None,
            speed: None,
        };
        let actuators = plant.controller.actuators();
        plant.record_outputs(0, &actuators, trace);
        Ok(plant)
    }

    pub fn is_stopped(&self) -> bool {
        self.controller.kind() == PhaseKind::Stopped
    }

    pub fn speed_at(&self, t: Millis) -> f64 {
        self.motor.speed_now(t)
    }

    /// Samples the sensors at `t`, steps the controller and records what
    /// changed. Returns the alerts to send.
    pub fn step(
        &mut self,
        t: Millis,
        truth: &GroundTruth,
        trace: &mut Vec<TraceRecord>,
    ) -> Result<Vec<AlertMessage>, SimError> {
        if truth.noise != self.noise {
            self.noise = truth.noise;
            self.sensor_rng = ChaCha8Rng::seed_from_u64(self.noise.seed);
        }
        let sample = sample_sensors(truth, t, &self.noise, &mut self.sensor_rng)?;
        trace.push(TraceRecord {
            t_ms: t,
            data: RecordData::Sample {
                alcohol_raw: sample.alcohol_raw,
                eyes_closed: sample.eyes_closed,
            },
        });
        let out = self.controller.step(&sample, t)?;
        for tr in &out.transitions {
            trace.push(TraceRecord {
                t_ms: t,
                data: RecordData::PhaseChange {
                    from: tr.from,
                    to: tr.to,
                },
            });
        }
        self.motor = self.motor.apply(out.actuators.motor, t)?;
        self.record_outputs(t, &out.actuators, trace);
        for a in &out.alerts {
            trace.push(TraceRecord {
                t_ms: t,
                data: RecordData::AlertSent {
                    seq: a.seq,
                    code: a.code,
                    detail: a.detail.clone(),
                },
            });
        }
        self.controller = out.state;
        Ok(out.alerts)
    }

    /// Leaves a latched stop at `t`.
    pub fn reset(&mut self, t: Millis, trace: &mut Vec<TraceRecord>) -> Result<(), SimError> {
        let from = self.controller.kind();
        self.controller = self.controller.reset()?;
        let cfg = self.controller.config();
        self.motor = MotorState::running(cfg.cruise_speed, cfg.stop_duration);
        trace.push(TraceRecord {
            t_ms: t,
            data: RecordData::PhaseChange {
                from,
                to: self.controller.kind(),
            },
        });
        let actuators = self.controller.actuators();
        self.record_outputs(t, &actuators, trace);
        Ok(())
    }

    fn record_outputs(&mut self, t: Millis, a: &ActuatorState, trace: &mut Vec<TraceRecord>) {
        let lamps = (a.alarm, a.red_lamp, a.green_lamp, a.vibration);
        if self.lamps != Some(lamps) {
            self.lamps = Some(lamps);
            trace.push(TraceRecord {
                t_ms: t,
                data: RecordData::Actuator {
                    alarm: a.alarm,
                    red: a.red_lamp,
                    green: a.green_lamp,
                    vibration: a.vibration,
                },
            });
        }
        let speed = self.motor.speed_now(t);
        if self.speed != Some(speed) {
            self.speed = Some(speed);
            trace.push(TraceRecord {
                t_ms: t,
                data: RecordData::MotorSpeed { speed },
            });
        }
    }
}

/// A frame on its way to the phone, resolved at `due`.
#[derive(Debug, Clone)]
pub(crate) struct PendingDelivery {
    pub due: Millis,
    pub seq: u16,
    pub code: AlertCode,
    pub first_send: f64,
    pub outcome: DeliveryOutcome,
}

impl PendingDelivery {
    pub fn record(&self) -> TraceRecord {
        let data = match self.outcome {
            DeliveryOutcome::Delivered { at, retries } => RecordData::AlertDelivered {
                seq: self.seq,
                code: self.code,
                retries,
                latency_ms: at - self.first_send,
            },
            DeliveryOutcome::Lost { .. } => RecordData::AlertLost {
                seq: self.seq,
                code: self.code,
            },
        };
        TraceRecord {
            t_ms: self.due,
            data,
        }
    }
}

/// The serial link: one frame at a time, in send order.
pub(crate) struct Link {
    config: ChannelConfig,
    rng: ChaCha8Rng,
    free_at: f64,
    pub transcript: Vec<TranscriptEntry>,
}

impl Link {
    pub fn new(config: ChannelConfig) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            free_at: 0.0,
            transcript: Vec::new(),
        })
    }

    /// Queues `alert` at `t`; it goes out once the link is free.
    pub fn send(&mut self, alert: &AlertMessage, t: Millis) -> Result<PendingDelivery, SimError> {
        let frame = encode_frame(alert)?;
        let start = self.free_at.max(t as f64);
        let tx = transmit(&frame, &self.config, start, &mut self.rng);
        self.free_at = tx.link_free_at();
        self.transcript.extend(tx.transcript(alert.seq));
        Ok(PendingDelivery {
            due: tx.outcome.at().ceil() as Millis,
            seq: alert.seq,
            code: alert.code,
            first_send: start,
            outcome: tx.outcome,
        })
    }
}

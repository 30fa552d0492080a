//! Trace records and their JSONL / CSV exports.

use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

use crate::channel::{AlertCode, TranscriptEntry};
use crate::controller::PhaseKind;
use crate::time::Millis;

pub const CSV_HEADER: &str = "t_ms,kind,phase,speed,alarm,red,green,vibration,code,detail";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordData {
    Sample {
        alcohol_raw: u16,
        eyes_closed: bool,
    },
    PhaseChange {
        from: PhaseKind,
        to: PhaseKind,
    },
    Actuator {
        alarm: bool,
        red: bool,
        green: bool,
        vibration: bool,
    },
    MotorSpeed {
        speed: f64,
    },
    AlertSent {
        seq: u16,
        code: AlertCode,
        detail: String,
    },
    AlertDelivered {
        seq: u16,
        code: AlertCode,
        retries: u32,
        latency_ms: f64,
    },
    AlertLost {
        seq: u16,
        code: AlertCode,
    },
}

impl RecordData {
    pub fn kind(&self) -> &'static str {
        match self {
            RecordData::Sample { .. } => "sample",
            RecordData::PhaseChange { .. } => "phase_change",
            RecordData::Actuator { .. } => "actuator",
            RecordData::MotorSpeed { .. } => "motor_speed",
            RecordData::AlertSent { .. } => "alert_sent",
            RecordData::AlertDelivered { .. } => "alert_delivered",
            RecordData::AlertLost { .. } => "alert_lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ms: Millis,
    #[serde(flatten)]
    pub data: RecordData,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn iter(&self) -> std::slice::Iter<'_, TraceRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Time of the first transition into `kind`.
    pub fn entered(&self, kind: PhaseKind) -> Option<Millis> {
        self.records.iter().find_map(|r| match r.data {
            RecordData::PhaseChange { to, .. } if to == kind => Some(r.t_ms),
            _ => None,
        })
    }

    pub fn alerts(&self) -> impl Iterator<Item = (Millis, u16, AlertCode)> + '_ {
        self.records.iter().filter_map(|r| match r.data {
            RecordData::AlertSent { seq, code, .. } => Some((r.t_ms, seq, code)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Error)]
#[error("trace export failed after {written} bytes: {source}")]
pub struct ExportError {
    pub written: u64,
    #[source]
    pub source: io::Error,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Counting<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes the trace and returns the number of bytes written.
pub fn export_trace<W: Write>(
    trace: &Trace,
    format: ExportFormat,
    sink: W,
) -> Result<u64, ExportError> {
    let mut out = Counting {
        inner: sink,
        written: 0,
    };
    let result = match format {
        ExportFormat::Jsonl => write_jsonl(trace, &mut out),
        ExportFormat::Csv => write_csv(trace, &mut out),
    };
    let result = result.and_then(|()| out.flush());
    match result {
        Ok(()) => Ok(out.written),
        Err(source) => Err(ExportError {
            written: out.written,
            source,
        }),
    }
}

fn write_jsonl<W: Write>(trace: &Trace, out: &mut W) -> io::Result<()> {
    for r in &trace.records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV rows carry the phase, speed and lamp state in force at each record.
fn write_csv<W: Write>(trace: &Trace, out: &mut W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    let mut phase = PhaseKind::Normal;
    let mut speed: Option<f64> = None;
    let mut lamps = (false, false, false, false);
    for r in &trace.records {
        let (mut code, mut detail) = (String::new(), String::new());
        match &r.data {
            RecordData::Sample {
                alcohol_raw,
                eyes_closed,
            } => {
                detail = format!(
                    "raw={alcohol_raw} eyes={}",
                    if *eyes_closed { "closed" } else { "open" }
                )
            }
            RecordData::PhaseChange { from, to } => {
                phase = *to;
                detail = format!("{from}->{to}");
            }
            RecordData::Actuator {
                alarm,
                red,
                green,
                vibration,
            } => lamps = (*alarm, *red, *green, *vibration),
            RecordData::MotorSpeed { speed: s } => speed = Some(*s),
            RecordData::AlertSent {
                code: c, detail: d, ..
            } => {
                code = c.to_string();
                detail = d.clone();
            }
            RecordData::AlertDelivered {
                code: c,
                retries,
                latency_ms,
                ..
            } => {
                code = c.to_string();
                detail = format!("retries={retries} latency_ms={latency_ms}");
            }
            RecordData::AlertLost { code: c, .. } => {
                code = c.to_string();
                detail = "lost".into();
            }
        }
        w.write_record([
            r.t_ms.to_string(),
            r.data.kind().to_string(),
            phase.to_string(),
            speed.map(|s| s.to_string()).unwrap_or_default(),
            lamps.0.to_string(),
            lamps.1.to_string(),
            lamps.2.to_string(),
            lamps.3.to_string(),
            code,
            detail,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_jsonl<R: BufRead>(reader: R) -> Result<Trace, ImportError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| ImportError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(r);
    }
    Ok(Trace { records })
}

pub fn write_transcript_jsonl<W: Write>(entries: &[TranscriptEntry], mut out: W) -> io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_transcript_jsonl<R: BufRead>(reader: R) -> Result<Vec<TranscriptEntry>, ImportError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|e| ImportError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(e);
    }
    Ok(entries)
}

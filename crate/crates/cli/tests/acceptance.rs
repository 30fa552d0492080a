//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Run with `cargo test -p vigil-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vigil_core::channel::{
    compute_metrics, decode_frame, encode_frame, AlertCode, AlertMessage, ChannelConfig, Direction,
    FrameError, TranscriptEntry, MAX_DETAIL_BYTES,
};
use vigil_core::controller::{ControllerConfig, PhaseKind};
use vigil_core::scenario::{
    format_scenario, parse_scenario, parse_scenario_bytes, ScenarioEvent, ScenarioScript,
    TimedEvent,
};
use vigil_core::sensors::NoiseSpec;
use vigil_core::sim::{compare_traces, RecordData, SimRun};
use vigil_core::{oracle_run, run};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(root().join("scenarios"))
        .expect("scenarios directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "vgl"))
        .collect();
    files.sort();
    files
}

fn load(path: &Path) -> ScenarioScript {
    let src = std::fs::read_to_string(path).unwrap();
    parse_scenario(&src)
        .unwrap_or_else(|d| panic!("{}: {d:?}", path.display()))
        .script
}

fn corpus_script(name: &str) -> ScenarioScript {
    load(&root().join("scenarios").join(name))
}

fn default_run(script: &ScenarioScript) -> SimRun {
    run(
        script,
        ControllerConfig::default(),
        ChannelConfig::default(),
    )
    .unwrap()
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn secs(ms: Option<u64>) -> String {
    ms.map_or("never".into(), |t| format!("{:.3} s", t as f64 / 1000.0))
}

fn c1_escalation() -> Outcome {
    let script = corpus_script("about_to_sleep.vgl");
    let started = Instant::now();
    let r = default_run(&script);
    let elapsed = started.elapsed();
    let first_alert = r
        .trace
        .alerts()
        .find(|a| a.2 != AlertCode::StatusEyesOpen)
        .map(|a| a.0);
    let warning = r.trace.entered(PhaseKind::EyeWarning);
    let ramp = r.trace.entered(PhaseKind::RampDown);
    let stopped = r.trace.entered(PhaseKind::Stopped);
    let eye_period = ControllerConfig::default().eye_period_ms();
    let detail = format!(
        "alert {}, EYE_WARNING {}, RAMP_DOWN {}, STOPPED {}, {:.1} ms",
        secs(first_alert),
        secs(warning),
        secs(ramp),
        secs(stopped),
        elapsed.as_secs_f64() * 1e3
    );
    check(first_alert == Some(5_000), || detail.clone())?;
    check(
        warning.is_some_and(|w| w.abs_diff(7_000) <= eye_period),
        || detail.clone(),
    )?;
    check(ramp == Some(9_000), || detail.clone())?;
    check(stopped == Some(21_500), || detail.clone())?;
    check(elapsed < Duration::from_secs(1), || detail.clone())?;
    Ok(detail)
}

fn c2_alcohol() -> Outcome {
    let r = default_run(&corpus_script("drunk.vgl"));
    let warn = r.trace.entered(PhaseKind::AlcoholWarning);
    let lamps_at_2 = r.trace.iter().any(|rec| {
        rec.t_ms == 2_000
            && matches!(
                rec.data,
                RecordData::Actuator {
                    alarm: true,
                    red: true,
                    ..
                }
            )
    });
    let ramp = r.trace.entered(PhaseKind::RampDown);
    let stopped = r.trace.entered(PhaseKind::Stopped);
    let detail = format!(
        "ALCOHOL_WARNING {}, RAMP_DOWN {}, STOPPED {}",
        secs(warn),
        secs(ramp),
        secs(stopped)
    );
    check(warn == Some(2_000) && lamps_at_2, || {
        format!("{detail}, alarm+red at 2 s: {lamps_at_2}")
    })?;
    check(ramp == Some(22_000), || detail.clone())?;
    check(stopped == Some(34_500), || detail.clone())?;

    // 195.5 ppm reads exactly 400 counts
    let at_threshold = ScenarioScript {
        name: "raw 400".into(),
        events: vec![TimedEvent {
            at: 0.0,
            event: ScenarioEvent::Alcohol { ppm: 195.5 },
        }],
        end_at: 120.0,
    };
    let r = default_run(&at_threshold);
    let raws: Vec<u16> = r
        .trace
        .iter()
        .filter_map(|rec| match rec.data {
            RecordData::Sample { alcohol_raw, .. } => Some(alcohol_raw),
            _ => None,
        })
        .collect();
    check(
        !raws.is_empty() && raws.iter().all(|&raw| raw == 400),
        || format!("expected every reading to be 400, got {raws:?}"),
    )?;
    check(r.trace.entered(PhaseKind::AlcoholWarning).is_none(), || {
        "raw 400 triggered ALCOHOL_WARNING".into()
    })?;
    Ok(format!(
        "{detail}; {} readings of exactly 400 never trigger",
        raws.len()
    ))
}

/// A scenario that must reach RAMP_DOWN: random clutter, then either eyes
/// shut for good or alcohol above the threshold for good.
fn ramp_scenario(rng: &mut ChaCha8Rng) -> ScenarioScript {
    let mut events = Vec::new();
    let mut t = 0.0f64;
    for _ in 0..rng.random_range(0..4) {
        t += f64::from(rng.random_range(1..4000u32)) / 1000.0;
        let event = if rng.random_bool(0.5) {
            ScenarioEvent::Eyes {
                closed: rng.random_bool(0.5),
            }
        } else {
            ScenarioEvent::Alcohol {
                ppm: f64::from(rng.random_range(0..190u32)),
            }
        };
        events.push(TimedEvent { at: t, event });
    }
    t += f64::from(rng.random_range(1..4000u32)) / 1000.0;
    if rng.random_bool(0.5) {
        events.push(TimedEvent {
            at: t,
            event: ScenarioEvent::Eyes { closed: true },
        });
    } else {
        events.push(TimedEvent {
            at: t,
            event: ScenarioEvent::Alcohol {
                ppm: f64::from(rng.random_range(200..=500u32)),
            },
        });
    }
    ScenarioScript {
        name: "ramp".into(),
        events: dedupe(events),
        end_at: t + 60.0,
    }
}

/// Keeps the last of several same-kind events at one instant.
fn dedupe(events: Vec<TimedEvent>) -> Vec<TimedEvent> {
    let mut out: Vec<TimedEvent> = Vec::new();
    for e in events {
        if let Some(i) = out
            .iter()
            .position(|o| o.at == e.at && o.event.keyword() == e.event.keyword())
        {
            out.remove(i);
        }
        out.push(e);
    }
    out
}

fn c3_stop_window() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut reached = 0;
    let (mut lo, mut hi) = (u64::MAX, 0u64);
    for i in 0..200 {
        let stop_ms: u64 = rng.random_range(10_000..=15_000);
        let cfg = ControllerConfig {
            stop_duration: stop_ms as f64 / 1000.0,
            ..ControllerConfig::default()
        };
        let script = ramp_scenario(&mut rng);
        let r = run(&script, cfg, ChannelConfig::default()).map_err(|e| format!("#{i}: {e}"))?;
        let Some(ramp) = r.trace.entered(PhaseKind::RampDown) else {
            return Err(format!(
                "#{i} never reached RAMP_DOWN:\n{}",
                format_scenario(&script)
            ));
        };
        reached += 1;
        let zero = r.trace.iter().find_map(|rec| match rec.data {
            RecordData::MotorSpeed { speed } if speed == 0.0 && rec.t_ms >= ramp => Some(rec.t_ms),
            _ => None,
        });
        let measured = zero.map(|z| z - ramp);
        check(measured == Some(stop_ms), || {
            format!("#{i}: configured {stop_ms} ms, measured {measured:?}")
        })?;
        check((10_000..=15_000).contains(&stop_ms), || {
            format!("#{i}: {stop_ms} ms")
        })?;
        lo = lo.min(stop_ms);
        hi = hi.max(stop_ms);
    }
    for bad in [9.999, 15.001, 0.0, -12.5, f64::NAN] {
        let cfg = ControllerConfig {
            stop_duration: bad,
            ..ControllerConfig::default()
        };
        check(cfg.validate().is_err(), || {
            format!("stop_duration {bad} accepted")
        })?;
    }
    Ok(format!(
        "{reached} ramps, each exactly its configured duration ({lo}..{hi} ms)"
    ))
}

fn c4_deescalation() -> Outcome {
    let script = corpus_script("sleepy.vgl");
    let closed = script
        .events
        .iter()
        .any(|e| e.at == 5.0 && e.event == ScenarioEvent::Eyes { closed: true });
    let opened = script
        .events
        .iter()
        .any(|e| e.at == 6.5 && e.event == ScenarioEvent::Eyes { closed: false });
    check(closed && opened, || {
        "sleepy.vgl no longer closes at 5 s and opens at 6.5 s".into()
    })?;
    let r = default_run(&script);
    let vibration = r.trace.iter().find(|rec| {
        matches!(
            rec.data,
            RecordData::Actuator {
                vibration: true,
                ..
            }
        )
    });
    check(vibration.is_none(), || {
        format!("vibration at {:?}", vibration.map(|v| v.t_ms))
    })?;
    let mut phase_at_7 = PhaseKind::Normal;
    let mut back_to_normal = None;
    for rec in r.trace.iter().filter(|rec| rec.t_ms <= 7_000) {
        if let RecordData::PhaseChange { to, .. } = rec.data {
            phase_at_7 = to;
            if to == PhaseKind::Normal {
                back_to_normal = Some(rec.t_ms);
            }
        }
    }
    check(
        phase_at_7 == PhaseKind::Normal && back_to_normal.is_some(),
        || format!("phase after the 7 s sample is {phase_at_7}"),
    )?;
    Ok(format!(
        "no vibration record; NORMAL again at {}",
        secs(back_to_normal)
    ))
}

fn random_script(rng: &mut ChaCha8Rng) -> ScenarioScript {
    let mut events = Vec::new();
    let mut t = 0.0f64;
    for _ in 0..rng.random_range(0..14) {
        // sub-millisecond times exercise the floor to virtual ms
        t += f64::from(rng.random_range(0..6_000_000u32)) / 1_000_000.0;
        let event = match rng.random_range(0..10) {
            0..=4 => ScenarioEvent::Eyes {
                closed: rng.random_bool(0.5),
            },
            5..=8 => ScenarioEvent::Alcohol {
                ppm: f64::from(rng.random_range(0..=1000u32)) / 2.0,
            },
            _ => ScenarioEvent::Noise(NoiseSpec {
                seed: rng.next_u64(),
                alcohol_jitter: f64::from(rng.random_range(0..30u32)),
                eye_flip_prob: f64::from(rng.random_range(0..=20u32)) / 100.0,
            }),
        };
        events.push(TimedEvent { at: t, event });
    }
    ScenarioScript {
        name: "random".into(),
        events: dedupe(events),
        end_at: t + f64::from(rng.random_range(0..40u32)),
    }
}

fn c5_oracle() -> Outcome {
    let started = Instant::now();
    let mut compared = 0usize;
    let mut records = 0usize;
    let mut pairs: Vec<(String, ScenarioScript, ControllerConfig, ChannelConfig)> = corpus()
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                load(p),
                ControllerConfig::default(),
                ChannelConfig::default(),
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let controller = ControllerConfig {
            stop_duration: f64::from(rng.random_range(10_000..=15_000u32)) / 1000.0,
            ..ControllerConfig::default()
        };
        let channel = ChannelConfig {
            bit_error_rate: [0.0, 0.0005, 0.003][rng.random_range(0..3)],
            seed: rng.next_u64(),
            ..ChannelConfig::default()
        };
        pairs.push((
            format!("random #{i}"),
            random_script(&mut rng),
            controller,
            channel,
        ));
    }
    for (name, script, controller, channel) in &pairs {
        let engine =
            run(script, controller.clone(), channel.clone()).map_err(|e| format!("{name}: {e}"))?;
        let oracle = oracle_run(script, controller.clone(), channel.clone())
            .map_err(|e| format!("{name}: {e}"))?;
        compare_traces(&engine.trace, &oracle.trace).map_err(|d| format!("{name}: {d}"))?;
        compared += 1;
        records += engine.trace.len();
    }
    for path in corpus() {
        let status = Command::new(env!("CARGO_BIN_EXE_vigil"))
            .arg("run")
            .arg(&path)
            .arg("--oracle")
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.code() == Some(0), || {
            format!(
                "`vigil run {} --oracle` exited {:?}",
                path.display(),
                status.status.code()
            )
        })?;
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(30), || {
        format!("took {:.1} s", elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "{compared} scripts, {records} records agree; CLI --oracle exit 0; {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn entry(t_ms: f64, dir: Direction, seq: u16, bytes: u64) -> TranscriptEntry {
    TranscriptEntry {
        t_ms,
        dir,
        seq,
        bytes,
    }
}

fn c6_metrics() -> Outcome {
    // 2100 bytes delivered over exactly one second
    let rate_t = vec![
        entry(0.0, Direction::Send, 0, 1000),
        entry(400.0, Direction::Deliver, 0, 1000),
        entry(500.0, Direction::Send, 1, 1100),
        entry(1000.0, Direction::Deliver, 1, 1100),
    ];
    let m = compute_metrics(&rate_t).map_err(|e| e.to_string())?;
    check(m.measured_data_rate == Some(2100.0), || {
        format!("rate {:?}, expected 2100", m.measured_data_rate)
    })?;

    // delay is deliver minus first send, including retries
    let delay_t = vec![
        entry(10.0, Direction::Send, 7, 20),
        entry(13.25, Direction::Corrupt, 7, 20),
        entry(16.5, Direction::Send, 7, 20),
        entry(19.75, Direction::Deliver, 7, 20),
        entry(30.0, Direction::Send, 8, 20),
        entry(33.0, Direction::Deliver, 8, 20),
    ];
    let m = compute_metrics(&delay_t).map_err(|e| e.to_string())?;
    check(m.delays_ms == vec![19.75 - 10.0, 33.0 - 30.0], || {
        format!("delays {:?}", m.delays_ms)
    })?;

    // four corrupted transmissions, three of which end in a delivery
    let mut ec_t = Vec::new();
    let mut t = 0.0;
    for seq in 0..4u16 {
        ec_t.push(entry(t, Direction::Send, seq, 20));
        ec_t.push(entry(t + 1.0, Direction::Corrupt, seq, 20));
        if seq < 3 {
            ec_t.push(entry(t + 2.0, Direction::Send, seq, 20));
            ec_t.push(entry(t + 3.0, Direction::Deliver, seq, 20));
        }
        t += 10.0;
    }
    let m = compute_metrics(&ec_t).map_err(|e| e.to_string())?;
    check(
        m.errors_total == 4 && m.errors_corrected == 3 && m.ec_ratio == 0.75,
        || {
            format!(
                "{}/{} -> {}",
                m.errors_corrected, m.errors_total, m.ec_ratio
            )
        },
    )?;

    let empty = compute_metrics(&[]).map_err(|e| e.to_string())?;
    check(
        empty.measured_data_rate.is_none() && empty.messages_sent == 0,
        || "empty transcript not degenerate".into(),
    )?;
    Ok("2100 B/s, delays 9.75/3 ms, ec_ratio 0.75, empty -> undefined rate".into())
}

fn random_detail(rng: &mut ChaCha8Rng) -> String {
    let target = rng.random_range(0..=MAX_DETAIL_BYTES);
    let mut s = String::new();
    loop {
        let c = match rng.random_range(0..10) {
            0 => char::from_u32(rng.random_range(0x80..0x800)).unwrap_or('x'),
            1 => '€',
            _ => char::from(rng.random_range(0x20u8..0x7f)),
        };
        if s.len() + c.len_utf8() > target {
            return s;
        }
        s.push(c);
    }
}

fn random_message(rng: &mut ChaCha8Rng) -> AlertMessage {
    AlertMessage {
        seq: rng.random(),
        at: rng.random(),
        code: AlertCode::ALL[rng.random_range(0..AlertCode::ALL.len())],
        detail: random_detail(rng),
    }
}

fn c7_codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10_000 {
        let msg = random_message(&mut rng);
        let frame = encode_frame(&msg).map_err(|e| format!("#{i}: {e}"))?;
        let back = decode_frame(&frame).map_err(|e| format!("#{i}: {e}"))?;
        check(back == msg, || {
            format!("#{i}: {msg:?} came back as {back:?}")
        })?;
    }

    let mut representative: Vec<AlertMessage> = AlertCode::ALL
        .iter()
        .enumerate()
        .map(|(i, &code)| AlertMessage {
            seq: i as u16,
            at: 1_000 * i as u64,
            code,
            detail: String::new(),
        })
        .collect();
    representative.push(AlertMessage {
        seq: u16::MAX,
        at: u64::MAX,
        code: AlertCode::AlertAlcohol,
        detail: "x".repeat(MAX_DETAIL_BYTES),
    });
    representative.push(AlertMessage {
        seq: 258,
        at: 21_500,
        code: AlertCode::MotorStopped,
        detail: "vehicle stopped ✓".into(),
    });
    let mut flips = 0;
    for msg in &representative {
        let frame = encode_frame(msg).map_err(|e| e.to_string())?;
        for bit in 0..frame.len() * 8 {
            let mut bad = frame.clone();
            bad[bit / 8] ^= 1 << (bit % 8);
            let got = decode_frame(&bad);
            // past sync and length only the checksum can notice
            let ok = if bit >= 24 {
                matches!(got, Err(FrameError::BadCrc { .. }))
            } else {
                got.is_err()
            };
            check(ok, || format!("flip of bit {bit} in {msg:?} gave {got:?}"))?;
            flips += 1;
        }
    }

    let mut crashes = 0usize;
    let mut buf = Vec::with_capacity(96);
    for i in 0..1_000_000u32 {
        buf.clear();
        let len = rng.random_range(0..96);
        buf.extend((0..len).map(|_| rng.random::<u8>()));
        if i % 2 == 0 && buf.len() >= 3 {
            // plausible header so the decoder gets past the sync check
            buf[0] = 0xAA;
            buf[1] = 0x55;
            buf[2] = (buf.len() as u8).saturating_sub(4);
        }
        if catch_unwind(AssertUnwindSafe(|| {
            let _ = decode_frame(&buf);
        }))
        .is_err()
        {
            crashes += 1;
        }
    }
    check(crashes == 0, || format!("{crashes} decoder panics"))?;
    Ok(format!(
        "10000 round-trips, {flips} single-bit flips rejected, 1000000 random decodes without panic"
    ))
}

const INVALID: [(&str, usize, usize); 20] = [
    ("scenario \"x\"\nat 5s eyes shut\nend 10s", 2, 12),
    ("at 5s eyes open\nend 10s", 1, 1),
    (
        "scenario \"x\"\nat 5s eyes closed\nat 4s eyes open\nend 10s",
        3,
        4,
    ),
    (
        "scenario \"x\"\nat 5s eyes closed\nat 5s eyes open\nend 10s",
        3,
        7,
    ),
    ("scenario \"x\"\nend 10s\nend 11s", 3, 1),
    ("scenario \"x\"\nat 1s eyes open", 2, 1),
    ("scenario \"x\"\nat 12s eyes open\nend 10s", 3, 5),
    ("scenario \"x\"\nend 10s\nat 11s eyes open", 3, 1),
    ("scenario \"x\"\nat 1s alcohol 1200ppm\nend 2s", 2, 15),
    ("scenario \"x\"\nat 1s alcohol 12\nend 2s", 2, 15),
    ("scenario \"x\"\nat 1s blink\nend 2s", 2, 7),
    ("scenario \"x\"\nfoo 1s\nend 2s", 2, 1),
    ("scenario x\nend 2s", 1, 10),
    ("scenario \"x\nend 2s", 1, 10),
    ("scenario \"x\"\nat -1s eyes open\nend 2s", 2, 4),
    ("scenario \"x\"\nat 1.5.2s eyes open\nend 2s", 2, 4),
    (
        "scenario \"x\"\nat 1s noise seed 3 jitter 1 flip 1.5\nend 2s",
        2,
        34,
    ),
    ("scenario \"x\"\nat 1s eyes open extra\nend 2s", 2, 17),
    ("scenario \"x\"\nscenario \"y\"\nend 2s", 2, 1),
    ("scenario \"x\"\nat 1s eyes\nend 2s", 2, 11),
];

fn mutate(rng: &mut ChaCha8Rng, seeds: &[Vec<u8>]) -> Vec<u8> {
    const TOKENS: [&str; 14] = [
        "at ",
        "end ",
        "eyes ",
        "closed",
        "open",
        "alcohol ",
        "ppm",
        "s ",
        "\"",
        "#",
        "\n",
        "noise seed 1 jitter 2 flip 0.5",
        "1e9",
        "999999999999999999999",
    ];
    let mut buf = if rng.random_bool(0.1) {
        (0..rng.random_range(0..200))
            .map(|_| rng.random())
            .collect()
    } else {
        seeds[rng.random_range(0..seeds.len())].clone()
    };
    for _ in 0..rng.random_range(1..8) {
        let pos = if buf.is_empty() {
            0
        } else {
            rng.random_range(0..=buf.len())
        };
        match rng.random_range(0..5) {
            0 if !buf.is_empty() => {
                let i = pos.min(buf.len() - 1);
                buf[i] ^= 1 << rng.random_range(0..8);
            }
            1 if pos < buf.len() => {
                let end = (pos + rng.random_range(1..10)).min(buf.len());
                buf.drain(pos..end);
            }
            2 => {
                let t = TOKENS[rng.random_range(0..TOKENS.len())];
                buf.splice(pos..pos, t.bytes());
            }
            3 => buf.insert(pos, rng.random()),
            _ => {
                let digit = b'0' + rng.random_range(0..10u8);
                buf.insert(pos, digit);
            }
        }
    }
    buf
}

/// Feeds mutated scripts to the parser for `budget`. Returns (inputs, accepted, failures).
fn fuzz_parser(budget: Duration, seeds: Vec<Vec<u8>>) -> (u64, u64, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let started = Instant::now();
    let (mut inputs, mut accepted) = (0u64, 0u64);
    let mut failures = Vec::new();
    while started.elapsed() < budget && failures.len() < 5 {
        for _ in 0..64 {
            let input = mutate(&mut rng, &seeds);
            inputs += 1;
            let result = catch_unwind(AssertUnwindSafe(|| match parse_scenario_bytes(&input) {
                Ok(p) => {
                    let canon = format_scenario(&p.script);
                    let again = parse_scenario(&canon).map_err(|d| format!("{d:?}"))?;
                    if again.script != p.script {
                        return Err("format did not round-trip".to_string());
                    }
                    Ok(true)
                }
                Err(d) if d.is_empty() => Err("rejected without a diagnostic".into()),
                Err(d) if d.iter().any(|d| d.line == 0 || d.column == 0) => {
                    Err(format!("unpositioned diagnostic {d:?}"))
                }
                Err(_) => Ok(false),
            }));
            match result {
                Ok(Ok(true)) => accepted += 1,
                Ok(Ok(false)) => {}
                Ok(Err(msg)) => {
                    failures.push(format!("{msg}: {:?}", String::from_utf8_lossy(&input)))
                }
                Err(_) => failures.push(format!("panic on {:?}", String::from_utf8_lossy(&input))),
            }
        }
    }
    (inputs, accepted, failures)
}

fn c8_parser(fuzz: thread::JoinHandle<(u64, u64, Vec<String>)>) -> Outcome {
    let files = corpus();
    for path in &files {
        let script = load(path);
        let canon = format_scenario(&script);
        let again = parse_scenario(&canon)
            .map_err(|d| format!("{}: canonical form rejected: {d:?}", path.display()))?;
        check(again.script == script, || {
            format!("{} does not round-trip", path.display())
        })?;
        check(format_scenario(&again.script) == canon, || {
            format!("{}: format not idempotent", path.display())
        })?;
    }
    for (i, (src, line, column)) in INVALID.iter().enumerate() {
        let diags = match parse_scenario(src) {
            Ok(_) => return Err(format!("invalid input #{i} accepted: {src:?}")),
            Err(d) => d,
        };
        let first = &diags[0];
        check(first.line == *line && first.column == *column, || {
            format!("invalid input #{i} {src:?}: expected {line}:{column}, got {first}")
        })?;
    }
    let (inputs, accepted, failures) = fuzz
        .join()
        .map_err(|_| "fuzz thread panicked".to_string())?;
    check(failures.is_empty(), || failures.join("\n"))?;
    Ok(format!(
        "{} corpus files round-trip, {} invalid inputs positioned, fuzz: {inputs} inputs ({accepted} accepted) in 60 s, no crash",
        files.len(),
        INVALID.len()
    ))
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let drunk = root().join("scenarios/drunk.vgl");
    let mut traces = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_vigil"))
            .arg("run")
            .arg(&drunk)
            .args(["--seed", "42", "--trace"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })?;
        traces.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    check(!traces[0].is_empty() && traces[0] == traces[1], || {
        "trace files differ".into()
    })?;
    Ok(format!("two runs, {} identical bytes", traces[0].len()))
}

fn main() {
    let seeds: Vec<Vec<u8>> = corpus()
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .chain(INVALID.iter().map(|(s, _, _)| s.as_bytes().to_vec()))
        .collect();
    let fuzz = thread::spawn(move || fuzz_parser(Duration::from_secs(60), seeds));

    let criteria: [Criterion; 9] = [
        ("escalation timing", Box::new(c1_escalation)),
        ("alcohol path", Box::new(c2_alcohol)),
        ("stop window", Box::new(c3_stop_window)),
        ("de-escalation", Box::new(c4_deescalation)),
        ("oracle equivalence", Box::new(c5_oracle)),
        ("channel metrics", Box::new(c6_metrics)),
        ("codec robustness", Box::new(c7_codec)),
        ("parser", Box::new(move || c8_parser(fuzz))),
        ("determinism", Box::new(c9_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

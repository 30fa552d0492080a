use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use vigil_core::channel::{compute_metrics, ChannelConfig};
use vigil_core::scenario::{parse_scenario_bytes, Parsed};
use vigil_core::sim::{
    compare_traces, export_trace, read_transcript_jsonl, write_transcript_jsonl, ExportFormat,
    ImportError, RecordData, SimRun,
};
use vigil_core::{oracle_run, run as simulate, ControllerConfig, PhaseKind};

use crate::{overrides, EXIT_DIVERGENCE, EXIT_INPUT};

pub struct RunArgs {
    pub file: PathBuf,
    pub trace: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub seed: Option<u64>,
    pub oracle: bool,
    pub sets: Vec<String>,
}

fn read_input(path: &Path) -> Result<Vec<u8>, u8> {
    fs::read(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            eprintln!("vigil: {}: file not found", path.display());
        } else {
            eprintln!("vigil: {}: {e}", path.display());
        }
        EXIT_INPUT
    })
}

fn load_script(path: &Path) -> Result<Parsed, u8> {
    let bytes = read_input(path)?;
    match parse_scenario_bytes(&bytes) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                eprintln!("{}:{w}", path.display());
            }
            Ok(parsed)
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{}:{d}", path.display());
            }
            Err(EXIT_INPUT)
        }
    }
}

fn write_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> io::Result<()>) -> Result<(), u8> {
    File::create(path)
        .and_then(|file| f(BufWriter::new(file)))
        .map_err(|e| {
            eprintln!("vigil: {}: {e}", path.display());
            1
        })
}

pub fn run(args: RunArgs) -> u8 {
    match run_inner(args) {
        Ok(()) => 0,
        Err(code) => code,
    }
}

fn run_inner(args: RunArgs) -> Result<(), u8> {
    let parsed = load_script(&args.file)?;
    let mut controller = ControllerConfig::default();
    let mut channel = ChannelConfig::default();
    if let Some(seed) = args.seed {
        channel.seed = seed;
    }
    overrides::apply(&args.sets, &mut controller, &mut channel).map_err(|e| {
        eprintln!("vigil: {e}");
        EXIT_INPUT
    })?;

    let script = &parsed.script;
    info!("running `{}` to {} s", script.name, script.end_at);
    let result = simulate(script, controller.clone(), channel.clone()).map_err(|e| {
        eprintln!("vigil: {e}");
        1
    })?;

    if let Some(path) = &args.trace {
        write_file(path, |w| {
            export_trace(&result.trace, ExportFormat::Jsonl, w)
                .map(|_| ())
                .map_err(|e| e.source)
        })?;
    }
    if let Some(path) = &args.csv {
        write_file(path, |w| {
            export_trace(&result.trace, ExportFormat::Csv, w)
                .map(|_| ())
                .map_err(|e| e.source)
        })?;
    }
    if let Some(path) = &args.transcript {
        write_file(path, |w| write_transcript_jsonl(&result.transcript, w))?;
    }
    print_summary(&script.name, &result);

    if args.oracle {
        let reference = oracle_run(script, controller, channel).map_err(|e| {
            eprintln!("vigil: oracle: {e}");
            1
        })?;
        if let Err(d) = compare_traces(&result.trace, &reference.trace) {
            eprintln!("vigil: engine and oracle disagree: {d}");
            return Err(EXIT_DIVERGENCE);
        }
        println!("oracle: {} records agree", reference.trace.len());
    }
    Ok(())
}

fn print_summary(name: &str, r: &SimRun) {
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "scenario: {name}");
    for rec in r.trace.iter() {
        if let RecordData::PhaseChange { from, to } = rec.data {
            let _ = writeln!(out, "{:>9.3} s  {from} -> {to}", rec.t_ms as f64 / 1000.0);
        }
    }
    let alerts = r.trace.alerts().count();
    let delivered = r
        .trace
        .iter()
        .filter(|rec| matches!(rec.data, RecordData::AlertDelivered { .. }))
        .count();
    let _ = writeln!(out, "alerts: {alerts} sent, {delivered} delivered");
    let _ = writeln!(
        out,
        "final: {} at {:.3} s",
        r.final_phase,
        r.ended_at as f64 / 1000.0
    );
    if r.final_phase == PhaseKind::Stopped {
        let _ = writeln!(out, "vehicle stopped");
    }
}

pub fn check(file: &Path, fmt: bool) -> u8 {
    match load_script(file) {
        Ok(parsed) => {
            if fmt {
                print!("{}", vigil_core::scenario::format_scenario(&parsed.script));
            }
            0
        }
        Err(code) => code,
    }
}

pub fn metrics(path: &Path) -> u8 {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            eprintln!("vigil: {}: file not found", path.display());
            return EXIT_INPUT;
        }
        Err(e) => {
            eprintln!("vigil: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let entries = match read_transcript_jsonl(BufReader::new(file)) {
        Ok(e) => e,
        Err(ImportError::Parse { line, message }) => {
            eprintln!("{}:{line}: {message}", path.display());
            return EXIT_INPUT;
        }
        Err(ImportError::Io(e)) => {
            eprintln!("vigil: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let m = match compute_metrics(&entries) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let ms = |v: Option<f64>| v.map_or("n/a".to_string(), |d| format!("{d} ms"));
    println!("messages_sent: {}", m.messages_sent);
    println!("messages_delivered: {}", m.messages_delivered);
    println!("messages_lost: {}", m.messages_lost);
    println!("bytes_delivered: {}", m.bytes_delivered);
    println!("elapsed: {} s", m.elapsed);
    match m.measured_data_rate {
        Some(rate) => println!("measured_data_rate: {rate} B/s"),
        None => println!("measured_data_rate: undefined (no elapsed time)"),
    }
    println!("delay_p50: {}", ms(m.delay_percentile(50.0)));
    println!("delay_p95: {}", ms(m.delay_percentile(95.0)));
    println!("delay_max: {}", ms(m.max_delay()));
    println!("errors_total: {}", m.errors_total);
    println!("errors_corrected: {}", m.errors_corrected);
    if m.ec_ratio_vacuous {
        println!("ec_ratio: {} (no errors)", m.ec_ratio);
    } else {
        println!("ec_ratio: {}", m.ec_ratio);
    }
    0
}

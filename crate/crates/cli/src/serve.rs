//! Live mode. One task owns the simulator and advances it at wall-clock
//! pace; the WebSocket side only ever talks to it through two queues,
//! inputs in and JSON updates out.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use log::{debug, error, info, warn};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, watch};
use vigil_core::channel::ChannelConfig;
use vigil_core::live::{ClientMessage, ServerMessage};
use vigil_core::sensors::GroundTruth;
use vigil_core::sim::{RecordData, Simulator};
use vigil_core::time::Millis;
use vigil_core::ControllerConfig;

use crate::{overrides, EXIT_INPUT};

const ENGINE_TICK: Duration = Duration::from_millis(10);
const STATE_PERIOD: Duration = Duration::from_millis(100);
/// Per-client backlog; a slow client loses the oldest updates.
const UPDATE_BACKLOG: usize = 32;

pub fn serve(port: u16, pace: f64, sets: &[String]) -> u8 {
    if !(pace.is_finite() && pace > 0.0) {
        eprintln!("vigil: --pace must be a positive number, got {pace}");
        return EXIT_INPUT;
    }
    let mut controller = ControllerConfig::default();
    let mut channel = ChannelConfig::default();
    if let Err(e) = overrides::apply(sets, &mut controller, &mut channel) {
        eprintln!("vigil: {e}");
        return EXIT_INPUT;
    }
    let rt = match tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
    {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("vigil: {e}");
            return 1;
        }
    };
    rt.block_on(serve_async(port, pace, controller, channel))
}

#[derive(Clone)]
struct AppState {
    inputs: mpsc::Sender<ClientMessage>,
    updates: broadcast::Sender<String>,
    busy: Arc<AtomicBool>,
    shutdown: watch::Receiver<bool>,
}

/// Marks the single console slot as taken until dropped.
struct Slot(Arc<AtomicBool>);

impl Drop for Slot {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

async fn serve_async(
    port: u16,
    pace: f64,
    controller: ControllerConfig,
    channel: ChannelConfig,
) -> u8 {
    let listener = match TcpListener::bind(("127.0.0.1", port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("vigil: cannot listen on port {port}: {e}");
            return EXIT_INPUT;
        }
    };
    let sim = match Simulator::new(controller, channel) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("vigil: {e}");
            return EXIT_INPUT;
        }
    };
    match listener.local_addr() {
        Ok(addr) => println!("listening on ws://{addr}/ws"),
        Err(e) => warn!("local address unavailable: {e}"),
    }

    let (input_tx, input_rx) = mpsc::channel(64);
    let (update_tx, _) = broadcast::channel(UPDATE_BACKLOG);
    let (stop_tx, stop_rx) = watch::channel(false);
    let engine = tokio::spawn(engine_loop(
        sim,
        pace,
        input_rx,
        update_tx.clone(),
        stop_rx.clone(),
    ));

    let state = AppState {
        inputs: input_tx,
        updates: update_tx,
        busy: Arc::new(AtomicBool::new(false)),
        shutdown: stop_rx,
    };
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .with_state(state);
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            let _ = tokio::signal::ctrl_c().await;
            info!("interrupt received, shutting down");
            let _ = stop_tx.send(true);
        })
        .await;
    let _ = engine.await;
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vigil: {e}");
            1
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    if state.busy.swap(true, Ordering::SeqCst) {
        return (StatusCode::CONFLICT, "a console is already connected").into_response();
    }
    let slot = Slot(state.busy.clone());
    ws.on_upgrade(move |socket| client(socket, state, slot))
}

async fn client(socket: WebSocket, state: AppState, _slot: Slot) {
    info!("console connected");
    let (mut sink, mut stream) = socket.split();
    let mut updates = state.updates.subscribe();
    let mut shutdown = state.shutdown.clone();

    let outbound = async {
        loop {
            match updates.recv().await {
                Ok(text) => {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    debug!("slow console, dropped {n} updates");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
        let _ = sink.close().await;
    };
    let inbound = async {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(text) => match ClientMessage::parse(&text) {
                    Ok(m) => {
                        if state.inputs.send(m).await.is_err() {
                            break;
                        }
                    }
                    Err(e) => warn!("ignoring console message: {e}"),
                },
                Message::Close(_) => break,
                _ => {}
            }
        }
    };
    tokio::select! {
        _ = outbound => {}
        _ = inbound => {}
        _ = shutdown.wait_for(|stop| *stop) => {}
    }
    info!("console disconnected");
}

async fn engine_loop(
    mut sim: Simulator,
    pace: f64,
    mut inputs: mpsc::Receiver<ClientMessage>,
    updates: broadcast::Sender<String>,
    mut stop: watch::Receiver<bool>,
) {
    let start = Instant::now();
    let now = || (start.elapsed().as_secs_f64() * 1000.0 * pace) as Millis;
    let mut tick = tokio::time::interval(ENGINE_TICK);
    let mut state_tick = tokio::time::interval(STATE_PERIOD);
    let mut truth = GroundTruth::default();
    let mut details: HashMap<u16, String> = HashMap::new();

    loop {
        let step = tokio::select! {
            _ = tick.tick() => sim.advance_to(now()),
            _ = state_tick.tick() => {
                let r = sim.advance_to(now());
                // no receivers is fine: nobody is watching
                let _ = updates.send(ServerMessage::State(sim.snapshot()).to_json());
                r
            }
            Some(msg) = inputs.recv() => apply_input(&mut sim, &mut truth, msg, now()),
            _ = stop.wait_for(|s| *s) => break,
        };
        if let Err(e) = step {
            error!("live engine stopped: {e}");
            break;
        }
        for rec in sim.drain_records() {
            match rec.data {
                RecordData::AlertSent { seq, detail, .. } => {
                    details.insert(seq, detail);
                }
                RecordData::AlertDelivered { seq, code, .. } => {
                    let detail = details.remove(&seq).unwrap_or_default();
                    let _ = updates.send(ServerMessage::Alert { seq, code, detail }.to_json());
                }
                RecordData::AlertLost { seq, code } => {
                    details.remove(&seq);
                    debug!("alert {seq} ({code}) lost on the link");
                }
                RecordData::PhaseChange { from, to } => info!("t={} ms {from} -> {to}", rec.t_ms),
                _ => {}
            }
        }
    }
}

fn apply_input(
    sim: &mut Simulator,
    truth: &mut GroundTruth,
    msg: ClientMessage,
    t: Millis,
) -> Result<(), vigil_core::sim::SimError> {
    sim.advance_to(t)?;
    match msg {
        ClientMessage::Reset => {
            if let Err(e) = sim.reset() {
                warn!("reset ignored: {e}");
            }
        }
        input @ ClientMessage::Input { .. } => {
            *truth = input.apply(truth);
            sim.set_truth(sim.clock(), *truth)?;
        }
    }
    Ok(())
}

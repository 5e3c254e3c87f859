//! WebSocket transport for live trials.
//!
//! `GET /runs` lists run directories next to the served run. `GET /ws`
//! upgrades to the trial protocol: JSON messages tagged by `type`. One
//! client at a time; a second connection gets an error and is closed.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use clap::Args;
use serde_json::json;
use tokio::sync::watch;
use tokio::time::MissedTickBehavior;

use predprey::coevo::Role;
use predprey::live::{ClientMessage, ServerMessage, Session, TrialRecord};
use predprey::run::{list_runs, RunDir};
use predprey::Error;

use crate::{CliError, CliResult};

#[derive(Args)]
pub struct ServeArgs {
    /// Run directory holding the genomes to play against.
    #[arg(long)]
    run: PathBuf,
    /// Generation whose best controllers are loaded.
    #[arg(long)]
    generation: usize,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Milliseconds between ticks (default: the arena's dt).
    #[arg(long)]
    tick_ms: Option<u64>,
    /// Advance exactly one tick per control message instead of on a timer.
    #[arg(long)]
    lockstep: bool,
    /// Directory listed by GET /runs (default: the run's parent).
    #[arg(long)]
    runs_root: Option<PathBuf>,
    /// Where finished trials are appended (default: <run>/trials.jsonl).
    #[arg(long)]
    trials_log: Option<PathBuf>,
}

struct AppState {
    session: tokio::sync::Mutex<Session>,
    connected: AtomicBool,
    runs_root: PathBuf,
    tick: Duration,
    lockstep: bool,
    trials: Mutex<BufWriter<File>>,
    shutdown: watch::Receiver<bool>,
}

impl AppState {
    fn log_trial(&self, record: &TrialRecord) {
        let mut log = self.trials.lock().expect("trial log lock");
        let line = serde_json::to_string(record).expect("record serializes");
        if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            log::error!("writing trial log: {e}");
        }
    }
}

async fn runs(State(state): State<Arc<AppState>>) -> Response {
    match list_runs(&state.runs_root) {
        Ok(list) => Json(json!({ "runs": list })).into_response(),
        Err(e) => (
            axum::http::StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({ "type": "error", "code": e.code(), "message": e.to_string() })),
        )
            .into_response(),
    }
}

async fn ws(upgrade: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    upgrade.on_upgrade(move |socket| client(socket, state))
}

async fn send(socket: &mut WebSocket, state: &AppState, msgs: Vec<ServerMessage>) -> bool {
    for m in msgs {
        if let ServerMessage::TrialEnd(record) = &m {
            state.log_trial(record);
        }
        let text = serde_json::to_string(&m).expect("message serializes");
        if socket.send(Message::Text(text.into())).await.is_err() {
            return false;
        }
    }
    true
}

fn protocol_error(message: String) -> Vec<ServerMessage> {
    vec![ServerMessage::error(&Error::Protocol(message))]
}

async fn on_text(state: &AppState, text: &str) -> Vec<ServerMessage> {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return protocol_error(e.to_string()),
    };
    let mut session = state.session.lock().await;
    match msg {
        ClientMessage::Control { trial_id, keys, .. } => match session.control(trial_id, keys) {
            Ok(true) if state.lockstep => session.tick(),
            Ok(_) => Vec::new(),
            Err(e) => vec![ServerMessage::error(&e)],
        },
        other => session.handle(other),
    }
}

async fn client(mut socket: WebSocket, state: Arc<AppState>) {
    if state.connected.swap(true, Ordering::SeqCst) {
        let busy = ServerMessage::Error {
            code: "E_BUSY".into(),
            message: "another client is connected".into(),
        };
        let _ = socket.send(Message::Text(serde_json::to_string(&busy).unwrap().into())).await;
        let _ = socket.send(Message::Close(None)).await;
        return;
    }
    let mut ticker = tokio::time::interval(state.tick);
    // a late tick is delayed, never doubled up: each tick is exactly dt of play
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut shutdown = state.shutdown.clone();
    loop {
        let out = tokio::select! {
            _ = ticker.tick(), if !state.lockstep => state.session.lock().await.tick(),
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => on_text(&state, text.as_str()).await,
                Some(Ok(Message::Binary(_))) => protocol_error("binary frames are not supported".into()),
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => Vec::new(),
            },
            _ = shutdown.changed() => break,
        };
        if !send(&mut socket, &state, out).await {
            break;
        }
    }
    state.connected.store(false, Ordering::SeqCst);
}

async fn shutdown_signal(tx: watch::Sender<bool>) {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    let _ = tx.send(true);
}

pub fn serve(args: ServeArgs) -> CliResult<()> {
    let dir = RunDir::new(&args.run);
    let config = dir.read_config()?;
    let trio = dir.load_trio(args.generation)?;
    let prey = dir.load_genome(args.generation, Role::Prey)?;
    let session = Session::new(config.arena.clone(), config.camera, args.generation, trio.each_ref(), &prey)?;

    let log_path = args.trials_log.unwrap_or_else(|| args.run.join("trials.jsonl"));
    let log_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| Error::Io { context: format!("opening {}", log_path.display()), source: e })?;
    let runs_root = args
        .runs_root
        .or_else(|| args.run.parent().map(PathBuf::from))
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."));
    let tick = Duration::from_millis(args.tick_ms.unwrap_or((config.arena.dt * 1000.0).round() as u64).max(1));

    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Error::Io { context: "starting runtime".into(), source: e })?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                CliError::PortInUse(addr.clone())
            } else {
                CliError::Core(Error::Io { context: format!("binding {addr}"), source: e })
            }
        })?;
        let local = listener
            .local_addr()
            .map_err(|e| Error::Io { context: "reading bound address".into(), source: e })?;

        let (tx, rx) = watch::channel(false);
        let state = Arc::new(AppState {
            session: tokio::sync::Mutex::new(session),
            connected: AtomicBool::new(false),
            runs_root,
            tick,
            lockstep: args.lockstep,
            trials: Mutex::new(BufWriter::new(log_file)),
            shutdown: rx.clone(),
        });
        let app = Router::new()
            .route("/runs", get(runs))
            .route("/ws", get(ws))
            .with_state(state.clone());

        println!("listening on http://{local} (generation {})", args.generation);
        let _ = std::io::stdout().flush();

        let mut done = rx;
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                shutdown_signal(tx).await;
                let _ = done.changed().await;
            })
            .await
            .map_err(|e| Error::Io { context: "serving".into(), source: e })?;

        let mut log = state.trials.lock().expect("trial log lock");
        log.flush().map_err(|e| Error::Io { context: format!("flushing {}", log_path.display()), source: e })?;
        println!("shutdown: trial log flushed to {}", log_path.display());
        Ok(())
    })
}

//! HTTP endpoints for the browser playground.
//!
//! * `GET /spec` returns the interface spec.
//! * `POST /log` validates one interaction event and appends it to the log
//!   file, answering with the file's line count.
//! * `POST /query` applies `{relationship, parameters}` to the live graph,
//!   compiles the resulting batch and, when a database is configured, runs
//!   it and returns the rows.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use vizbench_core::compiler::compile_interaction;
use vizbench_core::spec::{parse_interaction_log, InteractionEvent, InterfaceSpec};
use vizbench_core::{CompileOptions, InterfaceGraph};
use vizbench_exec::{Connection, Driver};

struct LogSink {
    path: PathBuf,
    lines: usize,
    last_timestamp: Option<i64>,
}

pub struct ServerState {
    iface: InterfaceSpec,
    sink: Mutex<LogSink>,
    graph: Mutex<InterfaceGraph>,
    conn: Option<Mutex<Box<dyn Connection>>>,
    options: CompileOptions,
}

impl ServerState {
    /// Lines already in `log` count towards the reported total, and new
    /// events may not predate the last one.
    pub fn new(
        iface: InterfaceSpec,
        log: &Path,
        driver: Option<Box<dyn Driver>>,
        options: CompileOptions,
    ) -> Result<Arc<ServerState>, String> {
        let existing = std::fs::read_to_string(log).unwrap_or_default();
        let events = parse_interaction_log(&existing, &iface).map_err(|e| format!("{}: {e}", log.display()))?;
        let conn = match driver {
            Some(d) => Some(Mutex::new(d.connect().map_err(|e| e.to_string())?)),
            None => None,
        };
        Ok(Arc::new(ServerState {
            graph: Mutex::new(InterfaceGraph::build(&iface)),
            sink: Mutex::new(LogSink {
                path: log.to_path_buf(),
                lines: events.len(),
                last_timestamp: events.last().map(|e| e.timestamp),
            }),
            iface,
            conn,
            options,
        }))
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

/// Structural and semantic validation of one event, as a one-line log.
fn check_event(iface: &InterfaceSpec, body: &Value) -> Result<InteractionEvent, String> {
    let event = InteractionEvent::from_json(body).map_err(|e| e.to_string())?;
    let mut parsed = parse_interaction_log(&event.to_json_line(), iface).map_err(|e| e.to_string())?;
    Ok(parsed.remove(0))
}

async fn get_spec(State(state): State<Arc<ServerState>>) -> Response {
    let spec: Value = serde_json::from_str(&state.iface.to_json()).expect("spec is JSON");
    Json(spec).into_response()
}

async fn post_log(State(state): State<Arc<ServerState>>, Json(body): Json<Value>) -> Response {
    let event = match check_event(&state.iface, &body) {
        Ok(e) => e,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let mut sink = state.sink.lock().unwrap();
    if let Some(last) = sink.last_timestamp.filter(|&t| event.timestamp < t) {
        return error(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("timestamp {} precedes {last}", event.timestamp),
        );
    }
    let appended = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&sink.path)
        .and_then(|mut f| writeln!(f, "{}", event.to_json_line()).and_then(|_| f.flush()));
    if let Err(e) = appended {
        return error(StatusCode::INTERNAL_SERVER_ERROR, format!("appending to log: {e}"));
    }
    sink.lines += 1;
    sink.last_timestamp = Some(event.timestamp);
    Json(json!({ "lines": sink.lines })).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    relationship: String,
    parameters: Value,
    #[serde(default)]
    timestamp: Option<i64>,
}

fn now_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

fn run_query(state: &ServerState, req: QueryRequest) -> Response {
    let body = json!({
        "relationship": req.relationship,
        "timestamp": req.timestamp.unwrap_or_else(now_ms),
        "parameters": req.parameters,
    });
    let event = match check_event(&state.iface, &body) {
        Ok(e) => e,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let Some(conn) = &state.conn else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no database configured; start serve with --driver");
    };
    let batch = {
        let mut graph = state.graph.lock().unwrap();
        let vizbench_core::spec::Action::Data { relationship, parameters } = &event.action else {
            return error(StatusCode::UNPROCESSABLE_ENTITY, "only data interactions can be queried");
        };
        let dirty = match graph.apply_data_manipulation(relationship, parameters) {
            Ok(d) => d,
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        };
        match compile_interaction(&graph, &event, &dirty, &state.options) {
            Ok(b) => b,
            Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        }
    };
    let mut conn = conn.lock().unwrap();
    let mut queries = Vec::with_capacity(batch.queries.len());
    for q in &batch.queries {
        let rs = match conn.execute(&q.sql) {
            Ok(rs) => rs,
            Err(e) => return error(StatusCode::BAD_GATEWAY, format!("{}: {e}", q.node)),
        };
        queries.push(json!({
            "node": q.node,
            "sql": q.sql,
            "load_group": q.load_group,
            "detail_level": q.detail_level,
            "columns": rs.columns,
            "rows": rs.rows,
        }));
    }
    Json(json!({ "batches": [{ "timestamp": batch.timestamp, "queries": queries }] })).into_response()
}

async fn post_query(State(state): State<Arc<ServerState>>, Json(req): Json<QueryRequest>) -> Response {
    match tokio::task::spawn_blocking(move || run_query(&state, req)).await {
        Ok(r) => r,
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/spec", get(get_spec))
        .route("/log", post(post_log))
        .route("/query", post(post_query))
        .with_state(state)
}

/// Serve until the process is stopped.
pub fn serve_blocking(listener: std::net::TcpListener, state: Arc<ServerState>) -> Result<(), String> {
    listener.set_nonblocking(true).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(|e| e.to_string())?;
        axum::serve(listener, router(state)).await.map_err(|e| e.to_string())
    })
}

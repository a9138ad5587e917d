use std::net::TcpListener;

use serde_json::{json, Value};
use tempfile::TempDir;
use ureq::Agent;
use vizbench_core::spec::parse_interaction_log;
use vizbench_core::CompileOptions;
use vizbench_exec::{load_dataset, open_driver, DriverConfig, DriverKind};
use vizbench_testkit::fixtures::{covid_database, covid_interface, covid_table, COVID_CSV};
use vizbench_testkit::oracle::node_result;

struct Server {
    base: String,
    log: std::path::PathBuf,
    _dir: TempDir,
}

fn start(with_db: bool) -> Server {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("session.jsonl");
    let driver = with_db.then(|| {
        let path = dir.path().join("covid.db");
        let d = open_driver(&DriverConfig::new(DriverKind::Sqlite, path.to_str().unwrap())).unwrap();
        let mut c = d.connect().unwrap();
        load_dataset(c.as_mut(), &covid_database(), "covid", COVID_CSV.as_bytes()).unwrap();
        d
    });
    let state = vizbench_cli::serve::ServerState::new(covid_interface(), &log, driver, CompileOptions::default()).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || vizbench_cli::serve::serve_blocking(listener, state));
    Server { base, log, _dir: dir }
}

fn agent() -> Agent {
    Agent::config_builder().http_status_as_error(false).build().into()
}

fn post(s: &Server, path: &str, body: Value) -> (u16, Value) {
    let mut r = agent().post(&format!("{}{path}", s.base)).send_json(&body).unwrap();
    (r.status().as_u16(), r.body_mut().read_json().unwrap())
}

fn click(metric: &str, ts: i64) -> Value {
    json!({"relationship": "metric_select", "timestamp": ts, "parameters": {"field": "metric", "equal": metric}})
}

#[test]
fn get_spec_returns_the_interface() {
    let s = start(false);
    let mut r = agent().get(&format!("{}/spec", s.base)).call().unwrap();
    assert_eq!(r.status().as_u16(), 200);
    let spec: Value = r.body_mut().read_json().unwrap();
    let names: Vec<&str> = spec["visualizations"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["text_box", "line_graph", "heat_map"]);
    assert_eq!(spec["widgets"][0]["widget_class"], "radio_button");
}

#[test]
fn post_log_appends_valid_events_and_counts_lines() {
    let s = start(false);
    assert_eq!(post(&s, "/log", click("deaths", 1_000)), (200, json!({"lines": 1})));
    assert_eq!(post(&s, "/log", click("cases", 2_000)), (200, json!({"lines": 2})));

    let (status, body) = post(&s, "/log", click("cases", 1_500));
    assert_eq!(status, 422, "out-of-order timestamp: {body}");
    let (status, _) = post(&s, "/log", json!({"relationship": "nope", "timestamp": 3_000, "parameters": {"field": "metric", "equal": "x"}}));
    assert_eq!(status, 422);

    let text = std::fs::read_to_string(&s.log).unwrap();
    let events = parse_interaction_log(&text, &covid_interface()).unwrap();
    assert_eq!(events.len(), 2);
    assert_eq!(text.lines().next().unwrap(), click("deaths", 1_000).to_string());
}

#[test]
fn post_query_returns_oracle_rows_for_both_targets() {
    let s = start(true);
    let (status, body) = post(&s, "/query", json!({"relationship": "metric_select", "parameters": {"field": "metric", "equal": "deaths"}}));
    assert_eq!(status, 200, "{body}");
    let queries = body["batches"][0]["queries"].as_array().unwrap();
    let nodes: Vec<&str> = queries.iter().map(|q| q["node"].as_str().unwrap()).collect();
    assert_eq!(nodes, ["line_graph", "heat_map"]);

    let mut graph = vizbench_core::InterfaceGraph::build(&covid_interface());
    let p = vizbench_core::spec::Predicate::from_json(&json!({"field": "metric", "equal": "deaths"}), "$").unwrap();
    graph.apply_data_manipulation("metric_select", &p).unwrap();
    let table = covid_table();
    for q in queries {
        let expected = node_result(&table, graph.node(q["node"].as_str().unwrap()).unwrap(), 0);
        let got: vizbench_core::value::ResultSet =
            serde_json::from_value(json!({"columns": q["columns"], "rows": q["rows"]})).unwrap();
        assert!(expected.same_multiset(&got, 1e-9), "{q}");
    }
}

#[test]
fn post_query_without_database_is_unavailable() {
    let s = start(false);
    let (status, body) = post(&s, "/query", json!({"relationship": "metric_select", "parameters": {"field": "metric", "equal": "cases"}}));
    assert_eq!(status, 503, "{body}");
    let (status, _) = post(&s, "/query", json!({"relationship": "missing", "parameters": {"field": "metric", "equal": "cases"}}));
    assert_eq!(status, 422);
}

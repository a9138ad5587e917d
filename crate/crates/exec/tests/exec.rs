use std::time::Instant;

use rand::Rng;
use tempfile::TempDir;
use vizbench_core::compiler::{compile_node_at_level, generate_workload, CompileError};
use vizbench_core::report::QueryStatus;
use vizbench_core::simulate::{schedule_offsets, Domain, Speed};
use vizbench_core::spec::{Action, AttributeRef};
use vizbench_core::InterfaceGraph;
use vizbench_exec::{
    load_dataset, open_driver, run_workload, sample_domains, Driver, DriverConfig, DriverKind, ExecError, LoadError,
    RunOptions, DEFAULT_TICK_MS,
};
use vizbench_testkit::fixtures::{covid_clicks, covid_database, covid_interface, covid_table, COVID_CSV};
use vizbench_testkit::oracle::node_result;
use vizbench_testkit::random::{random_events, random_interface, random_table, TABLE};
use vizbench_testkit::rng;

fn engines() -> Vec<DriverKind> {
    let mut out = vec![DriverKind::Sqlite];
    if cfg!(feature = "duckdb") {
        out.push(DriverKind::Duckdb);
    }
    out
}

fn driver(kind: DriverKind, dir: &TempDir) -> Box<dyn Driver> {
    let path = dir.path().join(format!("bench.{kind}"));
    open_driver(&DriverConfig::new(kind, path.to_str().unwrap())).unwrap()
}

fn covid_driver(kind: DriverKind, dir: &TempDir) -> Box<dyn Driver> {
    let d = driver(kind, dir);
    let mut conn = d.connect().unwrap();
    assert_eq!(load_dataset(conn.as_mut(), &covid_database(), "covid", COVID_CSV.as_bytes()).unwrap(), 50);
    conn.close().unwrap();
    d
}

#[test]
fn covid_run_returns_oracle_row_counts() {
    let iface = covid_interface();
    let mut graph = InterfaceGraph::build(&iface);
    let w = generate_workload(&mut graph, &covid_clicks()).unwrap();
    let ts: Vec<i64> = w.batches.iter().map(|b| b.timestamp).collect();
    let offsets = schedule_offsets(&ts, Speed::Stress);

    // Expected rows per batch from the oracle, replaying filters by hand.
    let table = covid_table();
    let mut oracle_graph = InterfaceGraph::build(&iface);
    let mut expected = Vec::new();
    for e in covid_clicks() {
        let Action::Data { relationship, parameters } = &e.action else { unreachable!() };
        let dirty = oracle_graph.apply_data_manipulation(relationship, parameters).unwrap();
        for n in &dirty.nodes {
            expected.push(node_result(&table, oracle_graph.node(n).unwrap(), 0).rows.len());
        }
    }
    assert_eq!(expected, [5, 5, 5, 5, 5, 5]);

    for kind in engines() {
        let dir = TempDir::new().unwrap();
        let d = covid_driver(kind, &dir);
        let ms = run_workload(&w.batches, &offsets, d.as_ref(), RunOptions::default()).unwrap();
        assert_eq!(ms.len(), 6, "{kind}");
        assert!(ms.iter().all(|m| m.status == QueryStatus::Ok), "{kind}: {ms:?}");
        let rows: Vec<usize> = ms.iter().map(|m| m.rows.unwrap()).collect();
        assert_eq!(rows, expected, "{kind}");
        let order: Vec<(usize, &str)> = ms.iter().map(|m| (m.batch_index, m.node.as_str())).collect();
        assert_eq!(order[..2], [(0, "line_graph"), (0, "heat_map")]);
        assert!(ms.windows(2).all(|p| p[0].issue_ms <= p[1].issue_ms), "issue order follows workload order");
        assert!(ms
            .iter()
            .all(|m| m.issue_ms >= 0.0 && m.issue_ms <= m.first_result_ms && m.first_result_ms <= m.completion_ms));
    }
}

#[test]
fn replay_honours_batch_offsets() {
    let iface = covid_interface();
    let mut graph = InterfaceGraph::build(&iface);
    let w = generate_workload(&mut graph, &covid_clicks()).unwrap();
    let ts: Vec<i64> = w.batches.iter().map(|b| b.timestamp).collect();
    // Gaps of 4.2 s and 4.9 s compressed 50x.
    let offsets = schedule_offsets(&ts, Speed::Factor(50.0));
    let dir = TempDir::new().unwrap();
    let d = covid_driver(DriverKind::Sqlite, &dir);
    let ms = run_workload(&w.batches, &offsets, d.as_ref(), RunOptions::default()).unwrap();
    for m in &ms {
        let due = offsets[m.batch_index];
        assert!(m.issue_ms >= due, "issued {} before {}", m.issue_ms, due);
    }
    // The first query of each batch goes out within one scheduler tick.
    let tick = DEFAULT_TICK_MS as f64;
    for m in ms.iter().filter(|m| m.node == "line_graph") {
        let due = offsets[m.batch_index];
        assert!(m.issue_ms <= due + tick, "batch {} issued at {} for {}", m.batch_index, m.issue_ms, due);
    }
}

#[test]
fn failing_query_is_recorded_and_run_continues() {
    let iface = covid_interface();
    let mut graph = InterfaceGraph::build(&iface);
    let mut w = generate_workload(&mut graph, &covid_clicks()).unwrap();
    w.batches[1].queries[0].sql = "SELECT county FROM no_such_table".into();
    let offsets = vec![0.0; 3];
    for kind in engines() {
        let dir = TempDir::new().unwrap();
        let d = covid_driver(kind, &dir);
        let ms = run_workload(&w.batches, &offsets, d.as_ref(), RunOptions::default()).unwrap();
        let errors: Vec<_> = ms.iter().filter(|m| m.status == QueryStatus::Error).collect();
        assert_eq!(errors.len(), 1, "{kind}");
        assert_eq!(errors[0].batch_index, 1);
        assert!(errors[0].error.as_deref().unwrap().contains("no_such_table"));
        assert_eq!(ms.iter().filter(|m| m.status == QueryStatus::Ok).count(), 5);
    }
}

#[test]
fn stress_mode_with_one_connection_never_overlaps() {
    let iface = covid_interface();
    let mut graph = InterfaceGraph::build(&iface);
    let w = generate_workload(&mut graph, &covid_clicks()).unwrap();
    let dir = TempDir::new().unwrap();
    let d = covid_driver(DriverKind::Sqlite, &dir);
    let opts = RunOptions { pool_size: 1, ..RunOptions::default() };
    let ms = run_workload(&w.batches, &[0.0; 3], d.as_ref(), opts).unwrap();
    assert_eq!(ms.len(), 6);
    assert!(ms.windows(2).all(|p| p[1].issue_ms >= p[0].completion_ms));
}

#[test]
fn bad_connection_fails_before_any_query() {
    let cfg = DriverConfig::new(DriverKind::Sqlite, "/nonexistent-dir/x/y.db");
    let d = open_driver(&cfg).unwrap();
    let iface = covid_interface();
    let mut graph = InterfaceGraph::build(&iface);
    let w = generate_workload(&mut graph, &covid_clicks()).unwrap();
    let err = run_workload(&w.batches, &[0.0; 3], d.as_ref(), RunOptions::default()).unwrap_err();
    assert!(matches!(err, ExecError::Connection { index: 0, .. }), "{err}");
}

#[test]
fn reload_replaces_table() {
    let db = covid_database();
    for kind in engines() {
        let dir = TempDir::new().unwrap();
        let d = covid_driver(kind, &dir);
        let mut conn = d.connect().unwrap();
        let small: String = COVID_CSV.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert_eq!(load_dataset(conn.as_mut(), &db, "covid", small.as_bytes()).unwrap(), 3);
        let rs = conn.execute("SELECT COUNT(*) FROM covid").unwrap();
        assert_eq!(rs.rows[0][0].as_f64(), Some(3.0), "{kind}");
    }
}

#[test]
fn header_mismatch_names_the_column() {
    let db = covid_database();
    let dir = TempDir::new().unwrap();
    let d = driver(DriverKind::Sqlite, &dir);
    let mut conn = d.connect().unwrap();
    let csv = COVID_CSV.replacen("county", "fips", 1);
    match load_dataset(conn.as_mut(), &db, "covid", csv.as_bytes()) {
        Err(LoadError::HeaderMismatch { column, .. }) => assert_eq!(column, "fips"),
        other => panic!("unexpected {other:?}"),
    }
    let dropped: String = COVID_CSV
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let err = load_dataset(conn.as_mut(), &db, "covid", dropped.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("missing column"), "{err}");
}

#[test]
fn sampled_domains_match_the_data() {
    let table = covid_table();
    for kind in engines() {
        let dir = TempDir::new().unwrap();
        let d = covid_driver(kind, &dir);
        let mut conn = d.connect().unwrap();
        let domains = sample_domains(conn.as_mut(), &covid_database()).unwrap();
        let Domain::Categorical { values } = &domains[&AttributeRef::new("covid", "metric")] else { panic!() };
        assert_eq!(values, &["cases", "deaths"]);
        let idx = table.column("value").unwrap();
        let vals: Vec<f64> = table.rows.iter().filter_map(|r| r[idx].as_f64()).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert_eq!(domains[&AttributeRef::new("covid", "value")], Domain::Numeric { min: lo, max: hi }, "{kind}");
    }
}

/// Every data-backed node of random interfaces, at every detail level, run on
/// each engine and compared with the in-memory oracle.
#[test]
fn compiled_queries_match_the_oracle_on_every_engine() {
    let started = Instant::now();
    let kinds = engines();
    let dirs: Vec<TempDir> = kinds.iter().map(|_| TempDir::new().unwrap()).collect();
    let drivers: Vec<Box<dyn Driver>> = kinds.iter().zip(&dirs).map(|(k, d)| driver(*k, d)).collect();
    let mut conns: Vec<_> = drivers.iter().map(|d| d.connect().unwrap()).collect();
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut r = rng(seed);
        let n_rows = r.random_range(0..=1000);
        let (db, table) = random_table(&mut r, n_rows);
        let iface = random_interface(&mut r, &db);
        let mut graph = InterfaceGraph::build(&iface);
        for e in random_events(&mut r, &iface, 4) {
            let Action::Data { relationship, parameters } = &e.action else { unreachable!() };
            graph.apply_data_manipulation(relationship, parameters).unwrap();
        }
        let csv = table.to_csv();
        for conn in conns.iter_mut() {
            load_dataset(conn.as_mut(), &db, TABLE, csv.as_bytes()).unwrap();
        }
        for node in graph.nodes().filter(|n| n.data_backed()) {
            for level in 0..=node.levels.len() {
                let sql = match compile_node_at_level(node, level) {
                    Ok(sql) => sql,
                    Err(CompileError::EmptyFieldList(_)) => continue,
                    Err(e) => panic!("seed {seed}: {e}"),
                };
                let expected = node_result(&table, node, level);
                for (kind, conn) in kinds.iter().zip(conns.iter_mut()) {
                    let got = conn.execute(&sql).unwrap_or_else(|e| panic!("seed {seed} {kind}: {e}\n{sql}"));
                    assert!(
                        expected.same_multiset(&got, 1e-9),
                        "seed {seed} {kind}\n{sql}\nexpected {expected:?}\ngot {got:?}"
                    );
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 200, "only {checked} queries checked");
    assert!(started.elapsed().as_secs() < 30, "took {:?}", started.elapsed());
}

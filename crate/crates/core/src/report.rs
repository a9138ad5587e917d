//! Per-query measurements and the summary report built from them.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::spec::LoadGroup;

/// Batches slower than this are considered perceptibly laggy.
pub const DEFAULT_THRESHOLD_MS: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryStatus {
    Ok,
    Error,
    Timeout,
}

/// One executed query. Times are milliseconds since the run started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMeasurement {
    pub batch_index: usize,
    pub batch_timestamp: i64,
    pub node: String,
    pub relationship: String,
    pub load_group: LoadGroup,
    pub detail_level: usize,
    pub sql: String,
    pub issue_ms: f64,
    /// When the first row (or the empty result) became available.
    pub first_result_ms: f64,
    pub completion_ms: f64,
    pub latency_ms: f64,
    pub status: QueryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

impl QueryMeasurement {
    pub fn is_ok(&self) -> bool {
        self.status == QueryStatus::Ok
    }
}

/// Nearest-rank percentile: the value at rank ceil(p * n / 100) of the
/// sorted sample. `p` is in (0, 100].
pub fn percentile(sorted: &[f64], p: u32) -> Option<f64> {
    if sorted.is_empty() || p == 0 || p > 100 {
        return None;
    }
    let n = sorted.len();
    let rank = (p as usize * n).div_ceil(100).max(1);
    Some(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    pub fn of(values: &[f64]) -> Option<LatencySummary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let p = |q| percentile(&v, q).unwrap();
        Some(LatencySummary {
            count: v.len(),
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p50_ms: p(50),
            p90_ms: p(90),
            p95_ms: p(95),
            p99_ms: p(99),
            max_ms: *v.last().unwrap(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub queries: usize,
    pub errors: usize,
    pub timeouts: usize,
    pub latency: Option<LatencySummary>,
    pub rows_returned: Option<LatencySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub engine: String,
    pub queries: usize,
    pub ok: usize,
    pub errors: usize,
    pub timeouts: usize,
    pub batches: usize,
    pub query_latency: Option<LatencySummary>,
    /// Per batch: last successful completion minus first issue.
    pub batch_latency: Option<LatencySummary>,
    pub threshold_ms: f64,
    pub batches_over_threshold: usize,
    /// `batches_over_threshold` over the batches with a latency.
    pub threshold_violation_fraction: Option<f64>,
    /// Successful queries per second over the run span.
    pub qps: Option<f64>,
    /// Distribution of row counts over successful queries. The `_ms` suffix
    /// of the summary fields does not apply here.
    pub rows_returned: Option<LatencySummary>,
    pub by_load_group: IndexMap<String, GroupStats>,
    pub by_relationship: IndexMap<String, GroupStats>,
}

fn group_stats<'a>(items: impl Iterator<Item = &'a QueryMeasurement>) -> GroupStats {
    let mut stats = GroupStats {
        queries: 0,
        errors: 0,
        timeouts: 0,
        latency: None,
        rows_returned: None,
    };
    let mut lat = Vec::new();
    let mut rows = Vec::new();
    for m in items {
        stats.queries += 1;
        match m.status {
            QueryStatus::Ok => {
                lat.push(m.latency_ms);
                rows.extend(m.rows.map(|r| r as f64));
            }
            QueryStatus::Error => stats.errors += 1,
            QueryStatus::Timeout => stats.timeouts += 1,
        }
    }
    stats.latency = LatencySummary::of(&lat);
    stats.rows_returned = LatencySummary::of(&rows);
    stats
}

/// Latency of each batch that has at least one successful query, in batch
/// index order.
pub fn batch_latencies(measurements: &[QueryMeasurement]) -> Vec<(usize, f64)> {
    let mut spans: std::collections::BTreeMap<usize, (f64, f64)> = Default::default();
    for m in measurements.iter().filter(|m| m.is_ok()) {
        let e = spans
            .entry(m.batch_index)
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(m.issue_ms);
        e.1 = e.1.max(m.completion_ms);
    }
    spans.into_iter().map(|(i, (lo, hi))| (i, hi - lo)).collect()
}

impl PerformanceReport {
    pub fn build(engine: &str, measurements: &[QueryMeasurement], threshold_ms: f64) -> PerformanceReport {
        let ok: Vec<&QueryMeasurement> = measurements.iter().filter(|m| m.is_ok()).collect();
        let count = |s| measurements.iter().filter(|m| m.status == s).count();
        let lat: Vec<f64> = ok.iter().map(|m| m.latency_ms).collect();
        let rows: Vec<f64> = ok.iter().filter_map(|m| m.rows).map(|r| r as f64).collect();
        let batches = batch_latencies(measurements);
        let batch_lat: Vec<f64> = batches.iter().map(|b| b.1).collect();
        let distinct_batches = {
            let mut idx: Vec<usize> = measurements.iter().map(|m| m.batch_index).collect();
            idx.sort_unstable();
            idx.dedup();
            idx.len()
        };
        let over = batch_lat.iter().filter(|&&l| l > threshold_ms).count();
        let qps = if ok.is_empty() {
            None
        } else {
            let start = ok.iter().map(|m| m.issue_ms).fold(f64::INFINITY, f64::min);
            let end = ok.iter().map(|m| m.completion_ms).fold(f64::NEG_INFINITY, f64::max);
            (end > start).then(|| ok.len() as f64 / ((end - start) / 1000.0))
        };

        let mut by_load_group = IndexMap::new();
        for g in [LoadGroup::SingleLow, LoadGroup::SingleHigh, LoadGroup::ManyHigh] {
            if measurements.iter().any(|m| m.load_group == g) {
                by_load_group.insert(
                    g.as_str().to_string(),
                    group_stats(measurements.iter().filter(|m| m.load_group == g)),
                );
            }
        }
        let mut names: Vec<&str> = measurements.iter().map(|m| m.relationship.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        let by_relationship = names
            .into_iter()
            .map(|r| {
                (
                    r.to_string(),
                    group_stats(measurements.iter().filter(|m| m.relationship == r)),
                )
            })
            .collect();

        PerformanceReport {
            engine: engine.to_string(),
            queries: measurements.len(),
            ok: ok.len(),
            errors: count(QueryStatus::Error),
            timeouts: count(QueryStatus::Timeout),
            batches: distinct_batches,
            query_latency: LatencySummary::of(&lat),
            batch_latency: LatencySummary::of(&batch_lat),
            threshold_ms,
            batches_over_threshold: over,
            threshold_violation_fraction: (!batch_lat.is_empty())
                .then(|| over as f64 / batch_lat.len() as f64),
            qps,
            rows_returned: LatencySummary::of(&rows),
            by_load_group,
            by_relationship,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "engine: {}", self.engine);
        let _ = writeln!(
            s,
            "queries: {} (ok {}, errors {}, timeouts {}) in {} batches",
            self.queries, self.ok, self.errors, self.timeouts, self.batches
        );
        match self.qps {
            Some(q) => {
                let _ = writeln!(s, "throughput: {q:.1} queries/s");
            }
            None => {
                let _ = writeln!(s, "throughput: n/a");
            }
        }
        let _ = writeln!(
            s,
            "batches over {} ms: {} ({})",
            self.threshold_ms,
            self.batches_over_threshold,
            self.threshold_violation_fraction
                .map_or("n/a".to_string(), |f| format!("{:.1}%", f * 100.0))
        );
        let _ = writeln!(
            s,
            "\n{:<24} {:>7} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "scope", "n", "err", "mean", "p50", "p95", "p99", "max"
        );
        let mut row = |label: &str, n: usize, err: usize, l: &Option<LatencySummary>| {
            let _ = match l {
                Some(l) => writeln!(
                    s,
                    "{:<24} {:>7} {:>6} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
                    label, n, err, l.mean_ms, l.p50_ms, l.p95_ms, l.p99_ms, l.max_ms
                ),
                None => writeln!(s, "{label:<24} {n:>7} {err:>6} {:>10}", "-"),
            };
        };
        row("query", self.queries, self.errors + self.timeouts, &self.query_latency);
        row("batch", self.batches, 0, &self.batch_latency);
        for (g, st) in &self.by_load_group {
            row(&format!("group:{g}"), st.queries, st.errors + st.timeouts, &st.latency);
        }
        for (r, st) in &self.by_relationship {
            row(&format!("rel:{r}"), st.queries, st.errors + st.timeouts, &st.latency);
        }
        s
    }
}

/// Measurements as JSON lines, one query per line.
pub fn measurements_to_jsonl(ms: &[QueryMeasurement]) -> String {
    let mut out = String::new();
    for m in ms {
        out.push_str(&serde_json::to_string(m).expect("measurement serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_measurements_jsonl(text: &str) -> Result<Vec<QueryMeasurement>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_small_samples() {
        let v = [15.0, 20.0, 35.0, 40.0, 50.0];
        assert_eq!(percentile(&v, 5), Some(15.0));
        assert_eq!(percentile(&v, 30), Some(20.0));
        assert_eq!(percentile(&v, 40), Some(20.0));
        assert_eq!(percentile(&v, 50), Some(35.0));
        assert_eq!(percentile(&v, 100), Some(50.0));
        assert_eq!(percentile(&[], 50), None);
        assert_eq!(percentile(&v, 0), None);
    }

    fn m(batch: usize, issue: f64, done: f64, status: QueryStatus) -> QueryMeasurement {
        QueryMeasurement {
            batch_index: batch,
            batch_timestamp: batch as i64,
            node: "n".into(),
            relationship: "r".into(),
            load_group: LoadGroup::SingleLow,
            detail_level: 0,
            sql: "SELECT 1".into(),
            issue_ms: issue,
            first_result_ms: done,
            completion_ms: done,
            latency_ms: done - issue,
            status,
            error: None,
            rows: None,
        }
    }

    #[test]
    fn batch_latency_spans_successful_queries() {
        let ms = vec![
            m(0, 0.0, 10.0, QueryStatus::Ok),
            m(0, 1.0, 620.0, QueryStatus::Ok),
            m(0, 0.0, 900.0, QueryStatus::Timeout),
            m(1, 1000.0, 1005.0, QueryStatus::Ok),
        ];
        assert_eq!(batch_latencies(&ms), vec![(0, 620.0), (1, 5.0)]);
        let r = PerformanceReport::build("sqlite", &ms, DEFAULT_THRESHOLD_MS);
        assert_eq!((r.ok, r.timeouts, r.batches), (3, 1, 2));
        assert_eq!(r.batches_over_threshold, 1);
        assert_eq!(r.threshold_violation_fraction, Some(0.5));
        let qps = r.qps.unwrap();
        assert!((qps - 3.0 / 1.005).abs() < 1e-9);
        assert!(r.to_text().contains("group:single_low"));
    }

    #[test]
    fn empty_input_gives_null_metrics() {
        let r = PerformanceReport::build("x", &[], DEFAULT_THRESHOLD_MS);
        assert_eq!((r.queries, r.batches), (0, 0));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["query_latency"].is_null());
        assert!(v["threshold_violation_fraction"].is_null());
        assert!(v["qps"].is_null());
    }
}

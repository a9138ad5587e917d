use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use vizbench_core::compiler::QueryBatch;
use vizbench_core::report::{QueryMeasurement, QueryStatus};

use crate::driver::{Connection, Driver, DriverError};

pub const DEFAULT_TICK_MS: u64 = 10;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("opening connection {index} of {pool}: {source}")]
    Connection {
        index: usize,
        pool: usize,
        source: DriverError,
    },
    #[error("{offsets} schedule offsets for {batches} batches")]
    Schedule { batches: usize, offsets: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub pool_size: usize,
    /// Granularity of the release-time wait.
    pub tick_ms: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            pool_size: 4,
            tick_ms: DEFAULT_TICK_MS,
        }
    }
}

#[derive(Default)]
struct Turn {
    claimed: usize,
    issued: usize,
}

struct Job<'a> {
    batch_index: usize,
    batch: &'a QueryBatch,
    query: usize,
    release: Duration,
}

/// Replay `batches` on a pool of connections.
///
/// Batch `i` becomes due `offsets[i]` ms after the run starts. Queries are
/// issued strictly in workload order: a worker claims the next query, waits
/// for its release time, stamps the issue time and only then lets the next
/// query be issued. Every connection is opened before anything is issued,
/// so a bad connection fails the run without partial results.
///
/// Measurements come back in workload order with times in ms since start.
pub fn run_workload(
    batches: &[QueryBatch],
    offsets: &[f64],
    driver: &dyn Driver,
    opts: RunOptions,
) -> Result<Vec<QueryMeasurement>, ExecError> {
    if batches.len() != offsets.len() {
        return Err(ExecError::Schedule {
            batches: batches.len(),
            offsets: offsets.len(),
        });
    }
    let pool = opts.pool_size.max(1);
    let mut conns: Vec<Box<dyn Connection>> = Vec::with_capacity(pool);
    for index in 0..pool {
        let conn = driver.connect().map_err(|source| ExecError::Connection { index, pool, source })?;
        conns.push(conn);
    }

    let jobs: Vec<Job> = batches
        .iter()
        .zip(offsets)
        .enumerate()
        .flat_map(|(batch_index, (batch, &offset))| {
            (0..batch.queries.len()).map(move |query| Job {
                batch_index,
                batch,
                query,
                release: Duration::from_secs_f64(offset.max(0.0) / 1000.0),
            })
        })
        .collect();
    let tick = Duration::from_millis(opts.tick_ms.max(1));
    let state = Mutex::new(Turn::default());
    let issued = Condvar::new();
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    let start = Instant::now();
    let ms = |t: Instant| t.duration_since(start).as_secs_f64() * 1000.0;

    std::thread::scope(|s| {
        for mut conn in conns {
            let (jobs, state, issued, results) = (&jobs, &state, &issued, &results);
            s.spawn(move || {
                loop {
                    let mut guard = state.lock().unwrap();
                    let idx = guard.claimed;
                    if idx >= jobs.len() {
                        break;
                    }
                    guard.claimed += 1;
                    let job = &jobs[idx];
                    // Wait for our turn and for the release time.
                    loop {
                        let now = start.elapsed();
                        if guard.issued == idx && now >= job.release {
                            break;
                        }
                        let wait = if guard.issued == idx { (job.release - now).min(tick) } else { tick };
                        guard = issued.wait_timeout(guard, wait).unwrap().0;
                    }
                    let issue = Instant::now();
                    guard.issued += 1;
                    drop(guard);
                    issued.notify_all();

                    let q = &job.batch.queries[job.query];
                    let out = conn.execute_timed(&q.sql);
                    let done = Instant::now();
                    let (status, error, rows, first) = match out {
                        Ok(t) => (QueryStatus::Ok, None, Some(t.result.rows.len()), t.first_result.min(done)),
                        Err(e @ DriverError::Timeout(_)) => (QueryStatus::Timeout, Some(e.to_string()), None, done),
                        Err(e) => (QueryStatus::Error, Some(e.to_string()), None, done),
                    };
                    if let Some(e) = &error {
                        log::warn!("batch {} {}: {e}", job.batch_index, q.node);
                    }
                    let m = QueryMeasurement {
                        batch_index: job.batch_index,
                        batch_timestamp: job.batch.timestamp,
                        node: q.node.clone(),
                        relationship: q.relationship.clone(),
                        load_group: q.load_group,
                        detail_level: q.detail_level,
                        sql: q.sql.clone(),
                        issue_ms: ms(issue),
                        first_result_ms: ms(first.max(issue)),
                        completion_ms: ms(done),
                        latency_ms: (done - issue).as_secs_f64() * 1000.0,
                        status,
                        error,
                        rows,
                    };
                    results.lock().unwrap().push((idx, m));
                }
                if let Err(e) = conn.close() {
                    log::warn!("closing connection: {e}");
                }
            });
        }
    });

    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|(i, _)| *i);
    Ok(out.into_iter().map(|(_, m)| m).collect())
}

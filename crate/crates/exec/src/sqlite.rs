use std::sync::mpsc;
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use rusqlite::OpenFlags;
use vizbench_core::value::{ResultSet, SqlValue};

use crate::driver::{Connection, Driver, DriverError, TimedResult};

/// SQLite via the bundled library. `path` may be a plain path or a `file:`
/// URI.
#[derive(Debug, Clone)]
pub struct SqliteDriver {
    path: String,
    timeout_ms: Option<u64>,
}

impl SqliteDriver {
    pub fn new(path: &str, timeout_ms: Option<u64>) -> Self {
        SqliteDriver {
            path: path.to_string(),
            timeout_ms,
        }
    }
}

struct SqliteConnection {
    conn: rusqlite::Connection,
    timeout_ms: Option<u64>,
}

impl Driver for SqliteDriver {
    fn name(&self) -> &'static str {
        "sqlite"
    }

    fn connect(&self) -> Result<Box<dyn Connection>, DriverError> {
        let flags = OpenFlags::SQLITE_OPEN_READ_WRITE
            | OpenFlags::SQLITE_OPEN_CREATE
            | OpenFlags::SQLITE_OPEN_URI
            | OpenFlags::SQLITE_OPEN_NO_MUTEX;
        let conn = rusqlite::Connection::open_with_flags(&self.path, flags)
            .map_err(|e| DriverError::Connection(e.to_string()))?;
        conn.busy_timeout(Duration::from_secs(5))
            .map_err(|e| DriverError::Connection(e.to_string()))?;
        Ok(Box::new(SqliteConnection {
            conn,
            timeout_ms: self.timeout_ms,
        }))
    }
}

fn convert(v: ValueRef<'_>) -> SqlValue {
    match v {
        ValueRef::Null => SqlValue::Null,
        ValueRef::Integer(i) => SqlValue::Integer(i),
        ValueRef::Real(r) => SqlValue::Real(r),
        ValueRef::Text(t) => SqlValue::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => SqlValue::Text(format!("<{} bytes>", b.len())),
    }
}

impl SqliteConnection {
    fn run(&mut self, sql: &str) -> Result<TimedResult, rusqlite::Error> {
        let mut stmt = self.conn.prepare(sql)?;
        let columns: Vec<String> = stmt.column_names().iter().map(|c| c.to_string()).collect();
        let n = columns.len();
        let mut rows = Vec::new();
        let mut cursor = stmt.query([])?;
        let mut first_result = None;
        while let Some(row) = cursor.next()? {
            first_result.get_or_insert_with(Instant::now);
            rows.push((0..n).map(|i| row.get_ref(i).map(convert)).collect::<Result<_, _>>()?);
        }
        Ok(TimedResult {
            result: ResultSet { columns, rows },
            first_result: first_result.unwrap_or_else(Instant::now),
        })
    }

    fn map_err(&self, e: rusqlite::Error) -> DriverError {
        match (&e, self.timeout_ms) {
            (rusqlite::Error::SqliteFailure(f, _), Some(ms)) if f.code == rusqlite::ErrorCode::OperationInterrupted => {
                DriverError::Timeout(ms)
            }
            _ => DriverError::Query(e.to_string()),
        }
    }
}

impl Connection for SqliteConnection {
    fn execute_timed(&mut self, sql: &str) -> Result<TimedResult, DriverError> {
        let Some(ms) = self.timeout_ms else {
            return self.run(sql).map_err(|e| self.map_err(e));
        };
        let handle = self.conn.get_interrupt_handle();
        let (done, wait) = mpsc::channel::<()>();
        std::thread::scope(|s| {
            let watchdog = s.spawn(move || {
                let fired = wait.recv_timeout(Duration::from_millis(ms)).is_err();
                if fired {
                    handle.interrupt();
                }
                fired
            });
            let out = self.run(sql);
            let _ = done.send(());
            let fired = watchdog.join().unwrap_or(false);
            out.map_err(|e| if fired { DriverError::Timeout(ms) } else { self.map_err(e) })
        })
    }

    fn execute_batch(&mut self, sql: &str) -> Result<(), DriverError> {
        self.conn.execute_batch(sql).map_err(|e| self.map_err(e))
    }

    fn close(self: Box<Self>) -> Result<(), DriverError> {
        self.conn.close().map_err(|(_, e)| DriverError::Query(e.to_string()))
    }
}

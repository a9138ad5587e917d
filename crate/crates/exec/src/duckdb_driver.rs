use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use duckdb::types::Value;
use vizbench_core::value::{ResultSet, SqlValue};

use crate::driver::{Connection, Driver, DriverError, TimedResult};

/// DuckDB via the bundled library. One database instance is opened per
/// driver and every pooled connection is a clone of it, since a database
/// file can be opened only once per process.
pub struct DuckdbDriver {
    base: Mutex<duckdb::Connection>,
    timeout_ms: Option<u64>,
}

impl DuckdbDriver {
    pub fn open(path: &str, timeout_ms: Option<u64>) -> Result<DuckdbDriver, DriverError> {
        let path = path.strip_prefix("file:").unwrap_or(path);
        let conn = if path.is_empty() || path == ":memory:" {
            duckdb::Connection::open_in_memory()
        } else {
            duckdb::Connection::open(path)
        }
        .map_err(|e| DriverError::Connection(e.to_string()))?;
        Ok(DuckdbDriver {
            base: Mutex::new(conn),
            timeout_ms,
        })
    }
}

struct DuckdbConnection {
    conn: duckdb::Connection,
    timeout_ms: Option<u64>,
}

impl Driver for DuckdbDriver {
    fn name(&self) -> &'static str {
        "duckdb"
    }

    fn connect(&self) -> Result<Box<dyn Connection>, DriverError> {
        let conn = self
            .base
            .lock()
            .unwrap()
            .try_clone()
            .map_err(|e| DriverError::Connection(e.to_string()))?;
        Ok(Box::new(DuckdbConnection {
            conn,
            timeout_ms: self.timeout_ms,
        }))
    }
}

fn convert(v: Value) -> SqlValue {
    match v {
        Value::Null => SqlValue::Null,
        Value::Boolean(b) => SqlValue::Integer(b as i64),
        Value::TinyInt(i) => SqlValue::Integer(i.into()),
        Value::SmallInt(i) => SqlValue::Integer(i.into()),
        Value::Int(i) => SqlValue::Integer(i.into()),
        Value::BigInt(i) => SqlValue::Integer(i),
        Value::HugeInt(i) => i64::try_from(i).map_or(SqlValue::Real(i as f64), SqlValue::Integer),
        Value::UHugeInt(i) => i64::try_from(i).map_or(SqlValue::Real(i as f64), SqlValue::Integer),
        Value::UTinyInt(i) => SqlValue::Integer(i.into()),
        Value::USmallInt(i) => SqlValue::Integer(i.into()),
        Value::UInt(i) => SqlValue::Integer(i.into()),
        Value::UBigInt(i) => i64::try_from(i).map_or(SqlValue::Real(i as f64), SqlValue::Integer),
        Value::Float(f) => SqlValue::Real(f.into()),
        Value::Double(f) => SqlValue::Real(f),
        Value::Decimal(d) => SqlValue::Real(d.value() as f64 / 10f64.powi(d.scale() as i32)),
        Value::Text(s) => SqlValue::Text(s),
        other => SqlValue::Text(format!("{other:?}")),
    }
}

impl DuckdbConnection {
    fn run(&self, sql: &str) -> Result<TimedResult, duckdb::Error> {
        let mut stmt = self.conn.prepare(sql)?;
        let mut cursor = stmt.query([])?;
        let columns = cursor.as_ref().map(|s| s.column_names()).unwrap_or_default();
        let n = columns.len();
        let mut rows = Vec::new();
        let mut first_result = None;
        while let Some(row) = cursor.next()? {
            first_result.get_or_insert_with(Instant::now);
            rows.push((0..n).map(|i| row.get::<_, Value>(i).map(convert)).collect::<Result<_, _>>()?);
        }
        Ok(TimedResult {
            result: ResultSet { columns, rows },
            first_result: first_result.unwrap_or_else(Instant::now),
        })
    }
}

impl Connection for DuckdbConnection {
    fn execute_timed(&mut self, sql: &str) -> Result<TimedResult, DriverError> {
        let Some(ms) = self.timeout_ms else {
            return self.run(sql).map_err(|e| DriverError::Query(e.to_string()));
        };
        let handle = self.conn.interrupt_handle();
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
            match out {
                Ok(rs) => Ok(rs),
                Err(_) if fired => Err(DriverError::Timeout(ms)),
                Err(e) => Err(DriverError::Query(e.to_string())),
            }
        })
    }

    fn execute_batch(&mut self, sql: &str) -> Result<(), DriverError> {
        self.conn.execute_batch(sql).map_err(|e| DriverError::Query(e.to_string()))
    }

    fn close(self: Box<Self>) -> Result<(), DriverError> {
        self.conn.close().map_err(|(_, e)| DriverError::Query(e.to_string()))
    }
}

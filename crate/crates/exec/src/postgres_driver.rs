use std::time::Instant;

use postgres::types::Type;
use postgres::{Client, NoTls};
use vizbench_core::value::{ResultSet, SqlValue};

use crate::driver::{Connection, Driver, DriverError, TimedResult};

/// PostgreSQL over the synchronous client. `PGPASSWORD` fills in a missing
/// password.
#[derive(Debug, Clone)]
pub struct PostgresDriver {
    url: String,
    timeout_ms: Option<u64>,
}

impl PostgresDriver {
    pub fn new(url: &str, timeout_ms: Option<u64>) -> Self {
        PostgresDriver {
            url: url.to_string(),
            timeout_ms,
        }
    }
}

struct PostgresConnection {
    client: Client,
    timeout_ms: Option<u64>,
}

impl Driver for PostgresDriver {
    fn name(&self) -> &'static str {
        "postgres"
    }

    fn connect(&self) -> Result<Box<dyn Connection>, DriverError> {
        let mut config: postgres::Config = self
            .url
            .parse()
            .map_err(|e: postgres::Error| DriverError::Connection(e.to_string()))?;
        if config.get_password().is_none() {
            if let Ok(pw) = std::env::var("PGPASSWORD") {
                config.password(pw);
            }
        }
        let mut client = config
            .connect(NoTls)
            .map_err(|e| DriverError::Connection(e.to_string()))?;
        if let Some(ms) = self.timeout_ms {
            client
                .batch_execute(&format!("SET statement_timeout = {ms}"))
                .map_err(|e| DriverError::Connection(e.to_string()))?;
        }
        Ok(Box::new(PostgresConnection {
            client,
            timeout_ms: self.timeout_ms,
        }))
    }
}

fn convert(row: &postgres::Row, i: usize) -> Result<SqlValue, postgres::Error> {
    let ty = row.columns()[i].type_();
    let v = if *ty == Type::INT2 {
        row.try_get::<_, Option<i16>>(i)?.map(|v| SqlValue::Integer(v.into()))
    } else if *ty == Type::INT4 {
        row.try_get::<_, Option<i32>>(i)?.map(|v| SqlValue::Integer(v.into()))
    } else if *ty == Type::INT8 {
        row.try_get::<_, Option<i64>>(i)?.map(SqlValue::Integer)
    } else if *ty == Type::FLOAT4 {
        row.try_get::<_, Option<f32>>(i)?.map(|v| SqlValue::Real(v.into()))
    } else if *ty == Type::FLOAT8 {
        row.try_get::<_, Option<f64>>(i)?.map(SqlValue::Real)
    } else {
        row.try_get::<_, Option<String>>(i)?.map(SqlValue::Text)
    };
    Ok(v.unwrap_or(SqlValue::Null))
}

impl PostgresConnection {
    fn map_err(&self, e: postgres::Error) -> DriverError {
        match (e.code(), self.timeout_ms) {
            (Some(c), Some(ms)) if *c == postgres::error::SqlState::QUERY_CANCELED => DriverError::Timeout(ms),
            _ => DriverError::Query(e.to_string()),
        }
    }
}

impl Connection for PostgresConnection {
    fn execute_timed(&mut self, sql: &str) -> Result<TimedResult, DriverError> {
        let stmt = self.client.prepare(sql).map_err(|e| self.map_err(e))?;
        let columns = stmt.columns().iter().map(|c| c.name().to_string()).collect();
        let rows = self.client.query(&stmt, &[]).map_err(|e| self.map_err(e))?;
        // The synchronous client hands over the whole result at once.
        let first_result = Instant::now();
        let rows = rows
            .iter()
            .map(|r| (0..r.len()).map(|i| convert(r, i)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()
            .map_err(|e| self.map_err(e))?;
        Ok(TimedResult {
            result: ResultSet { columns, rows },
            first_result,
        })
    }

    fn execute_batch(&mut self, sql: &str) -> Result<(), DriverError> {
        self.client.batch_execute(sql).map_err(|e| self.map_err(e))
    }

    fn close(self: Box<Self>) -> Result<(), DriverError> {
        self.client.close().map_err(|e| DriverError::Query(e.to_string()))
    }
}

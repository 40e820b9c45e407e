use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid city: {0}")]
    InvalidCity(String),

    #[error("row-sum violation in OD row {row}: sum is {sum}")]
    RowSum { row: usize, sum: f64 },

    #[error("unknown locality {0}")]
    UnknownLocality(u32),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("history already holds a result for agent {agent} on day {day}")]
    DuplicateTest { agent: u32, day: u32 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

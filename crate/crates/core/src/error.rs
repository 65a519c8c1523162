use std::fmt;
use std::path::PathBuf;

/// Where in the mesh a problem was detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub level: u8,
    pub index: [u32; 3],
    pub center: [f64; 3],
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "level {} cell ({}, {}, {}) at ({:.6}, {:.6}, {:.6})",
            self.level,
            self.index[0],
            self.index[1],
            self.index[2],
            self.center[0],
            self.center[1],
            self.center[2]
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid state: rho = {rho}, p = {p}")]
    InvalidState { rho: f64, p: f64 },

    #[error("positivity lost (rho = {rho}, p = {p}) at {location}")]
    PositivityLoss { rho: f64, p: f64, location: Location },

    #[error("non-finite signal speed at {0}")]
    NonFiniteSpeed(Location),

    #[error("{0}")]
    Domain(String),

    #[error("configuration error for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("reference does not cover {0}")]
    Coverage(String),

    #[error("mesh structure error: {0}")]
    Structure(String),

    #[error("step limit of {0} exceeded before reaching the end time")]
    MaxSteps(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Parse { .. } | Error::Coverage(_) => 3,
            Error::Io { .. } => 4,
            Error::InvalidState { .. }
            | Error::PositivityLoss { .. }
            | Error::NonFiniteSpeed(_) => 5,
            Error::MaxSteps(_) => 6,
            Error::Domain(_) | Error::Structure(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Process exit codes: 0 success, 1 usage, 2 I/O or format, 3 numerical.

use crd_core::Error;

pub const SUCCESS: u8 = 0;
pub const USAGE: u8 = 1;
pub const IO: u8 = 2;
pub const NUMERICAL: u8 = 3;

/// Invalid flag combination or value detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parameter(_) | Error::DimensionMismatch { .. } => USAGE,
                Error::Io { .. }
                | Error::Format { .. }
                | Error::Checksum { .. }
                | Error::Csv { .. }
                | Error::Validation(_) => IO,
                Error::Numerical(_) | Error::UndefinedMetric(_) => NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return IO;
        }
    }
    IO
}

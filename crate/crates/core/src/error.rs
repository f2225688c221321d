use thiserror::Error;

use crate::delivery::SubfileId;
use crate::placement::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("placement vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("placement is infeasible: {}", display_violations(.0))]
    Infeasible(Vec<Violation>),

    #[error("demand vector is empty")]
    EmptyDemand,

    #[error("demand entry {value} at position {position} is not a file index in 1..={files}")]
    InvalidDemand {
        position: usize,
        value: usize,
        files: usize,
    },

    #[error("enumeration of {size} demand vectors exceeds the cap of {cap}; use Monte Carlo sampling instead")]
    EnumerationCap { size: String, cap: u64 },

    #[error("file size {file_size} does not make every subfile an integer number of bits")]
    NonIntegralFileSize { file_size: usize },

    #[error("file size is too large to simulate: {0}")]
    FileSizeTooLarge(String),

    #[error("inconsistent delivery inputs: {0}")]
    Inconsistent(String),

    #[error("user {user} cannot decode subfile {missing} of file {file}")]
    Undecodable {
        user: usize,
        file: usize,
        missing: SubfileId,
    },

    #[error("cannot parse {input:?} as a rational number: {reason}")]
    Parse { input: String, reason: String },
}

fn display_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

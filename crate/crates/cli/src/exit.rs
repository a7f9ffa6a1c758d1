//! Exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other failure |
//! | 2 | usage error (bad flags or arguments) |
//! | 3 | unreadable or malformed input |
//! | 4 | degenerate data, fit failed |
//! | 5 | solver did not converge |

use pantilt_core::{CalibrationError, EvalError, FormatError, IkError, RigError};

pub const OTHER: u8 = 1;
pub const USAGE: u8 = 2;
pub const INPUT: u8 = 3;
pub const FIT: u8 = 4;
pub const NOT_CONVERGED: u8 = 5;

/// An argument error found after clap has accepted the command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

pub fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if cause.is::<FormatError>() || cause.is::<std::io::Error>() {
            return INPUT;
        }
        if let Some(e) = cause.downcast_ref::<CalibrationError>() {
            return match e {
                CalibrationError::InvalidBoard(_) | CalibrationError::InvalidObservations(_) => {
                    INPUT
                }
                _ => FIT,
            };
        }
        if let Some(e) = cause.downcast_ref::<IkError>() {
            return match e {
                IkError::InvalidTarget | IkError::InvalidConfig(_) => USAGE,
                IkError::Rig(_) => FIT,
            };
        }
        if let Some(e) = cause.downcast_ref::<RigError>() {
            return match e {
                RigError::ParallelAxes { .. } => FIT,
                _ => USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::EmptyBatch => INPUT,
                EvalError::InvalidIntrinsics(_) | EvalError::ZeroTarget => USAGE,
                EvalError::BehindCamera { .. } => OTHER,
            };
        }
    }
    OTHER
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("direction vector has near-zero norm {norm:e}")]
    ZeroDirection { norm: f64 },
    #[error("bottom row of homogeneous transform must be (0, 0, 0, 1)")]
    NotHomogeneous,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("not enough valid corners to fit ({0})")]
    InsufficientCorners(String),
    #[error("frames do not span a usable rotation (eigenvalue ratio {ratio:.3e})")]
    DegenerateRotation { ratio: f64 },
    #[error("only {valid} of {total} corners trace a usable circle")]
    DegenerateTrajectory { valid: usize, total: usize },
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigError {
    #[error("pan and tilt axes are parallel (angle {angle:.3e} rad)")]
    ParallelAxes { angle: f64 },
    #[error("invalid simulator parameters: {0}")]
    InvalidSimParams(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IkError {
    #[error("target must be finite and away from the origin")]
    InvalidTarget,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rig(#[from] RigError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point is not in front of the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("target must be finite and away from the origin")]
    ZeroTarget,
    #[error("no successful trials to aggregate")]
    EmptyBatch,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(String),
    #[error("{0}")]
    Invalid(String),
}

impl FormatError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax {
            line,
            message: message.into(),
        }
    }
}

//! Pan-tilt rig kinematics and rotation-axis calibration.
//!
//! Lengths are millimeters and angles are radians throughout. The camera
//! looks along its local `-z` axis.

pub mod calibration;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod geom;
pub mod kinematics;
pub mod simulator;

pub use calibration::{
    calibrate_axis, calibrate_axis_with, calibrate_rig, calibrate_rig_with, BoardSpec,
    CalibrationOptions, CalibrationReport, CornerObservations, RigCalibration, RigWarning,
};
pub use error::{CalibrationError, EvalError, FormatError, GeomError, IkError, RigError};
pub use evaluation::{
    run_targeting_experiment, AimModel, CameraIntrinsics, TargetingMetrics, TargetingReport,
    TrialRecord, TrialStatus,
};
pub use geom::{AxisModel, Point3, Transform4, UnitVec3};
pub use kinematics::{forward_transform, solve_ik, IKConfig, IKSolution, PanTiltPose, PanTiltRig};
pub use simulator::{AxisChoice, NoiseSpec, SimRigParams};

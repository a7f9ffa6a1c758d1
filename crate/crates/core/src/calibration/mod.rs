//! Rotation-axis calibration from checkerboard-corner trajectories.
//!
//! Two stages: a plane-family fit gives the axis direction, then a circle fit
//! constrained to that family gives a point on the axis.

mod circle;
mod joint;
mod observations;
mod plane;

pub use circle::{
    circle_distance_components, corner_center, evaluate_circle_fit, fit_circle_centers,
    fit_circle_centers_with, CircleFit, CircleFitOptions, DUPLICATE_TOLERANCE_MM,
};
pub use joint::refine_jointly;
pub use observations::{BoardSpec, CornerObservations};
pub use plane::{fit_plane_family, PlaneFamilyFit, MIN_EIGENGAP_RATIO};

use crate::error::CalibrationError;
use crate::geom::{AxisModel, Point3};
use crate::kinematics::PanTiltRig;

/// Corners closer than this to the axis carry no angle information.
pub const MIN_ANGLE_RADIUS_MM: f64 = 1e-6;

/// Axes closer than this (radians and millimeters) are reported as identical.
const IDENTICAL_AXES_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub circle: CircleFitOptions,
    /// Refine plane family and circle center together after the sequential
    /// fit.
    pub joint_refine: bool,
    pub joint_max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            circle: CircleFitOptions::default(),
            joint_refine: false,
            joint_max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub axis: AxisModel,
    pub plane_fit: PlaneFamilyFit,
    pub circle_fit: CircleFit,
    /// Per-corner RMS distance to the fitted circle (row-major).
    pub per_corner_rms: Vec<Option<f64>>,
    /// Rotation of each frame relative to frame 0 about `axis`.
    pub frame_angles: Vec<f64>,
    /// Whether the orientation rule reversed the fitted normal.
    pub flipped: bool,
    pub joint_iterations: usize,
}

pub fn calibrate_axis(obs: &CornerObservations) -> Result<CalibrationReport, CalibrationError> {
    calibrate_axis_with(obs, &CalibrationOptions::default())
}

pub fn calibrate_axis_with(
    obs: &CornerObservations,
    options: &CalibrationOptions,
) -> Result<CalibrationReport, CalibrationError> {
    let mut plane = fit_plane_family(obs)?;
    let mut circle = fit_circle_centers_with(obs, &plane, &options.circle)?;
    let mut joint_iterations = 0;
    if options.joint_refine {
        let (refined, center, iterations) =
            refine_jointly(obs, &plane, circle.center, options.joint_max_iterations)?;
        plane = refined;
        circle = CircleFit {
            polish_iterations: circle.polish_iterations,
            ..evaluate_circle_fit(obs, &plane, center)?
        };
        joint_iterations = iterations;
    }

    let mut axis = AxisModel::new(plane.normal, circle.center)?;
    let mut frame_angles = recover_frame_angles(obs, &axis)?;

    // Orientation: frame order is positive rotation on average.
    let net: f64 = frame_angles.windows(2).map(|w| w[1] - w[0]).sum();
    let flipped = net < 0.0;
    if flipped {
        plane = plane.flipped();
        axis.direction = -axis.direction;
        frame_angles.iter_mut().for_each(|a| *a = -*a);
    }

    Ok(CalibrationReport {
        axis,
        plane_fit: plane,
        per_corner_rms: circle.per_corner_rms.clone(),
        circle_fit: circle,
        frame_angles,
        flipped,
        joint_iterations,
    })
}

/// Signed rotation of every frame relative to frame 0 about `axis`.
///
/// Each corner contributes the angle between its frame-0 and frame-k
/// positions measured around its own circle center; the per-frame value is
/// the circular mean over corners, and the sequence is unwrapped so that
/// consecutive frames differ by less than half a turn.
pub fn recover_frame_angles(
    obs: &CornerObservations,
    axis: &AxisModel,
) -> Result<Vec<f64>, CalibrationError> {
    let n = axis.direction.to_point();
    let board = obs.board();

    // Frame-0 radial vector for each usable corner.
    let anchors: Vec<(usize, usize, Point3, Point3)> = board
        .corners()
        .filter(|&(i, j)| obs.is_valid(0, i, j))
        .filter_map(|(i, j)| {
            let v0 = obs.point(0, i, j);
            let center = axis.closest_point(v0);
            let radial = v0 - center;
            (radial.norm() >= MIN_ANGLE_RADIUS_MM).then_some((i, j, center, radial))
        })
        .collect();
    if anchors.is_empty() {
        return Err(CalibrationError::DegenerateTrajectory {
            valid: 0,
            total: board.corner_count(),
        });
    }

    let mut angles = Vec::with_capacity(obs.frame_count());
    for k in 0..obs.frame_count() {
        let (mut sum_sin, mut sum_cos, mut used) = (0.0, 0.0, 0usize);
        for &(i, j, center, a) in &anchors {
            if !obs.is_valid(k, i, j) {
                continue;
            }
            let y = obs.point(k, i, j) - center;
            let b = y - n * y.dot(n);
            if b.norm() < MIN_ANGLE_RADIUS_MM {
                continue;
            }
            let angle = n.dot(a.cross(b)).atan2(a.dot(b));
            sum_sin += angle.sin();
            sum_cos += angle.cos();
            used += 1;
        }
        if used == 0 {
            return Err(CalibrationError::DegenerateTrajectory {
                valid: 0,
                total: board.corner_count(),
            });
        }
        angles.push(if k == 0 { 0.0 } else { sum_sin.atan2(sum_cos) });
    }

    for k in 1..angles.len() {
        let mut delta = angles[k] - angles[k - 1];
        delta -= std::f64::consts::TAU * (delta / std::f64::consts::TAU).round();
        angles[k] = angles[k - 1] + delta;
    }
    Ok(angles)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RigWarning {
    /// Pan and tilt calibrations produced the same axis line.
    IdenticalAxes,
    /// Pan and tilt directions are (anti)parallel, so aiming is degenerate.
    ParallelAxes { angle: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigCalibration {
    pub rig: PanTiltRig,
    pub pan: CalibrationReport,
    pub tilt: CalibrationReport,
    pub warnings: Vec<RigWarning>,
}

pub fn calibrate_rig(
    pan_obs: &CornerObservations,
    tilt_obs: &CornerObservations,
) -> Result<RigCalibration, CalibrationError> {
    calibrate_rig_with(pan_obs, tilt_obs, &CalibrationOptions::default())
}

pub fn calibrate_rig_with(
    pan_obs: &CornerObservations,
    tilt_obs: &CornerObservations,
    options: &CalibrationOptions,
) -> Result<RigCalibration, CalibrationError> {
    let pan = calibrate_axis_with(pan_obs, options)?;
    let tilt = calibrate_axis_with(tilt_obs, options)?;
    let rig = PanTiltRig::new(pan.axis, tilt.axis);

    let mut warnings = Vec::new();
    let angle = pan.axis.direction.angle_to(tilt.axis.direction);
    if angle < IDENTICAL_AXES_TOLERANCE
        && pan.axis.line_distance(&tilt.axis) < IDENTICAL_AXES_TOLERANCE
    {
        warnings.push(RigWarning::IdenticalAxes);
    }
    if let Err(crate::error::RigError::ParallelAxes { angle }) = rig.validate() {
        warnings.push(RigWarning::ParallelAxes { angle });
    }
    Ok(RigCalibration {
        rig,
        pan,
        tilt,
        warnings,
    })
}

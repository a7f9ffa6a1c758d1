//! Targeting experiment: aim at each target with a model, move the true rig
//! to the chosen pose, and measure how far the target lands from where the
//! model expected it.
//!
//! After the move, the model predicts the target at `(0, 0, sz)` in the
//! camera frame (on the optical axis at its predicted range). The millimeter
//! error is the target's actual camera-frame position minus that prediction,
//! so X/Y are lateral misses and Z is the range error along the optical
//! axis. The pixel error is the projection of the actual position relative to
//! the principal point.

use crate::error::{EvalError, IkError};
use crate::geom::Point3;
use crate::kinematics::{
    forward_transform, solve_ik, IKConfig, IkDiagnostic, PanTiltPose, PanTiltRig,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, EvalError> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(EvalError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got {fx}, {fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(EvalError::InvalidIntrinsics(
                "principal point must be finite".into(),
            ));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// 1920x1080 color camera with a ~1060 px focal length.
    pub fn kinect_v2_like() -> Self {
        Self {
            fx: 1060.0,
            fy: 1060.0,
            cx: 960.0,
            cy: 540.0,
        }
    }
}

/// Pinhole projection for a camera looking along `-z`.
///
/// Coordinates are divided by the signed depth: `u = cx + fx * x / z`,
/// `v = cy + fy * y / z`. Points with `z >= 0` are behind the camera.
pub fn project_pinhole(k: &CameraIntrinsics, p_cam: Point3) -> Result<(f64, f64), EvalError> {
    if p_cam.z.is_nan() || p_cam.z >= 0.0 {
        return Err(EvalError::BehindCamera { z: p_cam.z });
    }
    Ok((
        k.cx + k.fx * p_cam.x / p_cam.z,
        k.cy + k.fy * p_cam.y / p_cam.z,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineAim {
    pub pose: PanTiltPose,
    /// The target lies on the pan axis, so any pan angle aims equally well.
    pub gimbal_degenerate: bool,
}

/// Closed-form aim assuming pan about world Y and tilt about world X, both
/// through the camera center. Tilt is applied first, then pan, giving the
/// viewing direction `(-sin a cos b, sin b, -cos a cos b)`.
pub fn ideal_baseline_pose(target: Point3) -> Result<BaselineAim, EvalError> {
    let range = target.norm();
    if !target.is_finite() || range <= 0.0 {
        return Err(EvalError::ZeroTarget);
    }
    let beta = (target.y / range).clamp(-1.0, 1.0).asin();
    let horizontal = target.x.hypot(target.z);
    if horizontal <= 1e-9 * range {
        return Ok(BaselineAim {
            pose: PanTiltPose::new(0.0, beta),
            gimbal_degenerate: true,
        });
    }
    Ok(BaselineAim {
        pose: PanTiltPose::new((-target.x).atan2(-target.z), beta),
        gimbal_degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AimModel {
    /// Calibrated rig steered by the IK solver.
    Calibrated {
        rig: PanTiltRig,
        config: IKConfig,
    },
    IdealBaseline,
}

impl AimModel {
    pub fn label(&self) -> &'static str {
        match self {
            AimModel::Calibrated { .. } => "calibrated",
            AimModel::IdealBaseline => "ideal-axes baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    /// The solver stopped above tolerance; the pose was still applied.
    NotConverged(Option<IkDiagnostic>),
    /// Baseline target on the pan axis; pan was set to zero.
    GimbalDegenerate,
    /// No pose could be produced.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub target: Point3,
    pub status: TrialStatus,
    pub pose: Option<PanTiltPose>,
    /// Range along the optical axis the model expects the target at (mm,
    /// negative in front).
    pub predicted_sz: f64,
    /// World position of the predicted point after moving the true rig.
    pub achieved: Option<Point3>,
    /// Actual minus predicted target position in the moved camera frame.
    pub error_mm: Option<Point3>,
    /// Projected target offset from the principal point.
    pub error_px: Option<(f64, f64)>,
    pub ik_iterations: Option<usize>,
}

impl TrialRecord {
    pub fn is_measured(&self) -> bool {
        self.error_mm.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetingMetrics {
    pub trials: usize,
    pub measured: usize,
    pub converged: usize,
    pub rmse_px: f64,
    pub rmse_mm: f64,
    pub mae_x_px: f64,
    pub mae_y_px: f64,
    pub mae_x_mm: f64,
    pub mae_y_mm: f64,
    pub mae_z_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetingReport {
    pub model: &'static str,
    pub records: Vec<TrialRecord>,
    pub metrics: TargetingMetrics,
}

/// RMSE of the L2 norms and per-component mean absolute errors.
pub fn error_statistics<const N: usize>(errors: &[[f64; N]]) -> Option<(f64, [f64; N])> {
    if errors.is_empty() {
        return None;
    }
    let count = errors.len() as f64;
    let mean_sq = errors
        .iter()
        .map(|e| e.iter().map(|c| c * c).sum::<f64>())
        .sum::<f64>()
        / count;
    let mut mae = [0.0; N];
    for e in errors {
        for (m, c) in mae.iter_mut().zip(e) {
            *m += c.abs();
        }
    }
    mae.iter_mut().for_each(|m| *m /= count);
    Some((mean_sq.sqrt(), mae))
}

pub fn compute_metrics(records: &[TrialRecord]) -> Result<TargetingMetrics, EvalError> {
    let mm: Vec<[f64; 3]> = records
        .iter()
        .filter_map(|r| r.error_mm)
        .map(Point3::to_array)
        .collect();
    let (rmse_mm, mae_mm) = error_statistics(&mm).ok_or(EvalError::EmptyBatch)?;
    let px: Vec<[f64; 2]> = records
        .iter()
        .filter_map(|r| r.error_px)
        .map(|(u, v)| [u, v])
        .collect();
    let (rmse_px, mae_px) = error_statistics(&px).unwrap_or((f64::NAN, [f64::NAN; 2]));
    Ok(TargetingMetrics {
        trials: records.len(),
        measured: mm.len(),
        converged: records
            .iter()
            .filter(|r| r.status == TrialStatus::Ok)
            .count(),
        rmse_px,
        rmse_mm,
        mae_x_px: mae_px[0],
        mae_y_px: mae_px[1],
        mae_x_mm: mae_mm[0],
        mae_y_mm: mae_mm[1],
        mae_z_mm: mae_mm[2],
    })
}

fn choose_pose(
    model: &AimModel,
    target: Point3,
) -> (TrialStatus, Option<(PanTiltPose, f64)>, Option<usize>) {
    match model {
        AimModel::Calibrated { rig, config } => match solve_ik(rig, target, config) {
            Ok(sol) => {
                let status = if sol.converged {
                    TrialStatus::Ok
                } else {
                    TrialStatus::NotConverged(sol.diagnostic)
                };
                (status, Some((sol.pose, sol.sz)), Some(sol.iterations))
            }
            Err(e @ (IkError::InvalidTarget | IkError::InvalidConfig(_) | IkError::Rig(_))) => {
                (TrialStatus::Failed(e.to_string()), None, None)
            }
        },
        AimModel::IdealBaseline => match ideal_baseline_pose(target) {
            Ok(aim) => {
                let status = if aim.gimbal_degenerate {
                    TrialStatus::GimbalDegenerate
                } else {
                    TrialStatus::Ok
                };
                (status, Some((aim.pose, -target.norm())), None)
            }
            Err(e) => (TrialStatus::Failed(e.to_string()), None, None),
        },
    }
}

/// Runs one trial per target. Per-trial failures are recorded, not raised.
pub fn run_trial(
    true_rig: &PanTiltRig,
    model: &AimModel,
    target: Point3,
    k: &CameraIntrinsics,
) -> TrialRecord {
    let (status, chosen, ik_iterations) = choose_pose(model, target);
    let Some((pose, predicted_sz)) = chosen else {
        return TrialRecord {
            target,
            status,
            pose: None,
            predicted_sz: f64::NAN,
            achieved: None,
            error_mm: None,
            error_px: None,
            ik_iterations,
        };
    };
    let camera = forward_transform(true_rig, pose);
    let predicted_local = Point3::new(0.0, 0.0, predicted_sz);
    let actual_local = camera.rigid_inverse().apply_point(target);
    TrialRecord {
        target,
        status,
        pose: Some(pose),
        predicted_sz,
        achieved: Some(camera.apply_point(predicted_local)),
        error_mm: Some(actual_local - predicted_local),
        error_px: project_pinhole(k, actual_local)
            .ok()
            .map(|(u, v)| (u - k.cx, v - k.cy)),
        ik_iterations,
    }
}

pub fn run_targeting_experiment(
    true_rig: &PanTiltRig,
    model: &AimModel,
    targets: &[Point3],
    k: &CameraIntrinsics,
) -> Result<TargetingReport, EvalError> {
    if targets.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let records: Vec<TrialRecord> = targets
        .iter()
        .map(|&t| run_trial(true_rig, model, t, k))
        .collect();
    let metrics = compute_metrics(&records)?;
    Ok(TargetingReport {
        model: model.label(),
        records,
        metrics,
    })
}

//! Jacobian-transpose aiming.
//!
//! The end effector is the point `(0, 0, sz)` on the optical axis; the
//! parameters are `(alpha, beta, sz / sz_unit_scale)`. Each iteration moves
//! along `J^T e` with the step length that is optimal for the linearized
//! model, `k = <e, J J^T e> / <J J^T e, J J^T e>`.

use nalgebra::{Matrix3, Vector3};

use super::{forward_transform, PanTiltPose, PanTiltRig, DEFAULT_ANGLE_LIMIT};
use crate::error::IkError;
use crate::geom::{axis_rotation, Point3};

/// Step denominators below this stop the solver.
pub const STALL_DENOMINATOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    /// Central differences; mainly a cross-check for the analytic form.
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IKConfig {
    /// Stop once the aim error drops below this, millimeters.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Units of the third parameter in millimeters (1000 optimizes `sz` in
    /// meters).
    pub sz_unit_scale: f64,
    /// Pan and tilt are clamped to `[-angle_limit, angle_limit]`.
    pub angle_limit: f64,
    pub jacobian: JacobianMode,
}

impl Default for IKConfig {
    fn default() -> Self {
        Self {
            tolerance: 1.0,
            max_iterations: 100,
            sz_unit_scale: 1000.0,
            angle_limit: DEFAULT_ANGLE_LIMIT,
            jacobian: JacobianMode::Analytic,
        }
    }
}

impl IKConfig {
    pub fn validate(&self) -> Result<(), IkError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(IkError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(IkError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.sz_unit_scale > 0.0 && self.sz_unit_scale.is_finite()) {
            return Err(IkError::InvalidConfig(format!(
                "sz_unit_scale must be positive, got {}",
                self.sz_unit_scale
            )));
        }
        if self.angle_limit.is_nan() || self.angle_limit <= 0.0 {
            return Err(IkError::InvalidConfig(
                "angle_limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Solver parameter vector `(alpha, beta, sz_scaled)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkParams {
    pub alpha: f64,
    pub beta: f64,
    pub sz_scaled: f64,
}

impl IkParams {
    fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.sz_scaled)
    }

    fn from_vector(v: &Vector3<f64>) -> Self {
        Self {
            alpha: v.x,
            beta: v.y,
            sz_scaled: v.z,
        }
    }

    fn pose(self) -> PanTiltPose {
        PanTiltPose::new(self.alpha, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkDiagnostic {
    /// `J J^T e` vanished; the step length is undefined.
    Stalled,
    /// The pose ended on the mechanical limit.
    RangeLimited,
    /// Ran out of iterations above tolerance.
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IKSolution {
    pub pose: PanTiltPose,
    /// Optical-axis length in millimeters (negative in front of the camera).
    pub sz: f64,
    pub iterations: usize,
    pub initial_error: f64,
    pub final_error: f64,
    pub converged: bool,
    pub diagnostic: Option<IkDiagnostic>,
}

fn end_effector(rig: &PanTiltRig, params: IkParams, scale: f64) -> Point3 {
    forward_transform(rig, params.pose()).apply_point(Point3::new(
        0.0,
        0.0,
        params.sz_scaled * scale,
    ))
}

/// Analytic Jacobian of the end effector with respect to
/// `(alpha, beta, sz_scaled)`, one column per parameter.
pub fn ik_jacobian(rig: &PanTiltRig, params: IkParams, sz_unit_scale: f64) -> Matrix3<f64> {
    let tilt = axis_rotation(&rig.tilt, params.beta);
    let pan = axis_rotation(&rig.pan, params.alpha);
    let local = Point3::new(0.0, 0.0, params.sz_scaled * sz_unit_scale);
    let after_tilt = tilt.apply_point(local);
    let world = pan.apply_point(after_tilt);

    let n_pan = rig.pan.direction.to_point();
    let n_tilt = rig.tilt.direction.to_point();
    let d_alpha = n_pan.cross(world - rig.pan.pivot);
    let d_beta = pan.apply_vector(n_tilt.cross(after_tilt - rig.tilt.pivot));
    let d_sz = pan.apply_vector(tilt.apply_vector(Point3::new(0.0, 0.0, sz_unit_scale)));
    Matrix3::from_columns(&[d_alpha.to_vector(), d_beta.to_vector(), d_sz.to_vector()])
}

/// Central-difference Jacobian with per-parameter step `step`.
pub fn finite_difference_jacobian(
    rig: &PanTiltRig,
    params: IkParams,
    sz_unit_scale: f64,
    step: f64,
) -> Matrix3<f64> {
    let base = params.to_vector();
    let mut columns = [Vector3::zeros(); 3];
    for (c, column) in columns.iter_mut().enumerate() {
        let mut plus = base;
        let mut minus = base;
        plus[c] += step;
        minus[c] -= step;
        let hi = end_effector(rig, IkParams::from_vector(&plus), sz_unit_scale);
        let lo = end_effector(rig, IkParams::from_vector(&minus), sz_unit_scale);
        *column = (hi - lo).to_vector() / (2.0 * step);
    }
    Matrix3::from_columns(&columns)
}

pub fn solve_ik(
    rig: &PanTiltRig,
    target: Point3,
    config: &IKConfig,
) -> Result<IKSolution, IkError> {
    config.validate()?;
    rig.validate()?;
    let range = target.norm();
    if !target.is_finite() || range <= 0.0 {
        return Err(IkError::InvalidTarget);
    }
    let scale = config.sz_unit_scale;
    let limit = config.angle_limit;
    let goal = target.to_vector();

    let mut theta = IkParams {
        alpha: 0.0,
        beta: 0.0,
        sz_scaled: -range / scale,
    }
    .to_vector();
    let mut error = goal - end_effector(rig, IkParams::from_vector(&theta), scale).to_vector();
    let initial_error = error.norm();

    let mut best = (theta, initial_error);
    let mut iterations = 0;
    let mut clamped = false;
    let mut diagnostic = None;

    while error.norm() >= config.tolerance {
        if iterations == config.max_iterations {
            diagnostic = Some(IkDiagnostic::MaxIterations);
            break;
        }
        let params = IkParams::from_vector(&theta);
        let jac = match config.jacobian {
            JacobianMode::Analytic => ik_jacobian(rig, params, scale),
            JacobianMode::CentralDifference => finite_difference_jacobian(rig, params, scale, 1e-6),
        };
        let gradient = jac.transpose() * error;
        let jjt_e = jac * gradient;
        let denominator = jjt_e.dot(&jjt_e);
        if denominator < STALL_DENOMINATOR {
            diagnostic = Some(IkDiagnostic::Stalled);
            break;
        }
        let k = error.dot(&jjt_e) / denominator;
        theta += gradient * k;

        let (a, b) = (theta.x.clamp(-limit, limit), theta.y.clamp(-limit, limit));
        clamped = a != theta.x || b != theta.y;
        theta.x = a;
        theta.y = b;

        iterations += 1;
        error = goal - end_effector(rig, IkParams::from_vector(&theta), scale).to_vector();
        if error.norm() < best.1 {
            best = (theta, error.norm());
        }
    }

    let mut converged = error.norm() < config.tolerance;
    if !converged {
        // Report the best iterate rather than the last one.
        theta = best.0;
    }
    let on_limit = theta.x.abs() >= limit || theta.y.abs() >= limit;
    if on_limit && (clamped || !converged) {
        converged = false;
        diagnostic = Some(IkDiagnostic::RangeLimited);
    }

    let params = IkParams::from_vector(&theta);
    let final_error = (goal - end_effector(rig, params, scale).to_vector()).norm();
    Ok(IKSolution {
        pose: params.pose(),
        sz: params.sz_scaled * scale,
        iterations,
        initial_error,
        final_error,
        converged,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{AxisModel, UnitVec3};
    use crate::kinematics::world_from_local;

    fn skewed_rig() -> PanTiltRig {
        PanTiltRig::new(
            AxisModel::new(
                UnitVec3::new(0.0118, 0.983, -0.1835).unwrap(),
                Point3::new(-82.4, -458.8, 108.3),
            )
            .unwrap(),
            AxisModel::new(
                UnitVec3::new(0.9984, -0.0076, -0.0555).unwrap(),
                Point3::new(-412.1, 153.6, 22.4),
            )
            .unwrap(),
        )
    }

    #[test]
    fn analytic_matches_central_differences() {
        let rig = skewed_rig();
        let params = IkParams {
            alpha: 0.3,
            beta: -0.2,
            sz_scaled: -2.1,
        };
        let analytic = ik_jacobian(&rig, params, 1000.0);
        let numeric = finite_difference_jacobian(&rig, params, 1000.0, 1e-6);
        let rel = (analytic - numeric).abs().max() / analytic.abs().max();
        assert!(rel < 1e-4, "relative error {rel}");
    }

    #[test]
    fn ideal_rig_pan_column() {
        // P = R_y(alpha) (0, 0, sz), so dP/dalpha = (sz cos a, 0, -sz sin a).
        let params = IkParams {
            alpha: 0.0,
            beta: 0.0,
            sz_scaled: -1.0,
        };
        let jac = ik_jacobian(&PanTiltRig::ideal(), params, 1000.0);
        let col = jac.column(0);
        assert!((col - Vector3::new(-1000.0, 0.0, 0.0)).norm() < 1e-9);
        let numeric = finite_difference_jacobian(&PanTiltRig::ideal(), params, 1000.0, 1e-6);
        assert!((numeric.column(0) - col).norm() < 1e-4);
    }

    #[test]
    fn sz_column_has_scale_norm() {
        let params = IkParams {
            alpha: 0.7,
            beta: -1.1,
            sz_scaled: -3.0,
        };
        for scale in [1.0, 1000.0] {
            let jac = ik_jacobian(&skewed_rig(), params, scale);
            assert!((jac.column(2).norm() - scale).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn rest_target_converges_immediately() {
        let sol = solve_ik(
            &PanTiltRig::ideal(),
            Point3::new(0.0, 0.0, -1000.0),
            &IKConfig::default(),
        )
        .unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert!(sol.final_error < 1e-9);
        assert_eq!(sol.sz, -1000.0);
    }

    #[test]
    fn reaches_forward_generated_targets() {
        let rig = skewed_rig();
        let config = IKConfig::default();
        for (alpha, beta, sz) in [
            (0.2, -0.1, -2000.0),
            (-0.4, 0.3, -1500.0),
            (0.05, 0.25, -3000.0),
        ] {
            let target = world_from_local(
                &rig,
                PanTiltPose::new(alpha, beta),
                Point3::new(0.0, 0.0, sz),
            );
            let sol = solve_ik(&rig, target, &config).unwrap();
            assert!(sol.converged, "{sol:?}");
            assert!(sol.final_error < 1.0);
            assert!(sol.final_error < sol.initial_error);
            let reached = world_from_local(&rig, sol.pose, Point3::new(0.0, 0.0, sol.sz));
            assert!(reached.distance(target) < 1.0);
        }
    }

    #[test]
    fn rejects_zero_target_and_bad_config() {
        let rig = skewed_rig();
        assert_eq!(
            solve_ik(&rig, Point3::ORIGIN, &IKConfig::default()),
            Err(IkError::InvalidTarget)
        );
        let bad = IKConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            solve_ik(&rig, Point3::new(0.0, 0.0, -1.0), &bad),
            Err(IkError::InvalidConfig(_))
        ));
    }

    #[test]
    fn target_on_pan_axis_stalls() {
        // Camera at the origin on the pan axis; the target sits on that axis
        // so pan has no effect and the initial guess overshoots along it.
        let rig = PanTiltRig::ideal();
        let sol = solve_ik(&rig, Point3::new(0.0, 1000.0, 0.0), &IKConfig::default()).unwrap();
        assert!(sol.final_error.is_finite());
        if !sol.converged {
            assert!(sol.diagnostic.is_some());
        }
    }

    #[test]
    fn unreachable_target_is_range_limited() {
        // Directly behind the camera needs a half turn in pan.
        let rig = PanTiltRig::ideal();
        let config = IKConfig {
            angle_limit: 0.5,
            ..Default::default()
        };
        let sol = solve_ik(&rig, Point3::new(1500.0, 0.0, -200.0), &config).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.diagnostic, Some(IkDiagnostic::RangeLimited));
        assert!(sol.pose.alpha.abs() <= 0.5);
    }
}

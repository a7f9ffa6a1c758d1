//! Pan-tilt forward kinematics.
//!
//! A point expressed in the camera frame after rotating by `(alpha, beta)` maps
//! to the rest (world) frame through
//!
//! ```text
//! P_world = T_pan R_pan(alpha) T_pan^-1 T_tilt R_tilt(beta) T_tilt^-1 P_local
//! ```
//!
//! so the tilt rotation is applied first. The camera looks along local `-z`.

mod ik;

pub use ik::{
    finite_difference_jacobian, ik_jacobian, solve_ik, IKConfig, IKSolution, IkDiagnostic,
    IkParams, JacobianMode, STALL_DENOMINATOR,
};

use std::f64::consts::FRAC_PI_2;

use crate::error::RigError;
use crate::geom::{axis_rotation, AxisModel, Point3, Transform4};

/// Minimum angle between pan and tilt directions for a usable rig.
pub const MIN_AXIS_SEPARATION: f64 = 1e-3;

/// Default mechanical range for both angles, radians.
pub const DEFAULT_ANGLE_LIMIT: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanTiltRig {
    pub pan: AxisModel,
    pub tilt: AxisModel,
}

impl PanTiltRig {
    /// Builds a rig without checking the axes; see [`PanTiltRig::validate`].
    pub fn new(pan: AxisModel, tilt: AxisModel) -> Self {
        Self { pan, tilt }
    }

    pub fn validated(pan: AxisModel, tilt: AxisModel) -> Result<Self, RigError> {
        let rig = Self::new(pan, tilt);
        rig.validate()?;
        Ok(rig)
    }

    /// Rejects rigs whose axes are (anti)parallel.
    pub fn validate(&self) -> Result<(), RigError> {
        let angle = self.pan.direction.angle_to(self.tilt.direction);
        let separation = angle.min(std::f64::consts::PI - angle);
        if separation <= MIN_AXIS_SEPARATION {
            return Err(RigError::ParallelAxes { angle });
        }
        Ok(())
    }

    /// Pan about world +Y and tilt about world +X, both through the origin.
    pub fn ideal() -> Self {
        use crate::geom::UnitVec3;
        Self {
            pan: AxisModel {
                direction: UnitVec3::Y,
                pivot: Point3::ORIGIN,
            },
            tilt: AxisModel {
                direction: UnitVec3::X,
                pivot: Point3::ORIGIN,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PanTiltPose {
    /// Pan angle, radians.
    pub alpha: f64,
    /// Tilt angle, radians.
    pub beta: f64,
}

impl PanTiltPose {
    pub const REST: PanTiltPose = PanTiltPose {
        alpha: 0.0,
        beta: 0.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn from_degrees(alpha: f64, beta: f64) -> Self {
        Self::new(alpha.to_radians(), beta.to_radians())
    }

    /// Clamps both angles to `[-limit, limit]`.
    pub fn clamped(self, limit: f64) -> PanTiltPose {
        PanTiltPose {
            alpha: self.alpha.clamp(-limit, limit),
            beta: self.beta.clamp(-limit, limit),
        }
    }
}

pub fn forward_transform(rig: &PanTiltRig, pose: PanTiltPose) -> Transform4 {
    axis_rotation(&rig.pan, pose.alpha) * axis_rotation(&rig.tilt, pose.beta)
}

pub fn world_from_local(rig: &PanTiltRig, pose: PanTiltPose, p_local: Point3) -> Point3 {
    forward_transform(rig, pose).apply_point(p_local)
}

/// World position of the point `sz` along the local z axis.
pub fn optical_point(rig: &PanTiltRig, pose: PanTiltPose, sz: f64) -> Point3 {
    world_from_local(rig, pose, Point3::new(0.0, 0.0, sz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{rotate_about_axis, UnitVec3};
    use proptest::prelude::*;

    fn sample_rig() -> PanTiltRig {
        PanTiltRig::new(
            AxisModel::new(
                UnitVec3::new(0.05, 0.98, -0.18).unwrap(),
                Point3::new(-82.0, -458.0, 108.0),
            )
            .unwrap(),
            AxisModel::new(
                UnitVec3::new(0.99, -0.01, -0.06).unwrap(),
                Point3::new(-412.0, 153.0, 22.0),
            )
            .unwrap(),
        )
    }

    #[test]
    fn rest_pose_is_identity() {
        let m = forward_transform(&sample_rig(), PanTiltPose::REST);
        assert!(m.max_abs_diff(&Transform4::identity()) < 1e-12);
    }

    #[test]
    fn ideal_pan_swings_the_optical_axis() {
        let rig = PanTiltRig::ideal();
        for alpha in [-1.0, -0.3, 0.2, 1.1] {
            let p = world_from_local(
                &rig,
                PanTiltPose::new(alpha, 0.0),
                Point3::new(0.0, 0.0, -1.0),
            );
            assert!(p.distance(Point3::new(-alpha.sin(), 0.0, -alpha.cos())) < 1e-15);
        }
    }

    #[test]
    fn tilt_axis_points_are_fixed_by_tilt() {
        let rig = sample_rig();
        let p = rig.tilt.pivot + rig.tilt.direction.to_point() * 250.0;
        let q = world_from_local(&rig, PanTiltPose::new(0.0, 0.7), p);
        assert!(p.distance(q) < 1e-9);
    }

    #[test]
    fn parallel_axes_fail_validation() {
        let a = AxisModel::new(UnitVec3::Y, Point3::ORIGIN).unwrap();
        let b = AxisModel::new(-UnitVec3::Y, Point3::new(10.0, 0.0, 0.0)).unwrap();
        assert!(matches!(
            PanTiltRig::validated(a, b),
            Err(RigError::ParallelAxes { .. })
        ));
        assert!(sample_rig().validate().is_ok());
    }

    #[test]
    fn composition_order_is_tilt_then_pan() {
        let rig = sample_rig();
        let pose = PanTiltPose::new(0.4, -0.3);
        let swapped = axis_rotation(&rig.tilt, pose.beta) * axis_rotation(&rig.pan, pose.alpha);
        assert!(forward_transform(&rig, pose).max_abs_diff(&swapped) > 1e-3);
    }

    fn axis_strategy() -> impl Strategy<Value = AxisModel> {
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -500.0..500.0f64,
            -500.0..500.0f64,
            -500.0..500.0f64,
        )
            .prop_filter("nonzero", |(x, y, z, ..)| x * x + y * y + z * z > 1e-2)
            .prop_map(|(x, y, z, a, b, c)| {
                AxisModel::new(UnitVec3::new(x, y, z).unwrap(), Point3::new(a, b, c)).unwrap()
            })
    }

    proptest! {
        #[test]
        fn matches_sequential_axis_rotations(
            pan in axis_strategy(), tilt in axis_strategy(),
            alpha in -1.57..1.57f64, beta in -1.57..1.57f64,
            x in -3000.0..3000.0f64, y in -3000.0..3000.0f64, z in -3000.0..3000.0f64,
        ) {
            let rig = PanTiltRig::new(pan, tilt);
            let p = Point3::new(x, y, z);
            let expected = rotate_about_axis(rotate_about_axis(p, &tilt, beta), &pan, alpha);
            prop_assert!(world_from_local(&rig, PanTiltPose::new(alpha, beta), p).distance(expected) < 1e-9);
        }

        #[test]
        fn forward_transform_is_rigid(pan in axis_strategy(), tilt in axis_strategy(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
            let m = forward_transform(&PanTiltRig::new(pan, tilt), PanTiltPose::new(alpha, beta));
            prop_assert!(m.is_rigid(1e-10));
        }

        #[test]
        fn pivot_slides_leave_transform_unchanged(
            pan in axis_strategy(), tilt in axis_strategy(),
            alpha in -1.57..1.57f64, beta in -1.57..1.57f64,
            t_pan in -1e4..1e4f64, t_tilt in -1e4..1e4f64,
        ) {
            let rig = PanTiltRig::new(pan, tilt);
            let slid = PanTiltRig::new(pan.slid(t_pan), tilt.slid(t_tilt));
            let pose = PanTiltPose::new(alpha, beta);
            let probe = Point3::new(100.0, -200.0, -2000.0);
            let a = world_from_local(&rig, pose, probe);
            let b = world_from_local(&slid, pose, probe);
            prop_assert!(a.distance(b) < 1e-9);
        }
    }
}

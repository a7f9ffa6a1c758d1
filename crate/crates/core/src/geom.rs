//! Geometry primitives: points, unit directions, homogeneous 4x4 transforms,
//! and rotation about an arbitrary (off-origin) axis.
//!
//! Angles follow the right-hand rule: a positive angle rotates
//! counterclockwise when viewed from the tip of the axis direction.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::GeomError;

/// Norm below which a direction is considered degenerate.
pub const MIN_DIRECTION_NORM: f64 = 1e-9;

/// A point (or displacement) in 3D, millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A unit-length direction. Construction normalizes its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3 {
    nx: f64,
    ny: f64,
    nz: f64,
}

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3 {
        nx: 1.0,
        ny: 0.0,
        nz: 0.0,
    };
    pub const Y: UnitVec3 = UnitVec3 {
        nx: 0.0,
        ny: 1.0,
        nz: 0.0,
    };
    pub const Z: UnitVec3 = UnitVec3 {
        nx: 0.0,
        ny: 0.0,
        nz: 1.0,
    };

    /// Normalizes `(x, y, z)`. Inputs whose norm is already 1 to within a few
    /// ulps are stored verbatim.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < MIN_DIRECTION_NORM {
            return Err(GeomError::ZeroDirection { norm });
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self {
                nx: x,
                ny: y,
                nz: z,
            });
        }
        Ok(Self {
            nx: x / norm,
            ny: y / norm,
            nz: z / norm,
        })
    }

    pub fn from_point(p: Point3) -> Result<Self, GeomError> {
        Self::new(p.x, p.y, p.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self, GeomError> {
        Self::new(v.x, v.y, v.z)
    }

    pub fn x(&self) -> f64 {
        self.nx
    }

    pub fn y(&self) -> f64 {
        self.ny
    }

    pub fn z(&self) -> f64 {
        self.nz
    }

    pub fn to_point(self) -> Point3 {
        Point3::new(self.nx, self.ny, self.nz)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.nx, self.ny, self.nz)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn dot(self, other: UnitVec3) -> f64 {
        self.to_point().dot(other.to_point())
    }

    /// Angle to `other` in radians, in `[0, pi]`.
    pub fn angle_to(self, other: UnitVec3) -> f64 {
        let c = self.to_point().cross(other.to_point()).norm();
        c.atan2(self.dot(other))
    }

    /// Two unit vectors completing `self` to a right-handed orthonormal basis
    /// `(u, v, self)`.
    pub fn orthonormal_complement(self) -> (UnitVec3, UnitVec3) {
        let n = self.to_point();
        // Cross with the world axis least aligned with n.
        let helper = if self.nx.abs() <= self.ny.abs() && self.nx.abs() <= self.nz.abs() {
            Point3::new(1.0, 0.0, 0.0)
        } else if self.ny.abs() <= self.nz.abs() {
            Point3::new(0.0, 1.0, 0.0)
        } else {
            Point3::new(0.0, 0.0, 1.0)
        };
        let u = UnitVec3::from_point(helper.cross(n)).expect("helper is not parallel to n");
        let v = UnitVec3::from_point(n.cross(u.to_point())).expect("n and u are orthonormal");
        (u, v)
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;
    fn neg(self) -> UnitVec3 {
        UnitVec3 {
            nx: -self.nx,
            ny: -self.ny,
            nz: -self.nz,
        }
    }
}

impl fmt::Display for UnitVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.nx, self.ny, self.nz)
    }
}

/// Homogeneous 4x4 transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform4(Matrix4<f64>);

impl Transform4 {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Builds from 16 values in row-major order. The bottom row is forced to
    /// `(0, 0, 0, 1)`; an input that violates it is rejected.
    pub fn from_row_major(values: [f64; 16]) -> Result<Self, GeomError> {
        if values[12..] != [0.0, 0.0, 0.0, 1.0] {
            return Err(GeomError::NotHomogeneous);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self(Matrix4::from_row_slice(&values)))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation_block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Point3 {
        Point3::new(self.0[(0, 3)], self.0[(1, 3)], self.0[(2, 3)])
    }

    pub fn compose(&self, rhs: &Transform4) -> Transform4 {
        Transform4(self.0 * rhs.0)
    }

    pub fn apply_point(&self, p: Point3) -> Point3 {
        let m = &self.0;
        Point3::new(
            m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)] * p.z + m[(0, 3)],
            m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)] * p.z + m[(1, 3)],
            m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)] * p.z + m[(2, 3)],
        )
    }

    /// Applies only the linear part (directions are not translated).
    pub fn apply_vector(&self, v: Point3) -> Point3 {
        let m = &self.0;
        Point3::new(
            m[(0, 0)] * v.x + m[(0, 1)] * v.y + m[(0, 2)] * v.z,
            m[(1, 0)] * v.x + m[(1, 1)] * v.y + m[(1, 2)] * v.z,
            m[(2, 0)] * v.x + m[(2, 1)] * v.y + m[(2, 2)] * v.z,
        )
    }

    /// Inverse of a rigid transform: `[R^T | -R^T t]`.
    pub fn rigid_inverse(&self) -> Transform4 {
        let rt = self.rotation_block().transpose();
        let t = rt * self.translation().to_vector();
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
        m[(0, 3)] = -t.x;
        m[(1, 3)] = -t.y;
        m[(2, 3)] = -t.z;
        Transform4(m)
    }

    /// Frobenius norm of `R^T R - I` for the upper-left block.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation_block();
        (r.transpose() * r - Matrix3::identity()).norm()
    }

    /// True when the bottom row is exact, the rotation block is orthonormal
    /// within `tol` and its determinant is `1 +- tol`.
    pub fn is_rigid(&self, tol: f64) -> bool {
        let bottom = [
            self.0[(3, 0)],
            self.0[(3, 1)],
            self.0[(3, 2)],
            self.0[(3, 3)],
        ];
        bottom == [0.0, 0.0, 0.0, 1.0]
            && self.orthonormality_error() < tol
            && (self.rotation_block().determinant() - 1.0).abs() < tol
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Transform4) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

impl Mul for Transform4 {
    type Output = Transform4;
    fn mul(self, rhs: Transform4) -> Transform4 {
        self.compose(&rhs)
    }
}

/// A rotation axis: a unit direction through a pivot point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisModel {
    pub direction: UnitVec3,
    pub pivot: Point3,
}

impl AxisModel {
    pub fn new(direction: UnitVec3, pivot: Point3) -> Result<Self, GeomError> {
        if !pivot.is_finite() {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { direction, pivot })
    }

    /// Foot of the perpendicular from `p` onto the axis line.
    pub fn closest_point(&self, p: Point3) -> Point3 {
        let n = self.direction.to_point();
        self.pivot + n * (p - self.pivot).dot(n)
    }

    /// Same line with the pivot slid by `t` along the direction.
    pub fn slid(&self, t: f64) -> AxisModel {
        AxisModel {
            direction: self.direction,
            pivot: self.pivot + self.direction.to_point() * t,
        }
    }

    /// Shortest distance between two axis lines (zero for intersecting
    /// lines, point-line distance for parallel ones).
    pub fn line_distance(&self, other: &AxisModel) -> f64 {
        let n1 = self.direction.to_point();
        let n2 = other.direction.to_point();
        let w = other.pivot - self.pivot;
        let c = n1.cross(n2);
        let cn = c.norm();
        if cn < 1e-12 {
            return point_line_distance(other.pivot, self);
        }
        (w.dot(c) / cn).abs()
    }
}

/// Rotation by `theta` about `axis_dir` through the origin, entries exactly
/// as in the Rodrigues form with `C = cos(theta)` and `S = sin(theta)`.
pub fn rodrigues_rotation(axis_dir: UnitVec3, theta: f64) -> Transform4 {
    let (nx, ny, nz) = (axis_dir.x(), axis_dir.y(), axis_dir.z());
    let (s, c) = theta.sin_cos();
    let t = 1.0 - c;
    Transform4(Matrix4::new(
        c + nx * nx * t,
        nx * ny * t - nz * s,
        nx * nz * t + ny * s,
        0.0,
        ny * nx * t + nz * s,
        c + ny * ny * t,
        ny * nz * t - nx * s,
        0.0,
        nz * nx * t - ny * s,
        nz * ny * t + nx * s,
        c + nz * nz * t,
        0.0,
        0.0,
        0.0,
        0.0,
        1.0,
    ))
}

pub fn translation_matrix(p: Point3) -> Transform4 {
    let mut m = Matrix4::identity();
    m[(0, 3)] = p.x;
    m[(1, 3)] = p.y;
    m[(2, 3)] = p.z;
    Transform4(m)
}

/// `T(pivot) R(theta) T(pivot)^-1` as a single transform.
pub fn axis_rotation(axis: &AxisModel, theta: f64) -> Transform4 {
    translation_matrix(axis.pivot)
        * rodrigues_rotation(axis.direction, theta)
        * translation_matrix(-axis.pivot)
}

pub fn rotate_about_axis(point: Point3, axis: &AxisModel, theta: f64) -> Point3 {
    axis_rotation(axis, theta).apply_point(point)
}

pub fn point_line_distance(point: Point3, axis: &AxisModel) -> f64 {
    (point - axis.pivot).cross(axis.direction.to_point()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Unit, UnitQuaternion};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_point_eq(a: Point3, b: Point3, tol: f64) {
        assert!(a.distance(b) < tol, "{a} != {b} (tol {tol})");
    }

    #[test]
    fn zero_angle_is_identity() {
        let axis = UnitVec3::new(0.3, -0.4, 0.8).unwrap();
        let r = rodrigues_rotation(axis, 0.0);
        assert_eq!(r.max_abs_diff(&Transform4::identity()), 0.0);
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rodrigues_rotation(UnitVec3::Z, FRAC_PI_2);
        assert_point_eq(
            r.apply_point(Point3::new(1.0, 0.0, 0.0)),
            Point3::new(0.0, 1.0, 0.0),
            1e-15,
        );
    }

    #[test]
    fn diagonal_axis_cycles_basis_vectors() {
        let axis = UnitVec3::new(1.0, 1.0, 1.0).unwrap();
        let r = rodrigues_rotation(axis, 2.0 * PI / 3.0);
        let got = r.apply_point(Point3::new(1.0, 0.0, 0.0));
        assert_point_eq(got, Point3::new(0.0, 1.0, 0.0), 1e-15);

        // Independent route through a unit quaternion.
        let q = UnitQuaternion::from_axis_angle(
            &Unit::new_normalize(Vector3::new(1.0, 1.0, 1.0)),
            2.0 * PI / 3.0,
        );
        let expected = Point3::from_vector(&(q * Vector3::new(1.0, 0.0, 0.0)));
        assert_point_eq(got, expected, 1e-15);
    }

    #[test]
    fn translation_examples() {
        assert_eq!(translation_matrix(Point3::ORIGIN), Transform4::identity());
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(translation_matrix(p).apply_point(Point3::ORIGIN), p);
        let round = translation_matrix(p) * translation_matrix(-p);
        assert_eq!(round, Transform4::identity());
    }

    #[test]
    fn half_turn_about_offset_axis() {
        let axis = AxisModel::new(UnitVec3::Z, Point3::new(1.0, 0.0, 0.0)).unwrap();
        let got = rotate_about_axis(Point3::new(2.0, 0.0, 0.0), &axis, PI);
        assert_point_eq(got, Point3::ORIGIN, 1e-15);
    }

    #[test]
    fn point_on_axis_is_fixed() {
        let axis = AxisModel::new(
            UnitVec3::new(0.2, 0.9, -0.1).unwrap(),
            Point3::new(-80.0, 450.0, 100.0),
        )
        .unwrap();
        let p = axis.pivot + axis.direction.to_point() * 321.0;
        assert_point_eq(rotate_about_axis(p, &axis, 1.234), p, 1e-9);
    }

    #[test]
    fn point_line_distance_examples() {
        let axis = AxisModel::new(UnitVec3::Z, Point3::ORIGIN).unwrap();
        assert_eq!(point_line_distance(Point3::ORIGIN, &axis), 0.0);
        assert_abs_diff_eq!(point_line_distance(Point3::new(3.0, 4.0, 0.0), &axis), 5.0);
    }

    #[test]
    fn unit_vec_rejects_degenerate_input() {
        assert!(matches!(
            UnitVec3::new(0.0, 0.0, 0.0),
            Err(GeomError::ZeroDirection { .. })
        ));
        assert!(matches!(
            UnitVec3::new(1e-10, 0.0, 0.0),
            Err(GeomError::ZeroDirection { .. })
        ));
        assert!(matches!(
            UnitVec3::new(f64::NAN, 0.0, 1.0),
            Err(GeomError::NonFinite)
        ));
        let u = UnitVec3::new(0.0, 3.0, 4.0).unwrap();
        assert_eq!(u.to_array(), [0.0, 0.6, 0.8]);
    }

    #[test]
    fn from_row_major_checks_bottom_row() {
        let mut v = Transform4::identity().to_row_major();
        assert!(Transform4::from_row_major(v).is_ok());
        v[14] = 0.5;
        assert!(matches!(
            Transform4::from_row_major(v),
            Err(GeomError::NotHomogeneous)
        ));
    }

    #[test]
    fn rigid_inverse_undoes_transform() {
        let axis = AxisModel::new(
            UnitVec3::new(1.0, -2.0, 0.5).unwrap(),
            Point3::new(10.0, 20.0, -30.0),
        )
        .unwrap();
        let m = axis_rotation(&axis, 0.7);
        let id = m * m.rigid_inverse();
        assert!(id.max_abs_diff(&Transform4::identity()) < 1e-12);
    }

    fn unit_strategy() -> impl Strategy<Value = UnitVec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-4)
            .prop_map(|(x, y, z)| UnitVec3::new(x, y, z).unwrap())
    }

    fn point_strategy() -> impl Strategy<Value = Point3> {
        (-1000.0..1000.0f64, -1000.0..1000.0f64, -1000.0..1000.0f64)
            .prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn unit_vec_has_unit_norm(x in -1e6..1e6f64, y in -1e6..1e6f64, z in -1e6..1e6f64) {
            prop_assume!((x * x + y * y + z * z).sqrt() > 1e-6);
            let u = UnitVec3::new(x, y, z).unwrap();
            prop_assert!((u.to_point().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn same_axis_rotations_compose(axis in unit_strategy(), a in -PI..PI, b in -PI..PI) {
            let lhs = rodrigues_rotation(axis, a) * rodrigues_rotation(axis, b);
            let rhs = rodrigues_rotation(axis, a + b);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        }

        #[test]
        fn rotation_about_axis_is_isometry(
            dir in unit_strategy(), pivot in point_strategy(), theta in -PI..PI,
            p in point_strategy(), q in point_strategy(), r in point_strategy(),
        ) {
            let axis = AxisModel::new(dir, pivot).unwrap();
            let moved: Vec<Point3> = [p, q, r].iter().map(|&x| rotate_about_axis(x, &axis, theta)).collect();
            prop_assert!((p.distance(q) - moved[0].distance(moved[1])).abs() < 1e-9);
            prop_assert!((q.distance(r) - moved[1].distance(moved[2])).abs() < 1e-9);
            prop_assert!((p.distance(r) - moved[0].distance(moved[2])).abs() < 1e-9);
            let before = point_line_distance(p, &axis);
            let after = point_line_distance(moved[0], &axis);
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn point_line_distance_matches_dense_scan(dir in unit_strategy(), pivot in point_strategy(), p in point_strategy()) {
            let axis = AxisModel::new(dir, pivot).unwrap();
            let n = dir.to_point();
            // Coarse scan, then a fine scan around the best sample.
            let dist_at = |t: f64| p.distance(pivot + n * t);
            let mut best_t = 0.0;
            let mut best = f64::INFINITY;
            let mut t = -4000.0;
            while t <= 4000.0 {
                let d = dist_at(t);
                if d < best { best = d; best_t = t; }
                t += 1.0;
            }
            let mut t = best_t - 1.0;
            while t <= best_t + 1.0 {
                best = best.min(dist_at(t));
                t += 1e-4;
            }
            let exact = point_line_distance(p, &axis);
            prop_assert!(exact <= best + 1e-9);
            prop_assert!(best - exact < 1e-4);
        }
    }
}

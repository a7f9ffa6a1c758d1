//! Plane-family fit.
//!
//! Every corner `(i, j)` sweeps a circle lying in a plane orthogonal to the
//! rotation axis. Those planes share the normal `n` and their offsets are
//! affine in the corner indices:
//!
//! ```text
//! n . v_ijk + d + i * d_h + j * d_w = 0,   |n| = 1
//! ```
//!
//! For a fixed `n` the offsets `(d, d_h, d_w)` enter linearly, so they are
//! eliminated in closed form and the remaining problem is the smallest
//! eigenpair of a 3x3 symmetric matrix.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, SymmetricEigen, Vector2, Vector3};

use super::observations::CornerObservations;
use crate::error::CalibrationError;
use crate::geom::{Point3, UnitVec3};

/// Minimum ratio between the second-smallest and smallest reduced
/// eigenvalue for the normal to count as identified.
pub const MIN_EIGENGAP_RATIO: f64 = 10.0;

/// Second-smallest eigenvalue relative to the total scatter below which the
/// motion is considered absent altogether.
const MIN_RELATIVE_MOTION: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFamilyFit {
    pub normal: UnitVec3,
    pub d: f64,
    pub d_h: f64,
    pub d_w: f64,
    /// Root mean square of the plane residuals, millimeters.
    pub rms_residual: f64,
    /// Eigenvalues of the reduced problem in ascending order.
    pub eigenvalues: [f64; 3],
}

impl PlaneFamilyFit {
    /// Signed residual of one observation.
    pub fn residual(&self, v: Point3, i: usize, j: usize) -> f64 {
        self.normal.to_point().dot(v) + self.d + i as f64 * self.d_h + j as f64 * self.d_w
    }

    /// Along-axis offset of corner `(i, j)`'s plane relative to corner
    /// `(0, 0)`'s plane.
    pub fn index_offset(&self, i: usize, j: usize) -> f64 {
        i as f64 * self.d_h + j as f64 * self.d_w
    }

    /// Sum of squared residuals over the valid observations.
    pub fn sse(&self, obs: &CornerObservations) -> f64 {
        obs.valid_points()
            .map(|(_, i, j, v)| self.residual(v, i, j).powi(2))
            .sum()
    }

    /// The same plane family with the normal reversed.
    pub fn flipped(&self) -> PlaneFamilyFit {
        PlaneFamilyFit {
            normal: -self.normal,
            d: -self.d,
            d_h: -self.d_h,
            d_w: -self.d_w,
            ..*self
        }
    }
}

pub fn fit_plane_family(obs: &CornerObservations) -> Result<PlaneFamilyFit, CalibrationError> {
    if obs.frame_count() < 3 {
        return Err(CalibrationError::TooFewFrames(obs.frame_count()));
    }

    let mut count = 0usize;
    let mut centroid = Vector3::zeros();
    let mut mean_idx = Vector2::zeros();
    for (_, i, j, v) in obs.valid_points() {
        count += 1;
        centroid += v.to_vector();
        mean_idx += Vector2::new(i as f64, j as f64);
    }
    if count < 6 {
        return Err(CalibrationError::InsufficientCorners(format!(
            "{count} valid observations"
        )));
    }
    centroid /= count as f64;
    mean_idx /= count as f64;

    // Scatter blocks of the centered design [x y z | i j]. Centering makes the
    // constant column orthogonal to the rest, so `d` drops out until the end.
    let mut s_xx = Matrix3::zeros();
    let mut s_xs = Matrix3x2::zeros();
    let mut s_ss = Matrix2::zeros();
    for (_, i, j, v) in obs.valid_points() {
        let x = v.to_vector() - centroid;
        let s = Vector2::new(i as f64, j as f64) - mean_idx;
        s_xx += x * x.transpose();
        s_xs += x * s.transpose();
        s_ss += s * s.transpose();
    }

    let s_ss_inv = s_ss
        .try_inverse()
        .filter(|_| s_ss.determinant() > 1e-9)
        .ok_or_else(|| {
            CalibrationError::InsufficientCorners(
                "valid corners do not vary in both row and column".into(),
            )
        })?;

    let mut reduced = s_xx - s_xs * s_ss_inv * s_xs.transpose();
    // Symmetrize against round-off before the eigensolve.
    reduced = (reduced + reduced.transpose()) * 0.5;

    let eig = SymmetricEigen::new(reduced);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.map(|k| eig.eigenvalues[k]);
    let lambda_min = eigenvalues[0].max(0.0);
    let lambda_mid = eigenvalues[1];

    let scale = s_xx.trace();
    let ratio = if lambda_min > 0.0 {
        lambda_mid / lambda_min
    } else {
        f64::INFINITY
    };
    if lambda_mid <= MIN_RELATIVE_MOTION * scale || ratio < MIN_EIGENGAP_RATIO {
        let ratio = if lambda_mid <= MIN_RELATIVE_MOTION * scale {
            1.0
        } else {
            ratio
        };
        return Err(CalibrationError::DegenerateRotation { ratio });
    }

    let v = eig.eigenvectors.column(order[0]).into_owned();
    // Deterministic sign: largest-magnitude component positive. The
    // orientation rule in `calibrate_axis` may flip it afterwards.
    let imax = v.iamax();
    let v = if v[imax] < 0.0 { -v } else { v };
    let normal = UnitVec3::from_vector(&v)?;
    let n = normal.to_vector();

    let offsets = -(s_ss_inv * s_xs.transpose() * n);
    let (d_h, d_w) = (offsets[0], offsets[1]);
    let d = -(n.dot(&centroid) + mean_idx[0] * d_h + mean_idx[1] * d_w);

    let mut fit = PlaneFamilyFit {
        normal,
        d,
        d_h,
        d_w,
        rms_residual: 0.0,
        eigenvalues,
    };
    fit.rms_residual = (fit.sse(obs) / count as f64).sqrt();
    Ok(fit)
}

//! Circle-center fit conditioned on a plane family.
//!
//! Corner `(i, j)` circles about `p_ij = p - n * delta_ij` with
//! `delta_ij = i * d_h + j * d_w`, so all centers lie on one line and only
//! the base point `p` is shared. The objective per observation is
//!
//! ```text
//! |v_ijk - p_ij|^2 - r_ij^2
//! ```
//!
//! Absorbing `|p_ij|^2 - r_ij^2` into a free scalar per corner makes it linear
//! in `p` (the algebraic circle fit). The base point slides freely along `n`
//! without changing the circles, so `p` is solved in the plane orthogonal to
//! `n` and pinned to the `(0, 0)` corner's plane, `n . p = -d`.

use nalgebra::{Matrix2, Vector2};

use super::observations::CornerObservations;
use super::plane::PlaneFamilyFit;
use crate::error::CalibrationError;
use crate::geom::{Point3, UnitVec3};

/// Two observations closer than this count as the same position.
pub const DUPLICATE_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFitOptions {
    /// Run Gauss-Newton iterations on the circle objective after the linear
    /// solve.
    pub polish: bool,
    pub max_iterations: usize,
    /// Stop once every parameter moves less than this (mm).
    pub step_tolerance: f64,
}

impl Default for CircleFitOptions {
    fn default() -> Self {
        Self {
            polish: true,
            max_iterations: 20,
            step_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleFit {
    /// Center of corner `(0, 0)`'s circle; lies on the rotation axis.
    pub center: Point3,
    /// Per-corner radius in row-major order, `None` for corners without a
    /// usable trajectory.
    pub radii: Vec<Option<f64>>,
    /// RMS of geometric point-to-circle distances, millimeters.
    pub rms_residual: f64,
    /// Per-corner RMS of point-to-circle distances.
    pub per_corner_rms: Vec<Option<f64>>,
    /// Value of the algebraic objective (mm^4) at the solution.
    pub algebraic_sse: f64,
    pub polish_iterations: usize,
}

impl CircleFit {
    pub fn valid_corner_count(&self) -> usize {
        self.radii.iter().filter(|r| r.is_some()).count()
    }
}

/// Center of corner `(i, j)`'s circle given the base point.
pub fn corner_center(plane: &PlaneFamilyFit, base: Point3, i: usize, j: usize) -> Point3 {
    base - plane.normal.to_point() * plane.index_offset(i, j)
}

/// Out-of-plane and in-plane radial components of the distance from `v` to
/// the circle `(center, normal, radius)`.
pub fn circle_distance_components(
    v: Point3,
    center: Point3,
    normal: UnitVec3,
    radius: f64,
) -> (f64, f64) {
    let y = v - center;
    let n = normal.to_point();
    let axial = y.dot(n);
    let radial = (y - n * axial).norm() - radius;
    (axial, radial)
}

pub fn fit_circle_centers(
    obs: &CornerObservations,
    plane: &PlaneFamilyFit,
) -> Result<CircleFit, CalibrationError> {
    fit_circle_centers_with(obs, plane, &CircleFitOptions::default())
}

struct CornerTrack {
    index: usize,
    offset: f64,
    points: Vec<Point3>,
}

fn distinct_positions(points: &[Point3]) -> usize {
    let mut distinct: Vec<Point3> = Vec::new();
    for &p in points {
        if distinct
            .iter()
            .all(|q| q.distance(p) > DUPLICATE_TOLERANCE_MM)
        {
            distinct.push(p);
            if distinct.len() >= 3 {
                break;
            }
        }
    }
    distinct.len()
}

fn collect_tracks(
    obs: &CornerObservations,
    plane: &PlaneFamilyFit,
) -> Result<Vec<CornerTrack>, CalibrationError> {
    let board = obs.board();
    let total = board.corner_count();
    let mut tracks = Vec::new();
    for (i, j) in board.corners() {
        let points: Vec<Point3> = obs.corner_track(i, j).into_iter().map(|(_, p)| p).collect();
        if distinct_positions(&points) >= 3 {
            tracks.push(CornerTrack {
                index: board.index(i, j),
                offset: plane.index_offset(i, j),
                points,
            });
        }
    }
    if 2 * tracks.len() < total {
        return Err(CalibrationError::DegenerateTrajectory {
            valid: tracks.len(),
            total,
        });
    }
    Ok(tracks)
}

pub fn fit_circle_centers_with(
    obs: &CornerObservations,
    plane: &PlaneFamilyFit,
    options: &CircleFitOptions,
) -> Result<CircleFit, CalibrationError> {
    let total = obs.board().corner_count();
    let mut tracks = collect_tracks(obs, plane)?;

    // Work relative to the centroid for conditioning.
    let count: usize = tracks.iter().map(|t| t.points.len()).sum();
    let shift = tracks
        .iter()
        .flat_map(|t| t.points.iter())
        .fold(Point3::ORIGIN, |acc, &p| acc + p)
        * (1.0 / count as f64);
    for t in &mut tracks {
        for p in &mut t.points {
            *p = *p - shift;
        }
    }

    let normal = plane.normal;
    let n = normal.to_point();
    let d_shifted = plane.d + n.dot(shift);
    let (u1, u2) = normal.orthonormal_complement();
    let (u1, u2) = (u1.to_point(), u2.to_point());

    let base_at = |b: Vector2<f64>| u1 * b[0] + u2 * b[1] - n * d_shifted;
    let center_of = |b: Vector2<f64>, offset: f64| base_at(b) - n * offset;

    // Linear stage.
    let mut normal_matrix = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for t in &tracks {
        let rows: Vec<(Vector2<f64>, f64)> = t
            .points
            .iter()
            .map(|&x| {
                let g = Vector2::new(2.0 * u1.dot(x), 2.0 * u2.dot(x));
                let w = x.norm_squared() + 2.0 * (t.offset + d_shifted) * x.dot(n);
                (g, w)
            })
            .collect();
        let m = rows.len() as f64;
        let g_mean = rows.iter().fold(Vector2::zeros(), |acc, (g, _)| acc + g) / m;
        let w_mean = rows.iter().map(|(_, w)| w).sum::<f64>() / m;
        for (g, w) in &rows {
            let gc = g - g_mean;
            normal_matrix += gc * gc.transpose();
            rhs += gc * (w - w_mean);
        }
    }
    let mut b = solve_2x2(&normal_matrix, &rhs).ok_or_else(|| {
        CalibrationError::InsufficientCorners(
            "trajectories do not constrain the circle center".into(),
        )
    })?;

    let mean_sq_dist = |b: Vector2<f64>, t: &CornerTrack| {
        let c = center_of(b, t.offset);
        t.points
            .iter()
            .map(|&x| (x - c).norm_squared())
            .sum::<f64>()
            / t.points.len() as f64
    };
    let mut sq_radii: Vec<f64> = tracks.iter().map(|t| mean_sq_dist(b, t)).collect();

    // Gauss-Newton on the circle objective over (b, r_ij^2), with the
    // per-corner radius update eliminated in closed form.
    let mut polish_iterations = 0;
    if options.polish {
        for _ in 0..options.max_iterations {
            polish_iterations += 1;
            let mut jtj = Matrix2::zeros();
            let mut jtr = Vector2::zeros();
            let mut per_corner = Vec::with_capacity(tracks.len());
            for (t, &s) in tracks.iter().zip(&sq_radii) {
                let c = center_of(b, t.offset);
                let rows: Vec<(Vector2<f64>, f64)> = t
                    .points
                    .iter()
                    .map(|&x| {
                        let y = x - c;
                        (
                            Vector2::new(-2.0 * u1.dot(y), -2.0 * u2.dot(y)),
                            y.norm_squared() - s,
                        )
                    })
                    .collect();
                let m = rows.len() as f64;
                let h_mean = rows.iter().fold(Vector2::zeros(), |acc, (h, _)| acc + h) / m;
                let r_mean = rows.iter().map(|(_, r)| r).sum::<f64>() / m;
                for (h, r) in &rows {
                    let hc = h - h_mean;
                    jtj += hc * hc.transpose();
                    jtr += hc * (r - r_mean);
                }
                per_corner.push((h_mean, r_mean));
            }
            let Some(step_b) = solve_2x2(&jtj, &(-jtr)) else {
                break;
            };
            b += step_b;
            let mut max_step = step_b.amax();
            for ((h_mean, r_mean), s) in per_corner.iter().zip(sq_radii.iter_mut()) {
                let step_s = r_mean + h_mean.dot(&step_b);
                *s += step_s;
                // Express the squared-radius step as a radius step in mm.
                max_step = max_step.max(step_s.abs() / (2.0 * s.max(f64::MIN_POSITIVE).sqrt()));
            }
            if max_step < options.step_tolerance {
                break;
            }
        }
    }

    let center = base_at(b) + shift;
    for t in &mut tracks {
        for p in &mut t.points {
            *p = *p + shift;
        }
    }
    Ok(summarize(&tracks, total, plane, center, polish_iterations))
}

/// Radii, residuals and objective for a given base point, with each radius
/// set to its optimum `r_ij^2 = mean_k |v_ijk - p_ij|^2`.
pub fn evaluate_circle_fit(
    obs: &CornerObservations,
    plane: &PlaneFamilyFit,
    center: Point3,
) -> Result<CircleFit, CalibrationError> {
    let tracks = collect_tracks(obs, plane)?;
    Ok(summarize(
        &tracks,
        obs.board().corner_count(),
        plane,
        center,
        0,
    ))
}

fn summarize(
    tracks: &[CornerTrack],
    total: usize,
    plane: &PlaneFamilyFit,
    center: Point3,
    polish_iterations: usize,
) -> CircleFit {
    let normal = plane.normal;
    let n = normal.to_point();
    let mut radii = vec![None; total];
    let mut per_corner_rms = vec![None; total];
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut algebraic_sse = 0.0;
    for t in tracks {
        let c = center - n * t.offset;
        let s = t
            .points
            .iter()
            .map(|&x| (x - c).norm_squared())
            .sum::<f64>()
            / t.points.len() as f64;
        let r = s.sqrt();
        let mut corner_sq = 0.0;
        for &x in &t.points {
            let (axial, radial) = circle_distance_components(x, c, normal, r);
            corner_sq += axial * axial + radial * radial;
            algebraic_sse += ((x - c).norm_squared() - s).powi(2);
        }
        sum_sq += corner_sq;
        count += t.points.len();
        radii[t.index] = Some(r);
        per_corner_rms[t.index] = Some((corner_sq / t.points.len() as f64).sqrt());
    }
    CircleFit {
        center,
        radii,
        rms_residual: (sum_sq / count.max(1) as f64).sqrt(),
        per_corner_rms,
        algebraic_sse,
        polish_iterations,
    }
}

fn solve_2x2(m: &Matrix2<f64>, rhs: &Vector2<f64>) -> Option<Vector2<f64>> {
    let scale = m.abs().max();
    if scale.is_nan() || scale <= 0.0 || m.determinant().abs() <= 1e-14 * scale * scale {
        return None;
    }
    m.try_inverse().map(|inv| inv * rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{fit_plane_family, BoardSpec};
    use crate::geom::{rotate_about_axis, AxisModel};

    fn sweep(axis: &AxisModel, angles: &[f64]) -> CornerObservations {
        let board = BoardSpec::new(3, 4, 100.0, 100.0).unwrap();
        let origin = Point3::new(-150.0, 100.0, -1500.0);
        let rest: Vec<Point3> = board
            .corners()
            .map(|(i, j)| origin + Point3::new(100.0 * j as f64, -100.0 * i as f64, 0.0))
            .collect();
        let frames = angles
            .iter()
            .map(|&a| {
                rest.iter()
                    .map(|&p| rotate_about_axis(p, axis, a))
                    .collect()
            })
            .collect();
        CornerObservations::new(board, frames).unwrap()
    }

    #[test]
    fn center_lies_on_axis_in_first_corner_plane() {
        let axis = AxisModel::new(
            UnitVec3::new(0.02, 1.0, -0.15).unwrap(),
            Point3::new(-80.0, -450.0, 110.0),
        )
        .unwrap();
        let obs = sweep(&axis, &[-0.5, -0.25, 0.0, 0.25, 0.5]);
        let plane = fit_plane_family(&obs).unwrap();
        let fit = fit_circle_centers(&obs, &plane).unwrap();
        assert!(crate::geom::point_line_distance(fit.center, &axis) < 1e-6);
        assert!(plane.residual(fit.center, 0, 0).abs() < 1e-9);
        assert!(fit.rms_residual < 1e-6);
        for (idx, (i, j)) in obs.board().corners().enumerate() {
            let expected = crate::geom::point_line_distance(obs.point(0, i, j), &axis);
            assert!((fit.radii[idx].unwrap() - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn frozen_frames_fail() {
        let axis = AxisModel::new(UnitVec3::Y, Point3::ORIGIN).unwrap();
        let moving = sweep(&axis, &[-0.3, 0.0, 0.3]);
        let plane = fit_plane_family(&moving).unwrap();
        let frozen = sweep(&axis, &[0.1, 0.1, 0.1]);
        assert_eq!(
            fit_circle_centers(&frozen, &plane),
            Err(CalibrationError::DegenerateTrajectory {
                valid: 0,
                total: 12
            })
        );
    }

    #[test]
    fn tolerates_a_minority_of_dead_corners() {
        let axis = AxisModel::new(UnitVec3::Y, Point3::new(10.0, 0.0, -200.0)).unwrap();
        let mut obs = sweep(&axis, &[-0.3, -0.1, 0.1, 0.3]);
        // Corner (0, 0) keeps only two observations.
        obs.set_valid(0, 0, 0, false);
        obs.set_valid(1, 0, 0, false);
        let plane = fit_plane_family(&obs).unwrap();
        let fit = fit_circle_centers(&obs, &plane).unwrap();
        assert_eq!(fit.radii[0], None);
        assert_eq!(fit.valid_corner_count(), 11);
        assert!(crate::geom::point_line_distance(fit.center, &axis) < 1e-6);
    }

    #[test]
    fn polish_does_not_move_an_exact_linear_solution() {
        let axis = AxisModel::new(
            UnitVec3::new(1.0, 0.05, 0.02).unwrap(),
            Point3::new(-400.0, 150.0, 20.0),
        )
        .unwrap();
        let obs = sweep(&axis, &[-0.3, -0.1, 0.1, 0.3]);
        let plane = fit_plane_family(&obs).unwrap();
        let linear = fit_circle_centers_with(
            &obs,
            &plane,
            &CircleFitOptions {
                polish: false,
                ..Default::default()
            },
        )
        .unwrap();
        let polished = fit_circle_centers(&obs, &plane).unwrap();
        assert_eq!(linear.polish_iterations, 0);
        assert!(polished.polish_iterations >= 1);
        assert!(linear.center.distance(polished.center) < 1e-6);
    }
}

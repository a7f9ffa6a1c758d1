//! Optional joint refinement of the plane family and the circle base point.
//!
//! Minimizes the plane residuals together with the circle residuals over
//! `(n, d, d_h, d_w, p)`. Circle residuals `|v - p_ij|^2 - r_ij^2` are divided
//! by `2 r_ij` (frozen per outer iteration) so both groups are in millimeters,
//! and each `r_ij^2` is eliminated at its optimum. The base point is kept on
//! the `(0, 0)` corner's plane.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use super::circle::DUPLICATE_TOLERANCE_MM;
use super::observations::CornerObservations;
use super::plane::PlaneFamilyFit;
use crate::error::CalibrationError;
use crate::geom::{Point3, UnitVec3};

const PARAMS: usize = 7;

#[derive(Debug, Clone, Copy)]
struct State {
    normal: UnitVec3,
    d: f64,
    d_h: f64,
    d_w: f64,
    center: Point3,
}

struct Track {
    i: usize,
    j: usize,
    points: Vec<Point3>,
}

/// Local chart around a state: two tangent rotations of the normal, the three
/// offsets, and the base point's two in-plane coordinates.
struct Chart {
    origin: State,
    u1: Point3,
    u2: Point3,
}

impl Chart {
    fn new(origin: State) -> Self {
        let (u1, u2) = origin.normal.orthonormal_complement();
        Self {
            origin,
            u1: u1.to_point(),
            u2: u2.to_point(),
        }
    }

    fn state(&self, phi: &SVector<f64, PARAMS>) -> Result<State, CalibrationError> {
        let n0 = self.origin.normal.to_point();
        let normal = UnitVec3::from_point(n0 + self.u1 * phi[0] + self.u2 * phi[1])?;
        let n = normal.to_point();
        let d = self.origin.d + phi[2];
        let q = self.origin.center + self.u1 * phi[5] + self.u2 * phi[6];
        // Project onto the plane n . p = -d.
        let center = q - n * (n.dot(q) + d);
        Ok(State {
            normal,
            d,
            d_h: self.origin.d_h + phi[3],
            d_w: self.origin.d_w + phi[4],
            center,
        })
    }
}

fn residuals(
    state: &State,
    obs: &CornerObservations,
    tracks: &[Track],
    weights: &[f64],
    out: &mut Vec<f64>,
) {
    out.clear();
    let n = state.normal.to_point();
    for (_, i, j, v) in obs.valid_points() {
        out.push(n.dot(v) + state.d + i as f64 * state.d_h + j as f64 * state.d_w);
    }
    for (t, &w) in tracks.iter().zip(weights) {
        let c = state.center - n * (t.i as f64 * state.d_h + t.j as f64 * state.d_w);
        let sq: Vec<f64> = t.points.iter().map(|&x| (x - c).norm_squared()).collect();
        let mean = sq.iter().sum::<f64>() / sq.len() as f64;
        out.extend(sq.iter().map(|s| (s - mean) * w));
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Refines `(plane, center)` jointly. Returns the refined plane family, base
/// point and the number of accepted Gauss-Newton steps.
pub fn refine_jointly(
    obs: &CornerObservations,
    plane: &PlaneFamilyFit,
    center: Point3,
    max_iterations: usize,
) -> Result<(PlaneFamilyFit, Point3, usize), CalibrationError> {
    let board = obs.board();
    let tracks: Vec<Track> = board
        .corners()
        .filter_map(|(i, j)| {
            let points: Vec<Point3> = obs.corner_track(i, j).into_iter().map(|(_, p)| p).collect();
            let spread = points
                .iter()
                .any(|p| p.distance(points[0]) > DUPLICATE_TOLERANCE_MM);
            (points.len() >= 3 && spread).then_some(Track { i, j, points })
        })
        .collect();

    let mut state = State {
        normal: plane.normal,
        d: plane.d,
        d_h: plane.d_h,
        d_w: plane.d_w,
        center,
    };
    let mut r = Vec::new();
    let mut accepted = 0;

    for _ in 0..max_iterations {
        let n = state.normal.to_point();
        let weights: Vec<f64> = tracks
            .iter()
            .map(|t| {
                let c = state.center - n * (t.i as f64 * state.d_h + t.j as f64 * state.d_w);
                let mean_sq = t
                    .points
                    .iter()
                    .map(|&x| (x - c).norm_squared())
                    .sum::<f64>()
                    / t.points.len() as f64;
                0.5 / mean_sq.sqrt().max(DUPLICATE_TOLERANCE_MM)
            })
            .collect();

        let chart = Chart::new(state);
        residuals(&state, obs, &tracks, &weights, &mut r);
        let current = cost(&r);

        // Central-difference Jacobian in the local chart.
        let steps = [1e-7, 1e-7, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4];
        let mut jac = DMatrix::zeros(r.len(), PARAMS);
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (col, &h) in steps.iter().enumerate() {
            let mut phi = SVector::<f64, PARAMS>::zeros();
            phi[col] = h;
            residuals(&chart.state(&phi)?, obs, &tracks, &weights, &mut plus);
            phi[col] = -h;
            residuals(&chart.state(&phi)?, obs, &tracks, &weights, &mut minus);
            for row in 0..r.len() {
                jac[(row, col)] = (plus[row] - minus[row]) / (2.0 * h);
            }
        }
        let jtj: SMatrix<f64, PARAMS, PARAMS> = (jac.transpose() * &jac)
            .fixed_view::<PARAMS, PARAMS>(0, 0)
            .into();
        let jtr: SVector<f64, PARAMS> = (jac.transpose() * DVector::from_column_slice(&r))
            .fixed_view::<PARAMS, 1>(0, 0)
            .into();
        let Some(step) = jtj.cholesky().map(|c| c.solve(&(-jtr))) else {
            break;
        };

        // Halve the step until the cost decreases.
        let mut scale = 1.0;
        let mut improved = None;
        for _ in 0..12 {
            let candidate = chart.state(&(step * scale))?;
            residuals(&candidate, obs, &tracks, &weights, &mut plus);
            if cost(&plus) < current {
                improved = Some(candidate);
                break;
            }
            scale *= 0.5;
        }
        let Some(next) = improved else {
            break;
        };
        let moved = next
            .center
            .distance(state.center)
            .max(next.normal.angle_to(state.normal) * 1e3);
        state = next;
        accepted += 1;
        if moved < 1e-9 {
            break;
        }
    }

    let mut refined = PlaneFamilyFit {
        normal: state.normal,
        d: state.d,
        d_h: state.d_h,
        d_w: state.d_w,
        ..*plane
    };
    let count = obs.valid_points().count();
    refined.rms_residual = (refined.sse(obs) / count as f64).sqrt();
    Ok((refined, state.center, accepted))
}

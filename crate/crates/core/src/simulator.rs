//! Synthetic pan-tilt rig and checkerboard sweeps with known ground truth.
//!
//! A sweep rotates the board about one rig axis while the camera stays at
//! rest. That is the geometric dual of rotating the camera the other way: the
//! corners trace the same circles about the same axis line.
//!
//! Noise is isotropic Gaussian on each coordinate. Frame `k` draws from a
//! ChaCha8 generator seeded with `seed` on stream `k`, so frames are
//! reproducible independently of each other and of generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calibration::{BoardSpec, CornerObservations};
use crate::error::RigError;
use crate::geom::{rotate_about_axis, AxisModel, Point3, UnitVec3};
use crate::kinematics::PanTiltRig;

/// Recorded in observation files so datasets can be regenerated elsewhere.
pub const GENERATOR_NAME: &str = "chacha8-stream-per-frame/normal";

/// Pan direction as published, before renormalization.
pub const TABLE1_PAN_DIRECTION: [f64; 3] = [0.011783038, 0.982956803, -0.183458670];
pub const TABLE1_PAN_PIVOT: [f64; 3] = [-82.414993286, -458.764739990, 108.336227417];
pub const TABLE1_TILT_DIRECTION: [f64; 3] = [0.998429941, -0.007633507, -0.055492186];
pub const TABLE1_TILT_PIVOT: [f64; 3] = [-412.069976807, 153.644714355, 22.413515091];

/// Fixture board: 7x10 interior corners at 100 mm, top-left corner 2 m in
/// front of the camera, centered on the optical axis.
pub const TABLE1_BOARD_ROWS: usize = 7;
pub const TABLE1_BOARD_COLS: usize = 10;
pub const TABLE1_BOARD_PITCH_MM: f64 = 100.0;
pub const TABLE1_BOARD_ORIGIN: [f64; 3] = [-450.0, 300.0, -2000.0];

/// Default sweeps: uniformly spaced, in degrees.
pub const PAN_SWEEP_FRAMES: usize = 28;
pub const PAN_SWEEP_RANGE_DEG: (f64, f64) = (-30.0, 30.0);
pub const TILT_SWEEP_FRAMES: usize = 11;
pub const TILT_SWEEP_RANGE_DEG: (f64, f64) = (-20.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisChoice {
    Pan,
    Tilt,
}

impl AxisChoice {
    pub fn name(self) -> &'static str {
        match self {
            AxisChoice::Pan => "pan",
            AxisChoice::Tilt => "tilt",
        }
    }

    /// Default sweep `(frames, start_deg, end_deg)`.
    pub fn default_sweep(self) -> (usize, f64, f64) {
        match self {
            AxisChoice::Pan => (
                PAN_SWEEP_FRAMES,
                PAN_SWEEP_RANGE_DEG.0,
                PAN_SWEEP_RANGE_DEG.1,
            ),
            AxisChoice::Tilt => (
                TILT_SWEEP_FRAMES,
                TILT_SWEEP_RANGE_DEG.0,
                TILT_SWEEP_RANGE_DEG.1,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRigParams {
    pub pan_axis: AxisModel,
    pub tilt_axis: AxisModel,
    pub board: BoardSpec,
    /// Top-left corner at rest pose.
    pub board_origin: Point3,
    /// Direction of increasing column index.
    pub board_right: UnitVec3,
    /// Direction of increasing row index.
    pub board_down: UnitVec3,
}

impl SimRigParams {
    pub fn validate(&self) -> Result<(), RigError> {
        if self.board_right.dot(self.board_down).abs() > 1e-9 {
            return Err(RigError::InvalidSimParams(
                "board_right and board_down are not orthogonal".into(),
            ));
        }
        if !self.board_origin.is_finite() {
            return Err(RigError::InvalidSimParams(
                "board origin is not finite".into(),
            ));
        }
        Ok(())
    }

    pub fn rig(&self) -> PanTiltRig {
        PanTiltRig::new(self.pan_axis, self.tilt_axis)
    }

    pub fn axis(&self, which: AxisChoice) -> &AxisModel {
        match which {
            AxisChoice::Pan => &self.pan_axis,
            AxisChoice::Tilt => &self.tilt_axis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation per coordinate, millimeters.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        sigma: 0.0,
        seed: 0,
    };

    pub fn new(sigma: f64, seed: u64) -> Self {
        Self { sigma, seed }
    }
}

/// Rest-pose corner positions in row-major order.
pub fn corner_rest_positions(params: &SimRigParams) -> Vec<Point3> {
    let b = &params.board;
    let down = params.board_down.to_point();
    let right = params.board_right.to_point();
    b.corners()
        .map(|(i, j)| {
            params.board_origin + down * (i as f64 * b.pitch_h()) + right * (j as f64 * b.pitch_w())
        })
        .collect()
}

/// `count` angles evenly spaced from `start` to `end` inclusive.
pub fn uniform_angles(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn generate_axis_sweep(
    params: &SimRigParams,
    which: AxisChoice,
    angles: &[f64],
    noise: NoiseSpec,
) -> Result<CornerObservations, RigError> {
    params.validate()?;
    if angles.len() < 3 {
        return Err(RigError::InvalidSimParams(format!(
            "a sweep needs at least 3 angles, got {}",
            angles.len()
        )));
    }
    if !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(RigError::InvalidSimParams(format!(
            "sigma must be non-negative, got {}",
            noise.sigma
        )));
    }
    let axis = params.axis(which);
    let rest = corner_rest_positions(params);
    let normal =
        Normal::new(0.0, noise.sigma).map_err(|e| RigError::InvalidSimParams(e.to_string()))?;

    let frames = angles
        .iter()
        .enumerate()
        .map(|(k, &angle)| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(k as u64);
            rest.iter()
                .map(|&p| {
                    let q = rotate_about_axis(p, axis, angle);
                    if noise.sigma == 0.0 {
                        q
                    } else {
                        q + Point3::new(
                            normal.sample(&mut rng),
                            normal.sample(&mut rng),
                            normal.sample(&mut rng),
                        )
                    }
                })
                .collect()
        })
        .collect();
    CornerObservations::new(params.board, frames)
        .map_err(|e| RigError::InvalidSimParams(e.to_string()))
}

/// Sweep with the default frame count and angular range for `which`.
pub fn default_sweep(
    params: &SimRigParams,
    which: AxisChoice,
    noise: NoiseSpec,
) -> Result<CornerObservations, RigError> {
    let (frames, start, end) = which.default_sweep();
    generate_axis_sweep(
        params,
        which,
        &uniform_angles(start.to_radians(), end.to_radians(), frames),
        noise,
    )
}

fn fixture_board() -> (BoardSpec, Point3, UnitVec3, UnitVec3) {
    let board = BoardSpec::new(
        TABLE1_BOARD_ROWS,
        TABLE1_BOARD_COLS,
        TABLE1_BOARD_PITCH_MM,
        TABLE1_BOARD_PITCH_MM,
    )
    .expect("fixture board is valid");
    (
        board,
        Point3::from_array(TABLE1_BOARD_ORIGIN),
        UnitVec3::X,
        -UnitVec3::Y,
    )
}

/// The published rig with directions renormalized, and the fixture board.
pub fn make_table1_rig() -> SimRigParams {
    let dir =
        |d: [f64; 3]| UnitVec3::new(d[0], d[1], d[2]).expect("published direction is nonzero");
    let (board, board_origin, board_right, board_down) = fixture_board();
    SimRigParams {
        pan_axis: AxisModel {
            direction: dir(TABLE1_PAN_DIRECTION),
            pivot: Point3::from_array(TABLE1_PAN_PIVOT),
        },
        tilt_axis: AxisModel {
            direction: dir(TABLE1_TILT_DIRECTION),
            pivot: Point3::from_array(TABLE1_TILT_PIVOT),
        },
        board,
        board_origin,
        board_right,
        board_down,
    }
}

/// A rig whose pan and tilt axes are tilted away from world Y and X by a
/// uniformly drawn angle in `skew_deg`, with each axis line passing a
/// uniformly drawn distance in `offset_mm` from the origin. The pivot stored
/// is the foot of the perpendicular from the origin. Uses the fixture board.
pub fn misaligned_rig(seed: u64, skew_deg: (f64, f64), offset_mm: (f64, f64)) -> SimRigParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skewed = |base: UnitVec3, rng: &mut ChaCha8Rng| {
        let skew = rng.random_range(skew_deg.0..=skew_deg.1).to_radians();
        let (u, v) = base.orthonormal_complement();
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let tilt_dir = u.to_point() * phi.cos() + v.to_point() * phi.sin();
        UnitVec3::from_point(base.to_point() * skew.cos() + tilt_dir * skew.sin())
            .expect("unit combination")
    };
    let pivot = |direction: UnitVec3, rng: &mut ChaCha8Rng| {
        let dist = rng.random_range(offset_mm.0..=offset_mm.1);
        let (u, v) = direction.orthonormal_complement();
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        (u.to_point() * phi.cos() + v.to_point() * phi.sin()) * dist
    };
    let pan_dir = skewed(UnitVec3::Y, &mut rng);
    let tilt_dir = skewed(UnitVec3::X, &mut rng);
    let pan_pivot = pivot(pan_dir, &mut rng);
    let tilt_pivot = pivot(tilt_dir, &mut rng);
    let (board, board_origin, board_right, board_down) = fixture_board();
    SimRigParams {
        pan_axis: AxisModel {
            direction: pan_dir,
            pivot: pan_pivot,
        },
        tilt_axis: AxisModel {
            direction: tilt_dir,
            pivot: tilt_pivot,
        },
        board,
        board_origin,
        board_right,
        board_down,
    }
}

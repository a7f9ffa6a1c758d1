use crate::error::CalibrationError;
use crate::geom::{Point3, Transform4};

/// Checkerboard corner layout: `rows x cols` interior corners with the given
/// vertical (`pitch_h`) and horizontal (`pitch_w`) spacing in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardSpec {
    rows: usize,
    cols: usize,
    pitch_h: f64,
    pitch_w: f64,
}

impl BoardSpec {
    pub fn new(
        rows: usize,
        cols: usize,
        pitch_h: f64,
        pitch_w: f64,
    ) -> Result<Self, CalibrationError> {
        if rows < 2 || cols < 2 {
            return Err(CalibrationError::InvalidBoard(format!(
                "need at least 2x2 corners, got {rows}x{cols}"
            )));
        }
        if !(pitch_h > 0.0 && pitch_w > 0.0 && pitch_h.is_finite() && pitch_w.is_finite()) {
            return Err(CalibrationError::InvalidBoard(format!(
                "pitches must be positive, got {pitch_h} x {pitch_w}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            pitch_h,
            pitch_w,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pitch_h(&self) -> f64 {
        self.pitch_h
    }

    pub fn pitch_w(&self) -> f64 {
        self.pitch_w
    }

    pub fn corner_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major index of corner `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        i * self.cols + j
    }

    /// Iterates `(i, j)` in row-major order.
    pub fn corners(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| (i, j)))
    }
}

/// 3D checkerboard corners over a sequence of frames.
///
/// Each frame holds `rows * cols` points in row-major order (row `i` grows
/// downward, column `j` rightward). A corner flagged invalid in some frame is
/// ignored by every fit; its stored coordinates are never read.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerObservations {
    board: BoardSpec,
    frames: Vec<Vec<Point3>>,
    valid: Vec<Vec<bool>>,
}

impl CornerObservations {
    pub fn new(board: BoardSpec, frames: Vec<Vec<Point3>>) -> Result<Self, CalibrationError> {
        let valid = frames.iter().map(|f| vec![true; f.len()]).collect();
        Self::with_validity(board, frames, valid)
    }

    pub fn with_validity(
        board: BoardSpec,
        frames: Vec<Vec<Point3>>,
        valid: Vec<Vec<bool>>,
    ) -> Result<Self, CalibrationError> {
        if frames.is_empty() {
            return Err(CalibrationError::InvalidObservations("no frames".into()));
        }
        if valid.len() != frames.len() {
            return Err(CalibrationError::InvalidObservations(
                "validity flags do not match frame count".into(),
            ));
        }
        let expected = board.corner_count();
        for (k, (frame, flags)) in frames.iter().zip(&valid).enumerate() {
            if frame.len() != expected || flags.len() != expected {
                return Err(CalibrationError::InvalidObservations(format!(
                    "frame {k} has {} corners, expected {expected}",
                    frame.len()
                )));
            }
            if let Some(idx) = frame
                .iter()
                .zip(flags)
                .position(|(p, &ok)| ok && !p.is_finite())
            {
                return Err(CalibrationError::InvalidObservations(format!(
                    "frame {k} corner {idx} is flagged valid but not finite"
                )));
            }
        }
        Ok(Self {
            board,
            frames,
            valid,
        })
    }

    pub fn board(&self) -> &BoardSpec {
        &self.board
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Vec<Point3>] {
        &self.frames
    }

    pub fn validity(&self) -> &[Vec<bool>] {
        &self.valid
    }

    pub fn point(&self, k: usize, i: usize, j: usize) -> Point3 {
        self.frames[k][self.board.index(i, j)]
    }

    pub fn is_valid(&self, k: usize, i: usize, j: usize) -> bool {
        self.valid[k][self.board.index(i, j)]
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|f| f.iter().all(|&v| v))
    }

    /// Valid observations as `(frame, row, col, point)`.
    pub fn valid_points(&self) -> impl Iterator<Item = (usize, usize, usize, Point3)> + '_ {
        let cols = self.board.cols;
        self.frames.iter().enumerate().flat_map(move |(k, frame)| {
            frame
                .iter()
                .zip(&self.valid[k])
                .enumerate()
                .filter(|(_, (_, &ok))| ok)
                .map(move |(idx, (&p, _))| (k, idx / cols, idx % cols, p))
        })
    }

    /// Valid observations of corner `(i, j)` across frames.
    pub fn corner_track(&self, i: usize, j: usize) -> Vec<(usize, Point3)> {
        let idx = self.board.index(i, j);
        (0..self.frames.len())
            .filter(|&k| self.valid[k][idx])
            .map(|k| (k, self.frames[k][idx]))
            .collect()
    }

    /// Applies `t` to every stored point.
    pub fn transformed(&self, t: &Transform4) -> CornerObservations {
        CornerObservations {
            board: self.board,
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|&p| t.apply_point(p)).collect())
                .collect(),
            valid: self.valid.clone(),
        }
    }

    pub fn set_valid(&mut self, k: usize, i: usize, j: usize, valid: bool) {
        let idx = self.board.index(i, j);
        self.valid[k][idx] = valid;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(board: &BoardSpec, z: f64) -> Vec<Point3> {
        board
            .corners()
            .map(|(i, j)| Point3::new(j as f64 * board.pitch_w(), -(i as f64) * board.pitch_h(), z))
            .collect()
    }

    #[test]
    fn board_rejects_single_corner_layouts() {
        assert!(BoardSpec::new(1, 1, 100.0, 100.0).is_err());
        assert!(BoardSpec::new(2, 1, 100.0, 100.0).is_err());
        assert!(BoardSpec::new(2, 2, 0.0, 100.0).is_err());
        assert!(BoardSpec::new(7, 10, 100.0, 100.0).is_ok());
    }

    #[test]
    fn rejects_wrong_frame_size() {
        let board = BoardSpec::new(2, 3, 10.0, 10.0).unwrap();
        let mut frame = grid(&board, -100.0);
        frame.pop();
        assert!(CornerObservations::new(board, vec![frame]).is_err());
    }

    #[test]
    fn invalid_corners_may_hold_nan() {
        let board = BoardSpec::new(2, 2, 10.0, 10.0).unwrap();
        let mut frame = grid(&board, -100.0);
        frame[3] = Point3::new(f64::NAN, 0.0, 0.0);
        assert!(CornerObservations::new(board, vec![frame.clone()]).is_err());
        let valid = vec![vec![true, true, true, false]];
        let obs = CornerObservations::with_validity(board, vec![frame], valid).unwrap();
        assert_eq!(obs.valid_points().count(), 3);
    }

    #[test]
    fn valid_points_report_indices() {
        let board = BoardSpec::new(2, 3, 10.0, 20.0).unwrap();
        let obs =
            CornerObservations::new(board, vec![grid(&board, 0.0), grid(&board, 1.0)]).unwrap();
        let pts: Vec<_> = obs.valid_points().collect();
        assert_eq!(pts.len(), 12);
        assert_eq!(pts[4].0, 0);
        assert_eq!((pts[4].1, pts[4].2), (1, 1));
        assert_eq!(pts[4].3, obs.point(0, 1, 1));
        assert_eq!(pts[11].0, 1);
    }
}

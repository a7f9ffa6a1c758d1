//! Shared workloads for the criterion benches.

use pantilt_core::simulator::{default_sweep, make_table1_rig};
use pantilt_core::{AxisChoice, CornerObservations, NoiseSpec, Point3};

pub fn table1_sweep(which: AxisChoice, sigma: f64) -> CornerObservations {
    default_sweep(&make_table1_rig(), which, NoiseSpec::new(sigma, 7)).expect("table 1 sweep")
}

/// A grid of targets roughly two meters in front of the rig.
pub fn target_grid(rows: usize, cols: usize) -> Vec<Point3> {
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let x = -600.0 + 1200.0 * j as f64 / (cols.max(2) - 1) as f64;
            let y = -400.0 + 800.0 * i as f64 / (rows.max(2) - 1) as f64;
            out.push(Point3::new(x, y, -2000.0));
        }
    }
    out
}

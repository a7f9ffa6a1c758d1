use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pantilt_bench::{table1_sweep, target_grid};
use pantilt_core::calibration::{calibrate_axis, fit_plane_family};
use pantilt_core::evaluation::{run_targeting_experiment, AimModel, CameraIntrinsics};
use pantilt_core::kinematics::{forward_transform, solve_ik, IKConfig, PanTiltPose};
use pantilt_core::simulator::make_table1_rig;
use pantilt_core::AxisChoice;

fn bench_calibration(c: &mut Criterion) {
    let pan = table1_sweep(AxisChoice::Pan, 1.0);
    c.bench_function("plane_family_fit_pan", |b| {
        b.iter(|| fit_plane_family(black_box(&pan)).unwrap())
    });
    c.bench_function("calibrate_axis_pan", |b| {
        b.iter(|| calibrate_axis(black_box(&pan)).unwrap())
    });
}

fn bench_kinematics(c: &mut Criterion) {
    let rig = make_table1_rig().rig();
    let pose = PanTiltPose::from_degrees(12.0, -7.0);
    c.bench_function("forward_transform", |b| {
        b.iter(|| forward_transform(black_box(&rig), black_box(pose)))
    });

    let config = IKConfig::default();
    let target = pantilt_core::Point3::new(350.0, -200.0, -2200.0);
    c.bench_function("solve_ik", |b| {
        b.iter(|| solve_ik(black_box(&rig), black_box(target), &config).unwrap())
    });
}

fn bench_evaluation(c: &mut Criterion) {
    let rig = make_table1_rig().rig();
    let targets = target_grid(7, 10);
    let model = AimModel::Calibrated {
        rig,
        config: IKConfig::default(),
    };
    let k = CameraIntrinsics::kinect_v2_like();
    c.bench_function("targeting_70", |b| {
        b.iter(|| run_targeting_experiment(&rig, &model, black_box(&targets), &k).unwrap())
    });
}

criterion_group!(
    benches,
    bench_calibration,
    bench_kinematics,
    bench_evaluation
);
criterion_main!(benches);

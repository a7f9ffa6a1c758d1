use pantilt_core::calibration::calibrate_rig;
use pantilt_core::evaluation::{run_targeting_experiment, AimModel, CameraIntrinsics, TrialStatus};
use pantilt_core::kinematics::{optical_point, solve_ik, IKConfig, PanTiltPose, PanTiltRig};
use pantilt_core::simulator::{corner_rest_positions, default_sweep, make_table1_rig};
use pantilt_core::{AxisChoice, NoiseSpec};

fn tight() -> IKConfig {
    IKConfig {
        tolerance: 1e-6,
        max_iterations: 200,
        ..IKConfig::default()
    }
}

#[test]
fn ik_reaches_every_rest_corner() {
    let params = make_table1_rig();
    let rig = params.rig();
    for target in corner_rest_positions(&params) {
        let sol = solve_ik(&rig, target, &IKConfig::default()).unwrap();
        assert!(sol.converged && sol.final_error < 1.0, "{target:?}");
        let reached = optical_point(&rig, sol.pose, sol.sz);
        assert!(reached.distance(target) < 1.0);
    }
}

#[test]
fn ideal_rig_baseline_matches_calibrated_model() {
    let params = make_table1_rig();
    let targets = corner_rest_positions(&params);
    let rig = PanTiltRig::ideal();
    let k = CameraIntrinsics::kinect_v2_like();
    let model = AimModel::Calibrated {
        rig,
        config: tight(),
    };
    let calibrated = run_targeting_experiment(&rig, &model, &targets, &k)
        .unwrap()
        .metrics;
    let baseline = run_targeting_experiment(&rig, &AimModel::IdealBaseline, &targets, &k)
        .unwrap()
        .metrics;
    assert!(baseline.rmse_mm < 1e-9);
    assert!(calibrated.rmse_mm < 1e-5);
    assert!((calibrated.rmse_px - baseline.rmse_px).abs() < 1e-5);
}

#[test]
fn calibrated_table1_rig_beats_baseline_in_every_metric() {
    let params = make_table1_rig();
    let pan = default_sweep(&params, AxisChoice::Pan, NoiseSpec::NONE).unwrap();
    let tilt = default_sweep(&params, AxisChoice::Tilt, NoiseSpec::NONE).unwrap();
    let cal = calibrate_rig(&pan, &tilt).unwrap();
    assert!(cal.warnings.is_empty());

    let targets = corner_rest_positions(&params);
    let k = CameraIntrinsics::kinect_v2_like();
    let truth = params.rig();
    let model = AimModel::Calibrated {
        rig: cal.rig,
        config: IKConfig::default(),
    };
    let ours = run_targeting_experiment(&truth, &model, &targets, &k).unwrap();
    let base = run_targeting_experiment(&truth, &AimModel::IdealBaseline, &targets, &k).unwrap();
    assert_eq!(ours.records.len(), 70);
    assert!(ours.records.iter().all(|r| r.status == TrialStatus::Ok));

    let (a, b) = (ours.metrics, base.metrics);
    assert!(a.rmse_mm < 1.5);
    for (mine, theirs) in [
        (a.rmse_px, b.rmse_px),
        (a.rmse_mm, b.rmse_mm),
        (a.mae_x_px, b.mae_x_px),
        (a.mae_y_px, b.mae_y_px),
        (a.mae_x_mm, b.mae_x_mm),
        (a.mae_y_mm, b.mae_y_mm),
        (a.mae_z_mm, b.mae_z_mm),
    ] {
        assert!(mine < theirs, "{mine} >= {theirs}");
    }
    assert!(b.mae_z_mm > b.mae_x_mm && b.mae_z_mm > b.mae_y_mm);
}

#[test]
fn tighter_tolerance_shrinks_aim_error() {
    let params = make_table1_rig();
    let rig = params.rig();
    let targets = corner_rest_positions(&params);
    let k = CameraIntrinsics::kinect_v2_like();
    let model = AimModel::Calibrated {
        rig,
        config: tight(),
    };
    let report = run_targeting_experiment(&rig, &model, &targets, &k).unwrap();
    assert_eq!(report.metrics.converged, 70);
    assert!(report.metrics.rmse_mm < 1e-5);
}

#[test]
fn forward_generated_targets_round_trip_through_ik() {
    let rig = make_table1_rig().rig();
    for (alpha, beta, sz) in [
        (10.0, 5.0, -1500.0),
        (-25.0, 12.0, -3000.0),
        (3.0, -18.0, -900.0),
    ] {
        let pose = PanTiltPose::from_degrees(alpha, beta);
        let target = optical_point(&rig, pose, sz);
        let sol = solve_ik(&rig, target, &tight()).unwrap();
        assert!(sol.converged);
        assert!((sol.pose.alpha - pose.alpha).abs() < 1e-6);
        assert!((sol.pose.beta - pose.beta).abs() < 1e-6);
        assert!((sol.sz - sz).abs() < 1e-4);
    }
}

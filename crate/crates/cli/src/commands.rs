use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use pantilt_core::calibration::{CalibrationReport, CircleFitOptions, RigWarning};
use pantilt_core::evaluation::{run_targeting_experiment, AimModel, CameraIntrinsics};
use pantilt_core::formats::{
    parse_targets, serialize_report, serialize_trials_csv, ObservationsFile, RigModelFile,
};
use pantilt_core::kinematics::{world_from_local, JacobianMode};
use pantilt_core::simulator::{
    corner_rest_positions, generate_axis_sweep, uniform_angles, GENERATOR_NAME,
};
use pantilt_core::{
    calibrate_rig_with, solve_ik, AxisChoice, CalibrationOptions, IKConfig, NoiseSpec, PanTiltPose,
};

use crate::exit::{usage, NOT_CONVERGED};
use crate::io::{load_rig, parse_point, read_observations, read_rig_file, write_atomic};
use crate::{AxisArg, CalibrateArgs, EvaluateArgs, ForwardArgs, IkArgs, SimulateArgs, SolverArgs};

pub fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let which = match args.axis {
        AxisArg::Pan => AxisChoice::Pan,
        AxisArg::Tilt => AxisChoice::Tilt,
    };
    let (default_frames, default_start, default_end) = which.default_sweep();
    let frames = args.frames.unwrap_or(default_frames);
    if frames < 3 {
        return Err(usage(format!("--frames must be at least 3, got {frames}")));
    }
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(usage(format!(
            "--sigma must be non-negative, got {}",
            args.sigma
        )));
    }
    let start = args.start_deg.unwrap_or(default_start);
    let end = args.end_deg.unwrap_or(default_end);

    let params = match &args.rig {
        Some(path) => read_rig_file(path)?.sim_params().ok_or_else(|| {
            usage(format!(
                "{} has no board section to simulate from",
                path.display()
            ))
        })?,
        None => pantilt_core::simulator::make_table1_rig(),
    };
    let angles = uniform_angles(start.to_radians(), end.to_radians(), frames);
    let obs = generate_axis_sweep(
        &params,
        which,
        &angles,
        NoiseSpec::new(args.sigma, args.seed),
    )?;

    let file = ObservationsFile::new(obs)
        .with_metadata("generator", GENERATOR_NAME)
        .with_metadata("seed", args.seed)
        .with_metadata("sigma", pantilt_core::formats::format_f64(args.sigma))
        .with_metadata("axis", which.name())
        .with_metadata("start_deg", pantilt_core::formats::format_f64(start))
        .with_metadata("end_deg", pantilt_core::formats::format_f64(end));
    write_atomic(&args.out, &file.serialize())?;
    if let Some(truth) = &args.truth {
        write_atomic(truth, &RigModelFile::from_sim(&params).serialize())?;
    }
    println!(
        "wrote {} frames of {} corners to {}",
        frames,
        params.board.corner_count(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_axis(name: &str, report: &CalibrationReport) {
    let d = report.axis.direction;
    let p = report.axis.pivot;
    println!("{name} axis");
    println!("  direction      {:.9} {:.9} {:.9}", d.x(), d.y(), d.z());
    println!("  pivot (mm)     {:.6} {:.6} {:.6}", p.x, p.y, p.z);
    println!("  plane rms (mm) {:.6e}", report.plane_fit.rms_residual);
    println!("  circle rms (mm) {:.6e}", report.circle_fit.rms_residual);
    if let (Some(first), Some(last)) = (report.frame_angles.first(), report.frame_angles.last()) {
        println!(
            "  sweep (deg)    {:.3} .. {:.3} over {} frames",
            first.to_degrees(),
            last.to_degrees(),
            report.frame_angles.len()
        );
    }
}

pub fn calibrate(args: &CalibrateArgs) -> Result<ExitCode> {
    let pan = read_observations(&args.pan)?;
    let tilt = read_observations(&args.tilt)?;
    let options = CalibrationOptions {
        circle: CircleFitOptions {
            polish: !args.no_polish,
            ..CircleFitOptions::default()
        },
        joint_refine: args.joint_refine,
        ..CalibrationOptions::default()
    };
    let result = calibrate_rig_with(&pan.observations, &tilt.observations, &options)
        .context("calibrating")?;

    print_axis("pan", &result.pan);
    print_axis("tilt", &result.tilt);
    let between = result
        .rig
        .pan
        .direction
        .angle_to(result.rig.tilt.direction)
        .to_degrees();
    println!("angle between axes (deg) {between:.6}");
    for warning in &result.warnings {
        match warning {
            RigWarning::IdenticalAxes => {
                eprintln!("warning: pan and tilt sweeps produced the same axis")
            }
            RigWarning::ParallelAxes { angle } => {
                eprintln!(
                    "warning: pan and tilt axes are parallel ({:.3e} deg apart)",
                    angle.to_degrees()
                )
            }
        }
    }

    let mut file = RigModelFile::new(result.rig);
    for (name, report) in [("pan", &result.pan), ("tilt", &result.tilt)] {
        file.meta
            .insert(format!("{name}_plane_rms"), report.plane_fit.rms_residual);
        file.meta
            .insert(format!("{name}_circle_rms"), report.circle_fit.rms_residual);
        file.meta
            .insert(format!("{name}_frames"), report.frame_angles.len() as f64);
    }
    write_atomic(&args.out, &file.serialize())?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn forward(args: &ForwardArgs) -> Result<ExitCode> {
    let rig = load_rig(&args.rig)?.rig;
    let pose = PanTiltPose::from_degrees(args.pan_deg, args.tilt_deg);
    let p = world_from_local(&rig, pose, parse_point(&args.point)?);
    println!("{} {} {}", p.x, p.y, p.z);
    Ok(ExitCode::SUCCESS)
}

fn solver_config(args: &SolverArgs) -> Result<IKConfig> {
    let config = IKConfig {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
        sz_unit_scale: args.sz_scale,
        jacobian: if args.numeric_jacobian {
            JacobianMode::CentralDifference
        } else {
            JacobianMode::Analytic
        },
        ..IKConfig::default()
    };
    config.validate()?;
    Ok(config)
}

pub fn ik(args: &IkArgs) -> Result<ExitCode> {
    let rig = load_rig(&args.rig)?.rig;
    let target = parse_point(&args.target)?;
    let config = solver_config(&args.solver)?;
    let sol = solve_ik(&rig, target, &config)?;

    println!("alpha_rad {}", sol.pose.alpha);
    println!("beta_rad {}", sol.pose.beta);
    println!("alpha_deg {}", sol.pose.alpha.to_degrees());
    println!("beta_deg {}", sol.pose.beta.to_degrees());
    println!("sz_mm {}", sol.sz);
    println!("iterations {}", sol.iterations);
    println!("initial_error_mm {}", sol.initial_error);
    println!("final_error_mm {}", sol.final_error);
    println!("converged {}", sol.converged);
    if let Some(diag) = sol.diagnostic {
        println!("diagnostic {diag:?}");
    }
    if sol.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "error: solver stopped at {:.3} mm after {} iterations",
            sol.final_error, sol.iterations
        );
        Ok(ExitCode::from(NOT_CONVERGED))
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<ExitCode> {
    let truth = load_rig(&args.true_rig)?;
    let k = CameraIntrinsics::new(args.fx, args.fy, args.cx, args.cy)?;
    let model = match args.model.as_str() {
        "baseline" => AimModel::IdealBaseline,
        path => AimModel::Calibrated {
            rig: read_rig_file(Path::new(path))?.rig,
            config: solver_config(&args.solver)?,
        },
    };
    let targets = match &args.targets {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_targets(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let sim = truth
                .sim
                .ok_or_else(|| usage("--rest-corners needs a true rig with a board section"))?;
            corner_rest_positions(&sim)
        }
    };

    let report = run_targeting_experiment(&truth.rig, &model, &targets, &k)?;
    write_atomic(&args.out, &serialize_report(&report))?;
    if let Some(csv) = &args.trials_csv {
        write_atomic(csv, &serialize_trials_csv(&report))?;
    }
    let m = &report.metrics;
    println!("model {}", report.model);
    println!(
        "trials {} measured {} converged {}",
        m.trials, m.measured, m.converged
    );
    println!("rmse_px {:.4} rmse_mm {:.4}", m.rmse_px, m.rmse_mm);
    println!("mae_px x {:.4} y {:.4}", m.mae_x_px, m.mae_y_px);
    println!(
        "mae_mm x {:.4} y {:.4} z {:.4}",
        m.mae_x_mm, m.mae_y_mm, m.mae_z_mm
    );
    Ok(ExitCode::SUCCESS)
}

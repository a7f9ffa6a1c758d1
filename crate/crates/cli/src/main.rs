mod commands;
mod exit;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "pantilt",
    version,
    about = "Pan-tilt rig simulation, axis calibration and aiming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic single-axis sweep of board-corner observations.
    Simulate(SimulateArgs),
    /// Calibrate both rotation axes from pan and tilt sweeps.
    Calibrate(CalibrateArgs),
    /// Map a camera-frame point to the rest frame for a given pose.
    Forward(ForwardArgs),
    /// Solve pan, tilt and optical-axis length that aim at a target.
    Ik(IkArgs),
    /// Aim a true rig at a batch of targets and report aiming errors.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Pan,
    Tilt,
}

#[derive(Args)]
struct SimulateArgs {
    /// Use the built-in fixture rig.
    #[arg(long, conflicts_with = "rig", required_unless_present = "rig")]
    table1: bool,
    /// Rig model file with a board section.
    #[arg(long)]
    rig: Option<PathBuf>,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Number of frames (default: 28 for pan, 11 for tilt).
    #[arg(long)]
    frames: Option<usize>,
    /// First sweep angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    start_deg: Option<f64>,
    /// Last sweep angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    end_deg: Option<f64>,
    /// Per-coordinate noise standard deviation, mm.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observations output file.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the ground-truth rig model here.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Pan sweep observations.
    #[arg(long)]
    pan: PathBuf,
    /// Tilt sweep observations.
    #[arg(long)]
    tilt: PathBuf,
    /// Calibrated rig model output file.
    #[arg(long, short)]
    out: PathBuf,
    /// Skip the geometric Gauss-Newton polish of the circle fit.
    #[arg(long)]
    no_polish: bool,
    /// Refine plane family and circle center jointly.
    #[arg(long)]
    joint_refine: bool,
}

#[derive(Args)]
struct ForwardArgs {
    /// Rig model file, or `table1` / `ideal`.
    #[arg(long)]
    rig: String,
    #[arg(long, allow_hyphen_values = true)]
    pan_deg: f64,
    #[arg(long, allow_hyphen_values = true)]
    tilt_deg: f64,
    /// Camera-frame point as `x,y,z` in mm.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Convergence tolerance on the aim error, mm.
    #[arg(long, default_value_t = 1.0)]
    tolerance: f64,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Millimeters per unit of the optical-axis parameter.
    #[arg(long, default_value_t = 1000.0)]
    sz_scale: f64,
    /// Use a central-difference Jacobian instead of the analytic one.
    #[arg(long)]
    numeric_jacobian: bool,
}

#[derive(Args)]
struct IkArgs {
    /// Rig model file, or `table1` / `ideal`.
    #[arg(long)]
    rig: String,
    /// Target as `x,y,z` in mm, rest frame.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// True rig: model file, `table1` or `ideal`.
    #[arg(long = "true")]
    true_rig: String,
    /// Model used for aiming: rig file or `baseline`.
    #[arg(long)]
    model: String,
    /// Targets file with `x,y,z` rows.
    #[arg(
        long,
        conflicts_with = "rest_corners",
        required_unless_present = "rest_corners"
    )]
    targets: Option<PathBuf>,
    /// Use the true rig's board corners at rest as targets.
    #[arg(long)]
    rest_corners: bool,
    /// Report output file.
    #[arg(long, short)]
    out: PathBuf,
    /// Per-trial CSV output file.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1060.0)]
    fx: f64,
    #[arg(long, default_value_t = 1060.0)]
    fy: f64,
    #[arg(long, default_value_t = 960.0)]
    cx: f64,
    #[arg(long, default_value_t = 540.0)]
    cy: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Calibrate(args) => commands::calibrate(&args),
        Command::Forward(args) => commands::forward(&args),
        Command::Ik(args) => commands::ik(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::classify(&err))
        }
    }
}

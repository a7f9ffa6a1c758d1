//! Plain-text file formats.
//!
//! Observations are a comma-separated table with a `# key = value` header.
//! Rig models are flat `section.key = value` files. Both carry a
//! `format_version` key. Floats are written in Rust's shortest round-trip
//! form, so `parse(serialize(x)) == x` bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::calibration::{BoardSpec, CornerObservations};
use crate::error::FormatError;
use crate::evaluation::{TargetingReport, TrialStatus};
use crate::geom::{AxisModel, Point3, UnitVec3};
use crate::kinematics::PanTiltRig;
use crate::simulator::SimRigParams;

pub const FORMAT_VERSION: &str = "1";

const OBS_COLUMNS: &str = "frame,row,col,x,y,z,valid";
const TARGET_COLUMNS: &str = "x,y,z";

pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64, FormatError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| FormatError::syntax(line, format!("invalid number `{}`", s.trim())))
}

fn parse_usize(s: &str, line: usize) -> Result<usize, FormatError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| FormatError::syntax(line, format!("invalid integer `{}`", s.trim())))
}

fn check_version(found: Option<&String>) -> Result<(), FormatError> {
    match found {
        None => Err(FormatError::MissingKey("format_version".into())),
        Some(v) if v == FORMAT_VERSION => Ok(()),
        Some(v) => Err(FormatError::UnsupportedVersion(v.clone())),
    }
}

/// Observation table plus free-form header metadata (generator, seed, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationsFile {
    pub observations: CornerObservations,
    /// Header keys other than the board layout and frame count, in key order.
    pub metadata: BTreeMap<String, String>,
}

const OBS_RESERVED: [&str; 7] = [
    "format_version",
    "kind",
    "rows",
    "cols",
    "pitch_h",
    "pitch_w",
    "frames",
];

impl ObservationsFile {
    pub fn new(observations: CornerObservations) -> Self {
        Self {
            observations,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.metadata.get("seed").and_then(|s| s.parse().ok())
    }

    pub fn serialize(&self) -> String {
        let obs = &self.observations;
        let board = obs.board();
        let mut out = String::new();
        let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
        let _ = writeln!(out, "# kind = corner_observations");
        let _ = writeln!(out, "# rows = {}", board.rows());
        let _ = writeln!(out, "# cols = {}", board.cols());
        let _ = writeln!(out, "# pitch_h = {}", format_f64(board.pitch_h()));
        let _ = writeln!(out, "# pitch_w = {}", format_f64(board.pitch_w()));
        let _ = writeln!(out, "# frames = {}", obs.frame_count());
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(OBS_COLUMNS);
        out.push('\n');
        for (k, frame) in obs.frames().iter().enumerate() {
            for (idx, p) in frame.iter().enumerate() {
                let (i, j) = (idx / board.cols(), idx % board.cols());
                let valid = obs.validity()[k][idx];
                let _ = writeln!(
                    out,
                    "{k},{i},{j},{},{},{},{}",
                    format_f64(p.x),
                    format_f64(p.y),
                    format_f64(p.z),
                    u8::from(valid)
                );
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut rows: Vec<(usize, usize, usize, usize, Point3, bool)> = Vec::new();
        let mut saw_columns = false;

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if saw_columns {
                    continue;
                }
                if let Some((k, v)) = rest.split_once('=') {
                    let key = k.trim().to_string();
                    if header.insert(key.clone(), v.trim().to_string()).is_some() {
                        return Err(FormatError::syntax(
                            line_no,
                            format!("duplicate header key `{key}`"),
                        ));
                    }
                }
                continue;
            }
            if !saw_columns {
                if line.replace(' ', "") != OBS_COLUMNS {
                    return Err(FormatError::syntax(
                        line_no,
                        format!("expected column header `{OBS_COLUMNS}`"),
                    ));
                }
                saw_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(FormatError::syntax(
                    line_no,
                    format!("expected 7 fields, found {}", fields.len()),
                ));
            }
            let valid = match fields[6].trim() {
                "1" => true,
                "0" => false,
                other => {
                    return Err(FormatError::syntax(
                        line_no,
                        format!("valid flag must be 0 or 1, got `{other}`"),
                    ))
                }
            };
            rows.push((
                line_no,
                parse_usize(fields[0], line_no)?,
                parse_usize(fields[1], line_no)?,
                parse_usize(fields[2], line_no)?,
                Point3::new(
                    parse_f64(fields[3], line_no)?,
                    parse_f64(fields[4], line_no)?,
                    parse_f64(fields[5], line_no)?,
                ),
                valid,
            ));
        }

        check_version(header.get("format_version"))?;
        if !saw_columns {
            return Err(FormatError::Invalid("missing column header line".into()));
        }
        let get = |key: &str| {
            header
                .get(key)
                .ok_or_else(|| FormatError::MissingKey(key.to_string()))
        };
        let board = BoardSpec::new(
            parse_usize(get("rows")?, 0)?,
            parse_usize(get("cols")?, 0)?,
            parse_f64(get("pitch_h")?, 0)?,
            parse_f64(get("pitch_w")?, 0)?,
        )
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
        let frame_count = parse_usize(get("frames")?, 0)?;
        if frame_count == 0 {
            return Err(FormatError::Invalid("frame count must be positive".into()));
        }

        let corners = board.corner_count();
        let mut frames =
            vec![vec![Point3::new(f64::NAN, f64::NAN, f64::NAN); corners]; frame_count];
        let mut valid = vec![vec![false; corners]; frame_count];
        let mut seen = vec![vec![false; corners]; frame_count];
        for (line_no, k, i, j, p, ok) in rows {
            if k >= frame_count || i >= board.rows() || j >= board.cols() {
                return Err(FormatError::syntax(
                    line_no,
                    format!("index ({k}, {i}, {j}) out of bounds"),
                ));
            }
            let idx = board.index(i, j);
            if std::mem::replace(&mut seen[k][idx], true) {
                return Err(FormatError::syntax(
                    line_no,
                    format!("duplicate entry for ({k}, {i}, {j})"),
                ));
            }
            if ok && !p.is_finite() {
                return Err(FormatError::syntax(
                    line_no,
                    "valid corner with non-finite coordinates",
                ));
            }
            frames[k][idx] = p;
            valid[k][idx] = ok;
        }
        if let Some(k) = seen.iter().position(|f| f.iter().any(|s| !s)) {
            return Err(FormatError::Invalid(format!(
                "frame {k} is incomplete; list every corner and flag missing ones invalid"
            )));
        }

        let observations = CornerObservations::with_validity(board, frames, valid)
            .map_err(|e| FormatError::Invalid(e.to_string()))?;
        let metadata = header
            .into_iter()
            .filter(|(k, _)| !OBS_RESERVED.contains(&k.as_str()))
            .collect();
        Ok(Self {
            observations,
            metadata,
        })
    }
}

/// Board placement stored alongside a rig for simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardPlacement {
    pub board: BoardSpec,
    pub origin: Point3,
    pub right: UnitVec3,
    pub down: UnitVec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigModelFile {
    pub rig: PanTiltRig,
    pub board: Option<BoardPlacement>,
    /// Numeric metadata written as `meta.<key>`, e.g. calibration residuals.
    pub meta: BTreeMap<String, f64>,
}

impl RigModelFile {
    pub fn new(rig: PanTiltRig) -> Self {
        Self {
            rig,
            board: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn from_sim(params: &SimRigParams) -> Self {
        Self {
            rig: params.rig(),
            board: Some(BoardPlacement {
                board: params.board,
                origin: params.board_origin,
                right: params.board_right,
                down: params.board_down,
            }),
            meta: BTreeMap::new(),
        }
    }

    pub fn sim_params(&self) -> Option<SimRigParams> {
        self.board.map(|b| SimRigParams {
            pan_axis: self.rig.pan,
            tilt_axis: self.rig.tilt,
            board: b.board,
            board_origin: b.origin,
            board_right: b.right,
            board_down: b.down,
        })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# pan-tilt rig model (lengths in mm)");
        let _ = writeln!(out, "format_version = {FORMAT_VERSION}");
        let _ = writeln!(out, "kind = rig_model");
        for (name, axis) in [("pan", &self.rig.pan), ("tilt", &self.rig.tilt)] {
            let d = axis.direction;
            let p = axis.pivot;
            for (key, value) in [
                ("n_x", d.x()),
                ("n_y", d.y()),
                ("n_z", d.z()),
                ("a", p.x),
                ("b", p.y),
                ("c", p.z),
            ] {
                let _ = writeln!(out, "{name}.{key} = {}", format_f64(value));
            }
        }
        if let Some(b) = &self.board {
            let _ = writeln!(out, "board.rows = {}", b.board.rows());
            let _ = writeln!(out, "board.cols = {}", b.board.cols());
            let _ = writeln!(out, "board.pitch_h = {}", format_f64(b.board.pitch_h()));
            let _ = writeln!(out, "board.pitch_w = {}", format_f64(b.board.pitch_w()));
            for (prefix, v) in [
                ("origin", b.origin.to_array()),
                ("right", b.right.to_array()),
                ("down", b.down.to_array()),
            ] {
                for (axis, value) in ["x", "y", "z"].iter().zip(v) {
                    let _ = writeln!(out, "board.{prefix}_{axis} = {}", format_f64(value));
                }
            }
        }
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta.{k} = {}", format_f64(*v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FormatError::syntax(line_no, "expected `key = value`"))?;
            let key = k.trim().to_string();
            if values
                .insert(key.clone(), (line_no, v.trim().to_string()))
                .is_some()
            {
                return Err(FormatError::syntax(
                    line_no,
                    format!("duplicate key `{key}`"),
                ));
            }
        }
        check_version(values.get("format_version").map(|(_, v)| v))?;
        if let Some((line, kind)) = values.get("kind") {
            if kind != "rig_model" {
                return Err(FormatError::syntax(
                    *line,
                    format!("expected kind rig_model, got `{kind}`"),
                ));
            }
        }

        let num = |key: &str| -> Result<f64, FormatError> {
            let (line, v) = values
                .get(key)
                .ok_or_else(|| FormatError::MissingKey(key.to_string()))?;
            parse_f64(v, *line)
        };
        let axis = |name: &str| -> Result<AxisModel, FormatError> {
            let direction = UnitVec3::new(
                num(&format!("{name}.n_x"))?,
                num(&format!("{name}.n_y"))?,
                num(&format!("{name}.n_z"))?,
            )
            .map_err(|e| FormatError::Invalid(format!("{name} direction: {e}")))?;
            let pivot = Point3::new(
                num(&format!("{name}.a"))?,
                num(&format!("{name}.b"))?,
                num(&format!("{name}.c"))?,
            );
            AxisModel::new(direction, pivot)
                .map_err(|e| FormatError::Invalid(format!("{name} pivot: {e}")))
        };
        let rig = PanTiltRig::new(axis("pan")?, axis("tilt")?);

        let board = if values.keys().any(|k| k.starts_with("board.")) {
            let count = |key: &str| -> Result<usize, FormatError> {
                let (line, v) = values
                    .get(key)
                    .ok_or_else(|| FormatError::MissingKey(key.to_string()))?;
                parse_usize(v, *line)
            };
            let spec = BoardSpec::new(
                count("board.rows")?,
                count("board.cols")?,
                num("board.pitch_h")?,
                num("board.pitch_w")?,
            )
            .map_err(|e| FormatError::Invalid(e.to_string()))?;
            let vec3 = |prefix: &str| -> Result<[f64; 3], FormatError> {
                Ok([
                    num(&format!("board.{prefix}_x"))?,
                    num(&format!("board.{prefix}_y"))?,
                    num(&format!("board.{prefix}_z"))?,
                ])
            };
            let unit = |prefix: &str| -> Result<UnitVec3, FormatError> {
                let v = vec3(prefix)?;
                UnitVec3::new(v[0], v[1], v[2])
                    .map_err(|e| FormatError::Invalid(format!("board.{prefix}: {e}")))
            };
            Some(BoardPlacement {
                board: spec,
                origin: Point3::from_array(vec3("origin")?),
                right: unit("right")?,
                down: unit("down")?,
            })
        } else {
            None
        };

        let mut meta = BTreeMap::new();
        for (key, (line, v)) in &values {
            if let Some(name) = key.strip_prefix("meta.") {
                meta.insert(name.to_string(), parse_f64(v, *line)?);
            } else if !is_known_rig_key(key) {
                return Err(FormatError::syntax(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(Self { rig, board, meta })
    }
}

fn is_known_rig_key(key: &str) -> bool {
    const AXIS_KEYS: [&str; 6] = ["n_x", "n_y", "n_z", "a", "b", "c"];
    const BOARD_KEYS: [&str; 13] = [
        "rows", "cols", "pitch_h", "pitch_w", "origin_x", "origin_y", "origin_z", "right_x",
        "right_y", "right_z", "down_x", "down_y", "down_z",
    ];
    if key == "format_version" || key == "kind" {
        return true;
    }
    if let Some((section, field)) = key.split_once('.') {
        return match section {
            "pan" | "tilt" => AXIS_KEYS.contains(&field),
            "board" => BOARD_KEYS.contains(&field),
            _ => false,
        };
    }
    false
}

pub fn serialize_targets(targets: &[Point3]) -> String {
    let mut out =
        format!("# format_version = {FORMAT_VERSION}\n# kind = targets\n{TARGET_COLUMNS}\n");
    for t in targets {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_f64(t.x),
            format_f64(t.y),
            format_f64(t.z)
        );
    }
    out
}

/// Parses `x,y,z` rows. The column header is optional; `#` lines are
/// comments.
pub fn parse_targets(text: &str) -> Result<Vec<Point3>, FormatError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.replace(' ', "") == TARGET_COLUMNS {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(FormatError::syntax(
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let p = Point3::new(
            parse_f64(fields[0], line_no)?,
            parse_f64(fields[1], line_no)?,
            parse_f64(fields[2], line_no)?,
        );
        if !p.is_finite() {
            return Err(FormatError::syntax(line_no, "non-finite target"));
        }
        out.push(p);
    }
    Ok(out)
}

/// Aggregate metrics as a key-value file.
pub fn serialize_report(report: &TargetingReport) -> String {
    let m = &report.metrics;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# targeting report; mm errors are in the moved camera frame"
    );
    let _ = writeln!(out, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(out, "kind = targeting_report");
    let _ = writeln!(out, "model = {}", report.model);
    let _ = writeln!(out, "trials = {}", m.trials);
    let _ = writeln!(out, "measured = {}", m.measured);
    let _ = writeln!(out, "converged = {}", m.converged);
    for (k, v) in [
        ("rmse_px", m.rmse_px),
        ("rmse_mm", m.rmse_mm),
        ("mae_x_px", m.mae_x_px),
        ("mae_y_px", m.mae_y_px),
        ("mae_x_mm", m.mae_x_mm),
        ("mae_y_mm", m.mae_y_mm),
        ("mae_z_mm", m.mae_z_mm),
    ] {
        let _ = writeln!(out, "{k} = {}", format_f64(v));
    }
    out
}

fn status_label(status: &TrialStatus) -> String {
    match status {
        TrialStatus::Ok => "ok".into(),
        TrialStatus::NotConverged(Some(d)) => format!("not_converged:{d:?}"),
        TrialStatus::NotConverged(None) => "not_converged".into(),
        TrialStatus::GimbalDegenerate => "gimbal_degenerate".into(),
        TrialStatus::Failed(msg) => format!("failed:{}", msg.replace(',', ";")),
    }
}

/// One row per trial for external plotting.
pub fn serialize_trials_csv(report: &TargetingReport) -> String {
    let mut out = String::from(
        "trial,status,target_x,target_y,target_z,alpha,beta,predicted_sz,err_x_mm,err_y_mm,err_z_mm,err_u_px,err_v_px,iterations\n",
    );
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    for (n, r) in report.records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            status_label(&r.status),
            format_f64(r.target.x),
            format_f64(r.target.y),
            format_f64(r.target.z),
            opt(r.pose.map(|p| p.alpha)),
            opt(r.pose.map(|p| p.beta)),
            opt(r.pose.map(|_| r.predicted_sz)),
            opt(r.error_mm.map(|e| e.x)),
            opt(r.error_mm.map(|e| e.y)),
            opt(r.error_mm.map(|e| e.z)),
            opt(r.error_px.map(|e| e.0)),
            opt(r.error_px.map(|e| e.1)),
            r.ik_iterations.map(|i| i.to_string()).unwrap_or_default(),
        );
    }
    out
}

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use pantilt_core::formats::{ObservationsFile, RigModelFile};
use pantilt_core::simulator::make_table1_rig;
use pantilt_core::{PanTiltRig, Point3, SimRigParams};

use crate::exit::usage;

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_observations(path: &Path) -> Result<ObservationsFile> {
    ObservationsFile::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_rig_file(path: &Path) -> Result<RigModelFile> {
    RigModelFile::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// A rig named on the command line: `table1`, `ideal` or a model file.
pub struct RigSource {
    pub rig: PanTiltRig,
    pub sim: Option<SimRigParams>,
}

pub fn load_rig(spec: &str) -> Result<RigSource> {
    match spec {
        "table1" => {
            let sim = make_table1_rig();
            Ok(RigSource {
                rig: sim.rig(),
                sim: Some(sim),
            })
        }
        "ideal" => {
            let rig = PanTiltRig::ideal();
            let sim = SimRigParams {
                pan_axis: rig.pan,
                tilt_axis: rig.tilt,
                ..make_table1_rig()
            };
            Ok(RigSource {
                rig,
                sim: Some(sim),
            })
        }
        path => {
            let file = read_rig_file(Path::new(path))?;
            Ok(RigSource {
                rig: file.rig,
                sim: file.sim_params(),
            })
        }
    }
}

pub fn parse_point(text: &str) -> Result<Point3> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage(format!("expected a point as `x,y,z`, got `{text}`")));
    }
    let mut xyz = [0.0; 3];
    for (slot, part) in xyz.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| usage(format!("invalid coordinate `{part}` in `{text}`")))?;
    }
    let p = Point3::from_array(xyz);
    if !p.is_finite() {
        return Err(usage(format!("point `{text}` is not finite")));
    }
    Ok(p)
}

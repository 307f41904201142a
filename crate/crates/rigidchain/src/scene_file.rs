//! JSON scene files.
//!
//! ```json
//! {
//!   "room": { "size_x": 4, "size_y": 3, "size_z": 5 },
//!   "gravity": 9.80665,
//!   "clearance": 0.05,
//!   "platform": { "attachment_offsets": [[0,0,0], ...], "mass": 10, "payload_mass": 0 },
//!   "drives": [{ "anchor": [0,0,4], "length_min": 0.2, ... }, ...]
//! }
//! ```
//!
//! Units are SI throughout. Unknown keys are rejected. Optional keys and
//! their defaults: `gravity` (9.80665), `clearance` (0.05),
//! `payload_mass` (0), per drive `error_coefficient` (2e-4),
//! `gimbal_cone_half_angle` (π/2) and `compression_limit`
//! (0.25 × `tension_limit`).

use std::fs;
use std::path::{Path, PathBuf};

use rigidchain_core::scene::{
    DEFAULT_CLEARANCE, DEFAULT_COMPRESSION_RATIO, DEFAULT_ERROR_COEFFICIENT, DEFAULT_GIMBAL_CONE_HALF_ANGLE,
    DEFAULT_GRAVITY,
};
use rigidchain_core::{ChainDrive, InvalidScene, Platform, Room, Scene, SceneDescription, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SceneFileError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] InvalidScene),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    room: RoomDoc,
    #[serde(default = "default_gravity")]
    gravity: f64,
    #[serde(default = "default_clearance")]
    clearance: f64,
    platform: PlatformDoc,
    drives: Vec<DriveDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomDoc {
    size_x: f64,
    size_y: f64,
    size_z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformDoc {
    attachment_offsets: Vec<[f64; 3]>,
    mass: f64,
    #[serde(default)]
    payload_mass: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveDoc {
    anchor: [f64; 3],
    length_min: f64,
    length_max: f64,
    stored_length: f64,
    pitch: f64,
    resolution: f64,
    speed_max: f64,
    accel_max: f64,
    #[serde(default = "default_error_coefficient")]
    error_coefficient: f64,
    tension_limit: f64,
    #[serde(default)]
    compression_limit: Option<f64>,
    #[serde(default = "default_gimbal")]
    gimbal_cone_half_angle: f64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

fn default_clearance() -> f64 {
    DEFAULT_CLEARANCE
}

fn default_error_coefficient() -> f64 {
    DEFAULT_ERROR_COEFFICIENT
}

fn default_gimbal() -> f64 {
    DEFAULT_GIMBAL_CONE_HALF_ANGLE
}

impl From<SceneDoc> for SceneDescription {
    fn from(doc: SceneDoc) -> Self {
        SceneDescription {
            room: Room::new(doc.room.size_x, doc.room.size_y, doc.room.size_z),
            drives: doc
                .drives
                .into_iter()
                .map(|d| ChainDrive {
                    anchor: Vec3::from_array(d.anchor),
                    length_min: d.length_min,
                    length_max: d.length_max,
                    stored_length: d.stored_length,
                    pitch: d.pitch,
                    resolution: d.resolution,
                    speed_max: d.speed_max,
                    accel_max: d.accel_max,
                    error_coefficient: d.error_coefficient,
                    tension_limit: d.tension_limit,
                    compression_limit: d.compression_limit.unwrap_or(DEFAULT_COMPRESSION_RATIO * d.tension_limit),
                    gimbal_cone_half_angle: d.gimbal_cone_half_angle,
                })
                .collect(),
            platform: Platform {
                attachment_offsets: doc.platform.attachment_offsets.into_iter().map(Vec3::from_array).collect(),
                mass: doc.platform.mass,
                payload_mass: doc.platform.payload_mass,
            },
            gravity: doc.gravity,
            clearance: doc.clearance,
        }
    }
}

impl From<&SceneDescription> for SceneDoc {
    fn from(desc: &SceneDescription) -> Self {
        SceneDoc {
            room: RoomDoc { size_x: desc.room.size_x, size_y: desc.room.size_y, size_z: desc.room.size_z },
            gravity: desc.gravity,
            clearance: desc.clearance,
            platform: PlatformDoc {
                attachment_offsets: desc.platform.attachment_offsets.iter().map(|o| o.to_array()).collect(),
                mass: desc.platform.mass,
                payload_mass: desc.platform.payload_mass,
            },
            drives: desc
                .drives
                .iter()
                .map(|d| DriveDoc {
                    anchor: d.anchor.to_array(),
                    length_min: d.length_min,
                    length_max: d.length_max,
                    stored_length: d.stored_length,
                    pitch: d.pitch,
                    resolution: d.resolution,
                    speed_max: d.speed_max,
                    accel_max: d.accel_max,
                    error_coefficient: d.error_coefficient,
                    tension_limit: d.tension_limit,
                    compression_limit: Some(d.compression_limit),
                    gimbal_cone_half_angle: d.gimbal_cone_half_angle,
                })
                .collect(),
        }
    }
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene, SceneFileError> {
    let doc: SceneDoc =
        serde_json::from_str(text).map_err(|e| SceneFileError::Parse { line: e.line(), message: e.to_string() })?;
    Ok(SceneDescription::from(doc).validate()?)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneFileError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SceneFileError::Io { path: path.to_owned(), source })?;
    parse_scene(&text)
}

/// Pretty-printed document with every key written out.
pub fn scene_to_json(scene: &Scene) -> String {
    let mut text = serde_json::to_string_pretty(&SceneDoc::from(scene.description()))
        .expect("scene documents contain only numbers and arrays");
    text.push('\n');
    text
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, scene_to_json(scene))
}

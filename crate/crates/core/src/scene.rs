//! World model: room box, chain drives, floating platform.
//!
//! Frame convention: z up, floor at z = 0, the room occupies
//! `[0, size_x] × [0, size_y] × [0, size_z]`. SI units throughout.
//!
//! A [`SceneDescription`] is plain unvalidated data; [`validate_scene`] turns it
//! into an immutable [`Scene`] or reports every violated constraint at once.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Point3, Vec3};

/// Cumulative joint-play error per meter of deployed chain (1 mm over 5 m).
pub const DEFAULT_ERROR_COEFFICIENT: f64 = 2.0e-4;
/// Standard gravity, m/s².
pub const DEFAULT_GRAVITY: f64 = 9.80665;
/// Minimum chain-to-chain distance, m.
pub const DEFAULT_CLEARANCE: f64 = 0.05;
/// Universal joints are unrestricted unless configured otherwise.
pub const DEFAULT_GIMBAL_CONE_HALF_ANGLE: f64 = core::f64::consts::FRAC_PI_2;
/// Buckling proxy used when a scene file omits `compression_limit`.
pub const DEFAULT_COMPRESSION_RATIO: f64 = 0.25;

pub const MIN_DRIVES: usize = 3;
pub const MAX_DRIVES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub size_x: f64,
    pub size_y: f64,
    pub size_z: f64,
}

impl Room {
    pub fn new(size_x: f64, size_y: f64, size_z: f64) -> Self {
        Room { size_x, size_y, size_z }
    }

    /// Closed-box containment.
    pub fn contains(&self, p: Point3) -> bool {
        (0.0..=self.size_x).contains(&p.x) && (0.0..=self.size_y).contains(&p.y) && (0.0..=self.size_z).contains(&p.z)
    }

    pub fn size(&self) -> Vec3 {
        Vec3::new(self.size_x, self.size_y, self.size_z)
    }

    pub fn volume(&self) -> f64 {
        self.size_x * self.size_y * self.size_z
    }
}

/// One ceiling-mounted rigid-chain drive with its storage magazine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDrive {
    /// Exit point of the chain from its housing.
    pub anchor: Point3,
    pub length_min: f64,
    pub length_max: f64,
    /// Total chain held in the folded magazine.
    pub stored_length: f64,
    /// Link pitch (sprocket engagement step).
    pub pitch: f64,
    /// Smallest commandable length increment.
    pub resolution: f64,
    pub speed_max: f64,
    pub accel_max: f64,
    /// Length error per meter deployed.
    pub error_coefficient: f64,
    /// Maximum pulling force, N.
    pub tension_limit: f64,
    /// Maximum pushing force before buckling, N.
    pub compression_limit: f64,
    /// Maximum angle between chain axis and the world vertical at the joint.
    pub gimbal_cone_half_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    /// World-frame offsets from the platform reference point to each gimbal center.
    pub attachment_offsets: Vec<Vec3>,
    pub mass: f64,
    pub payload_mass: f64,
}

/// Unvalidated scene data, field-for-field what the scene file carries.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub room: Room,
    pub drives: Vec<ChainDrive>,
    pub platform: Platform,
    pub gravity: f64,
    pub clearance: f64,
}

/// One violated scene constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Stable constraint identifier, e.g. `length-bounds`.
    pub constraint: &'static str,
    /// Offending drive, when the constraint is per drive.
    pub drive: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.drive {
            Some(i) => write!(f, "drive {i}: {}", self.constraint),
            None => f.write_str(self.constraint),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid scene: {}", join_violations(.violations))]
pub struct InvalidScene {
    pub violations: Vec<Violation>,
}

impl InvalidScene {
    /// Constraint identifiers in report order.
    pub fn names(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.constraint).collect()
    }
}

fn join_violations(v: &[Violation]) -> String {
    let parts: Vec<String> = v.iter().map(|v| format!("{v}")).collect();
    parts.join(", ")
}

/// Validated, immutable world model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    desc: SceneDescription,
}

/// Checks every scene invariant and collects all violations.
pub fn validate_scene(desc: SceneDescription) -> Result<Scene, InvalidScene> {
    let mut violations = Vec::new();
    let mut push = |constraint: &'static str, drive: Option<usize>| violations.push(Violation { constraint, drive });

    let room = desc.room;
    let room_ok = [room.size_x, room.size_y, room.size_z].iter().all(|s| s.is_finite() && *s > 0.0);
    if !room_ok {
        push("room-size", None);
    }
    if !(desc.gravity.is_finite() && desc.gravity >= 0.0) {
        push("gravity", None);
    }
    if !(desc.clearance.is_finite() && desc.clearance >= 0.0) {
        push("clearance", None);
    }

    let n = desc.drives.len();
    let count_ok = (MIN_DRIVES..=MAX_DRIVES).contains(&n);
    if !count_ok {
        push("drive-count", None);
    }

    let platform = &desc.platform;
    let offsets_ok = platform.attachment_offsets.len() == n;
    if !offsets_ok {
        push("offset-count", None);
    }
    let offsets_finite = platform.attachment_offsets.iter().all(|r| r.is_finite());
    if !offsets_finite {
        push("non-finite-offset", None);
    }
    if !(platform.mass.is_finite() && platform.mass >= 0.0) {
        push("mass", None);
    }
    if !(platform.payload_mass.is_finite() && platform.payload_mass >= 0.0) {
        push("payload-mass", None);
    }

    let mut anchors_finite = true;
    for (i, d) in desc.drives.iter().enumerate() {
        let i = Some(i);
        if !d.anchor.is_finite() {
            anchors_finite = false;
            push("non-finite-anchor", i);
        } else if room_ok && !room.contains(d.anchor) {
            push("anchor-outside-room", i);
        }
        let lengths_ok = d.length_min.is_finite()
            && d.length_max.is_finite()
            && d.stored_length.is_finite()
            && 0.0 <= d.length_min
            && d.length_min < d.length_max
            && d.length_max <= d.stored_length;
        if !lengths_ok {
            push("length-bounds", i);
        }
        if !(d.resolution.is_finite() && d.pitch.is_finite() && 0.0 < d.resolution && d.resolution <= d.pitch) {
            push("resolution-bounds", i);
        }
        if !(d.speed_max.is_finite() && d.speed_max > 0.0) {
            push("speed-limit", i);
        }
        if !(d.accel_max.is_finite() && d.accel_max > 0.0) {
            push("accel-limit", i);
        }
        if !(d.error_coefficient.is_finite() && d.error_coefficient >= 0.0) {
            push("error-coefficient", i);
        }
        if !(d.tension_limit.is_finite() && d.tension_limit > 0.0) {
            push("tension-limit", i);
        }
        if !(d.compression_limit.is_finite() && d.compression_limit > 0.0) {
            push("compression-limit", i);
        }
        let cone = d.gimbal_cone_half_angle;
        if !(cone > 0.0 && cone <= core::f64::consts::FRAC_PI_2) {
            push("gimbal-cone", i);
        }
    }

    if n >= MIN_DRIVES && offsets_ok && offsets_finite && anchors_finite {
        let effective: Vec<Point3> =
            desc.drives.iter().zip(&platform.attachment_offsets).map(|(d, r)| d.anchor - *r).collect();
        if points_collinear(&effective) {
            push("anchors-collinear", None);
        }
    }

    if violations.is_empty() {
        Ok(Scene { desc })
    } else {
        Err(InvalidScene { violations })
    }
}

/// True when all points lie on one line (or coincide).
fn points_collinear(points: &[Point3]) -> bool {
    let mut best = (0, 0, 0.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].distance(points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, span) = best;
    if span == 0.0 {
        return true;
    }
    let axis = points[j] - points[i];
    let tol = 1e-12 * span * span;
    points.iter().all(|p| (*p - points[i]).cross(axis).norm() <= tol)
}

impl SceneDescription {
    pub fn validate(self) -> Result<Scene, InvalidScene> {
        validate_scene(self)
    }
}

impl Scene {
    pub fn description(&self) -> &SceneDescription {
        &self.desc
    }

    pub fn into_description(self) -> SceneDescription {
        self.desc
    }

    pub fn room(&self) -> &Room {
        &self.desc.room
    }

    pub fn drives(&self) -> &[ChainDrive] {
        &self.desc.drives
    }

    pub fn drive(&self, i: usize) -> &ChainDrive {
        &self.desc.drives[i]
    }

    pub fn drive_count(&self) -> usize {
        self.desc.drives.len()
    }

    pub fn platform(&self) -> &Platform {
        &self.desc.platform
    }

    pub fn gravity(&self) -> f64 {
        self.desc.gravity
    }

    pub fn clearance(&self) -> f64 {
        self.desc.clearance
    }

    pub fn offset(&self, i: usize) -> Vec3 {
        self.desc.platform.attachment_offsets[i]
    }

    /// `anchorᵢ − rᵢ`: the sphere center that chain i constrains the reference point to.
    pub fn effective_anchor(&self, i: usize) -> Point3 {
        self.desc.drives[i].anchor - self.offset(i)
    }

    pub fn effective_anchors(&self) -> Vec<Point3> {
        (0..self.drive_count()).map(|i| self.effective_anchor(i)).collect()
    }

    /// Lowest effective-anchor height; the modeled workspace lies strictly below it.
    pub fn min_effective_anchor_z(&self) -> f64 {
        (0..self.drive_count()).map(|i| self.effective_anchor(i).z).fold(f64::INFINITY, f64::min)
    }

    /// Gimbal center of chain i with the platform at `position`.
    pub fn attachment(&self, i: usize, position: Point3) -> Point3 {
        position + self.offset(i)
    }

    /// Total suspended mass times gravity, N.
    pub fn weight(&self) -> f64 {
        (self.desc.platform.mass + self.desc.platform.payload_mass) * self.desc.gravity
    }

    /// Gravity load on the platform as a world vector `(0, 0, −weight)`.
    pub fn weight_vector(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.weight())
    }
}

/// Error for [`ChainLengths::new`].
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("chain length {index} is {value}; lengths must be finite and non-negative")]
pub struct InvalidLength {
    pub index: usize,
    pub value: f64,
}

/// Chain extensions in meters, one per drive.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLengths(Vec<f64>);

impl ChainLengths {
    pub fn new(values: Vec<f64>) -> Result<Self, InvalidLength> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(InvalidLength { index, value });
        }
        Ok(ChainLengths(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        ChainLengths(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl core::ops::Index<usize> for ChainLengths {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Platform reference-point position. Orientation is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Point3,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Pose { position: Vec3::new(x, y, z) }
    }
}

impl From<Point3> for Pose {
    fn from(position: Point3) -> Self {
        Pose { position }
    }
}

//! Reachability of platform positions and the reachable share of the room.
//!
//! A point is reachable when every constraint below holds; they are checked
//! and reported in this fixed order:
//!
//! 1. `outside-room`: the point lies in the closed room box.
//! 2. `above-anchor-plane`: the point is strictly below every effective anchor.
//! 3. `length-bounds`: each chain length is within its deployable range.
//! 4. `gimbal-cone`: each chain stays inside its joint's cone.
//! 5. `chain-clearance`: chain segments keep the scene clearance pairwise.
//! 6. `force-limits`: static forces respect tension/compression limits.
//! 7. `singular-geometry`: statics could not be solved at all.
//!
//! Volume is measured by classifying cell centers of a regular grid.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Point3;
use crate::kinematics::{inverse_kinematics, DEGENERATE_LENGTH};
use crate::scene::{Pose, Room, Scene};
use crate::statics::static_forces;

/// Margin below the effective-anchor plane that still counts as "above".
pub const ANCHOR_PLANE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    OutsideRoom,
    AboveAnchorPlane,
    LengthBounds,
    GimbalCone,
    ChainClearance,
    ForceLimits,
    SingularGeometry,
}

impl Constraint {
    pub const ALL: [Constraint; 7] = [
        Constraint::OutsideRoom,
        Constraint::AboveAnchorPlane,
        Constraint::LengthBounds,
        Constraint::GimbalCone,
        Constraint::ChainClearance,
        Constraint::ForceLimits,
        Constraint::SingularGeometry,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Constraint::OutsideRoom => "outside-room",
            Constraint::AboveAnchorPlane => "above-anchor-plane",
            Constraint::LengthBounds => "length-bounds",
            Constraint::GimbalCone => "gimbal-cone",
            Constraint::ChainClearance => "chain-clearance",
            Constraint::ForceLimits => "force-limits",
            Constraint::SingularGeometry => "singular-geometry",
        }
    }

    /// Position in [`Constraint::ALL`].
    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachability {
    /// Violated constraints in check order; empty iff reachable.
    pub violations: Vec<Constraint>,
}

impl Reachability {
    pub fn reachable(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<Constraint> {
        self.violations.first().copied()
    }
}

/// Evaluates every workspace constraint at `point`.
pub fn is_reachable(scene: &Scene, point: Point3) -> Reachability {
    let mut violations = Vec::new();
    let pose = Pose::from(point);

    if !scene.room().contains(point) {
        violations.push(Constraint::OutsideRoom);
    }
    if !(point.z < scene.min_effective_anchor_z() - ANCHOR_PLANE_MARGIN) {
        violations.push(Constraint::AboveAnchorPlane);
    }

    let lengths = inverse_kinematics(scene, &pose);
    let drives = scene.drives();
    if drives.iter().zip(lengths.values()).any(|(d, l)| !(d.length_min <= *l && *l <= d.length_max)) {
        violations.push(Constraint::LengthBounds);
    }

    let cone_violated = drives.iter().enumerate().any(|(i, d)| {
        let dir = d.anchor - scene.attachment(i, point);
        // Zero-length chains have no direction; statics reports them.
        dir.norm() > DEGENERATE_LENGTH && libm::atan2(libm::hypot(dir.x, dir.y), dir.z) > d.gimbal_cone_half_angle
    });
    if cone_violated {
        violations.push(Constraint::GimbalCone);
    }

    if chains_too_close(scene, point) {
        violations.push(Constraint::ChainClearance);
    }

    match static_forces(scene, &pose) {
        Ok(sol) if sol.feasible => {}
        Ok(_) => violations.push(Constraint::ForceLimits),
        Err(_) => violations.push(Constraint::SingularGeometry),
    }

    Reachability { violations }
}

fn chains_too_close(scene: &Scene, point: Point3) -> bool {
    let n = scene.drive_count();
    let clearance = scene.clearance();
    for i in 0..n {
        let seg_i = (scene.attachment(i, point), scene.drive(i).anchor);
        for j in i + 1..n {
            let seg_j = (scene.attachment(j, point), scene.drive(j).anchor);
            if segment_min_distance(seg_i, seg_j) < clearance {
                return true;
            }
        }
    }
    false
}

/// Minimum distance between two closed segments; zero-length segments act as points.
pub fn segment_min_distance(seg_a: (Point3, Point3), seg_b: (Point3, Point3)) -> f64 {
    // Fixed argument order makes the result exactly symmetric.
    let key = |s: &(Point3, Point3)| [s.0.x, s.0.y, s.0.z, s.1.x, s.1.y, s.1.z];
    let swap = key(&seg_a).iter().zip(key(&seg_b).iter()).find(|(x, y)| x != y).is_some_and(|(x, y)| x > y);
    let (seg_a, seg_b) = if swap { (seg_b, seg_a) } else { (seg_a, seg_b) };
    let (p1, q1) = seg_a;
    let (p2, q2) = seg_b;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    let (s, t);
    if a == 0.0 && e == 0.0 {
        return r.norm();
    } else if a == 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e == 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            // Near-parallel segments: any s works as a start, the clamping below fixes t.
            let mut s0 = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    c1.distance(c2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("grid dimensions must each be at least 2, got {0:?}")]
    TooCoarse([usize; 3]),
    #[error("grid has too many cells")]
    TooLarge,
    #[error("grid resolution must be positive and finite")]
    InvalidResolution,
}

/// Regular grid over the room box. Cells are enumerated row-major in
/// `(ix, iy, iz)`, `iz` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    room: Room,
    dims: [usize; 3],
}

impl Grid {
    pub fn new(room: Room, dims: [usize; 3]) -> Result<Self, GridError> {
        if dims.iter().any(|d| *d < 2) {
            return Err(GridError::TooCoarse(dims));
        }
        dims[0].checked_mul(dims[1]).and_then(|v| v.checked_mul(dims[2])).ok_or(GridError::TooLarge)?;
        Ok(Grid { room, dims })
    }

    /// Smallest grid whose cells are no larger than `resolution` along each axis (at least 2 per axis).
    pub fn from_resolution(room: Room, resolution: f64) -> Result<Self, GridError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::InvalidResolution);
        }
        let count = |size: f64| {
            let n = libm::ceil(size / resolution);
            if n > 1e9 {
                Err(GridError::TooLarge)
            } else {
                Ok((n as usize).max(2))
            }
        };
        Grid::new(room, [count(room.size_x)?, count(room.size_y)?, count(room.size_z)?])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn cell_index(&self, linear: usize) -> [usize; 3] {
        let [_, ny, nz] = self.dims;
        [linear / (ny * nz), (linear / nz) % ny, linear % nz]
    }

    pub fn center(&self, index: [usize; 3]) -> Point3 {
        let axis = |i: usize, size: f64, n: usize| (i as f64 + 0.5) * size / n as f64;
        Point3::new(
            axis(index[0], self.room.size_x, self.dims[0]),
            axis(index[1], self.room.size_y, self.dims[1]),
            axis(index[2], self.room.size_z, self.dims[2]),
        )
    }
}

/// Associative accumulator for coverage counts; shards merge in any grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoverageTally {
    pub cells_total: u64,
    pub cells_reachable: u64,
    /// First-violation counts indexed by [`Constraint::index`].
    pub histogram: [u64; 7],
}

impl CoverageTally {
    pub fn add(&mut self, verdict: &Reachability) {
        self.cells_total += 1;
        match verdict.first_violation() {
            None => self.cells_reachable += 1,
            Some(c) => self.histogram[c.index()] += 1,
        }
    }

    pub fn merge(mut self, other: CoverageTally) -> CoverageTally {
        self.cells_total += other.cells_total;
        self.cells_reachable += other.cells_reachable;
        for (h, o) in self.histogram.iter_mut().zip(other.histogram) {
            *h += o;
        }
        self
    }

    pub fn into_report(self, grid_dims: [usize; 3]) -> CoverageReport {
        let fraction = if self.cells_total == 0 { 0.0 } else { self.cells_reachable as f64 / self.cells_total as f64 };
        CoverageReport {
            grid_dims,
            cells_total: self.cells_total,
            cells_reachable: self.cells_reachable,
            fraction,
            rejection_histogram: self.histogram,
        }
    }
}

/// Cell-center coverage of the room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub grid_dims: [usize; 3],
    pub cells_total: u64,
    pub cells_reachable: u64,
    /// `cells_reachable / cells_total`.
    pub fraction: f64,
    /// First-violation counts indexed by [`Constraint::index`].
    pub rejection_histogram: [u64; 7],
}

impl CoverageReport {
    pub fn rejections(&self, c: Constraint) -> u64 {
        self.rejection_histogram[c.index()]
    }
}

/// Classifies one grid cell by its center.
pub fn classify_cell(scene: &Scene, grid: &Grid, linear: usize) -> Reachability {
    is_reachable(scene, grid.center(grid.cell_index(linear)))
}

/// Single-threaded coverage sweep over a `dims` grid.
pub fn workspace_volume(scene: &Scene, dims: [usize; 3]) -> Result<CoverageReport, GridError> {
    let grid = Grid::new(*scene.room(), dims)?;
    let mut tally = CoverageTally::default();
    for linear in 0..grid.cell_count() {
        tally.add(&classify_cell(scene, &grid, linear));
    }
    Ok(tally.into_report(dims))
}

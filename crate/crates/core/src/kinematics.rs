//! Pose ↔ chain-length maps.
//!
//! Because attachment offsets are constant world vectors, chain i pins the
//! platform reference point to a sphere of radius Lᵢ around the effective
//! anchor `aᵢ − rᵢ`. Forward kinematics is therefore sphere intersection:
//! closed form for three chains, damped least squares for any count.

use alloc::vec::Vec;

use crate::geometry::{Mat3, Point3, Vec3};
use crate::scene::{ChainLengths, Pose, Scene};

/// Chains shorter than this have no defined direction.
pub const DEGENERATE_LENGTH: f64 = 1e-9;
/// Negative squared out-of-plane offsets down to this value count as tangency.
pub const TANGENCY_TOLERANCE: f64 = 1e-9;
/// Mirror solutions closer than this in z cannot be told apart.
pub const AMBIGUITY_TOLERANCE: f64 = 1e-12;

pub const LSQ_MAX_ITERATIONS: usize = 100;
pub const LSQ_GRADIENT_TOLERANCE: f64 = 1e-10;
pub const LSQ_STEP_TOLERANCE: f64 = 1e-12;
const LSQ_INITIAL_DAMPING: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("closed-form forward kinematics needs exactly {expected} drives, scene has {found}")]
    DriveCount { expected: usize, found: usize },
    #[error("expected {expected} chain lengths, got {found}")]
    LengthCount { expected: usize, found: usize },
    #[error("chain spheres do not intersect")]
    NoIntersection,
    #[error("mirror solutions have equal height; pose is ambiguous")]
    AmbiguousSolution,
    #[error("least squares did not converge after {iterations} iterations (residual {residual:e} m)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("least-squares iterate left the search box around the room")]
    DivergedGuess,
    #[error("chain {chain} has zero length at this pose")]
    DegeneratePose { chain: usize },
    #[error("chain index {index} out of range for {count} drives")]
    ChainIndex { index: usize, count: usize },
}

/// Chain lengths `Lᵢ = |aᵢ − (p + rᵢ)|`. Length limits are not checked here.
pub fn inverse_kinematics(scene: &Scene, pose: &Pose) -> ChainLengths {
    let values = (0..scene.drive_count())
        .map(|i| (scene.drive(i).anchor - scene.attachment(i, pose.position)).norm())
        .collect();
    ChainLengths::from_raw(values)
}

fn check_lengths(scene: &Scene, lengths: &ChainLengths) -> Result<(), KinematicsError> {
    if lengths.len() != scene.drive_count() {
        return Err(KinematicsError::LengthCount { expected: scene.drive_count(), found: lengths.len() });
    }
    Ok(())
}

/// Three-sphere intersection on the effective anchors, lower branch.
///
/// Of the two mirror solutions across the effective-anchor plane the one with
/// smaller world z is returned: the platform hangs below its drives.
pub fn forward_kinematics_3(scene: &Scene, lengths: &ChainLengths) -> Result<Pose, KinematicsError> {
    if scene.drive_count() != 3 {
        return Err(KinematicsError::DriveCount { expected: 3, found: scene.drive_count() });
    }
    check_lengths(scene, lengths)?;
    let (p1, p2, p3) = (scene.effective_anchor(0), scene.effective_anchor(1), scene.effective_anchor(2));
    let (r1, r2, r3) = (lengths[0], lengths[1], lengths[2]);

    // Local orthonormal frame: ex along p1→p2, ey in the anchor plane, ez its normal.
    let d = p1.distance(p2);
    let ex = (p2 - p1) * (1.0 / d);
    let i = ex.dot(p3 - p1);
    let ey_raw = p3 - p1 - ex * i;
    let j = ey_raw.norm();
    let ey = ey_raw * (1.0 / j);
    let ez = ex.cross(ey);

    let x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let y = (r1 * r1 - r3 * r3 + i * i + j * j) / (2.0 * j) - (i / j) * x;
    let z_sq = r1 * r1 - x * x - y * y;
    if !z_sq.is_finite() || z_sq < -TANGENCY_TOLERANCE {
        return Err(KinematicsError::NoIntersection);
    }
    // Below the rounding floor of the terms in z², the solutions coincide.
    let floor = 16.0 * f64::EPSILON * (r1 * r1 + x * x + y * y);
    let z = if z_sq <= floor { 0.0 } else { libm::sqrt(z_sq) };

    let base = p1 + ex * x + ey * y;
    if libm::fabs(2.0 * z * ez.z) <= AMBIGUITY_TOLERANCE {
        return Err(KinematicsError::AmbiguousSolution);
    }
    let position = if ez.z > 0.0 { base - ez * z } else { base + ez * z };
    Ok(Pose { position })
}

/// Residuals `|aᵢ′ − p| − Lᵢ` and their gradient rows `(p − aᵢ′)/|aᵢ′ − p|`.
fn residuals(anchors: &[Point3], lengths: &[f64], p: Point3, r: &mut Vec<f64>, rows: &mut Vec<Vec3>) {
    r.clear();
    rows.clear();
    for (a, l) in anchors.iter().zip(lengths) {
        let v = p - *a;
        let dist = v.norm();
        r.push(dist - l);
        rows.push(if dist > 0.0 { v * (1.0 / dist) } else { Vec3::ZERO });
    }
}

/// Damped Gauss–Newton solution of `min_p Σ (|aᵢ′ − p| − Lᵢ)²` for any drive count.
///
/// The problem has two basins mirrored across the anchor plane; seed the
/// guess below the anchors to land on the physical branch.
pub fn forward_kinematics_lsq(scene: &Scene, lengths: &ChainLengths, guess: &Pose) -> Result<Pose, KinematicsError> {
    check_lengths(scene, lengths)?;
    let anchors = scene.effective_anchors();
    let lengths = lengths.values();
    let size = scene.room().size();
    let (lo, hi) = (size * 0.5 - size * 5.0, size * 0.5 + size * 5.0);
    let inside_box = |p: Point3| (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k]);

    let mut p = guess.position;
    if !p.is_finite() || !inside_box(p) {
        return Err(KinematicsError::DivergedGuess);
    }
    let mut damping = LSQ_INITIAL_DAMPING;
    let (mut r, mut rows) = (Vec::with_capacity(anchors.len()), Vec::with_capacity(anchors.len()));
    residuals(&anchors, lengths, p, &mut r, &mut rows);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();

    for _ in 0..LSQ_MAX_ITERATIONS {
        let gradient = rows.iter().zip(&r).fold(Vec3::ZERO, |acc, (u, ri)| acc + *u * *ri);
        if gradient.norm() < LSQ_GRADIENT_TOLERANCE {
            return Ok(Pose { position: p });
        }
        let normal = rows.iter().fold(Mat3::default(), |acc, u| acc + Mat3::outer(*u, *u));
        let step = (normal + Mat3::IDENTITY * damping).solve(-gradient).ok_or(KinematicsError::DivergedGuess)?;
        let trial = p + step;
        if !trial.is_finite() || !inside_box(trial) {
            return Err(KinematicsError::DivergedGuess);
        }
        let mut r_trial = Vec::with_capacity(anchors.len());
        let mut rows_trial = Vec::with_capacity(anchors.len());
        residuals(&anchors, lengths, trial, &mut r_trial, &mut rows_trial);
        let cost_trial: f64 = r_trial.iter().map(|v| v * v).sum();
        if cost_trial < cost {
            p = trial;
            r = r_trial;
            rows = rows_trial;
            cost = cost_trial;
            damping /= 10.0;
        } else {
            damping *= 10.0;
        }
        if step.norm() < LSQ_STEP_TOLERANCE {
            return Ok(Pose { position: p });
        }
    }
    Err(KinematicsError::NoConvergence { iterations: LSQ_MAX_ITERATIONS, residual: libm::sqrt(cost) })
}

/// Rows `∂Lᵢ/∂p`, unit vectors pointing from each anchor to its attachment.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: Vec<Vec3>,
}

impl Jacobian {
    pub fn from_rows(rows: Vec<Vec3>) -> Self {
        Jacobian { rows }
    }

    pub fn rows(&self) -> &[Vec3] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// `JᵀJ = Σ uᵢuᵢᵀ`.
    pub fn normal_matrix(&self) -> Mat3 {
        self.rows.iter().fold(Mat3::default(), |acc, u| acc + Mat3::outer(*u, *u))
    }

    /// The matrix itself when there are exactly three rows.
    pub fn square(&self) -> Option<Mat3> {
        match self.rows[..] {
            [a, b, c] => Some(Mat3::from_rows(a, b, c)),
            _ => None,
        }
    }

    /// `J·δp`.
    pub fn apply(&self, dp: Vec3) -> Vec<f64> {
        self.rows.iter().map(|u| u.dot(dp)).collect()
    }

    /// Spectral norm of the (pseudo-)inverse, `1/σ_min(J)`.
    pub fn pseudo_inverse_norm(&self) -> f64 {
        let smallest = self.normal_matrix().symmetric_eigenvalues()[0];
        if smallest > 0.0 {
            1.0 / libm::sqrt(smallest)
        } else {
            f64::INFINITY
        }
    }
}

/// Kinematic Jacobian at `pose`.
pub fn jacobian(scene: &Scene, pose: &Pose) -> Result<Jacobian, KinematicsError> {
    let rows = (0..scene.drive_count())
        .map(|i| {
            let v = scene.attachment(i, pose.position) - scene.drive(i).anchor;
            let l = v.norm();
            if l <= DEGENERATE_LENGTH {
                Err(KinematicsError::DegeneratePose { chain: i })
            } else {
                Ok(v * (1.0 / l))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Jacobian { rows })
}

/// Angle in `[0, π]` between chain `chain_index` (attachment → anchor) and the world vertical.
pub fn gimbal_angle(scene: &Scene, pose: &Pose, chain_index: usize) -> Result<f64, KinematicsError> {
    if chain_index >= scene.drive_count() {
        return Err(KinematicsError::ChainIndex { index: chain_index, count: scene.drive_count() });
    }
    let d = scene.drive(chain_index).anchor - scene.attachment(chain_index, pose.position);
    if d.norm() <= DEGENERATE_LENGTH {
        return Err(KinematicsError::DegeneratePose { chain: chain_index });
    }
    Ok(libm::atan2(libm::hypot(d.x, d.y), d.z))
}

//! Cumulative chain error and its effect on platform position.
//!
//! Each deployed link adds joint play, so a chain's length error grows
//! linearly with deployed length: `δL = k·L`. Length errors map to position
//! error through the Jacobian, `J·δp = δL` (least squares for redundant
//! chains). The worst case enumerates every sign combination of `δL`.

use alloc::vec::Vec;

use crate::geometry::{Mat3, Point3, Vec3};
use crate::kinematics::{inverse_kinematics, jacobian, KinematicsError};
use crate::scene::{ChainDrive, Pose, Scene};
use crate::statics::SINGULAR_CONDITION;
use crate::workspace::{is_reachable, Grid, GridError};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AccuracyError {
    #[error("expected {expected} chain errors, got {found}")]
    LengthCount { expected: usize, found: usize },
    #[error("chain {chain} has zero length at this pose")]
    DegeneratePose { chain: usize },
    #[error("kinematic singularity (condition number {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    /// `δLᵢ`, m.
    pub chain_errors: Vec<f64>,
    /// First-order position error for `chain_errors` as given, m.
    pub position_error: Vec3,
    /// Largest `|δp|` over all sign assignments of `chain_errors`, m.
    pub worst_case_norm: f64,
}

/// Length error of a chain deployed to `length`: `error_coefficient × length`.
pub fn chain_length_error(drive: &ChainDrive, length: f64) -> f64 {
    drive.error_coefficient * length
}

/// Columns of the (pseudo-)inverse of J: `δp = Σ δLᵢ·cᵢ`.
fn inverse_columns(scene: &Scene, pose: &Pose) -> Result<Vec<Vec3>, AccuracyError> {
    let j = jacobian(scene, pose).map_err(|e| match e {
        KinematicsError::DegeneratePose { chain } => AccuracyError::DegeneratePose { chain },
        _ => AccuracyError::SingularJacobian { condition: f64::INFINITY },
    })?;
    let checked_inverse = |m: Mat3| {
        let condition = m.condition_number();
        if !(condition <= SINGULAR_CONDITION) {
            return Err(AccuracyError::SingularJacobian { condition });
        }
        m.inverse().ok_or(AccuracyError::SingularJacobian { condition: f64::INFINITY })
    };
    match j.square() {
        Some(m) => {
            let inv = checked_inverse(m)?.transpose();
            Ok((0..3).map(|i| inv.row(i)).collect())
        }
        None => {
            let g_inv = checked_inverse(j.normal_matrix())?;
            Ok(j.rows().iter().map(|u| g_inv * *u).collect())
        }
    }
}

/// Propagates chain-length errors to platform-position error at `pose`.
pub fn propagate_error(scene: &Scene, pose: &Pose, chain_errors: &[f64]) -> Result<ErrorEstimate, AccuracyError> {
    let n = scene.drive_count();
    if chain_errors.len() != n {
        return Err(AccuracyError::LengthCount { expected: n, found: chain_errors.len() });
    }
    let cols = inverse_columns(scene, pose)?;
    let position_error = cols.iter().zip(chain_errors).fold(Vec3::ZERO, |acc, (c, e)| acc + *c * *e);

    let mut worst_case_norm: f64 = 0.0;
    for signs in 0u32..(1 << n) {
        let dp = cols.iter().zip(chain_errors).enumerate().fold(Vec3::ZERO, |acc, (i, (c, e))| {
            let mag = libm::fabs(*e);
            acc + *c * if signs & (1 << i) == 0 { mag } else { -mag }
        });
        worst_case_norm = worst_case_norm.max(dp.norm());
    }
    Ok(ErrorEstimate { chain_errors: chain_errors.to_vec(), position_error, worst_case_norm })
}

/// Worst-case position error at `point` from each chain's own cumulative error.
pub fn point_error(scene: &Scene, point: Point3) -> Result<f64, AccuracyError> {
    let pose = Pose::from(point);
    let lengths = inverse_kinematics(scene, &pose);
    let errors: Vec<f64> =
        scene.drives().iter().zip(lengths.values()).map(|(d, l)| chain_length_error(d, *l)).collect();
    Ok(propagate_error(scene, &pose, &errors)?.worst_case_norm)
}

/// One reachable cell of an error map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCell {
    pub index: [usize; 3],
    pub center: Point3,
    /// Worst-case position error, m.
    pub worst_case_error: f64,
}

/// Error-map entry for grid cell `linear`, `None` when the cell is unreachable.
pub fn error_cell(scene: &Scene, grid: &Grid, linear: usize) -> Result<Option<ErrorCell>, AccuracyError> {
    let index = grid.cell_index(linear);
    let center = grid.center(index);
    if !is_reachable(scene, center).reachable() {
        return Ok(None);
    }
    Ok(Some(ErrorCell { index, center, worst_case_error: point_error(scene, center)? }))
}

/// Worst-case error over the reachable cells of a grid with cells at most
/// `grid_resolution` on a side, in row-major cell order.
pub fn error_map(scene: &Scene, grid_resolution: f64) -> Result<Vec<ErrorCell>, AccuracyError> {
    let grid = Grid::from_resolution(*scene.room(), grid_resolution)?;
    let mut cells = Vec::new();
    for linear in 0..grid.cell_count() {
        if let Some(cell) = error_cell(scene, &grid, linear)? {
            cells.push(cell);
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::*;
    use crate::scene::DEFAULT_ERROR_COEFFICIENT;
    use approx::assert_abs_diff_eq;

    const CENTROID: Pose = Pose::new(3.0, 1.7320508075688772, 1.0);

    #[test]
    fn one_millimeter_over_five_meters() {
        let d = fixtures_drive(DEFAULT_ERROR_COEFFICIENT);
        assert_abs_diff_eq!(chain_length_error(&d, 5.0), 0.001, epsilon = 1e-15);
        assert_eq!(chain_length_error(&d, 0.0), 0.0);
        assert_abs_diff_eq!(chain_length_error(&d, 2.5), 0.0005, epsilon = 1e-15);
    }

    fn fixtures_drive(k: f64) -> ChainDrive {
        let mut d = drive(Vec3::ZERO);
        d.error_coefficient = k;
        d
    }

    #[test]
    fn symmetric_vertical_error() {
        let s = equilateral_scene();
        let est = propagate_error(&s, &CENTROID, &[0.001; 3]).unwrap();
        let dz = 0.001 * libm::sqrt(21.0) / 3.0;
        assert_abs_diff_eq!(est.position_error.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.position_error.y, 0.0, epsilon = 1e-12);
        // Rows point from anchor to platform, so lengthening every chain lowers the platform.
        assert_abs_diff_eq!(libm::fabs(est.position_error.z), dz, epsilon = 1e-9);
        assert!(est.worst_case_norm >= est.position_error.norm());
    }

    #[test]
    fn zero_error_in_zero_error_out() {
        let s = equilateral_scene();
        let est = propagate_error(&s, &CENTROID, &[0.0; 3]).unwrap();
        assert_eq!(est.position_error.norm(), 0.0);
        assert_eq!(est.worst_case_norm, 0.0);
    }

    #[test]
    fn solve_consistency_three_chains() {
        let s = unit_scene();
        let pose = Pose::new(1.3, 0.9, 2.2);
        let dl = [3e-4, -7e-4, 5e-4];
        let est = propagate_error(&s, &pose, &dl).unwrap();
        let back = jacobian(&s, &pose).unwrap().apply(est.position_error);
        for (b, d) in back.iter().zip(dl) {
            assert_abs_diff_eq!(*b, d, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_pose_is_reported() {
        let s = equilateral_scene();
        let r = propagate_error(&s, &Pose::new(3.0, 1.7320508075688772, 4.0), &[0.001; 3]);
        assert!(matches!(r, Err(AccuracyError::SingularJacobian { .. })), "{r:?}");
        assert!(matches!(propagate_error(&s, &CENTROID, &[0.0; 2]), Err(AccuracyError::LengthCount { .. })));
    }

    #[test]
    fn steeper_chains_give_smaller_error() {
        // Same anchors, points lower in the room have more vertical chains.
        let s = equilateral_scene();
        let w_low = propagate_error(&s, &Pose::new(3.0, 1.7320508075688772, 0.5), &[1e-3; 3]).unwrap();
        let w_high = propagate_error(&s, &Pose::new(3.0, 1.7320508075688772, 3.8), &[1e-3; 3]).unwrap();
        assert!(w_low.worst_case_norm < w_high.worst_case_norm);
    }

    #[test]
    fn error_map_zero_coefficient() {
        let mut desc = unit_scene().into_description();
        for d in &mut desc.drives {
            d.error_coefficient = 0.0;
        }
        let s = desc.validate().unwrap();
        let cells = error_map(&s, 0.5).unwrap();
        assert!(!cells.is_empty());
        assert!(cells.iter().all(|c| c.worst_case_error == 0.0));
    }

    #[test]
    fn error_map_rejects_bad_resolution() {
        assert_eq!(error_map(&unit_scene(), -1.0), Err(AccuracyError::Grid(GridError::InvalidResolution)));
    }
}

//! Axial chain forces holding the loaded platform in point equilibrium.
//!
//! Equilibrium is `Σ fᵢuᵢ + W = 0` with `uᵢ` the unit vector from the
//! attachment toward the anchor and `W = (0, 0, −m·g)`. Positive force is
//! tension, negative is compression (rigid chains can push). With more than
//! three chains the minimum-Euclidean-norm distribution is returned.
//!
//! Torque balance is not modeled: the platform orientation is fixed.

use alloc::vec::Vec;

use crate::geometry::{Mat3, Vec3};
use crate::kinematics::DEGENERATE_LENGTH;
use crate::scene::{Pose, Scene};

/// Systems whose (Frobenius) condition number exceeds this are singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum StaticsError {
    #[error("chain directions are degenerate (condition number {condition:e})")]
    SingularGeometry { condition: f64 },
    #[error("chain {chain} has zero length at this pose")]
    DegeneratePose { chain: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSolution {
    /// Per chain, N; positive = tension.
    pub axial_forces: Vec<f64>,
    /// `|Σ fᵢuᵢ + W|`, N.
    pub residual: f64,
    pub feasible: bool,
    /// Remaining capacity per chain in the loaded direction, N. Negative means over the limit.
    pub margins: Vec<f64>,
}

/// Verdict of [`force_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// First violating chain when infeasible, otherwise the chain with the least margin.
    pub limiting_chain: usize,
    /// Amount by which `limiting_chain` exceeds its limit, N (0 when feasible).
    pub excess: f64,
}

/// Unit vectors from each attachment toward its anchor.
pub(crate) fn chain_directions(scene: &Scene, pose: &Pose) -> Result<Vec<Vec3>, StaticsError> {
    (0..scene.drive_count())
        .map(|i| {
            let v = scene.drive(i).anchor - scene.attachment(i, pose.position);
            let l = v.norm();
            if l <= DEGENERATE_LENGTH {
                Err(StaticsError::DegeneratePose { chain: i })
            } else {
                Ok(v * (1.0 / l))
            }
        })
        .collect()
}

fn solve_checked(m: Mat3, rhs: Vec3) -> Result<Vec3, StaticsError> {
    let condition = m.condition_number();
    if !(condition <= SINGULAR_CONDITION) {
        return Err(StaticsError::SingularGeometry { condition });
    }
    m.solve(rhs).ok_or(StaticsError::SingularGeometry { condition: f64::INFINITY })
}

/// Distributes the platform weight over the chains.
pub fn static_forces(scene: &Scene, pose: &Pose) -> Result<ForceSolution, StaticsError> {
    let dirs = chain_directions(scene, pose)?;
    let load = scene.weight_vector();
    let rhs = -load;

    let axial_forces: Vec<f64> = if let [u0, u1, u2] = dirs[..] {
        solve_checked(Mat3::from_cols(u0, u1, u2), rhs)?.to_array().to_vec()
    } else {
        // f = U (UᵀU)⁻¹ b, U stacking the directions as rows.
        let gram = dirs.iter().fold(Mat3::default(), |acc, u| acc + Mat3::outer(*u, *u));
        let y = solve_checked(gram, rhs)?;
        dirs.iter().map(|u| u.dot(y)).collect()
    };

    let net = dirs.iter().zip(&axial_forces).fold(load, |acc, (u, f)| acc + *u * *f);
    let margins: Vec<f64> = scene
        .drives()
        .iter()
        .zip(&axial_forces)
        .map(|(d, &f)| if f >= 0.0 { d.tension_limit - f } else { d.compression_limit + f })
        .collect();
    let feasible = margins.iter().all(|m| *m >= 0.0);
    Ok(ForceSolution { axial_forces, residual: net.norm(), feasible, margins })
}

/// Checks every chain force against `[−compression_limit, tension_limit]`.
pub fn force_feasible(scene: &Scene, pose: &Pose) -> Result<Feasibility, StaticsError> {
    let sol = static_forces(scene, pose)?;
    Ok(feasibility_of(&sol))
}

pub(crate) fn feasibility_of(sol: &ForceSolution) -> Feasibility {
    if let Some(i) = sol.margins.iter().position(|m| *m < 0.0) {
        return Feasibility { feasible: false, limiting_chain: i, excess: -sol.margins[i] };
    }
    let limiting_chain = sol
        .margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Feasibility { feasible: true, limiting_chain, excess: 0.0 }
}

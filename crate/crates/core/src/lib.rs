//! Analysis engine for rigid-chain parallel positioning systems.
//!
//! A floating platform hangs from 3 to 8 ceiling-mounted rigid-chain drives,
//! each chain ending in a universal joint on the platform. Chains are straight
//! axial members that carry both tension and compression, so the platform
//! position is controlled by deploying or retracting chain length.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerics:
//!
//! * [`scene`]: the validated world model.
//! * [`kinematics`]: inverse/forward kinematics, Jacobian, gimbal angles.
//! * [`statics`]: axial chain forces and limit checks.
//! * [`accuracy`]: cumulative chain error and its propagation to the platform.
//! * [`workspace`]: reachability predicate and grid volume fraction.
//! * [`trajectory`]: synchronized straight-line moves and step quantization.
//!
//! File formats, parallel sweeps and the CLI live in the `rigidchain` crate.
#![no_std]
#![deny(rust_2018_idioms, unused_must_use)]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod accuracy;
pub mod geometry;
pub mod kinematics;
pub mod scene;
pub mod statics;
pub mod trajectory;
pub mod workspace;

pub use accuracy::{chain_length_error, error_map, propagate_error, AccuracyError, ErrorCell, ErrorEstimate};
pub use geometry::{Mat3, Point3, Vec3};
pub use kinematics::{
    forward_kinematics_3, forward_kinematics_lsq, gimbal_angle, inverse_kinematics, jacobian, Jacobian,
    KinematicsError,
};
pub use scene::{
    validate_scene, ChainDrive, ChainLengths, InvalidScene, Platform, Pose, Room, Scene, SceneDescription, Violation,
};
pub use statics::{force_feasible, static_forces, ForceSolution, Feasibility, StaticsError};
pub use trajectory::{
    plan_line_move, plan_line_move_with_tick, quantize_schedule, synchronization_check, MotionPlan, PlanError,
    StepSchedule, SyncReport, TrapezoidProfile,
};
pub use workspace::{
    is_reachable, segment_min_distance, workspace_volume, Constraint, CoverageReport, CoverageTally, Grid, GridError,
    Reachability,
};

//! Straight-line platform moves as synchronized per-drive chain schedules.
//!
//! The platform follows the segment start → goal with a trapezoidal (or
//! triangular) profile on the path parameter `s`. Chain rates follow from
//! the chain rule: `dL/dt = L'(s)·ṡ` and `d²L/dt² = L'(s)·s̈ + L''(s)·ṡ²`.
//! With `G1 = sup|L'|` and `G2 = sup|L''|` over the path, a profile with
//! cruise speed `v` and acceleration `a` is admissible for drive i when
//! `G1ᵢ·v ≤ speed_maxᵢ` and `G1ᵢ·a + G2ᵢ·v² ≤ accel_maxᵢ`. Among admissible
//! `(v, a)` the planner picks the pair with the shortest duration.
//!
//! Along a line `L(s) = √((s − s₀)² + ρ²)`, so `|L'|` peaks at a path end and
//! `L'' = ρ²/L³` peaks at the closest approach `s₀`. The 1 cm path samples
//! plus the clamped `s₀` therefore give the exact suprema.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Point3, Vec3};
use crate::kinematics::{forward_kinematics_lsq, inverse_kinematics, jacobian, KinematicsError};
use crate::scene::{ChainLengths, Pose, Scene};
use crate::workspace::{is_reachable, Constraint};

/// Output sample period, s.
pub const DEFAULT_TICK: f64 = 0.01;
/// Path sampling used for reachability and bound evaluation, m.
pub const PATH_SAMPLE_SPACING: f64 = 0.01;
/// Grid ticks closer than this fraction of a tick to a phase boundary merge into it.
const BOUNDARY_MERGE_FRACTION: f64 = 0.25;
const MAX_SUBDIVISION_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Start,
    Goal,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("{endpoint:?} pose is not reachable ({violations:?})")]
    UnreachableEndpoint { endpoint: Endpoint, violations: Vec<Constraint> },
    #[error("path leaves the workspace at s = {s} m ({violation})")]
    PathLeavesWorkspace { s: f64, violation: Constraint },
    #[error("tick must be positive and finite")]
    InvalidTick,
    #[error("drive {drive} cannot follow the plan near t = {time} s at its resolution and speed limit")]
    InfeasibleQuantization { drive: usize, time: f64 },
    #[error("schedule does not match the scene ({0})")]
    MalformedSchedule(&'static str),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Symmetric trapezoidal velocity law on `[0, distance]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile {
    pub distance: f64,
    /// Speed actually reached (below the cruise limit for triangular profiles).
    pub peak_speed: f64,
    pub accel: f64,
    pub accel_time: f64,
    pub cruise_time: f64,
}

impl TrapezoidProfile {
    /// Profile for a move of `distance` with speed limit `v` and acceleration `a`.
    /// Triangular when `distance < v²/a`.
    pub fn new(distance: f64, v: f64, a: f64) -> Self {
        if distance <= 0.0 {
            return TrapezoidProfile::stationary();
        }
        if distance < v * v / a {
            let accel_time = libm::sqrt(distance / a);
            TrapezoidProfile { distance, peak_speed: a * accel_time, accel: a, accel_time, cruise_time: 0.0 }
        } else {
            TrapezoidProfile { distance, peak_speed: v, accel: a, accel_time: v / a, cruise_time: distance / v - v / a }
        }
    }

    pub const fn stationary() -> Self {
        TrapezoidProfile { distance: 0.0, peak_speed: 0.0, accel: 0.0, accel_time: 0.0, cruise_time: 0.0 }
    }

    pub fn is_triangular(&self) -> bool {
        self.cruise_time == 0.0
    }

    pub fn duration(&self) -> f64 {
        if self.distance <= 0.0 {
            return 0.0;
        }
        if self.is_triangular() {
            2.0 * self.accel_time
        } else {
            self.distance / self.peak_speed + self.peak_speed / self.accel
        }
    }

    /// Path position at time `t`, clamped to the move.
    pub fn position(&self, t: f64) -> f64 {
        let total = self.duration();
        if t <= 0.0 || total == 0.0 {
            return 0.0;
        }
        if t >= total {
            return self.distance;
        }
        let s = if t < self.accel_time {
            0.5 * self.accel * t * t
        } else if t <= self.accel_time + self.cruise_time {
            0.5 * self.accel * self.accel_time * self.accel_time + self.peak_speed * (t - self.accel_time)
        } else {
            let tau = total - t;
            self.distance - 0.5 * self.accel * tau * tau
        };
        s.clamp(0.0, self.distance)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let total = self.duration();
        if t <= 0.0 || t >= total {
            0.0
        } else if t < self.accel_time {
            self.accel * t
        } else if t <= self.accel_time + self.cruise_time {
            self.peak_speed
        } else {
            self.accel * (total - t)
        }
    }

    /// End of acceleration, end of cruise, end of move.
    pub fn phase_boundaries(&self) -> [f64; 3] {
        [self.accel_time, self.accel_time + self.cruise_time, self.duration()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Accelerate,
    Cruise,
    Decelerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Speed,
    Acceleration,
}

/// Which drive limit shaped a phase of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoverningLimit {
    pub phase: Phase,
    pub drive: usize,
    pub kind: LimitKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSample {
    pub time: f64,
    /// Distance travelled along the line, m.
    pub path_position: f64,
    pub pose: Pose,
    pub lengths: ChainLengths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub start: Pose,
    pub goal: Pose,
    pub profile: TrapezoidProfile,
    pub samples: Vec<PlanSample>,
    pub duration: f64,
    pub governing_limits: Vec<GoverningLimit>,
    pub tick: f64,
}

impl MotionPlan {
    /// Planned reference pose at time `t`.
    pub fn pose_at(&self, t: f64) -> Pose {
        if self.profile.distance == 0.0 || t <= 0.0 {
            return self.start;
        }
        if t >= self.duration {
            return self.goal;
        }
        let frac = self.profile.position(t) / self.profile.distance;
        Pose::from(self.start.position.lerp(self.goal.position, frac))
    }
}

/// Per-drive sup of `|dL/ds|` and `|d²L/ds²|` along the path.
#[derive(Debug, Clone, Copy)]
struct PathBounds {
    slope: f64,
    curvature: f64,
}

fn length_derivatives(v: Vec3, dir: Vec3) -> (f64, f64) {
    let l = v.norm();
    let slope = v.dot(dir) / l;
    let curvature = v.cross(dir).norm_squared() / (l * l * l);
    (libm::fabs(slope), curvature)
}

/// Plans a move with the default 0.01 s output tick.
pub fn plan_line_move(scene: &Scene, start: &Pose, goal: &Pose) -> Result<MotionPlan, PlanError> {
    plan_line_move_with_tick(scene, start, goal, DEFAULT_TICK)
}

pub fn plan_line_move_with_tick(scene: &Scene, start: &Pose, goal: &Pose, tick: f64) -> Result<MotionPlan, PlanError> {
    if !(tick.is_finite() && tick > 0.0) {
        return Err(PlanError::InvalidTick);
    }
    for (endpoint, pose) in [(Endpoint::Start, start), (Endpoint::Goal, goal)] {
        let r = is_reachable(scene, pose.position);
        if !r.reachable() {
            return Err(PlanError::UnreachableEndpoint { endpoint, violations: r.violations });
        }
    }

    let delta = goal.position - start.position;
    let distance = delta.norm();
    if distance == 0.0 {
        return Ok(MotionPlan {
            start: *start,
            goal: *goal,
            profile: TrapezoidProfile::stationary(),
            samples: vec![PlanSample { time: 0.0, path_position: 0.0, pose: *start, lengths: inverse_kinematics(scene, start) }],
            duration: 0.0,
            governing_limits: Vec::new(),
            tick,
        });
    }
    let dir = delta * (1.0 / distance);
    let n = scene.drive_count();

    let steps = libm::ceil(distance / PATH_SAMPLE_SPACING).max(1.0) as usize;
    let mut bounds = vec![PathBounds { slope: 0.0, curvature: 0.0 }; n];
    let absorb = |p: Point3, bounds: &mut [PathBounds]| {
        for (i, b) in bounds.iter_mut().enumerate() {
            let (slope, curvature) = length_derivatives(scene.attachment(i, p) - scene.drive(i).anchor, dir);
            b.slope = b.slope.max(slope);
            b.curvature = b.curvature.max(curvature);
        }
    };
    for k in 0..=steps {
        let p = if k == steps { goal.position } else { start.position.lerp(goal.position, k as f64 / steps as f64) };
        let r = is_reachable(scene, p);
        if let Some(violation) = r.first_violation() {
            return Err(PlanError::PathLeavesWorkspace { s: distance * k as f64 / steps as f64, violation });
        }
        absorb(p, &mut bounds);
    }
    for (i, b) in bounds.iter_mut().enumerate() {
        let v0 = scene.attachment(i, start.position) - scene.drive(i).anchor;
        let closest = (-v0.dot(dir)).clamp(0.0, distance);
        let (_, curvature) = length_derivatives(v0 + dir * closest, dir);
        b.curvature = b.curvature.max(curvature);
    }

    let (v, a) = best_speed_and_accel(scene, &bounds, distance);
    let profile = TrapezoidProfile::new(distance, v, a);
    let duration = profile.duration();
    let governing_limits = governing_limits(scene, &bounds, &profile, v);

    let mut plan = MotionPlan {
        start: *start,
        goal: *goal,
        profile,
        samples: Vec::new(),
        duration,
        governing_limits,
        tick,
    };
    plan.samples = sample_times(&profile, tick)
        .into_iter()
        .map(|time| {
            let pose = plan.pose_at(time);
            PlanSample { time, path_position: profile.position(time), pose, lengths: inverse_kinematics(scene, &pose) }
        })
        .collect();
    Ok(plan)
}

/// Largest acceleration admissible at cruise speed `v`.
fn accel_limit_at(scene: &Scene, bounds: &[PathBounds], v: f64) -> f64 {
    scene
        .drives()
        .iter()
        .zip(bounds)
        .filter(|(_, b)| b.slope > 0.0)
        .map(|(d, b)| (d.accel_max - b.curvature * v * v) / b.slope)
        .fold(f64::INFINITY, f64::min)
}

fn speed_cap(scene: &Scene, bounds: &[PathBounds]) -> f64 {
    scene
        .drives()
        .iter()
        .zip(bounds)
        .flat_map(|(d, b)| {
            let by_speed = if b.slope > 0.0 { d.speed_max / b.slope } else { f64::INFINITY };
            let by_accel = if b.curvature > 0.0 { libm::sqrt(d.accel_max / b.curvature) } else { f64::INFINITY };
            [by_speed, by_accel]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimizes duration over the admissible `(v, a)` set.
///
/// With `a(v)` the largest admissible acceleration at cruise speed `v`,
/// `T(v) = d/v + v/a(v)` is convex on the trapezoidal range `v² ≤ a(v)·d`,
/// so a golden-section search finds the global minimum.
fn best_speed_and_accel(scene: &Scene, bounds: &[PathBounds], distance: f64) -> (f64, f64) {
    let cap = speed_cap(scene, bounds);
    let accel = |v: f64| accel_limit_at(scene, bounds, v);
    let excess = |v: f64| v * v - accel(v) * distance;

    let upper = if excess(cap) <= 0.0 {
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let duration = |v: f64| {
        let a = accel(v);
        if v <= 0.0 || a <= 0.0 {
            f64::INFINITY
        } else {
            distance / v + v / a
        }
    };
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0, upper);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (duration(x1), duration(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = duration(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = duration(x2);
        }
        if hi - lo <= f64::EPSILON * upper {
            break;
        }
    }
    let interior = if f1 <= f2 { x1 } else { x2 };
    let v = if duration(upper) <= duration(interior) { upper } else { interior };
    (v, accel(v))
}

fn governing_limits(scene: &Scene, bounds: &[PathBounds], profile: &TrapezoidProfile, v: f64) -> Vec<GoverningLimit> {
    let argmin = |f: &dyn Fn(usize) -> f64| {
        (0..scene.drive_count()).min_by(|&i, &j| f(i).total_cmp(&f(j))).unwrap_or(0)
    };
    let accel_of = |i: usize| {
        let (d, b) = (&scene.drives()[i], &bounds[i]);
        if b.slope > 0.0 {
            (d.accel_max - b.curvature * v * v) / b.slope
        } else {
            f64::INFINITY
        }
    };
    let speed_of = |i: usize| {
        let b = &bounds[i];
        if b.slope > 0.0 {
            scene.drives()[i].speed_max / b.slope
        } else {
            f64::INFINITY
        }
    };
    let accel_drive = argmin(&accel_of);
    let mut limits = vec![GoverningLimit { phase: Phase::Accelerate, drive: accel_drive, kind: LimitKind::Acceleration }];
    if !profile.is_triangular() {
        let speed_drive = argmin(&speed_of);
        let cruise = if speed_of(speed_drive) <= v * (1.0 + 1e-12) {
            GoverningLimit { phase: Phase::Cruise, drive: speed_drive, kind: LimitKind::Speed }
        } else {
            GoverningLimit { phase: Phase::Cruise, drive: accel_drive, kind: LimitKind::Acceleration }
        };
        limits.push(cruise);
    }
    limits.push(GoverningLimit { phase: Phase::Decelerate, drive: accel_drive, kind: LimitKind::Acceleration });
    limits
}

/// Fixed-tick times plus exact phase boundaries, strictly increasing.
fn sample_times(profile: &TrapezoidProfile, tick: f64) -> Vec<f64> {
    let total = profile.duration();
    let boundaries = profile.phase_boundaries();
    let gap = BOUNDARY_MERGE_FRACTION * tick;
    let mut times: Vec<f64> = vec![0.0];
    let mut k = 1u64;
    loop {
        let t = k as f64 * tick;
        if t >= total {
            break;
        }
        if boundaries.iter().all(|b| libm::fabs(t - b) >= gap) {
            times.push(t);
        }
        k += 1;
    }
    times.extend(boundaries.iter().copied().filter(|b| *b > 0.0));
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Commanded chain lengths on a common tick grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub times: Vec<f64>,
    /// `commanded[drive][tick]`, m; integer multiples of the drive resolution.
    pub commanded: Vec<Vec<f64>>,
    /// Planned reference pose at each tick.
    pub planned: Vec<Pose>,
}

impl StepSchedule {
    /// `(time, commanded_length)` pairs for one drive.
    pub fn drive_schedule(&self, drive: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.commanded[drive].iter().copied())
    }

    pub fn tick_count(&self) -> usize {
        self.times.len()
    }

    pub fn lengths_at(&self, tick: usize) -> ChainLengths {
        ChainLengths::from_raw(self.commanded.iter().map(|c| c[tick]).collect())
    }
}

/// Nearest step count for `length`; ties go toward `length_min`. Clamped to the deployable range.
fn quantize(length: f64, resolution: f64, lo: i64, hi: i64) -> i64 {
    let x = length / resolution;
    let floor = libm::floor(x);
    let n = if x - floor > 0.5 { floor + 1.0 } else { floor } as i64;
    n.clamp(lo, hi)
}

/// Rounds every planned chain length to its drive's resolution, inserting
/// ticks wherever a drive would otherwise move more than one step per tick.
pub fn quantize_schedule(scene: &Scene, plan: &MotionPlan) -> Result<StepSchedule, PlanError> {
    let n = scene.drive_count();
    let ranges: Vec<(f64, i64, i64)> = scene
        .drives()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let lo = libm::ceil(d.length_min / d.resolution - 1e-9) as i64;
            let hi = libm::floor(d.length_max / d.resolution + 1e-9) as i64;
            if lo > hi {
                Err(PlanError::InfeasibleQuantization { drive: i, time: 0.0 })
            } else {
                Ok((d.resolution, lo, hi))
            }
        })
        .collect::<Result<_, _>>()?;
    let steps_at = |pose: &Pose| -> Vec<i64> {
        let l = inverse_kinematics(scene, pose);
        (0..n).map(|i| quantize(l[i], ranges[i].0, ranges[i].1, ranges[i].2)).collect()
    };

    let first = plan.samples.first().ok_or(PlanError::MalformedSchedule("plan has no samples"))?;
    let mut times = vec![first.time];
    let mut steps: Vec<Vec<i64>> = steps_at(&first.pose).into_iter().map(|s| vec![s]).collect();
    let mut planned = vec![first.pose];

    for pair in plan.samples.windows(2) {
        let (t0, t1) = (pair[0].time, pair[1].time);
        let from: Vec<i64> = steps.iter().map(|s| *s.last().unwrap()).collect();
        let to = steps_at(&pair[1].pose);
        for i in 0..n {
            let allowed = libm::floor(scene.drive(i).speed_max * (t1 - t0) / ranges[i].0 + 1e-9) as i64 + 1;
            if (to[i] - from[i]).abs() > allowed {
                return Err(PlanError::InfeasibleQuantization { drive: i, time: t1 });
            }
        }
        let mut emit = |t: f64, s: &[i64], pose: Pose| {
            times.push(t);
            for (col, v) in steps.iter_mut().zip(s) {
                col.push(*v);
            }
            planned.push(pose);
        };
        subdivide(plan, &steps_at, t0, &from, t1, to, pair[1].pose, 0, &mut emit)?;
    }

    let commanded = steps
        .into_iter()
        .zip(&ranges)
        .map(|(col, (res, _, _))| col.into_iter().map(|s| s as f64 * res).collect())
        .collect();
    Ok(StepSchedule { times, commanded, planned })
}

/// Emits ticks on `(t0, t1]` so that no drive moves more than one step between ticks.
#[allow(clippy::too_many_arguments)]
fn subdivide(
    plan: &MotionPlan,
    steps_at: &dyn Fn(&Pose) -> Vec<i64>,
    t0: f64,
    from: &[i64],
    t1: f64,
    to: Vec<i64>,
    pose1: Pose,
    depth: u32,
    emit: &mut dyn FnMut(f64, &[i64], Pose),
) -> Result<(), PlanError> {
    let jump = from.iter().zip(&to).map(|(a, b)| (b - a).abs()).max().unwrap_or(0);
    if jump <= 1 {
        emit(t1, &to, pose1);
        return Ok(());
    }
    if depth >= MAX_SUBDIVISION_DEPTH {
        let drive = from.iter().zip(&to).position(|(a, b)| (b - a).abs() > 1).unwrap_or(0);
        return Err(PlanError::InfeasibleQuantization { drive, time: t1 });
    }
    let mid = 0.5 * (t0 + t1);
    let pose_mid = plan.pose_at(mid);
    let steps_mid = steps_at(&pose_mid);
    subdivide(plan, steps_at, t0, from, mid, steps_mid.clone(), pose_mid, depth + 1, emit)?;
    subdivide(plan, steps_at, mid, &steps_mid, t1, to, pose1, depth + 1, emit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncReport {
    /// Every tick within twice its quantization error bound.
    pub synchronized: bool,
    /// Largest distance between reconstructed and planned pose, m.
    pub max_deviation: f64,
    /// Tick with the largest deviation relative to its bound.
    pub worst_tick: usize,
}

/// Position error bound from rounding every chain to half a step: `‖J⁺‖·(Σ(resᵢ/2)²)^½`.
pub fn quantization_error_bound(scene: &Scene, pose: &Pose) -> Result<f64, KinematicsError> {
    let half_steps: f64 = scene.drives().iter().map(|d| 0.25 * d.resolution * d.resolution).sum();
    Ok(jacobian(scene, pose)?.pseudo_inverse_norm() * libm::sqrt(half_steps))
}

/// Replays the schedule through least-squares forward kinematics and
/// compares every tick with the planned pose.
pub fn synchronization_check(scene: &Scene, schedule: &StepSchedule) -> Result<SyncReport, PlanError> {
    let ticks = schedule.times.len();
    if schedule.commanded.len() != scene.drive_count() {
        return Err(PlanError::MalformedSchedule("drive count"));
    }
    if schedule.planned.len() != ticks || schedule.commanded.iter().any(|c| c.len() != ticks) {
        return Err(PlanError::MalformedSchedule("tick grids differ"));
    }
    let mut report = SyncReport { synchronized: true, max_deviation: 0.0, worst_tick: 0 };
    let Some(first) = schedule.planned.first() else {
        return Ok(report);
    };
    let mut seed = *first;
    let mut worst_ratio = f64::NEG_INFINITY;
    for k in 0..ticks {
        let reached = forward_kinematics_lsq(scene, &schedule.lengths_at(k), &seed)?;
        let target = schedule.planned[k];
        let deviation = reached.position.distance(target.position);
        let bound = 2.0 * quantization_error_bound(scene, &target)?;
        if !(deviation < bound || deviation == 0.0) {
            report.synchronized = false;
        }
        let ratio = if bound > 0.0 { deviation / bound } else { deviation };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            report.worst_tick = k;
        }
        report.max_deviation = report.max_deviation.max(deviation);
        seed = reached;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_duration() {
        let p = TrapezoidProfile::new(2.0, 0.5, 0.5);
        assert!(!p.is_triangular());
        assert_abs_diff_eq!(p.duration(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.position(p.duration()), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.position(2.5), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triangular_duration() {
        let p = TrapezoidProfile::new(0.2, 0.5, 0.5);
        assert!(p.is_triangular());
        assert_abs_diff_eq!(p.duration(), 2.0 * libm::sqrt(0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(p.duration(), 1.264911, epsilon = 1e-6);
        assert_abs_diff_eq!(p.position(p.duration() / 2.0), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn zero_length_move() {
        let s = unit_scene();
        let p = Pose::new(2.0, 1.0, 1.0);
        let plan = plan_line_move(&s, &p, &p).unwrap();
        assert_eq!(plan.duration, 0.0);
        assert_eq!(plan.samples.len(), 1);
        let sched = quantize_schedule(&s, &plan).unwrap();
        assert_eq!(sched.tick_count(), 1);
        for i in 0..3 {
            assert_eq!(sched.drive_schedule(i).count(), 1);
        }
        let exact = StepSchedule {
            times: vec![0.0],
            commanded: plan.samples[0].lengths.values().iter().map(|l| vec![*l]).collect(),
            planned: vec![p],
        };
        let report = synchronization_check(&s, &exact).unwrap();
        assert!(report.synchronized);
        assert!(report.max_deviation < 1e-12);
        assert!(synchronization_check(&s, &sched).unwrap().synchronized);
    }

    #[test]
    fn quantize_rounds_to_nearest_step() {
        let q = quantize(3.7416573, 0.001, 0, 100_000);
        assert_eq!(q, 3742);
        assert!(libm::fabs(q as f64 * 0.001 - 3.7416573) <= 0.0005);
        // ties go down
        assert_eq!(quantize(2.5, 1.0, 0, 10), 2);
        assert_eq!(quantize(2.6, 1.0, 0, 10), 3);
        assert_eq!(quantize(12.0, 1.0, 0, 10), 10);
    }

    #[test]
    fn unreachable_endpoint() {
        let s = unit_scene();
        let err = plan_line_move(&s, &Pose::new(2.0, 1.0, 1.0), &Pose::new(2.0, 1.0, 4.5)).unwrap_err();
        assert!(matches!(err, PlanError::UnreachableEndpoint { endpoint: Endpoint::Goal, .. }));
    }

    #[test]
    fn plan_respects_limits_and_synchronizes() {
        let s = unit_scene();
        let (a, b) = (Pose::new(0.5, 0.4, 0.5), Pose::new(3.2, 2.0, 2.5));
        let plan = plan_line_move(&s, &a, &b).unwrap();
        assert_eq!(plan.samples[0].pose, a);
        assert_eq!(plan.samples.last().unwrap().pose, b);
        for w in plan.samples.windows(2) {
            let dt = w[1].time - w[0].time;
            assert!(dt > 0.0);
            for i in 0..3 {
                let rate = libm::fabs(w[1].lengths[i] - w[0].lengths[i]) / dt;
                assert!(rate <= s.drive(i).speed_max + 1e-9, "rate {rate}");
            }
        }
        let sched = quantize_schedule(&s, &plan).unwrap();
        for i in 0..3 {
            let res = s.drive(i).resolution;
            let steps: Vec<i64> = sched.commanded[i].iter().map(|l| libm::round(l / res) as i64).collect();
            assert!(steps.windows(2).all(|w| (w[1] - w[0]).abs() <= 1));
        }
        let report = synchronization_check(&s, &sched).unwrap();
        assert!(report.synchronized, "{report:?}");
    }

    #[test]
    fn reversed_move_takes_as_long() {
        let s = unit_scene();
        let (a, b) = (Pose::new(0.5, 0.4, 0.5), Pose::new(3.2, 2.0, 2.5));
        let fwd = plan_line_move(&s, &a, &b).unwrap().duration;
        let back = plan_line_move(&s, &b, &a).unwrap().duration;
        assert_abs_diff_eq!(fwd, back, epsilon = 1e-12);
    }

    #[test]
    fn frozen_drive_breaks_synchronization() {
        let s = unit_scene();
        let plan = plan_line_move(&s, &Pose::new(0.5, 0.4, 0.5), &Pose::new(3.2, 2.0, 2.5)).unwrap();
        let mut sched = quantize_schedule(&s, &plan).unwrap();
        let mid = sched.tick_count() / 2;
        let frozen = sched.commanded[1][mid];
        sched.commanded[1][mid..].iter_mut().for_each(|l| *l = frozen);
        let report = synchronization_check(&s, &sched).unwrap();
        assert!(!report.synchronized);
        assert!(report.max_deviation > 0.01);
    }

    #[test]
    fn sample_times_include_boundaries() {
        let p = TrapezoidProfile::new(2.0, 0.5, 0.5);
        let t = sample_times(&p, 0.01);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 5.0);
        assert!(t.contains(&1.0) && t.contains(&4.0));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}

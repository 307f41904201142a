//! `rigidchain` command-line front end.
//!
//! Results go to the output stream, diagnostics to the error stream.
//! Exit codes: 0 success, 1 usage error, 2 scene or parse error,
//! 3 computed but infeasible or unreachable, 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rigidchain_core::accuracy::{error_cell, AccuracyError};
use rigidchain_core::trajectory::{quantization_error_bound, LimitKind, Phase, DEFAULT_TICK};
use rigidchain_core::workspace::classify_cell;
use rigidchain_core::*;

use crate::output::{join, num};
use crate::parallel::{default_jobs, map_indexed};
use crate::scene_file::{load_scene, SceneFileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SCENE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Comma-separated `x,y,z`.
#[derive(Debug, Clone, Copy)]
struct Triple(Vec3);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = NumberList::from_str(s)?.0;
        match v[..] {
            [x, y, z] => Ok(Triple(Vec3::new(x, y, z))),
            _ => Err(format!("expected x,y,z, got {} values", v.len())),
        }
    }
}

#[derive(Debug, Clone)]
struct NumberList(Vec<f64>);

impl FromStr for NumberList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|part| {
                let part = part.trim();
                part.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("`{part}` is not a finite number"))
            })
            .collect::<Result<_, _>>()
            .map(NumberList)
    }
}

#[derive(Debug, Clone, Copy)]
struct Dims([usize; 3]);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [x, y, z] => Ok(Dims([x, y, z])),
            _ => Err("expected nx,ny,nz".to_string()),
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "rigidchain", version, about = "Kinematics, statics, workspace and motion analysis for rigid-chain platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chain lengths for a platform position.
    Ik {
        #[arg(long)]
        scene: PathBuf,
        /// Platform reference point, x,y,z in meters.
        #[arg(long, allow_hyphen_values = true)]
        pose: Triple,
    },
    /// Platform position for given chain lengths.
    Fk {
        #[arg(long)]
        scene: PathBuf,
        /// One length per drive, meters.
        #[arg(long)]
        lengths: NumberList,
        /// Starting point for the iterative solver. Without it, three-drive
        /// scenes use the closed form.
        #[arg(long, allow_hyphen_values = true)]
        guess: Option<Triple>,
    },
    /// Chain forces holding the loaded platform.
    Statics {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        pose: Triple,
    },
    /// Whether the platform can be held at a position.
    Reach {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        pose: Triple,
    },
    /// Reachable fraction of the room on a cell-center grid.
    Coverage {
        #[arg(long)]
        scene: PathBuf,
        /// Cells per axis, nx,ny,nz.
        #[arg(long)]
        grid: Dims,
        /// Per-cell CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Worst-case position error over the reachable cells.
    Errmap {
        #[arg(long)]
        scene: PathBuf,
        /// Largest cell edge, meters.
        #[arg(long, value_parser = positive)]
        grid_res: f64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Synchronized straight-line move and its quantized chain schedule.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        from: Triple,
        #[arg(long, allow_hyphen_values = true)]
        to: Triple,
        /// Output sample period, seconds.
        #[arg(long, default_value_t = DEFAULT_TICK, value_parser = positive)]
        tick: f64,
        /// Commanded lengths per tick and drive.
        #[arg(long)]
        out: PathBuf,
        /// Planned samples (time, path position, pose, exact lengths).
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl std::fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

impl From<SceneFileError> for Failure {
    fn from(e: SceneFileError) -> Self {
        Failure::new(EXIT_SCENE, e)
    }
}

impl From<KinematicsError> for Failure {
    fn from(e: KinematicsError) -> Self {
        let code = match e {
            KinematicsError::DriveCount { .. } | KinematicsError::LengthCount { .. } | KinematicsError::ChainIndex { .. } => {
                EXIT_USAGE
            }
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e)
    }
}

impl From<StaticsError> for Failure {
    fn from(e: StaticsError) -> Self {
        Failure::new(EXIT_NUMERICAL, e)
    }
}

impl From<AccuracyError> for Failure {
    fn from(e: AccuracyError) -> Self {
        let code = match e {
            AccuracyError::Grid(_) | AccuracyError::LengthCount { .. } => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e)
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        Failure::new(EXIT_USAGE, e)
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::UnreachableEndpoint { .. }
            | PlanError::PathLeavesWorkspace { .. }
            | PlanError::InfeasibleQuantization { .. } => EXIT_INFEASIBLE,
            PlanError::InvalidTick => EXIT_USAGE,
            PlanError::MalformedSchedule(_) | PlanError::Kinematics(_) => EXIT_NUMERICAL,
        };
        Failure::new(code, e)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))
}

/// Parses `args` (program name first) and runs one subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut stdout = String::new();
    let result = execute(cli.command, &mut stdout);
    let _ = out.write_all(stdout.as_bytes());
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut String) -> Result<i32, Failure> {
    match command {
        Command::Ik { scene, pose } => {
            let scene = load_scene(scene)?;
            let lengths = inverse_kinematics(&scene, &Pose::from(pose.0));
            line(out, &join(lengths.values().iter().copied()));
            Ok(EXIT_OK)
        }
        Command::Fk { scene, lengths, guess } => fk(&load_scene(scene)?, lengths.0, guess.map(|g| g.0), out),
        Command::Statics { scene, pose } => statics(&load_scene(scene)?, Pose::from(pose.0), out),
        Command::Reach { scene, pose } => {
            let r = is_reachable(&load_scene(scene)?, pose.0);
            line(out, &format!("reachable,{}", r.reachable()));
            let names: Vec<&str> = r.violations.iter().map(|c| c.as_str()).collect();
            line(out, &format!("violations,{}", if names.is_empty() { "none".to_string() } else { names.join(",") }));
            Ok(if r.reachable() { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Coverage { scene, grid, out: path, jobs } => {
            coverage(&load_scene(scene)?, grid.0, path.as_deref(), jobs.unwrap_or_else(default_jobs), out)
        }
        Command::Errmap { scene, grid_res, out: path, jobs } => {
            errmap(&load_scene(scene)?, grid_res, &path, jobs.unwrap_or_else(default_jobs), out)
        }
        Command::Plan { scene, from, to, tick, out: path, plan_out } => {
            plan(&load_scene(scene)?, Pose::from(from.0), Pose::from(to.0), tick, &path, plan_out.as_deref(), out)
        }
    }
}

fn line(out: &mut String, text: &str) {
    out.push_str(text);
    out.push('\n');
}

/// Below the effective anchors, under their centroid, half a mean chain length down.
fn default_guess(scene: &Scene, lengths: &[f64]) -> Pose {
    let anchors = scene.effective_anchors();
    let n = anchors.len() as f64;
    let centroid = anchors.iter().fold(Vec3::ZERO, |acc, a| acc + *a) * (1.0 / n);
    let mean = lengths.iter().sum::<f64>() / n;
    Pose::new(centroid.x, centroid.y, scene.min_effective_anchor_z() - 0.5 * mean)
}

fn fk(scene: &Scene, lengths: Vec<f64>, guess: Option<Vec3>, out: &mut String) -> Result<i32, Failure> {
    let lengths = ChainLengths::new(lengths).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let pose = match guess {
        None if scene.drive_count() == 3 => forward_kinematics_3(scene, &lengths)?,
        None => forward_kinematics_lsq(scene, &lengths, &default_guess(scene, lengths.values()))?,
        Some(g) => forward_kinematics_lsq(scene, &lengths, &Pose::from(g))?,
    };
    line(out, &join(pose.position.to_array()));
    Ok(EXIT_OK)
}

fn statics(scene: &Scene, pose: Pose, out: &mut String) -> Result<i32, Failure> {
    let sol = static_forces(scene, &pose)?;
    let verdict = force_feasible(scene, &pose)?;
    line(out, &format!("forces,{}", join(sol.axial_forces.iter().copied())));
    line(out, &format!("residual,{}", num(sol.residual)));
    line(out, &format!("feasible,{}", verdict.feasible));
    line(out, &format!("limiting_chain,{}", verdict.limiting_chain));
    line(out, &format!("excess,{}", num(verdict.excess)));
    Ok(if verdict.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn coverage(scene: &Scene, dims: [usize; 3], path: Option<&Path>, jobs: usize, out: &mut String) -> Result<i32, Failure> {
    let grid = Grid::new(*scene.room(), dims)?;
    let verdicts = map_indexed(grid.cell_count(), jobs, |i| classify_cell(scene, &grid, i));
    let mut tally = CoverageTally::default();
    for v in &verdicts {
        tally.add(v);
    }
    let report = tally.into_report(dims);

    line(out, "# convention: cell-center");
    line(out, &format!("grid,{},{},{}", dims[0], dims[1], dims[2]));
    line(out, &format!("cells_total,{}", report.cells_total));
    line(out, &format!("cells_reachable,{}", report.cells_reachable));
    line(out, &format!("fraction,{}", num(report.fraction)));
    for c in Constraint::ALL {
        line(out, &format!("rejected,{},{}", c.as_str(), report.rejections(c)));
    }

    if let Some(path) = path {
        let mut csv = String::with_capacity(verdicts.len() * 64);
        line(&mut csv, "# convention: cell-center");
        line(&mut csv, "ix,iy,iz,cx,cy,cz,reachable,first_violation");
        for (i, v) in verdicts.iter().enumerate() {
            let [ix, iy, iz] = grid.cell_index(i);
            let c = grid.center([ix, iy, iz]);
            let first = v.first_violation().map_or("none", Constraint::as_str);
            line(&mut csv, &format!("{ix},{iy},{iz},{},{},{first}", join(c.to_array()), v.reachable()));
        }
        write_file(path, &csv)?;
    }
    Ok(EXIT_OK)
}

fn errmap(scene: &Scene, resolution: f64, path: &Path, jobs: usize, out: &mut String) -> Result<i32, Failure> {
    let grid = Grid::from_resolution(*scene.room(), resolution)?;
    let cells = map_indexed(grid.cell_count(), jobs, |i| error_cell(scene, &grid, i))
        .into_iter()
        .filter_map(Result::transpose)
        .collect::<Result<Vec<ErrorCell>, _>>()?;

    let mut csv = String::with_capacity(cells.len() * 48);
    line(&mut csv, "cx,cy,cz,worst_case_error_m");
    for c in &cells {
        line(&mut csv, &format!("{},{}", join(c.center.to_array()), num(c.worst_case_error)));
    }
    write_file(path, &csv)?;

    let dims = grid.dims();
    let max = cells.iter().map(|c| c.worst_case_error).fold(0.0, f64::max);
    let mean = if cells.is_empty() { 0.0 } else { cells.iter().map(|c| c.worst_case_error).sum::<f64>() / cells.len() as f64 };
    line(out, &format!("grid,{},{},{}", dims[0], dims[1], dims[2]));
    line(out, &format!("cells_reachable,{}", cells.len()));
    line(out, &format!("max_worst_case_error_m,{}", num(max)));
    line(out, &format!("mean_worst_case_error_m,{}", num(mean)));
    Ok(EXIT_OK)
}

fn plan(
    scene: &Scene,
    from: Pose,
    to: Pose,
    tick: f64,
    path: &Path,
    plan_path: Option<&Path>,
    out: &mut String,
) -> Result<i32, Failure> {
    let plan = plan_line_move_with_tick(scene, &from, &to, tick)?;
    let schedule = quantize_schedule(scene, &plan)?;
    let sync = synchronization_check(scene, &schedule)?;

    let mut csv = String::with_capacity(schedule.tick_count() * scene.drive_count() * 24);
    line(&mut csv, "time_s,drive,commanded_length_m");
    for (k, t) in schedule.times.iter().enumerate() {
        for (i, lengths) in schedule.commanded.iter().enumerate() {
            line(&mut csv, &format!("{},{i},{}", num(*t), num(lengths[k])));
        }
    }
    write_file(path, &csv)?;

    if let Some(plan_path) = plan_path {
        let mut csv = String::new();
        let chains: Vec<String> = (0..scene.drive_count()).map(|i| format!("length_{i}_m")).collect();
        line(&mut csv, &format!("time_s,path_m,x,y,z,{}", chains.join(",")));
        for s in &plan.samples {
            let fields = [s.time, s.path_position].into_iter().chain(s.pose.position.to_array()).chain(s.lengths.values().iter().copied());
            line(&mut csv, &join(fields));
        }
        write_file(plan_path, &csv)?;
    }

    line(out, &format!("distance_m,{}", num(plan.profile.distance)));
    line(out, &format!("duration_s,{}", num(plan.duration)));
    line(out, &format!("peak_speed_m_s,{}", num(plan.profile.peak_speed)));
    line(out, &format!("accel_m_s2,{}", num(plan.profile.accel)));
    line(out, &format!("profile,{}", if plan.profile.is_triangular() { "triangular" } else { "trapezoidal" }));
    for g in &plan.governing_limits {
        let phase = match g.phase {
            Phase::Accelerate => "accelerate",
            Phase::Cruise => "cruise",
            Phase::Decelerate => "decelerate",
        };
        let kind = match g.kind {
            LimitKind::Speed => "speed",
            LimitKind::Acceleration => "acceleration",
        };
        line(out, &format!("governing,{phase},{},{kind}", g.drive));
    }
    line(out, &format!("ticks,{}", schedule.tick_count()));
    line(out, &format!("max_deviation_m,{}", num(sync.max_deviation)));
    line(out, &format!("deviation_bound_m,{}", num(2.0 * quantization_error_bound(scene, &to)?)));
    line(out, &format!("synchronized,{}", sync.synchronized));
    Ok(if sync.synchronized { EXIT_OK } else { EXIT_INFEASIBLE })
}

//! Command-line front end: plan, compare, check, export-grid.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::SVector;

use redunplan_cli::audit::{audit_grid, audit_trajectory};
use redunplan_cli::export::{
    atomic_write, grid_csv, read_grid_csv, read_trajectory_csv, render_layer_ppm, trajectory_csv,
    RASTER_LEGEND,
};
use redunplan_cli::formats::{load_robot, load_scene, load_task};
use redunplan_cli::report::{
    CompareLeg, CompareReport, EllipsoidReport, LegReport, PlannerRow, RunReport,
};
use redunplan_cli::threads::{plan_timed, resolve_threads, ThreadedRunner};

use redunplan_core::collision::Scene;
use redunplan_core::dp::{DpGrid, GridParams, PlanError, PlanOptions, PlanResult, StartMode};
use redunplan_core::model::{JointConfig, RobotModel};
use redunplan_core::presets::{DEFAULT_BUDGET_SECONDS, DEFAULT_U_RESOLUTION};
use redunplan_core::stiffness::force_ellipsoid;
use redunplan_core::task::{fixed_slide_plan, FixedSlideError, TaskMode, TaskSpec};

/// Exit codes: 0 success, 2 bad configuration or IO, 3 unreachable task,
/// 4 no feasible path, 5 audit failure, 6 other planning failure.
mod exit_codes {
    pub const BAD_CONFIG: u8 = 2;
    pub const UNREACHABLE: u8 = 3;
    pub const NO_PATH: u8 = 4;
    pub const AUDIT: u8 = 5;
    pub const PLANNING: u8 = 6;
}

#[derive(Parser)]
#[command(
    name = "redunplan",
    about = "Joint-space trajectory planning for a 6R arm on a linear rail: \
             slide-grid dynamic programming with stiffness-selected terminals",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonInputs {
    /// Robot model JSON file.
    #[arg(long)]
    robot: PathBuf,
    /// Scene JSON file (static obstacles; may list zero shapes).
    #[arg(long)]
    scene: PathBuf,
    /// Task JSON file (holes, legs, mode).
    #[arg(long)]
    task: PathBuf,
}

#[derive(Args)]
struct GridFlags {
    /// Slide grid resolution in meters.
    #[arg(long, default_value_t = DEFAULT_U_RESOLUTION)]
    u_res: f64,
    /// Lower end of the slide grid in meters (default: the slide's lower limit).
    #[arg(long, allow_negative_numbers = true)]
    u_min: Option<f64>,
    /// Upper end of the slide grid in meters (default: the slide's upper limit).
    #[arg(long, allow_negative_numbers = true)]
    u_max: Option<f64>,
}

impl GridFlags {
    fn params(&self, model: &RobotModel) -> GridParams {
        GridParams {
            u_min: self.u_min.unwrap_or_else(|| model.slide_min()),
            u_max: self.u_max.unwrap_or_else(|| model.slide_max()),
            u_resolution: self.u_res,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan every task leg, chaining terminal to initial configurations.
    Plan {
        #[command(flatten)]
        inputs: CommonInputs,
        #[command(flatten)]
        grid: GridFlags,
        /// Force direction selector, six comma-separated values
        /// (default: 0,0,1,0,0,0 = tool z axis).
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        /// Planning-time budget per leg in seconds; overruns are warnings
        /// (default: 13.62, or the task file's budget_s).
        #[arg(long)]
        budget: Option<f64>,
        /// Worker threads for the stage relaxation (default: the
        /// REDUNPLAN_THREADS environment variable, else 1). Results are
        /// identical for any value.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory for trajectories and reports.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Additionally export the per-leg grid CSV and null-space rasters.
        #[arg(long)]
        export_grid: bool,
        /// Override the scene's collision margin in meters.
        #[arg(long, allow_negative_numbers = true)]
        margin: Option<f64>,
    },
    /// Plan with the moving slide and with a fixed slide, and compare.
    Compare {
        #[command(flatten)]
        inputs: CommonInputs,
        #[command(flatten)]
        grid: GridFlags,
        /// Slide position for the fixed-slide baseline, meters.
        #[arg(long, allow_negative_numbers = true)]
        fixed_slide: f64,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Audit a planned trajectory (and optionally an exported grid).
    Check {
        #[command(flatten)]
        inputs: CommonInputs,
        /// Trajectory CSV produced by `plan`.
        #[arg(long)]
        trajectory: PathBuf,
        /// Task leg index the trajectory belongs to.
        #[arg(long, default_value_t = 0)]
        leg: usize,
        /// Grid CSV produced by `plan --export-grid` for the same leg.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
        #[arg(long)]
        eta: Option<String>,
    },
    /// Build and export one leg's grid (CSV plus per-layer rasters).
    ExportGrid {
        #[command(flatten)]
        inputs: CommonInputs,
        #[command(flatten)]
        grid: GridFlags,
        /// Task leg index to export.
        #[arg(long, default_value_t = 0)]
        leg: usize,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<redunplan_cli::formats::FormatError> for Failure {
    fn from(e: redunplan_cli::formats::FormatError) -> Failure {
        Failure::new(exit_codes::BAD_CONFIG, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new(exit_codes::BAD_CONFIG, e.to_string())
    }
}

fn plan_failure(leg: usize, e: PlanError) -> Failure {
    let code = match e {
        PlanError::BadGridParams | PlanError::InitialConfigNotOnGrid => exit_codes::BAD_CONFIG,
        PlanError::UnreachableStage { .. } => exit_codes::UNREACHABLE,
        PlanError::NoFeasiblePath { .. } | PlanError::PinnedTerminalUnreached => {
            exit_codes::NO_PATH
        }
        PlanError::SingularTerminal | PlanError::InstanceTooLarge { .. } => exit_codes::PLANNING,
    };
    Failure::new(code, format!("leg {leg}: {e}"))
}

fn parse_eta(flag: &Option<String>) -> Result<SVector<f64, 6>, Failure> {
    let Some(text) = flag else {
        return Ok(redunplan_core::stiffness::default_eta());
    };
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 6 {
        return Err(Failure::new(
            exit_codes::BAD_CONFIG,
            format!("--eta needs 6 comma-separated values, got {}", parts.len()),
        ));
    }
    let mut eta = SVector::<f64, 6>::zeros();
    for (k, p) in parts.iter().enumerate() {
        eta[k] = p.trim().parse::<f64>().map_err(|e| {
            Failure::new(exit_codes::BAD_CONFIG, format!("--eta component {k}: {e}"))
        })?;
    }
    if eta.norm() == 0.0 {
        return Err(Failure::new(
            exit_codes::BAD_CONFIG,
            "--eta must be nonzero",
        ));
    }
    Ok(eta)
}

fn initial_start(task: &TaskSpec) -> StartMode {
    match task.mode {
        TaskMode::FreeInitial => StartMode::Free,
        TaskMode::Chained => StartMode::Fixed(task.initial_q.expect("validated")),
    }
}

fn load_inputs(inputs: &CommonInputs) -> Result<(RobotModel, Scene, TaskSpec), Failure> {
    let model = load_robot(&inputs.robot)?;
    let scene = load_scene(&inputs.scene)?;
    let task = load_task(&inputs.task)?;
    Ok((model, scene, task))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    atomic_write(path, text.as_bytes())?;
    Ok(())
}

fn export_grid_files(
    grid: &DpGrid,
    result: Option<&PlanResult>,
    out_dir: &Path,
    leg: usize,
) -> Result<(String, Vec<String>), Failure> {
    let csv_path = out_dir.join(format!("leg_{leg:02}_grid.csv"));
    atomic_write(&csv_path, grid_csv(grid).as_bytes())?;
    let mut rasters = Vec::with_capacity(grid.n_layers);
    for layer in 0..grid.n_layers {
        let ppm = render_layer_ppm(grid, layer, result.map(|r| r.node_path.as_slice()));
        let ppm_path = out_dir.join(format!("leg_{leg:02}_layer_{layer:03}.ppm"));
        atomic_write(&ppm_path, &ppm)?;
        rasters.push(ppm_path.display().to_string());
    }
    Ok((csv_path.display().to_string(), rasters))
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    inputs: &CommonInputs,
    grid_flags: &GridFlags,
    eta_flag: &Option<String>,
    budget_flag: Option<f64>,
    threads_flag: Option<usize>,
    out_dir: &Path,
    export_grid: bool,
    margin: Option<f64>,
) -> Result<(), Failure> {
    let (model, mut scene, task) = load_inputs(inputs)?;
    if let Some(m) = margin {
        scene.margin = m;
    }
    let eta = parse_eta(eta_flag)?;
    let params = grid_flags.params(&model);
    let budget = budget_flag
        .or(task.budget_seconds)
        .unwrap_or(DEFAULT_BUDGET_SECONDS);
    let runner = ThreadedRunner {
        threads: resolve_threads(threads_flag),
    };
    std::fs::create_dir_all(out_dir)?;

    let mut start = initial_start(&task);
    let mut leg_reports = Vec::with_capacity(task.legs.len());
    let mut total_seconds = 0.0;
    for (leg, spec) in task.legs.iter().enumerate() {
        let path = task.leg_path(leg).expect("validated task");
        let options = PlanOptions {
            start: start.clone(),
            eta,
            ..PlanOptions::default()
        };
        let (result, grid) = plan_timed(&model, &scene, &path, &params, &options, &runner)
            .map_err(|e| plan_failure(leg, e))?;
        total_seconds += result.planning_seconds;

        let within_budget = result.planning_seconds <= budget;
        if !within_budget {
            eprintln!(
                "warning: leg {leg} took {:.3} s, over the {budget:.3} s budget",
                result.planning_seconds
            );
        }

        let audit = audit_trajectory(&model, &scene, &path, &result.trajectory);

        let traj_path = out_dir.join(format!("leg_{leg:02}_trajectory.csv"));
        atomic_write(&traj_path, trajectory_csv(&result, path.tau).as_bytes())?;

        let terminal = result.trajectory.last().expect("nonempty trajectory");
        let ellipsoid_json = match force_ellipsoid(&model, terminal) {
            Ok(e) => {
                let p = out_dir.join(format!("leg_{leg:02}_ellipsoid.json"));
                write_json(&p, &EllipsoidReport::from_ellipsoid(&e))?;
                Some(p.display().to_string())
            }
            Err(err) => {
                eprintln!("warning: leg {leg}: no ellipsoid report ({err})");
                None
            }
        };

        let (grid_csv_path, rasters) = if export_grid {
            let (csv, rasters) = export_grid_files(&grid, Some(&result), out_dir, leg)?;
            (Some(csv), rasters)
        } else {
            (None, Vec::new())
        };

        println!(
            "leg {leg}: cost {:.6}, terminal mma {:.4}, {:.3} s ({}), {} audit violation(s)",
            result.total_cost,
            result.terminal_mma,
            result.planning_seconds,
            if within_budget {
                "within budget"
            } else {
                "OVER BUDGET"
            },
            audit.violation_count(),
        );

        leg_reports.push(LegReport {
            leg,
            from: spec.from,
            to: spec.to,
            waypoints: spec.waypoints,
            total_cost: result.total_cost,
            terminal_mma: result.terminal_mma,
            planning_seconds: result.planning_seconds,
            budget_seconds: budget,
            within_budget,
            audit_checks: audit.checks_performed(),
            audit_violations: audit.violation_count(),
            representativeness_violations: audit.representativeness.violations.len(),
            trajectory_csv: traj_path.display().to_string(),
            ellipsoid_json,
            grid_csv: grid_csv_path,
            grid_rasters: rasters,
        });

        start = StartMode::Fixed(*terminal);
    }

    let report = RunReport {
        legs: leg_reports,
        total_planning_seconds: total_seconds,
    };
    let report_path = out_dir.join("report.json");
    write_json(&report_path, &report)?;
    println!("report: {}", report_path.display());
    Ok(())
}

fn cmd_compare(
    inputs: &CommonInputs,
    grid_flags: &GridFlags,
    fixed_slide: f64,
    eta_flag: &Option<String>,
    threads_flag: Option<usize>,
    out_dir: &Path,
) -> Result<(), Failure> {
    let (model, scene, task) = load_inputs(inputs)?;
    let eta = parse_eta(eta_flag)?;
    let params = grid_flags.params(&model);
    let runner = ThreadedRunner {
        threads: resolve_threads(threads_flag),
    };
    std::fs::create_dir_all(out_dir)?;

    let mut moving_start = Some(initial_start(&task));
    let mut fixed_start = Some(initial_start(&task));
    let mut legs = Vec::with_capacity(task.legs.len());
    let mut moving_total = 0.0;
    let mut fixed_total = 0.0;
    let mut comparable = 0usize;

    for (leg, _) in task.legs.iter().enumerate() {
        let path = task.leg_path(leg).expect("validated task");

        let moving_row = match moving_start.clone() {
            None => PlannerRow {
                feasible: false,
                total_cost: None,
                terminal_mma: None,
                wall_seconds: 0.0,
                note: Some("previous leg failed, chain broken".to_string()),
            },
            Some(start) => {
                let options = PlanOptions {
                    start,
                    eta,
                    ..PlanOptions::default()
                };
                match plan_timed(&model, &scene, &path, &params, &options, &runner) {
                    Ok((result, _)) => {
                        moving_start = Some(StartMode::Fixed(*result.trajectory.last().unwrap()));
                        PlannerRow {
                            feasible: true,
                            total_cost: Some(result.total_cost),
                            terminal_mma: Some(result.terminal_mma),
                            wall_seconds: result.planning_seconds,
                            note: None,
                        }
                    }
                    Err(e) => {
                        moving_start = None;
                        PlannerRow {
                            feasible: false,
                            total_cost: None,
                            terminal_mma: None,
                            wall_seconds: 0.0,
                            note: Some(e.to_string()),
                        }
                    }
                }
            }
        };

        let fixed_row = match fixed_start.clone() {
            None => PlannerRow {
                feasible: false,
                total_cost: None,
                terminal_mma: None,
                wall_seconds: 0.0,
                note: Some("previous leg failed, chain broken".to_string()),
            },
            Some(start) => {
                let clock = Instant::now();
                match fixed_slide_plan(&model, &scene, &path, fixed_slide, &start, &eta) {
                    Ok(result) => {
                        fixed_start = Some(StartMode::Fixed(*result.trajectory.last().unwrap()));
                        PlannerRow {
                            feasible: true,
                            total_cost: Some(result.total_cost),
                            terminal_mma: Some(result.terminal_mma),
                            wall_seconds: clock.elapsed().as_secs_f64(),
                            note: None,
                        }
                    }
                    Err(e) => {
                        fixed_start = None;
                        PlannerRow {
                            feasible: false,
                            total_cost: None,
                            terminal_mma: None,
                            wall_seconds: clock.elapsed().as_secs_f64(),
                            note: Some(match e {
                                FixedSlideError::InfeasibleAtFixedSlide { stage } => format!(
                                    "infeasible at fixed slide (waypoint {stage} leaves the workspace)"
                                ),
                                other => other.to_string(),
                            }),
                        }
                    }
                }
            }
        };

        if moving_row.feasible && fixed_row.feasible {
            comparable += 1;
            moving_total += moving_row.total_cost.unwrap();
            fixed_total += fixed_row.total_cost.unwrap();
        }
        legs.push(CompareLeg {
            leg,
            moving_slide: moving_row,
            fixed_slide: fixed_row,
        });
    }

    println!("leg | moving slide: cost / mma       | fixed slide: cost / mma");
    for row in &legs {
        let fmt = |r: &PlannerRow| match (r.feasible, r.total_cost, r.terminal_mma) {
            (true, Some(c), Some(m)) => format!("{c:>12.6} / {m:<8.4}"),
            _ => format!("infeasible ({})", r.note.as_deref().unwrap_or("")),
        };
        println!(
            "{:>3} | {:<30} | {}",
            row.leg,
            fmt(&row.moving_slide),
            fmt(&row.fixed_slide)
        );
    }
    let ratio = if comparable > 0 && moving_total > 0.0 {
        Some(fixed_total / moving_total)
    } else {
        None
    };
    if let Some(r) = ratio {
        println!("cost ratio fixed/moving over {comparable} comparable leg(s): {r:.4}");
    }

    let report = CompareReport {
        fixed_slide_value: fixed_slide,
        legs,
        comparable_legs: comparable,
        moving_total_cost: moving_total,
        fixed_total_cost: fixed_total,
        cost_ratio_fixed_over_moving: ratio,
    };
    let report_path = out_dir.join("compare.json");
    write_json(&report_path, &report)?;
    println!("report: {}", report_path.display());
    Ok(())
}

fn cmd_check(
    inputs: &CommonInputs,
    trajectory: &Path,
    leg: usize,
    grid_csv_path: &Option<PathBuf>,
    eta_flag: &Option<String>,
) -> Result<(), Failure> {
    let (model, scene, task) = load_inputs(inputs)?;
    let eta = parse_eta(eta_flag)?;
    if leg >= task.legs.len() {
        return Err(Failure::new(
            exit_codes::BAD_CONFIG,
            format!("task has {} legs, no leg {leg}", task.legs.len()),
        ));
    }
    let path = task.leg_path(leg).expect("validated task");
    let rows = read_trajectory_csv(trajectory)
        .map_err(|e| Failure::new(exit_codes::BAD_CONFIG, e.to_string()))?;
    let configs: Vec<JointConfig> = rows.iter().map(|(_, q)| *q).collect();

    let audit = audit_trajectory(&model, &scene, &path, &configs);
    let mut violations = 0usize;
    if audit.length_mismatch {
        violations += 1;
        eprintln!(
            "violation: trajectory has {} waypoints, leg {leg} expects {}",
            configs.len(),
            path.poses.len()
        );
    }
    for (stage, pos, rot) in &audit.fk_violations {
        violations += 1;
        eprintln!("violation: waypoint {stage} misses its pose (pos {pos:.3e} m, rot {rot:.3e})");
    }
    for (stage, list) in &audit.admissibility_violations {
        for v in list {
            violations += 1;
            eprintln!("violation: waypoint {stage}: {v}");
        }
    }
    for (stage, list) in &audit.velocity_violations {
        for v in list {
            violations += 1;
            eprintln!("violation: transition into waypoint {stage}: {v}");
        }
    }
    for v in &audit.representativeness.violations {
        violations += 1;
        eprintln!(
            "violation: waypoint {}: augmented Jacobian rank {} < 7",
            v.stage, v.rank
        );
    }

    if let Some(grid_path) = grid_csv_path {
        let grid = read_grid_csv(grid_path, path.tau)
            .map_err(|e| Failure::new(exit_codes::BAD_CONFIG, e.to_string()))?;
        let grid_audit = audit_grid(&model, &grid, &eta, Some(&configs));
        for v in &grid_audit.bellman_violations {
            violations += 1;
            eprintln!(
                "violation: grid node ({}, {}, {}) stores cost {} but relaxation gives {}",
                v.stage, v.column, v.layer, v.stored, v.recomputed
            );
        }
        if grid_audit.decreasing_edges > 0 {
            violations += grid_audit.decreasing_edges;
            eprintln!(
                "violation: {} predecessor edge(s) with decreasing cost",
                grid_audit.decreasing_edges
            );
        }
        if grid_audit.reconstruction_mismatch {
            violations += 1;
            eprintln!("violation: stored predecessors do not reproduce the trajectory");
        }
    }

    println!(
        "checked {} waypoint(s): {} violation(s)",
        configs.len(),
        violations
    );
    if violations > 0 {
        return Err(Failure::new(exit_codes::AUDIT, "audit failed"));
    }
    Ok(())
}

fn cmd_export_grid(
    inputs: &CommonInputs,
    grid_flags: &GridFlags,
    leg: usize,
    eta_flag: &Option<String>,
    threads_flag: Option<usize>,
    out_dir: &Path,
) -> Result<(), Failure> {
    let (model, scene, task) = load_inputs(inputs)?;
    let eta = parse_eta(eta_flag)?;
    if leg >= task.legs.len() {
        return Err(Failure::new(
            exit_codes::BAD_CONFIG,
            format!("task has {} legs, no leg {leg}", task.legs.len()),
        ));
    }
    let path = task.leg_path(leg).expect("validated task");
    let params = grid_flags.params(&model);
    let runner = ThreadedRunner {
        threads: resolve_threads(threads_flag),
    };
    std::fs::create_dir_all(out_dir)?;

    // Plan first (free start for later legs exported in isolation) so the
    // export carries costs, predecessors and the optimal-path overlay.
    let start = if leg == 0 {
        initial_start(&task)
    } else {
        StartMode::Free
    };
    let options = PlanOptions {
        start,
        eta,
        ..PlanOptions::default()
    };
    let (result, grid) = plan_timed(&model, &scene, &path, &params, &options, &runner)
        .map_err(|e| plan_failure(leg, e))?;
    let (csv, rasters) = export_grid_files(&grid, Some(&result), out_dir, leg)?;
    println!("grid csv: {csv}");
    println!(
        "rasters:  {} file(s); legend: {RASTER_LEGEND}",
        rasters.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plan {
            inputs,
            grid,
            eta,
            budget,
            threads,
            out_dir,
            export_grid,
            margin,
        } => cmd_plan(
            inputs,
            grid,
            eta,
            *budget,
            *threads,
            out_dir,
            *export_grid,
            *margin,
        ),
        Command::Compare {
            inputs,
            grid,
            fixed_slide,
            eta,
            threads,
            out_dir,
        } => cmd_compare(inputs, grid, *fixed_slide, eta, *threads, out_dir),
        Command::Check {
            inputs,
            trajectory,
            leg,
            grid_csv,
            eta,
        } => cmd_check(inputs, trajectory, *leg, grid_csv, eta),
        Command::ExportGrid {
            inputs,
            grid,
            leg,
            eta,
            threads,
            out_dir,
        } => cmd_export_grid(inputs, grid, *leg, eta, *threads, out_dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

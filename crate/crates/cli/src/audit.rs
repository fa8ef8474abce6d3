//! Post-hoc trajectory and grid audits backing the `check` subcommand and
//! the per-leg report summary.

use redunplan_core::collision::Scene;
use redunplan_core::constraints::{in_a, in_b, Violation};
use redunplan_core::dp::{verify_bellman, BellmanViolation, DpGrid};
use redunplan_core::ik::{check_representativeness, RepresentativenessReport};
use redunplan_core::kinematics::forward_kinematics;
use redunplan_core::model::{JointConfig, RobotModel, TaskPath};
use redunplan_core::stiffness::mma;

/// Pose-tracking tolerance for the audit (position meters, rotation
/// Frobenius).
pub const FK_AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Default)]
pub struct TrajectoryAudit {
    pub waypoints: usize,
    /// Waypoint count disagrees with the task leg.
    pub length_mismatch: bool,
    /// (stage, position error, rotation error) beyond tolerance.
    pub fk_violations: Vec<(usize, f64, f64)>,
    /// Position-limit / collision violations per stage.
    pub admissibility_violations: Vec<(usize, Vec<Violation>)>,
    /// Velocity violations per transition (stage index of the later waypoint).
    pub velocity_violations: Vec<(usize, Vec<Violation>)>,
    pub representativeness: RepresentativenessReport,
}

impl TrajectoryAudit {
    pub fn violation_count(&self) -> usize {
        self.length_mismatch as usize
            + self.fk_violations.len()
            + self.admissibility_violations.len()
            + self.velocity_violations.len()
            + self.representativeness.violations.len()
    }

    pub fn clean(&self) -> bool {
        self.violation_count() == 0
    }

    /// Checks performed: one FK + admissibility per waypoint, one velocity
    /// check per transition, one rank check per waypoint.
    pub fn checks_performed(&self) -> usize {
        self.waypoints * 3 + self.waypoints.saturating_sub(1)
    }
}

/// Audits a planned trajectory against its task leg: pose tracking,
/// admissibility, backward-Euler velocity limits and the redundancy-rank
/// condition at every waypoint.
pub fn audit_trajectory(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    trajectory: &[JointConfig],
) -> TrajectoryAudit {
    let mut audit = TrajectoryAudit {
        waypoints: trajectory.len(),
        length_mismatch: trajectory.len() != path.poses.len(),
        ..TrajectoryAudit::default()
    };
    for (stage, q) in trajectory.iter().enumerate() {
        if let Some(pose) = path.poses.get(stage) {
            let fk = forward_kinematics(model, q);
            let pos_err = fk.position_error(pose);
            let rot_err = fk.rotation_error(pose);
            if pos_err > FK_AUDIT_TOL || rot_err > FK_AUDIT_TOL {
                audit.fk_violations.push((stage, pos_err, rot_err));
            }
        }
        let verdict = in_a(model, scene, q);
        if !verdict.admissible() {
            audit
                .admissibility_violations
                .push((stage, verdict.violations));
        }
        if stage > 0 {
            let verdict = in_b(model, q, &trajectory[stage - 1], path.tau);
            if !verdict.admissible() {
                audit.velocity_violations.push((stage, verdict.violations));
            }
        }
    }
    audit.representativeness = check_representativeness(
        model,
        trajectory.iter().enumerate().map(|(i, q)| (i, 0, 0, *q)),
    );
    audit
}

#[derive(Debug, Default)]
pub struct GridAudit {
    pub bellman_violations: Vec<BellmanViolation>,
    /// Predecessor edges whose cost decreases (local costs are
    /// non-negative, so this must be empty).
    pub decreasing_edges: usize,
    /// Trajectory mismatch against the stored predecessor reconstruction.
    pub reconstruction_mismatch: bool,
}

impl GridAudit {
    pub fn clean(&self) -> bool {
        self.bellman_violations.is_empty()
            && self.decreasing_edges == 0
            && !self.reconstruction_mismatch
    }
}

/// Re-checks a grid exported after planning: Bellman consistency of every
/// stored cost, cost monotonicity along predecessor edges, and (when a
/// trajectory is supplied) that following the stored predecessors from the
/// stiffest reached terminal reproduces it.
pub fn audit_grid(
    model: &RobotModel,
    grid: &DpGrid,
    eta: &nalgebra::SVector<f64, 6>,
    trajectory: Option<&[JointConfig]>,
) -> GridAudit {
    let mut audit = GridAudit {
        bellman_violations: verify_bellman(model, grid, &[1.0; 7]),
        ..GridAudit::default()
    };
    for (i, _, _, node) in grid.iter_nodes() {
        if let Some((pj, pg)) = node.pred {
            if i == 0 {
                audit.decreasing_edges += 1;
                continue;
            }
            let pred = grid.node(i - 1, pj as usize, pg as usize);
            if node.cost < pred.cost {
                audit.decreasing_edges += 1;
            }
        }
    }
    if let Some(trajectory) = trajectory {
        audit.reconstruction_mismatch = match reconstruct_stored(model, grid, eta) {
            Some(nodes) if nodes.len() == trajectory.len() => {
                let mut mismatch = false;
                for (stage, ((j, g), q)) in nodes.iter().zip(trajectory.iter()).enumerate() {
                    match grid.node(stage, *j as usize, *g as usize).q {
                        Some(stored) if stored.max_abs_diff(q) <= 1e-9 => {}
                        _ => mismatch = true,
                    }
                }
                mismatch
            }
            _ => true,
        };
    }
    audit
}

/// Follows the stored costs and predecessors from the stiffest reached
/// terminal node without re-planning. Returns the per-stage (column, layer)
/// sequence, or None when the annotations are unusable.
pub fn reconstruct_stored(
    model: &RobotModel,
    grid: &DpGrid,
    eta: &nalgebra::SVector<f64, 6>,
) -> Option<Vec<(u32, u32)>> {
    let last = grid.n_stages.checked_sub(1)?;
    let mut best: Option<((u32, u32), f64)> = None;
    for (j, g, node) in grid.stage_nodes(last) {
        if !node.in_c {
            continue;
        }
        let Ok(value) = mma(model, &node.q?, eta) else {
            continue;
        };
        if best.is_none_or(|(_, b)| value > b) {
            best = Some(((j as u32, g as u32), value));
        }
    }
    let (terminal, _) = best?;
    let mut nodes = vec![(0u32, 0u32); grid.n_stages];
    nodes[last] = terminal;
    for stage in (1..=last).rev() {
        let (j, g) = nodes[stage];
        let pred = grid.node(stage, j as usize, g as usize).pred?;
        nodes[stage - 1] = pred;
    }
    Some(nodes)
}

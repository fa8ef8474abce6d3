//! Task definitions: hole lists, leg-wise path synthesis, and the
//! fixed-slide baseline planner used for comparisons.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Rotation3, SVector, UnitQuaternion};

use crate::collision::{config_in_collision, Scene};
use crate::constraints::velocity_ok;
use crate::dp::{local_cost, PlanResult, StartMode};
use crate::ik::{augmented_ik, representatives};
use crate::model::{JointConfig, PathError, Pose, RobotModel, TaskPath, ROTATION_TOL};
use crate::stiffness::{mma, StiffnessError};

/// One hole-to-hole motion: `waypoints` intervals over `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub from: usize,
    pub to: usize,
    pub waypoints: usize,
    pub duration: f64,
}

/// Whether the first leg's start configuration is free (picked by the
/// optimizer) or supplied. Either way, later legs chain from the previous
/// leg's terminal configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskMode {
    FreeInitial,
    Chained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub holes: Vec<Pose>,
    pub legs: Vec<Leg>,
    pub mode: TaskMode,
    pub initial_q: Option<JointConfig>,
    pub budget_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskError {
    NoLegs,
    HoleIndexOutOfRange { leg: usize },
    BadWaypointCount { leg: usize },
    BadDuration { leg: usize },
    InvalidHoleRotation { hole: usize },
    ChainedWithoutInitial,
}

impl fmt::Display for TaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskError::NoLegs => write!(f, "task defines no legs"),
            TaskError::HoleIndexOutOfRange { leg } => {
                write!(f, "leg {leg} references a hole that does not exist")
            }
            TaskError::BadWaypointCount { leg } => {
                write!(f, "leg {leg} needs at least one waypoint interval")
            }
            TaskError::BadDuration { leg } => {
                write!(f, "leg {leg} needs a positive duration")
            }
            TaskError::InvalidHoleRotation { hole } => {
                write!(f, "hole {hole} has a non-orthonormal orientation")
            }
            TaskError::ChainedWithoutInitial => {
                write!(f, "chained mode requires an initial configuration")
            }
        }
    }
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), TaskError> {
        if self.legs.is_empty() {
            return Err(TaskError::NoLegs);
        }
        for (hole, pose) in self.holes.iter().enumerate() {
            if pose.orthonormality_error() > ROTATION_TOL {
                return Err(TaskError::InvalidHoleRotation { hole });
            }
        }
        for (index, leg) in self.legs.iter().enumerate() {
            if leg.from >= self.holes.len() || leg.to >= self.holes.len() {
                return Err(TaskError::HoleIndexOutOfRange { leg: index });
            }
            if leg.waypoints < 1 {
                return Err(TaskError::BadWaypointCount { leg: index });
            }
            if !(leg.duration > 0.0) {
                return Err(TaskError::BadDuration { leg: index });
            }
        }
        if self.mode == TaskMode::Chained && self.initial_q.is_none() {
            return Err(TaskError::ChainedWithoutInitial);
        }
        Ok(())
    }

    /// Synthesizes the discretized path of one leg.
    pub fn leg_path(&self, leg: usize) -> Result<TaskPath, PathError> {
        let l = &self.legs[leg];
        synthesize_path(
            &self.holes[l.from],
            &self.holes[l.to],
            l.waypoints,
            l.duration,
        )
    }
}

/// Straight-line path from `a` to `b` sampled at `waypoints + 1` instants:
/// positions interpolate linearly; the orientation is carried constant when
/// the endpoints agree within the rotation tolerance and follows the
/// spherical geodesic otherwise. Endpoint samples reproduce `a` and `b`
/// exactly.
pub fn synthesize_path(
    a: &Pose,
    b: &Pose,
    waypoints: usize,
    duration: f64,
) -> Result<TaskPath, PathError> {
    if waypoints < 1 {
        return Err(PathError::TooFewPoses);
    }
    let constant_rotation = a.rotation_error(b) <= ROTATION_TOL;
    let (qa, qb) = if constant_rotation {
        (UnitQuaternion::identity(), UnitQuaternion::identity())
    } else {
        (
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(a.rotation)),
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(b.rotation)),
        )
    };
    let mut poses = Vec::with_capacity(waypoints + 1);
    for i in 0..=waypoints {
        if i == 0 {
            poses.push(*a);
            continue;
        }
        if i == waypoints {
            poses.push(*b);
            continue;
        }
        let t = i as f64 / waypoints as f64;
        let position = a.position + t * (b.position - a.position);
        let rotation = if constant_rotation {
            a.rotation
        } else {
            let q = qa
                .try_slerp(&qb, t, 1e-9)
                .unwrap_or_else(|| qa.nlerp(&qb, t));
            q.to_rotation_matrix().into_inner()
        };
        poses.push(Pose { rotation, position });
    }
    TaskPath::new(poses, duration)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedSlideError {
    SlideOutOfRange,
    /// Some waypoint has no admissible branch at the fixed slide value
    /// (including velocity feasibility from the previous waypoint).
    InfeasibleAtFixedSlide {
        stage: usize,
    },
    Stiffness(StiffnessError),
}

impl fmt::Display for FixedSlideError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedSlideError::SlideOutOfRange => write!(f, "fixed slide value exceeds its limits"),
            FixedSlideError::InfeasibleAtFixedSlide { stage } => {
                write!(
                    f,
                    "no admissible arm branch at waypoint {stage} with the slide fixed"
                )
            }
            FixedSlideError::Stiffness(e) => write!(f, "{e}"),
        }
    }
}

/// One admissible candidate at a waypoint: solution branch, representative
/// index, configuration.
struct FixedCandidate {
    branch: u8,
    rep: usize,
    q: JointConfig,
}

fn admissible_candidates(
    model: &RobotModel,
    scene: &Scene,
    pose: &Pose,
    u: f64,
) -> Vec<FixedCandidate> {
    let mut out = Vec::new();
    for branch in augmented_ik(model, pose, u) {
        let reps = representatives(model, &branch.q);
        if reps.is_empty() {
            continue;
        }
        if config_in_collision(model, scene, &branch.q).is_some() {
            continue;
        }
        for (rep, q) in reps.into_iter().enumerate() {
            out.push(FixedCandidate {
                branch: branch.branch,
                rep,
                q,
            });
        }
    }
    out
}

/// The no-optimization baseline: the slide stays at `u_fixed` and the arm
/// solves the squared problem per waypoint.
///
/// Policy: at waypoint 0 the candidate nearest the supplied start (or the
/// stiffest one when the start is free); afterwards the same solution
/// branch is continued, falling back to the admissible candidate nearest in
/// joint space whenever the branch vanishes or would violate the velocity
/// limits. Position-limit and collision admissibility are enforced at every
/// waypoint, velocity feasibility across consecutive waypoints.
pub fn fixed_slide_plan(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    u_fixed: f64,
    start: &StartMode,
    eta: &SVector<f64, 6>,
) -> Result<PlanResult, FixedSlideError> {
    if u_fixed < model.slide_min() || u_fixed > model.slide_max() {
        return Err(FixedSlideError::SlideOutOfRange);
    }

    let mut trajectory: Vec<JointConfig> = Vec::with_capacity(path.poses.len());
    let mut identity: Option<(u8, usize)> = None;

    for (stage, pose) in path.poses.iter().enumerate() {
        let candidates = admissible_candidates(model, scene, pose, u_fixed);
        if candidates.is_empty() {
            return Err(FixedSlideError::InfeasibleAtFixedSlide { stage });
        }
        let chosen = if stage == 0 {
            match start {
                StartMode::Fixed(q0) => candidates
                    .iter()
                    .min_by(|a, b| {
                        local_cost(&a.q, q0)
                            .partial_cmp(&local_cost(&b.q, q0))
                            .unwrap()
                    })
                    .unwrap(),
                StartMode::Free => {
                    let mut best: Option<(&FixedCandidate, f64)> = None;
                    for cand in &candidates {
                        let Ok(value) = mma(model, &cand.q, eta) else {
                            continue;
                        };
                        if best.is_none_or(|(_, b)| value > b) {
                            best = Some((cand, value));
                        }
                    }
                    best.ok_or(FixedSlideError::Stiffness(StiffnessError::NoCandidates))?
                        .0
                }
            }
        } else {
            let prev = trajectory.last().unwrap();
            let same_branch = identity.and_then(|(branch, rep)| {
                candidates
                    .iter()
                    .filter(|c| c.branch == branch && c.rep == rep)
                    .find(|c| velocity_ok(model, &c.q, prev, path.tau))
            });
            match same_branch {
                Some(c) => c,
                None => candidates
                    .iter()
                    .filter(|c| velocity_ok(model, &c.q, prev, path.tau))
                    .min_by(|a, b| {
                        local_cost(&a.q, prev)
                            .partial_cmp(&local_cost(&b.q, prev))
                            .unwrap()
                    })
                    .ok_or(FixedSlideError::InfeasibleAtFixedSlide { stage })?,
            }
        };
        identity = Some((chosen.branch, chosen.rep));
        trajectory.push(chosen.q);
    }

    let stage_costs: Vec<f64> = trajectory
        .windows(2)
        .map(|w| local_cost(&w[1], &w[0]))
        .collect();
    let mut total_cost = 0.0;
    for c in &stage_costs {
        total_cost += c;
    }
    let terminal_mma =
        mma(model, trajectory.last().unwrap(), eta).map_err(FixedSlideError::Stiffness)?;
    Ok(PlanResult {
        trajectory,
        node_path: Vec::new(),
        total_cost,
        stage_costs,
        terminal_mma,
        planning_seconds: 0.0,
    })
}

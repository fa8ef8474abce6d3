//! Admissibility predicates: position limits plus collision freedom for a
//! single configuration, and backward-Euler velocity limits for a
//! transition between consecutive waypoints.

use alloc::vec::Vec;
use core::fmt;

use crate::collision::{config_in_collision, CollisionHit, Scene};
use crate::model::{JointConfig, RobotModel, JOINT_COUNT};

/// One violated constraint. Joint indices are zero-based; [`fmt::Display`]
/// prints the one-based joint names (q1..q7) used in reports and files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    PosLimit { joint: usize },
    VelLimit { joint: usize },
    SelfCollision { link_a: usize, link_b: usize },
    EnvCollision { link: usize, scene_shape: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PosLimit { joint } => write!(f, "position limit on q{}", joint + 1),
            Violation::VelLimit { joint } => write!(f, "velocity limit on q{}", joint + 1),
            Violation::SelfCollision { link_a, link_b } => {
                write!(f, "self collision between links {link_a} and {link_b}")
            }
            Violation::EnvCollision { link, scene_shape } => {
                write!(f, "collision of link {link} with scene shape {scene_shape}")
            }
        }
    }
}

/// Outcome of an admissibility check: admissible exactly when no violation
/// was recorded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmissibilityVerdict {
    pub violations: Vec<Violation>,
}

impl AdmissibilityVerdict {
    pub fn admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Membership in the per-waypoint admissible set: closed-interval position
/// limits and no self- or environment-collision. Limit boundaries are
/// admissible (non-strict inequalities).
pub fn in_a(model: &RobotModel, scene: &Scene, q: &JointConfig) -> AdmissibilityVerdict {
    let mut verdict = AdmissibilityVerdict::default();
    for joint in 0..JOINT_COUNT {
        if q.0[joint] < model.q_min[joint] || q.0[joint] > model.q_max[joint] {
            verdict.violations.push(Violation::PosLimit { joint });
        }
    }
    match config_in_collision(model, scene, q) {
        Some(CollisionHit::SelfPair { link_a, link_b, .. }) => {
            verdict
                .violations
                .push(Violation::SelfCollision { link_a, link_b });
        }
        Some(CollisionHit::Environment {
            link, scene_shape, ..
        }) => {
            verdict
                .violations
                .push(Violation::EnvCollision { link, scene_shape });
        }
        None => {}
    }
    verdict
}

/// True when the backward-Euler velocity of the step `q_prev -> q_curr`
/// over `tau` seconds respects every (symmetric) velocity limit. Shared by
/// the verdict builder and the planner's inner loop.
pub fn velocity_ok(
    model: &RobotModel,
    q_curr: &JointConfig,
    q_prev: &JointConfig,
    tau: f64,
) -> bool {
    for k in 0..JOINT_COUNT {
        if ((q_curr.0[k] - q_prev.0[k]) / tau).abs() > model.qd_max[k] {
            return false;
        }
    }
    true
}

/// Membership in the velocity-feasibility set for one transition: the
/// backward-Euler rate (q_curr - q_prev) / tau must stay within the
/// symmetric limits componentwise.
pub fn in_b(
    model: &RobotModel,
    q_curr: &JointConfig,
    q_prev: &JointConfig,
    tau: f64,
) -> AdmissibilityVerdict {
    debug_assert!(tau > 0.0);
    let mut verdict = AdmissibilityVerdict::default();
    for joint in 0..JOINT_COUNT {
        let rate = (q_curr.0[joint] - q_prev.0[joint]) / tau;
        if rate.abs() > model.qd_max[joint] {
            verdict.violations.push(Violation::VelLimit { joint });
        }
    }
    verdict
}

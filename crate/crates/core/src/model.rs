//! Robot description, joint vectors, rigid transforms and task paths.
//!
//! The kinematic structure is fixed: a prismatic rail carrying a six-revolute
//! arm whose last three joint axes intersect in a point (spherical wrist).
//! Everything else — link lengths, limits, tool, collision shapes — comes
//! from the [`RobotModel`] value. Angles are radians, lengths are meters.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix3, Vector3};
// Float backs the math methods in no_std builds; under test, std is
// linked and its inherent methods shadow the trait.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::collision::Shape;

/// Joint ordering: arm joints 1..6 at indices 0..5 (rad), slide at index 6 (m).
pub const JOINT_COUNT: usize = 7;

/// Index of the prismatic slide joint inside a [`JointConfig`].
pub const SLIDE_INDEX: usize = 6;

/// A full configuration of the rail + arm chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConfig(pub [f64; JOINT_COUNT]);

impl JointConfig {
    pub fn zeros() -> Self {
        JointConfig([0.0; JOINT_COUNT])
    }

    /// Slide position in meters.
    pub fn slide(&self) -> f64 {
        self.0[SLIDE_INDEX]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest componentwise absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A rigid transform, stored as rotation matrix plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn from_parts(rotation: Matrix3<f64>, position: Vector3<f64>) -> Self {
        Pose { rotation, position }
    }

    pub fn translation(position: Vector3<f64>) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            position,
        }
    }

    /// Composition: `self * rhs` applies `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            position: self.rotation * rhs.position + self.position,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            position: -(rt * self.position),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.position
    }

    /// Max-norm deviation of the rotation block from orthonormality,
    /// including the determinant defect.
    pub fn orthonormality_error(&self) -> f64 {
        let defect = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let mut err: f64 = 0.0;
        for v in defect.iter() {
            err = err.max(v.abs());
        }
        err.max((self.rotation.determinant() - 1.0).abs())
    }

    /// Position distance plus Frobenius rotation distance to `other`.
    pub fn position_error(&self, other: &Pose) -> f64 {
        (self.position - other.position).norm()
    }

    pub fn rotation_error(&self, other: &Pose) -> f64 {
        (self.rotation - other.rotation).norm()
    }
}

impl core::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// One row of a standard (distal) Denavit-Hartenberg table.
///
/// The link transform is
/// `RotZ(theta_offset + q) * TransZ(d) * TransX(a) * RotX(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

/// Number of collision frames: carriage, six arm links, tool.
pub const LINK_FRAMES: usize = 8;

/// A 6R spherical-wrist arm mounted on a prismatic rail.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    /// Direction of prismatic motion in the world frame (unit vector).
    pub rail_axis: Vector3<f64>,
    /// Arm base position at slide = 0.
    pub rail_origin: Vector3<f64>,
    /// Standard DH rows for the six arm joints.
    pub dh: [DhRow; 6],
    /// Flange-to-tool transform.
    pub tool: Pose,
    /// Lower joint limits (rad for 0..5, m for the slide).
    pub q_min: [f64; JOINT_COUNT],
    /// Upper joint limits.
    pub q_max: [f64; JOINT_COUNT],
    /// Symmetric velocity magnitude limits (rad/s, m/s).
    pub qd_max: [f64; JOINT_COUNT],
    /// Collision primitives per frame: index 0 = rail carriage (arm base),
    /// 1..=6 = DH link frames, 7 = tool frame. Shapes are expressed in the
    /// owning frame.
    pub link_shapes: Vec<Vec<Shape>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelError {
    RailAxisNotUnit,
    LimitOrder { joint: usize },
    VelocityNotPositive { joint: usize },
    NotSphericalWrist,
    WristAxesParallel,
    UnsupportedStructure,
    BadShapeCount { expected: usize, got: usize },
    ShapeDimension,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::RailAxisNotUnit => write!(f, "rail axis must have unit norm"),
            ModelError::LimitOrder { joint } => {
                write!(f, "q_min must be below q_max for joint {}", joint + 1)
            }
            ModelError::VelocityNotPositive { joint } => {
                write!(f, "velocity limit must be positive for joint {}", joint + 1)
            }
            ModelError::NotSphericalWrist => {
                write!(
                    f,
                    "wrist is not spherical (requires a4 = a5 = 0 and d5 = 0)"
                )
            }
            ModelError::WristAxesParallel => {
                write!(
                    f,
                    "wrist axes are parallel (sin(alpha4) or sin(alpha5) is zero)"
                )
            }
            ModelError::UnsupportedStructure => write!(
                f,
                "arm deviates from the supported geometry: alpha pattern \
                 (-pi/2, 0, -pi/2, pi/2, -pi/2, 0) with d2 = d3 = 0, a2 > 0 \
                 and (a3, d4) != (0, 0)"
            ),
            ModelError::BadShapeCount { expected, got } => {
                write!(f, "expected {expected} per-link shape lists, got {got}")
            }
            ModelError::ShapeDimension => {
                write!(
                    f,
                    "collision shape has a non-positive radius or half extent"
                )
            }
        }
    }
}

/// Tolerance for the unit-norm rail axis check.
const RAIL_UNIT_TOL: f64 = 1e-12;
/// Tolerance for the spherical-wrist geometry check.
const WRIST_TOL: f64 = 1e-12;

impl RobotModel {
    /// Validates the structural invariants. Loaders call this once; the rest
    /// of the crate assumes a validated model.
    pub fn validate(&self) -> Result<(), ModelError> {
        if (self.rail_axis.norm() - 1.0).abs() > RAIL_UNIT_TOL {
            return Err(ModelError::RailAxisNotUnit);
        }
        for k in 0..JOINT_COUNT {
            if !(self.q_min[k] < self.q_max[k]) {
                return Err(ModelError::LimitOrder { joint: k });
            }
            if !(self.qd_max[k] > 0.0) {
                return Err(ModelError::VelocityNotPositive { joint: k });
            }
        }
        // Joints 4..6 must intersect in one point: with standard DH this is
        // a4 = a5 = 0 and d5 = 0.
        if self.dh[3].a.abs() > WRIST_TOL
            || self.dh[4].a.abs() > WRIST_TOL
            || self.dh[4].d.abs() > WRIST_TOL
        {
            return Err(ModelError::NotSphericalWrist);
        }
        if self.dh[3].alpha.sin().abs() < 1e-9 || self.dh[4].alpha.sin().abs() < 1e-9 {
            return Err(ModelError::WristAxesParallel);
        }
        // The closed-form solver requires the standard regional structure:
        // vertical joint 1, parallel horizontal joints 2 and 3, and the
        // canonical twist pattern between them.
        let half_pi = core::f64::consts::FRAC_PI_2;
        let alpha_pattern = [-half_pi, 0.0, -half_pi, half_pi, -half_pi, 0.0];
        let pattern_ok = self
            .dh
            .iter()
            .zip(alpha_pattern.iter())
            .all(|(row, want)| (row.alpha - want).abs() <= 1e-9);
        if !pattern_ok
            || self.dh[1].d.abs() > WRIST_TOL
            || self.dh[2].d.abs() > WRIST_TOL
            || self.dh[1].a <= 0.0
            || (self.dh[2].a == 0.0 && self.dh[3].d == 0.0)
        {
            return Err(ModelError::UnsupportedStructure);
        }
        if self.link_shapes.len() != LINK_FRAMES {
            return Err(ModelError::BadShapeCount {
                expected: LINK_FRAMES,
                got: self.link_shapes.len(),
            });
        }
        for list in &self.link_shapes {
            for shape in list {
                if !shape.dimensions_positive() {
                    return Err(ModelError::ShapeDimension);
                }
            }
        }
        Ok(())
    }

    /// True when `q` is within the closed position-limit box.
    pub fn within_limits(&self, q: &JointConfig) -> bool {
        (0..JOINT_COUNT).all(|k| self.q_min[k] <= q.0[k] && q.0[k] <= self.q_max[k])
    }

    pub fn slide_min(&self) -> f64 {
        self.q_min[SLIDE_INDEX]
    }

    pub fn slide_max(&self) -> f64 {
        self.q_max[SLIDE_INDEX]
    }
}

/// A discretized end-effector path: `waypoints + 1` poses sampled every
/// `tau` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPath {
    pub poses: Vec<Pose>,
    /// Total duration in seconds.
    pub duration: f64,
    /// Sampling interval: duration / (poses.len() - 1).
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathError {
    TooFewPoses,
    NonPositiveDuration,
    InvalidRotation { index: usize },
}

impl fmt::Display for PathError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathError::TooFewPoses => write!(f, "a path needs at least two pose samples"),
            PathError::NonPositiveDuration => write!(f, "path duration must be positive"),
            PathError::InvalidRotation { index } => {
                write!(f, "pose {index} has a non-orthonormal rotation")
            }
        }
    }
}

/// Orthonormality tolerance for task-pose rotations.
pub const ROTATION_TOL: f64 = 1e-9;

impl TaskPath {
    pub fn new(poses: Vec<Pose>, duration: f64) -> Result<Self, PathError> {
        if poses.len() < 2 {
            return Err(PathError::TooFewPoses);
        }
        if !(duration > 0.0) {
            return Err(PathError::NonPositiveDuration);
        }
        for (index, pose) in poses.iter().enumerate() {
            if pose.orthonormality_error() > ROTATION_TOL {
                return Err(PathError::InvalidRotation { index });
            }
        }
        let tau = duration / (poses.len() - 1) as f64;
        Ok(TaskPath {
            poses,
            duration,
            tau,
        })
    }

    /// Number of motion intervals (`N_i`); one less than the sample count.
    pub fn intervals(&self) -> usize {
        self.poses.len() - 1
    }
}

//! Forward kinematics, frame chains, the tool-frame Jacobian and the ZYZ
//! Euler maps.

use nalgebra::{Matrix3, SMatrix, Vector3};
// Float backs the math methods in no_std builds; under test, std is
// linked and its inherent methods shadow the trait.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::model::{DhRow, JointConfig, Pose, RobotModel, LINK_FRAMES, SLIDE_INDEX};

/// The 6x7 geometric Jacobian: rows 0..3 linear, rows 3..6 angular;
/// columns follow the joint order (arm 1..6, slide).
pub type Jacobian = SMatrix<f64, 6, 7>;

/// Homogeneous transform of one standard-DH link at joint value `q`:
/// `RotZ(theta_offset + q) * TransZ(d) * TransX(a) * RotX(alpha)`.
pub fn dh_transform(row: &DhRow, q: f64) -> Pose {
    let theta = row.theta_offset + q;
    let (st, ct) = (theta.sin(), theta.cos());
    let (sa, ca) = (row.alpha.sin(), row.alpha.cos());
    Pose {
        rotation: Matrix3::new(
            ct,
            -st * ca,
            st * sa, //
            st,
            ct * ca,
            -ct * sa, //
            0.0,
            sa,
            ca,
        ),
        position: Vector3::new(row.a * ct, row.a * st, row.d),
    }
}

/// Pose of the rail carriage (the arm base) at slide position `u`.
pub fn carriage_pose(model: &RobotModel, u: f64) -> Pose {
    Pose::translation(model.rail_origin + u * model.rail_axis)
}

/// World poses of all collision frames: 0 = carriage, 1..=6 = DH link
/// frames, 7 = tool.
pub fn link_frames(model: &RobotModel, q: &JointConfig) -> [Pose; LINK_FRAMES] {
    let mut frames = [Pose::identity(); LINK_FRAMES];
    frames[0] = carriage_pose(model, q.slide());
    let mut t = frames[0];
    for k in 0..6 {
        t = t.compose(&dh_transform(&model.dh[k], q.0[k]));
        frames[k + 1] = t;
    }
    frames[7] = t.compose(&model.tool);
    frames
}

/// Tool pose in the world frame.
pub fn forward_kinematics(model: &RobotModel, q: &JointConfig) -> Pose {
    link_frames(model, q)[7]
}

/// Geometric Jacobian in the world frame, mapping joint rates to the linear
/// and angular velocity of the tool-frame origin.
pub fn jacobian_world(model: &RobotModel, q: &JointConfig) -> Jacobian {
    let frames = link_frames(model, q);
    let p_tool = frames[7].position;
    let mut jac = Jacobian::zeros();
    for k in 0..6 {
        // Joint k+1 rotates about the z axis of frame k.
        let z = frames[k].rotation.column(2).into_owned();
        let lin = z.cross(&(p_tool - frames[k].position));
        for r in 0..3 {
            jac[(r, k)] = lin[r];
            jac[(r + 3, k)] = z[r];
        }
    }
    for r in 0..3 {
        jac[(r, SLIDE_INDEX)] = model.rail_axis[r];
    }
    jac
}

/// Geometric Jacobian expressed in the tool frame (both blocks rotated by
/// the transpose of the tool rotation).
pub fn jacobian_ee(model: &RobotModel, q: &JointConfig) -> Jacobian {
    let frames = link_frames(model, q);
    let p_tool = frames[7].position;
    let rt = frames[7].rotation.transpose();
    let mut jac = Jacobian::zeros();
    for k in 0..6 {
        let z = frames[k].rotation.column(2).into_owned();
        let lin = rt * z.cross(&(p_tool - frames[k].position));
        let ang = rt * z;
        for r in 0..3 {
            jac[(r, k)] = lin[r];
            jac[(r + 3, k)] = ang[r];
        }
    }
    let lin = rt * model.rail_axis;
    for r in 0..3 {
        jac[(r, SLIDE_INDEX)] = lin[r];
    }
    jac
}

/// ZYZ Euler angles extracted from a rotation matrix.
///
/// `degenerate` is set when the second angle lies within ~1e-9 of 0 or pi;
/// there the first and third rotations share an axis and only their sum
/// (or difference) is defined. The convention at the degenerate poses puts
/// the whole z rotation in the first angle and zeroes the third, so the
/// identity maps to (0, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzEuler {
    pub angles: [f64; 3],
    pub degenerate: bool,
}

/// Threshold on |sin(beta)| below which the ZYZ extraction is degenerate.
const EULER_DEGENERATE_TOL: f64 = 1e-9;

/// Decomposes `r` as `RotZ(a) * RotY(b) * RotZ(c)` with `b` in [0, pi].
pub fn rotation_to_euler(r: &Matrix3<f64>) -> ZyzEuler {
    let sy = (r[(2, 0)] * r[(2, 0)] + r[(2, 1)] * r[(2, 1)]).sqrt();
    if sy < EULER_DEGENERATE_TOL {
        if r[(2, 2)] > 0.0 {
            // beta ~ 0: r ~ RotZ(a + c)
            ZyzEuler {
                angles: [r[(1, 0)].atan2(r[(0, 0)]), 0.0, 0.0],
                degenerate: true,
            }
        } else {
            // beta ~ pi: r ~ RotZ(a - c) * RotY(pi)
            ZyzEuler {
                angles: [(-r[(0, 1)]).atan2(-r[(0, 0)]), core::f64::consts::PI, 0.0],
                degenerate: true,
            }
        }
    } else {
        ZyzEuler {
            angles: [
                r[(1, 2)].atan2(r[(0, 2)]),
                sy.atan2(r[(2, 2)]),
                r[(2, 1)].atan2(-r[(2, 0)]),
            ],
            degenerate: false,
        }
    }
}

/// Builds `RotZ(angles[0]) * RotY(angles[1]) * RotZ(angles[2])`.
pub fn euler_to_rotation(angles: &[f64; 3]) -> Matrix3<f64> {
    rot_z(angles[0]) * rot_y(angles[1]) * rot_z(angles[2])
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = (a.sin(), a.cos());
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = (a.sin(), a.cos());
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = (a.sin(), a.cos());
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

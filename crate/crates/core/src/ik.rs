//! Analytic inverse kinematics of the squared problem and the rank check
//! that validates the slide as redundancy parameter.
//!
//! Fixing the slide value `u` squares the six-variable task: the remaining
//! arm admits at most eight closed-form solutions, indexed by shoulder,
//! elbow and wrist choices. The solver covers the standard industrial
//! geometry (vertical first axis, parallel horizontal axes 2 and 3,
//! spherical wrist), i.e. DH alpha pattern (-pi/2, 0, -pi/2, pi/2, -pi/2, 0)
//! with d2 = d3 = 0; lengths, offsets, limits and tool are free parameters.

use alloc::vec::Vec;

use nalgebra::SMatrix;
// Float backs the math methods in no_std builds; under test, std is
// linked and its inherent methods shadow the trait.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::kinematics::{dh_transform, forward_kinematics, jacobian_ee, rotation_to_euler};
use crate::model::{JointConfig, Pose, RobotModel, SLIDE_INDEX};

use core::f64::consts::{PI, TAU};

/// One arm solution for a given pose and slide value.
///
/// `branch` is a stable 3-bit code: bit 2 = shoulder (0 facing the wrist
/// center, 1 turned away by pi), bit 1 = elbow (0 positive elbow angle,
/// 1 negative), bit 0 = wrist (0 primary extraction, 1 flipped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkBranch {
    pub branch: u8,
    pub q: JointConfig,
}

/// Joint-space threshold below which two branches are considered coalesced
/// (at internal singularities) and deduplicated.
pub const BRANCH_COALESCE_TOL: f64 = 1e-6;

fn wrap_angle(x: f64) -> f64 {
    let mut r = x % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}

/// All arm solutions realizing `pose` with the slide fixed at `u`.
///
/// Joint angles are reported as principal values in (-pi, pi]; in-limit
/// 2 pi-shifted representatives are enumerated separately by
/// [`representatives`]. Unreachable poses yield an empty list (a legal
/// grid outcome, not an error). The returned order is deterministic:
/// ascending branch code, coalesced duplicates dropped.
pub fn augmented_ik(model: &RobotModel, pose: &Pose, u: f64) -> Vec<IkBranch> {
    debug_assert!(u >= model.slide_min() && u <= model.slide_max());

    // Target flange pose in the arm base frame (carriage removed).
    let base_inv_p = -(model.rail_origin + u * model.rail_axis);
    let flange = Pose {
        rotation: pose.rotation,
        position: pose.position + base_inv_p,
    }
    .compose(&model.tool.inverse());

    let d6 = model.dh[5].d;
    let wc = flange.position - d6 * flange.rotation.column(2);

    let a1 = model.dh[0].a;
    let d1 = model.dh[0].d;
    let a2 = model.dh[1].a;
    let a3 = model.dh[2].a;
    let d4 = model.dh[3].d;
    let l3 = (a3 * a3 + d4 * d4).sqrt();
    let phi = d4.atan2(a3);

    let theta1_front = wc[1].atan2(wc[0]);
    let mut out: Vec<IkBranch> = Vec::with_capacity(8);

    for shoulder in 0..2u8 {
        let theta1 = if shoulder == 0 {
            theta1_front
        } else {
            wrap_angle(theta1_front + PI)
        };
        let (s1, c1) = theta1.sin_cos();
        let px = c1 * wc[0] + s1 * wc[1] - a1;
        let py = -(wc[2] - d1);
        let r_sq = px * px + py * py;

        let mut cos_delta = (r_sq - a2 * a2 - l3 * l3) / (2.0 * a2 * l3);
        if cos_delta.abs() > 1.0 {
            // Tolerate boundary-of-workspace roundoff, reject beyond it.
            if cos_delta.abs() > 1.0 + 1e-9 {
                continue;
            }
            cos_delta = cos_delta.clamp(-1.0, 1.0);
        }
        let delta_mag = cos_delta.acos();

        for elbow in 0..2u8 {
            let delta = if elbow == 0 { delta_mag } else { -delta_mag };
            let theta2 = py.atan2(px) - (l3 * delta.sin()).atan2(a2 + l3 * delta.cos());
            let theta3 = delta - phi;

            let q1 = wrap_angle(theta1 - model.dh[0].theta_offset);
            let q2 = wrap_angle(theta2 - model.dh[1].theta_offset);
            let q3 = wrap_angle(theta3 - model.dh[2].theta_offset);

            // Residual wrist rotation: R3^T * R_flange = RotZ(t4) RotY(-t5) RotZ(t6).
            let r3 = dh_transform(&model.dh[0], q1).rotation
                * dh_transform(&model.dh[1], q2).rotation
                * dh_transform(&model.dh[2], q3).rotation;
            let rw = r3.transpose() * flange.rotation;
            let euler = rotation_to_euler(&rw);
            let [alpha, beta, gamma] = euler.angles;

            for wrist in 0..2u8 {
                let (theta4, theta5, theta6) = if wrist == 0 {
                    (alpha, -beta, gamma)
                } else {
                    (alpha + PI, beta, gamma + PI)
                };
                let q = JointConfig([
                    q1,
                    q2,
                    q3,
                    wrap_angle(theta4 - model.dh[3].theta_offset),
                    wrap_angle(theta5 - model.dh[4].theta_offset),
                    wrap_angle(theta6 - model.dh[5].theta_offset),
                    u,
                ]);
                let branch = (shoulder << 2) | (elbow << 1) | wrist;
                if out
                    .iter()
                    .any(|b| b.q.max_abs_diff(&q) <= BRANCH_COALESCE_TOL)
                {
                    continue;
                }
                debug_assert!({
                    let fk = forward_kinematics(model, &q);
                    fk.position_error(pose) < 1e-9 && fk.rotation_error(pose) < 1e-9
                });
                out.push(IkBranch { branch, q });
            }
        }
    }
    out
}

/// All joint-space representatives of `q` inside the position limits:
/// the cartesian product, over revolute joints whose limit span exceeds
/// 2 pi, of every in-limit 2 pi shift. Joints are expanded in index order,
/// shift values ascending; the slide is never shifted. Returns an empty
/// list when some joint has no in-limit representative.
pub fn representatives(model: &RobotModel, q: &JointConfig) -> Vec<JointConfig> {
    let mut per_joint: [Vec<f64>; 7] = Default::default();
    for k in 0..7 {
        if k == SLIDE_INDEX {
            per_joint[k].push(q.0[k]);
            continue;
        }
        let lo = ((model.q_min[k] - q.0[k]) / TAU).ceil() as i64;
        let hi = ((model.q_max[k] - q.0[k]) / TAU).floor() as i64;
        for n in lo..=hi {
            let v = q.0[k] + TAU * n as f64;
            // Guard the rounding of the interval arithmetic above.
            if v >= model.q_min[k] && v <= model.q_max[k] {
                per_joint[k].push(v);
            }
        }
        if per_joint[k].is_empty() {
            return Vec::new();
        }
    }
    let mut combos = Vec::with_capacity(per_joint.iter().map(Vec::len).product());
    let mut current = *q;
    fill_combos(&per_joint, 0, &mut current, &mut combos);
    combos
}

fn fill_combos(
    per_joint: &[Vec<f64>; 7],
    joint: usize,
    current: &mut JointConfig,
    out: &mut Vec<JointConfig>,
) {
    if joint == 7 {
        out.push(*current);
        return;
    }
    for &v in &per_joint[joint] {
        current.0[joint] = v;
        fill_combos(per_joint, joint + 1, current, out);
    }
}

/// Upper bound on the number of representatives any configuration can have
/// under this model's limits.
pub fn max_representatives(model: &RobotModel) -> usize {
    (0..7)
        .filter(|k| *k != SLIDE_INDEX)
        .map(|k| ((model.q_max[k] - model.q_min[k]) / TAU).floor() as usize + 1)
        .product()
}

/// The augmented Jacobian: the 6x7 tool-frame Jacobian stacked with the
/// selection row of the redundant joint (the slide by default).
pub fn augmented_jacobian(model: &RobotModel, q: &JointConfig) -> SMatrix<f64, 7, 7> {
    augmented_jacobian_for(model, q, SLIDE_INDEX)
}

/// Same as [`augmented_jacobian`] with an arbitrary single-joint redundancy
/// parameter.
pub fn augmented_jacobian_for(
    model: &RobotModel,
    q: &JointConfig,
    redundant_joint: usize,
) -> SMatrix<f64, 7, 7> {
    let jac = jacobian_ee(model, q);
    let mut out = SMatrix::<f64, 7, 7>::zeros();
    for r in 0..6 {
        for c in 0..7 {
            out[(r, c)] = jac[(r, c)];
        }
    }
    out[(6, redundant_joint)] = 1.0;
    out
}

/// Relative singular-value threshold for the numeric rank decision.
pub const RANK_THRESHOLD_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Numeric rank of the augmented Jacobian at `q` (singular values above
/// `RANK_THRESHOLD_FACTOR` times the largest).
pub fn augmented_rank(model: &RobotModel, q: &JointConfig) -> RankInfo {
    let ja = augmented_jacobian(model, q);
    let svd = ja.svd(false, false);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let threshold = RANK_THRESHOLD_FACTOR * sigma_max;
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > threshold)
        .count();
    RankInfo {
        rank,
        sigma_max,
        sigma_min,
    }
}

/// A grid node where the augmented Jacobian lost rank, i.e. the slide fails
/// to represent the null space there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankViolation {
    pub stage: usize,
    pub column: usize,
    pub layer: usize,
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepresentativenessReport {
    pub checked: usize,
    pub violations: Vec<RankViolation>,
}

/// Runs the rank check over every supplied node `(stage, column, layer, q)`
/// and lists the deficient ones. An empty violation list certifies the
/// redundancy parametrization over those nodes.
pub fn check_representativeness<I>(model: &RobotModel, nodes: I) -> RepresentativenessReport
where
    I: IntoIterator<Item = (usize, usize, usize, JointConfig)>,
{
    let mut report = RepresentativenessReport::default();
    for (stage, column, layer, q) in nodes {
        report.checked += 1;
        let info = augmented_rank(model, &q);
        if info.rank < 7 {
            report.violations.push(RankViolation {
                stage,
                column,
                layer,
                rank: info.rank,
                sigma_min: info.sigma_min,
                sigma_max: info.sigma_max,
            });
        }
    }
    report
}

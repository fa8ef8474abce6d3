//! Bundled example model and demo task geometry.
//!
//! The default robot is a generic 35 kg-payload-class 6R spherical-wrist arm
//! (reach about 1.8 m) riding a 4.2 m rail along the world y axis. Its link
//! lengths, tool and collision primitives are authored for this repository;
//! they describe no particular commercial arm. The JSON files under `data/`
//! mirror these values.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::collision::{Scene, Shape};
use crate::model::{DhRow, JointConfig, Pose, RobotModel};
use crate::task::{Leg, TaskMode, TaskSpec};

use core::f64::consts::FRAC_PI_2;

/// The default rail + arm model.
///
/// DH structure (standard convention): shoulder offset a1 = 0.15, shoulder
/// height d1 = 0.525, upper arm a2 = 0.79, elbow offset a3 = 0.15, forearm
/// d4 = 0.86, flange offset d6 = 0.10; tool 0.15 m along the flange z axis.
/// At the zero configuration the upper arm points straight up and the
/// forearm, flange and tool point along world +x.
// qd_max holds real velocity limits; 3.14 rad/s is not a rounded pi.
#[allow(clippy::approx_constant)]
pub fn default_model() -> RobotModel {
    let model = RobotModel {
        rail_axis: Vector3::new(0.0, 1.0, 0.0),
        rail_origin: Vector3::zeros(),
        dh: [
            DhRow {
                a: 0.150,
                alpha: -FRAC_PI_2,
                d: 0.525,
                theta_offset: 0.0,
            },
            DhRow {
                a: 0.790,
                alpha: 0.0,
                d: 0.0,
                theta_offset: -FRAC_PI_2,
            },
            DhRow {
                a: 0.150,
                alpha: -FRAC_PI_2,
                d: 0.0,
                theta_offset: 0.0,
            },
            DhRow {
                a: 0.0,
                alpha: FRAC_PI_2,
                d: 0.860,
                theta_offset: 0.0,
            },
            DhRow {
                a: 0.0,
                alpha: -FRAC_PI_2,
                d: 0.0,
                theta_offset: 0.0,
            },
            DhRow {
                a: 0.0,
                alpha: 0.0,
                d: 0.100,
                theta_offset: 0.0,
            },
        ],
        tool: Pose::translation(Vector3::new(0.0, 0.0, 0.15)),
        q_min: [-3.225, -1.7553, -3.225, -3.49, -2.4435, -7.854, -2.1],
        q_max: [3.225, 2.7925, 4.8171, 3.49, 2.4435, 7.854, 2.1],
        qd_max: [3.14, 3.14, 3.49, 6.11, 6.11, 6.98, 9.6],
        link_shapes: default_link_shapes(),
    };
    debug_assert!(model.validate().is_ok());
    model
}

fn default_link_shapes() -> Vec<Vec<Shape>> {
    vec![
        // carriage / pedestal
        vec![Shape::Cuboid {
            center: Vector3::new(0.0, 0.0, 0.19),
            half_extents: Vector3::new(0.15, 0.15, 0.19),
            orientation: Matrix3::identity(),
        }],
        // shoulder column
        vec![Shape::Capsule {
            p0: Vector3::new(-0.15, 0.14, 0.0),
            p1: Vector3::zeros(),
            radius: 0.13,
        }],
        // upper arm
        vec![Shape::Capsule {
            p0: Vector3::new(-0.79, 0.0, 0.0),
            p1: Vector3::zeros(),
            radius: 0.11,
        }],
        // elbow ball and forearm
        vec![
            Shape::Sphere {
                center: Vector3::zeros(),
                radius: 0.12,
            },
            Shape::Capsule {
                p0: Vector3::zeros(),
                p1: Vector3::new(0.0, 0.0, 0.645),
                radius: 0.095,
            },
        ],
        vec![],
        vec![],
        // wrist ball and flange collar (both expressed in the flange frame)
        vec![
            Shape::Sphere {
                center: Vector3::new(0.0, 0.0, -0.10),
                radius: 0.08,
            },
            Shape::Capsule {
                p0: Vector3::new(0.0, 0.0, -0.04),
                p1: Vector3::new(0.0, 0.0, 0.02),
                radius: 0.06,
            },
        ],
        // tool shaft, tip at the tool-frame origin
        vec![Shape::Capsule {
            p0: Vector3::new(0.0, 0.0, -0.15),
            p1: Vector3::zeros(),
            radius: 0.05,
        }],
    ]
}

/// A fuselage-panel stand-in: one large box whose working face lies at
/// x = 1.45, spanning 5 m along the rail.
pub fn panel_scene() -> Scene {
    Scene {
        shapes: vec![Shape::Cuboid {
            center: Vector3::new(1.5, 0.0, 1.2),
            half_extents: Vector3::new(0.05, 2.5, 1.2),
            orientation: Matrix3::identity(),
        }],
        margin: 0.0,
    }
}

/// Drilling orientation: tool z axis along world +x (into the panel).
pub fn drill_orientation() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0)
}

/// Hole x coordinate: 0.06 m stand-off from the panel face at x = 1.45.
pub const HOLE_X: f64 = 1.39;

/// Five demo holes: a vertical sequence of four plus one lateral hole.
/// Leg lengths mirror a realistic drilling pattern: 288.5 mm, 321.4 mm,
/// 339.0 mm vertical, then a 1060 mm lateral move.
pub fn demo_holes() -> Vec<Pose> {
    let r = drill_orientation();
    vec![
        Pose::from_parts(r, Vector3::new(HOLE_X, 0.0, 0.9500)),
        Pose::from_parts(r, Vector3::new(HOLE_X, 0.0, 1.2385)),
        Pose::from_parts(r, Vector3::new(HOLE_X, 0.0, 1.5599)),
        Pose::from_parts(r, Vector3::new(HOLE_X, 0.0, 1.2209)),
        Pose::from_parts(r, Vector3::new(HOLE_X, 1.06, 1.2209)),
    ]
}

/// The four-leg demo task over [`demo_holes`]: three vertical hole-to-hole
/// legs with 10 waypoints each, then the lateral leg with 15, all 0.55 s.
pub fn four_leg_task() -> TaskSpec {
    TaskSpec {
        holes: demo_holes(),
        legs: vec![
            Leg {
                from: 0,
                to: 1,
                waypoints: 10,
                duration: 0.55,
            },
            Leg {
                from: 1,
                to: 2,
                waypoints: 10,
                duration: 0.55,
            },
            Leg {
                from: 2,
                to: 3,
                waypoints: 10,
                duration: 0.55,
            },
            Leg {
                from: 3,
                to: 4,
                waypoints: 15,
                duration: 0.55,
            },
        ],
        mode: TaskMode::FreeInitial,
        initial_q: None,
        budget_seconds: None,
    }
}

/// A single lateral leg that a fixed slide cannot follow: the tool moves
/// 1.6 m along the rail direction while the arm's lateral reach from a
/// stationary slide is about 1.2 m.
pub fn lateral_task(waypoints: usize, duration: f64) -> TaskSpec {
    let r = drill_orientation();
    TaskSpec {
        holes: vec![
            Pose::from_parts(r, Vector3::new(HOLE_X, 0.0, 1.2)),
            Pose::from_parts(r, Vector3::new(HOLE_X, 1.6, 1.2)),
        ],
        legs: vec![Leg {
            from: 0,
            to: 1,
            waypoints,
            duration,
        }],
        mode: TaskMode::FreeInitial,
        initial_q: None,
        budget_seconds: None,
    }
}

/// Default slide grid resolution in meters (13.2 mm).
pub const DEFAULT_U_RESOLUTION: f64 = 0.0132;

/// Default planning-time budget per leg in seconds.
pub const DEFAULT_BUDGET_SECONDS: f64 = 13.62;

/// Home configuration (all joints at zero).
pub fn home() -> JointConfig {
    JointConfig::zeros()
}

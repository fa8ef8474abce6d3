//! Trajectory planning for a six-revolute arm riding a linear rail.
//!
//! The rail adds a seventh degree of freedom to a six-variable task, so a
//! task-space path admits a one-parameter family of joint solutions at every
//! waypoint. This crate discretizes that family over a slide-position grid,
//! enumerates the analytic inverse-kinematics branches per grid cell, and
//! runs a stage-wise dynamic program that minimizes total joint displacement
//! subject to position limits, velocity limits and collision constraints.
//! The terminal configuration is chosen by force-transmission stiffness
//! (the mechanical-advantage index along the tool axis).
//!
//! The crate is `no_std` (alloc required); IO, file formats and the
//! command-line front end live in the companion `redunplan-cli` crate.

#![no_std]
// Validation guards compare with negated operators on purpose: a NaN input
// must fail the check. Indexed loops over parallel fixed-size arrays stay
// as written for symmetry with the math they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod collision;
pub mod constraints;
pub mod dp;
pub mod ik;
pub mod kinematics;
pub mod model;
pub mod presets;
pub mod stiffness;
pub mod task;

pub use model::{JointConfig, Pose, RobotModel, TaskPath};

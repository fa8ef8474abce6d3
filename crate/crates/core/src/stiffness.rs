//! Force-transmission analysis at a configuration: the force ellipsoid of
//! the translational Jacobian block and the mechanical-advantage index used
//! to pick the stiffest terminal configuration.
//!
//! With the Jacobian J expressed in the tool frame, the set of end-effector
//! forces reachable with unit joint torque is the ellipsoid
//! f' (J J') f <= 1. Its surface distance from the origin along a unit
//! direction eta is (eta' J J' eta)^(-1/2); larger means the structure
//! transmits force along eta with less joint torque, i.e. is stiffer there.

use core::fmt;

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen, Vector3};
// Float backs the math methods in no_std builds; under test, std is
// linked and its inherent methods shadow the trait.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::kinematics::{jacobian_ee, Jacobian};
use crate::model::{JointConfig, RobotModel, JOINT_COUNT};

/// Direction selector for drilling: force along the tool z axis.
pub fn default_eta() -> SVector<f64, 6> {
    SVector::<f64, 6>::from_column_slice(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StiffnessError {
    /// eta' J J' eta is numerically zero: motion capability along eta is
    /// lost and the mechanical advantage diverges.
    SingularDirection,
    /// The translational block of J J' is (near) rank deficient.
    NearSingular,
    /// No candidate configuration was supplied or none was evaluable.
    NoCandidates,
}

impl fmt::Display for StiffnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StiffnessError::SingularDirection => {
                write!(f, "singular direction: eta' J J' eta is numerically zero")
            }
            StiffnessError::NearSingular => {
                write!(f, "translational J J' block is near singular")
            }
            StiffnessError::NoCandidates => write!(f, "no evaluable candidate configuration"),
        }
    }
}

/// Threshold on eta' J J' eta below which the direction counts as singular.
pub const SINGULAR_DIRECTION_TOL: f64 = 1e-14;

/// Relative eigenvalue threshold for the near-singular ellipsoid signal.
pub const NEAR_SINGULAR_RATIO: f64 = 1e-12;

/// Mechanical advantage (eta' J J' eta)^(-1/2) from a precomputed J J'.
pub fn mma_from_jjt(
    jjt: &SMatrix<f64, 6, 6>,
    eta: &SVector<f64, 6>,
) -> Result<f64, StiffnessError> {
    let s = (eta.transpose() * jjt * eta)[(0, 0)];
    if s <= SINGULAR_DIRECTION_TOL {
        return Err(StiffnessError::SingularDirection);
    }
    Ok(1.0 / s.sqrt())
}

fn jjt_weighted(jac: &Jacobian, weights: &[f64; JOINT_COUNT]) -> SMatrix<f64, 6, 6> {
    let mut jjt = SMatrix::<f64, 6, 6>::zeros();
    for k in 0..JOINT_COUNT {
        let col = jac.column(k);
        for r in 0..6 {
            for c in 0..6 {
                jjt[(r, c)] += weights[k] * col[r] * col[c];
            }
        }
    }
    jjt
}

/// Mechanical advantage at `q` along `eta`, all joints weighted equally.
pub fn mma(
    model: &RobotModel,
    q: &JointConfig,
    eta: &SVector<f64, 6>,
) -> Result<f64, StiffnessError> {
    mma_weighted(model, q, eta, &[1.0; JOINT_COUNT])
}

/// Mechanical advantage with a per-joint weight on J J' (all-ones recovers
/// the unweighted index; weights let callers rescale the mixed rad/m
/// column units if desired).
pub fn mma_weighted(
    model: &RobotModel,
    q: &JointConfig,
    eta: &SVector<f64, 6>,
    weights: &[f64; JOINT_COUNT],
) -> Result<f64, StiffnessError> {
    let jac = jacobian_ee(model, q);
    mma_from_jjt(&jjt_weighted(&jac, weights), eta)
}

/// Eigenstructure of the translational block of J J' in the tool frame.
///
/// Axes are orthonormal eigenvectors sorted by descending semi-axis length
/// (1 / sqrt(eigenvalue)), each with its first component of magnitude above
/// 1e-12 made positive so reports are reproducible. `mma` is the surface
/// distance along the tool z axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceEllipsoid {
    pub axes: [Vector3<f64>; 3],
    pub semi_axis_lengths: [f64; 3],
    pub mma: f64,
}

impl ForceEllipsoid {
    /// Rebuilds the decomposed matrix: sum of (1/len^2) v v'.
    pub fn reconstruct(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for (axis, len) in self.axes.iter().zip(self.semi_axis_lengths.iter()) {
            let lambda = 1.0 / (len * len);
            m += lambda * axis * axis.transpose();
        }
        m
    }
}

/// Decomposes a symmetric positive-definite 3x3 block into a
/// [`ForceEllipsoid`].
pub fn force_ellipsoid_from(block: &Matrix3<f64>) -> Result<ForceEllipsoid, StiffnessError> {
    let eigen = SymmetricEigen::new(*block);
    let mut order = [0usize, 1, 2];
    // Ascending eigenvalue = descending semi-axis length.
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .unwrap()
    });
    let lambda_max = eigen.eigenvalues[order[2]];
    let lambda_min = eigen.eigenvalues[order[0]];
    if !(lambda_min > NEAR_SINGULAR_RATIO * lambda_max) || lambda_max <= 0.0 {
        return Err(StiffnessError::NearSingular);
    }

    let mut axes = [Vector3::zeros(); 3];
    let mut lengths = [0.0; 3];
    for (slot, &idx) in order.iter().enumerate() {
        let mut v: Vector3<f64> = eigen.eigenvectors.column(idx).into_owned();
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        axes[slot] = v;
        lengths[slot] = 1.0 / eigen.eigenvalues[idx].sqrt();
    }
    let along_z = block[(2, 2)];
    if along_z <= SINGULAR_DIRECTION_TOL {
        return Err(StiffnessError::SingularDirection);
    }
    Ok(ForceEllipsoid {
        axes,
        semi_axis_lengths: lengths,
        mma: 1.0 / along_z.sqrt(),
    })
}

/// Force ellipsoid of the tool-frame Jacobian at `q`.
pub fn force_ellipsoid(
    model: &RobotModel,
    q: &JointConfig,
) -> Result<ForceEllipsoid, StiffnessError> {
    let jac = jacobian_ee(model, q);
    let mut block = Matrix3::zeros();
    for r in 0..3 {
        for c in 0..3 {
            let mut acc = 0.0;
            for k in 0..JOINT_COUNT {
                acc += jac[(r, k)] * jac[(c, k)];
            }
            block[(r, c)] = acc;
        }
    }
    force_ellipsoid_from(&block)
}

/// Picks the candidate with the largest mechanical advantage along `eta`.
/// Ties keep the earliest candidate, so callers ordering candidates by grid
/// position get the lowest (column, layer) node. Candidates at singular
/// directions are skipped; if every candidate is singular (or the list is
/// empty) an error is returned.
pub fn select_stiffest(
    model: &RobotModel,
    candidates: &[JointConfig],
    eta: &SVector<f64, 6>,
) -> Result<(usize, f64), StiffnessError> {
    let mut best: Option<(usize, f64)> = None;
    for (index, q) in candidates.iter().enumerate() {
        let Ok(value) = mma(model, q, eta) else {
            continue;
        };
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((index, value));
        }
    }
    best.ok_or(StiffnessError::NoCandidates)
}

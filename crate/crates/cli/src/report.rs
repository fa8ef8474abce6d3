//! JSON report payloads emitted by the subcommands.

use serde::Serialize;

use redunplan_core::stiffness::ForceEllipsoid;

/// Per-axis row of the ellipsoid report: eigenvector components in the tool
/// frame and the semi-axis length.
#[derive(Debug, Serialize)]
pub struct EllipsoidAxis {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub length: f64,
}

/// Terminal-configuration force-ellipsoid report: axes sorted by descending
/// length, plus the mechanical advantage along the tool z axis.
#[derive(Debug, Serialize)]
pub struct EllipsoidReport {
    pub axes: Vec<EllipsoidAxis>,
    pub mma: f64,
}

impl EllipsoidReport {
    pub fn from_ellipsoid(e: &ForceEllipsoid) -> EllipsoidReport {
        EllipsoidReport {
            axes: e
                .axes
                .iter()
                .zip(e.semi_axis_lengths.iter())
                .map(|(v, len)| EllipsoidAxis {
                    x: v[0],
                    y: v[1],
                    z: v[2],
                    length: *len,
                })
                .collect(),
            mma: e.mma,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LegReport {
    pub leg: usize,
    pub from: usize,
    pub to: usize,
    pub waypoints: usize,
    pub total_cost: f64,
    pub terminal_mma: f64,
    pub planning_seconds: f64,
    pub budget_seconds: f64,
    pub within_budget: bool,
    pub audit_checks: usize,
    pub audit_violations: usize,
    pub representativeness_violations: usize,
    pub trajectory_csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipsoid_json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_csv: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub grid_rasters: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub legs: Vec<LegReport>,
    pub total_planning_seconds: f64,
}

/// One planner's outcome on one leg of the comparison.
#[derive(Debug, Serialize)]
pub struct PlannerRow {
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_mma: Option<f64>,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CompareLeg {
    pub leg: usize,
    pub moving_slide: PlannerRow,
    pub fixed_slide: PlannerRow,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub fixed_slide_value: f64,
    pub legs: Vec<CompareLeg>,
    /// Totals over the legs where both planners succeeded.
    pub comparable_legs: usize,
    pub moving_total_cost: f64,
    pub fixed_total_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_ratio_fixed_over_moving: Option<f64>,
}

//! JSON schemas for robot models, scenes and tasks, and their conversion
//! to the core types.
//!
//! Numbers are plain JSON decimals; parsing is exact (shortest-round-trip
//! f64). Angles are radians, lengths meters.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use redunplan_core::collision::{Scene, Shape};
use redunplan_core::model::{DhRow, JointConfig, Pose, RobotModel};
use redunplan_core::task::{Leg, TaskMode, TaskSpec};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid robot model: {0}")]
    Model(redunplan_core::model::ModelError),
    #[error("invalid task: {0}")]
    Task(redunplan_core::task::TaskError),
    #[error("scene shape {0} has a non-positive radius or half extent")]
    SceneShape(usize),
    #[error("unknown task mode {0:?} (expected \"free-initial\" or \"chained\")")]
    Mode(String),
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------- shapes --

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeDto {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Capsule {
        p0: [f64; 3],
        p1: [f64; 3],
        radius: f64,
    },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        orientation: [[f64; 3]; 3],
    },
}

fn vec3(v: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn mat3(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::new(
        m[0][0], m[0][1], m[0][2], //
        m[1][0], m[1][1], m[1][2], //
        m[2][0], m[2][1], m[2][2],
    )
}

fn vec3_out(v: &Vector3<f64>) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn mat3_out(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

impl ShapeDto {
    pub fn to_shape(&self) -> Shape {
        match self {
            ShapeDto::Sphere { center, radius } => Shape::Sphere {
                center: vec3(center),
                radius: *radius,
            },
            ShapeDto::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: vec3(p0),
                p1: vec3(p1),
                radius: *radius,
            },
            ShapeDto::Box {
                center,
                half_extents,
                orientation,
            } => Shape::Cuboid {
                center: vec3(center),
                half_extents: vec3(half_extents),
                orientation: mat3(orientation),
            },
        }
    }

    pub fn from_shape(shape: &Shape) -> ShapeDto {
        match shape {
            Shape::Sphere { center, radius } => ShapeDto::Sphere {
                center: vec3_out(center),
                radius: *radius,
            },
            Shape::Capsule { p0, p1, radius } => ShapeDto::Capsule {
                p0: vec3_out(p0),
                p1: vec3_out(p1),
                radius: *radius,
            },
            Shape::Cuboid {
                center,
                half_extents,
                orientation,
            } => ShapeDto::Box {
                center: vec3_out(center),
                half_extents: vec3_out(half_extents),
                orientation: mat3_out(orientation),
            },
        }
    }
}

// ----------------------------------------------------------------- robot --

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub rail: RailDto,
    pub dh: [DhDto; 6],
    /// Flange-to-tool transform, 4x4 row-major homogeneous matrix.
    pub tool: [[f64; 4]; 4],
    pub limits: LimitsDto,
    /// Per-frame collision shapes: carriage, six links, tool (8 lists).
    pub shapes: Vec<Vec<ShapeDto>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RailDto {
    pub axis: [f64; 3],
    pub origin: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhDto {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDto {
    pub q_min: [f64; 7],
    pub q_max: [f64; 7],
    pub qd_max: [f64; 7],
}

impl RobotFile {
    pub fn to_model(&self) -> Result<RobotModel, FormatError> {
        let mut dh = [DhRow {
            a: 0.0,
            alpha: 0.0,
            d: 0.0,
            theta_offset: 0.0,
        }; 6];
        for (row, dto) in dh.iter_mut().zip(self.dh.iter()) {
            *row = DhRow {
                a: dto.a,
                alpha: dto.alpha,
                d: dto.d,
                theta_offset: dto.theta_offset,
            };
        }
        let t = &self.tool;
        let tool = Pose::from_parts(
            Matrix3::new(
                t[0][0], t[0][1], t[0][2], //
                t[1][0], t[1][1], t[1][2], //
                t[2][0], t[2][1], t[2][2],
            ),
            Vector3::new(t[0][3], t[1][3], t[2][3]),
        );
        let model = RobotModel {
            rail_axis: vec3(&self.rail.axis),
            rail_origin: vec3(&self.rail.origin),
            dh,
            tool,
            q_min: self.limits.q_min,
            q_max: self.limits.q_max,
            qd_max: self.limits.qd_max,
            link_shapes: self
                .shapes
                .iter()
                .map(|list| list.iter().map(ShapeDto::to_shape).collect())
                .collect(),
        };
        model.validate().map_err(FormatError::Model)?;
        Ok(model)
    }

    pub fn from_model(model: &RobotModel) -> RobotFile {
        let mut dh: Vec<DhDto> = Vec::with_capacity(6);
        for row in &model.dh {
            dh.push(DhDto {
                a: row.a,
                alpha: row.alpha,
                d: row.d,
                theta_offset: row.theta_offset,
            });
        }
        let r = &model.tool.rotation;
        let p = &model.tool.position;
        RobotFile {
            rail: RailDto {
                axis: vec3_out(&model.rail_axis),
                origin: vec3_out(&model.rail_origin),
            },
            dh: dh.try_into().unwrap(),
            tool: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)], p[0]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)], p[1]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)], p[2]],
                [0.0, 0.0, 0.0, 1.0],
            ],
            limits: LimitsDto {
                q_min: model.q_min,
                q_max: model.q_max,
                qd_max: model.qd_max,
            },
            shapes: model
                .link_shapes
                .iter()
                .map(|list| list.iter().map(ShapeDto::from_shape).collect())
                .collect(),
        }
    }
}

pub fn load_robot(path: &Path) -> Result<RobotModel, FormatError> {
    read_json::<RobotFile>(path)?.to_model()
}

// ----------------------------------------------------------------- scene --

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub shapes: Vec<ShapeDto>,
    #[serde(default)]
    pub margin: f64,
}

impl SceneFile {
    pub fn to_scene(&self) -> Scene {
        Scene {
            shapes: self.shapes.iter().map(ShapeDto::to_shape).collect(),
            margin: self.margin,
        }
    }

    pub fn from_scene(scene: &Scene) -> SceneFile {
        SceneFile {
            shapes: scene.shapes.iter().map(ShapeDto::from_shape).collect(),
            margin: scene.margin,
        }
    }
}

pub fn load_scene(path: &Path) -> Result<Scene, FormatError> {
    let scene = read_json::<SceneFile>(path)?.to_scene();
    for (index, shape) in scene.shapes.iter().enumerate() {
        if !shape.dimensions_positive() {
            return Err(FormatError::SceneShape(index));
        }
    }
    Ok(scene)
}

// ------------------------------------------------------------------ task --

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub holes: Vec<HoleDto>,
    pub legs: Vec<LegDto>,
    /// "free-initial" or "chained".
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_q: Option<[f64; 7]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleDto {
    pub p: [f64; 3],
    #[serde(rename = "R")]
    pub rotation: [[f64; 3]; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegDto {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "N_i")]
    pub waypoints: usize,
    #[serde(rename = "T")]
    pub duration: f64,
}

impl TaskFile {
    pub fn to_task(&self) -> Result<TaskSpec, FormatError> {
        let mode = match self.mode.as_str() {
            "free-initial" => TaskMode::FreeInitial,
            "chained" => TaskMode::Chained,
            other => return Err(FormatError::Mode(other.to_string())),
        };
        let task = TaskSpec {
            holes: self
                .holes
                .iter()
                .map(|h| Pose::from_parts(mat3(&h.rotation), vec3(&h.p)))
                .collect(),
            legs: self
                .legs
                .iter()
                .map(|l| Leg {
                    from: l.from,
                    to: l.to,
                    waypoints: l.waypoints,
                    duration: l.duration,
                })
                .collect(),
            mode,
            initial_q: self.initial_q.map(JointConfig),
            budget_seconds: self.budget_s,
        };
        task.validate().map_err(FormatError::Task)?;
        Ok(task)
    }

    pub fn from_task(task: &TaskSpec) -> TaskFile {
        TaskFile {
            holes: task
                .holes
                .iter()
                .map(|h| HoleDto {
                    p: vec3_out(&h.position),
                    rotation: mat3_out(&h.rotation),
                })
                .collect(),
            legs: task
                .legs
                .iter()
                .map(|l| LegDto {
                    from: l.from,
                    to: l.to,
                    waypoints: l.waypoints,
                    duration: l.duration,
                })
                .collect(),
            mode: match task.mode {
                TaskMode::FreeInitial => "free-initial".to_string(),
                TaskMode::Chained => "chained".to_string(),
            },
            initial_q: task.initial_q.map(|q| q.0),
            budget_s: task.budget_seconds,
        }
    }
}

pub fn load_task(path: &Path) -> Result<TaskSpec, FormatError> {
    read_json::<TaskFile>(path)?.to_task()
}

//! Collision primitives and the per-configuration collision predicate.
//!
//! Shapes are spheres, capsules and oriented boxes. All pair tests are exact
//! analytic predicates (non-strict: touching counts as intersecting).
//! Self-collision checks every non-adjacent link pair; links sharing a joint
//! are exempt because their primitives meet at the joint by construction.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::kinematics::link_frames;
use crate::model::{JointConfig, Pose, RobotModel, LINK_FRAMES};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    Capsule {
        p0: Vector3<f64>,
        p1: Vector3<f64>,
        radius: f64,
    },
    Cuboid {
        center: Vector3<f64>,
        half_extents: Vector3<f64>,
        orientation: Matrix3<f64>,
    },
}

impl Shape {
    pub fn dimensions_positive(&self) -> bool {
        match self {
            Shape::Sphere { radius, .. } => *radius > 0.0,
            Shape::Capsule { radius, .. } => *radius > 0.0,
            Shape::Cuboid { half_extents, .. } => half_extents.iter().all(|h| *h > 0.0),
        }
    }

    /// The shape expressed in the world frame.
    pub fn posed(&self, pose: &Pose) -> Shape {
        match self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: pose.transform_point(center),
                radius: *radius,
            },
            Shape::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: pose.transform_point(p0),
                p1: pose.transform_point(p1),
                radius: *radius,
            },
            Shape::Cuboid {
                center,
                half_extents,
                orientation,
            } => Shape::Cuboid {
                center: pose.transform_point(center),
                half_extents: *half_extents,
                orientation: pose.rotation * orientation,
            },
        }
    }

    /// Grows the shape by `amount` on every surface: radii and half extents
    /// are increased by `amount`.
    pub fn inflated(&self, amount: f64) -> Shape {
        match self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: *center,
                radius: radius + amount,
            },
            Shape::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: *p0,
                p1: *p1,
                radius: radius + amount,
            },
            Shape::Cuboid {
                center,
                half_extents,
                orientation,
            } => Shape::Cuboid {
                center: *center,
                half_extents: half_extents.add_scalar(amount),
                orientation: *orientation,
            },
        }
    }
}

/// Static obstacles in the world frame, plus an optional safety margin that
/// is applied as surface inflation (half on each side of every tested pair).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub shapes: Vec<Shape>,
    pub margin: f64,
}

impl Scene {
    pub fn empty() -> Scene {
        Scene {
            shapes: Vec::new(),
            margin: 0.0,
        }
    }
}

/// True when the two posed shapes overlap or touch.
pub fn shapes_intersect(a: &Shape, pose_a: &Pose, b: &Shape, pose_b: &Pose) -> bool {
    world_shapes_intersect(&a.posed(pose_a), &b.posed(pose_b))
}

/// Intersection test on shapes already expressed in the world frame.
pub fn world_shapes_intersect(a: &Shape, b: &Shape) -> bool {
    use Shape::*;
    match (a, b) {
        (
            Sphere {
                center: ca,
                radius: ra,
            },
            Sphere {
                center: cb,
                radius: rb,
            },
        ) => {
            let r = ra + rb;
            (ca - cb).norm_squared() <= r * r
        }
        (Sphere { center, radius }, Capsule { p0, p1, radius: rc }) => {
            let r = radius + rc;
            point_segment_distance_sq(center, p0, p1) <= r * r
        }
        (Capsule { .. }, Sphere { .. }) => world_shapes_intersect(b, a),
        (
            Capsule {
                p0: a0,
                p1: a1,
                radius: ra,
            },
            Capsule {
                p0: b0,
                p1: b1,
                radius: rb,
            },
        ) => {
            let r = ra + rb;
            segment_segment_distance_sq(a0, a1, b0, b1) <= r * r
        }
        (Sphere { center, radius }, Cuboid { .. }) => {
            point_cuboid_distance_sq(center, b) <= radius * radius
        }
        (Cuboid { .. }, Sphere { .. }) => world_shapes_intersect(b, a),
        (Capsule { p0, p1, radius }, Cuboid { .. }) => {
            segment_cuboid_distance_sq(p0, p1, b) <= radius * radius
        }
        (Cuboid { .. }, Capsule { .. }) => world_shapes_intersect(b, a),
        (Cuboid { .. }, Cuboid { .. }) => cuboids_intersect(a, b),
    }
}

/// Squared distance from a point to a segment.
fn point_segment_distance_sq(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == 0.0 {
        return (p - a).norm_squared();
    }
    let t = ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm_squared()
}

/// Squared distance between two segments (closest-point parametrization,
/// clamped to both segment domains).
fn segment_segment_distance_sq(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    let (s, t);
    if a == 0.0 && e == 0.0 {
        return r.norm_squared();
    }
    if a == 0.0 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e == 0.0 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_val = if denom != 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t_val = b * s_val + f;
            if t_val < 0.0 {
                s_val = (-c / a).clamp(0.0, 1.0);
                t = 0.0;
            } else if t_val > e {
                s_val = ((b - c) / a).clamp(0.0, 1.0);
                t = 1.0;
            } else {
                t = t_val / e;
            }
            s = s_val;
        }
    }
    let c1 = p1 + s * d1;
    let c2 = p2 + t * d2;
    (c1 - c2).norm_squared()
}

/// Squared distance from a world point to an oriented box.
fn point_cuboid_distance_sq(p: &Vector3<f64>, cuboid: &Shape) -> f64 {
    let Shape::Cuboid {
        center,
        half_extents,
        orientation,
    } = cuboid
    else {
        unreachable!()
    };
    let local = orientation.transpose() * (p - center);
    let mut d_sq = 0.0;
    for k in 0..3 {
        let excess = local[k].abs() - half_extents[k];
        if excess > 0.0 {
            d_sq += excess * excess;
        }
    }
    d_sq
}

/// Squared distance from a segment to an oriented box.
///
/// In the box frame the squared distance along the segment,
/// f(t) = sum_k max(0, |s_k(t)| - h_k)^2, is piecewise quadratic and convex
/// in t, so the exact minimum is found by splitting [0, 1] at the points
/// where any coordinate crosses a face plane and minimizing each quadratic
/// piece analytically.
fn segment_cuboid_distance_sq(p0: &Vector3<f64>, p1: &Vector3<f64>, cuboid: &Shape) -> f64 {
    let Shape::Cuboid {
        center,
        half_extents,
        orientation,
    } = cuboid
    else {
        unreachable!()
    };
    let rt = orientation.transpose();
    let a = rt * (p0 - center);
    let d = rt * (p1 - p0);

    let mut cuts = [0.0f64; 8];
    let mut n_cuts = 0;
    cuts[n_cuts] = 0.0;
    n_cuts += 1;
    cuts[n_cuts] = 1.0;
    n_cuts += 1;
    for k in 0..3 {
        if d[k] != 0.0 {
            for bound in [-half_extents[k], half_extents[k]] {
                let t = (bound - a[k]) / d[k];
                if t > 0.0 && t < 1.0 {
                    cuts[n_cuts] = t;
                    n_cuts += 1;
                }
            }
        }
    }
    let cuts = &mut cuts[..n_cuts];
    cuts.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());

    let eval = |t: f64| -> f64 {
        let mut v = 0.0;
        for k in 0..3 {
            let excess = (a[k] + t * d[k]).abs() - half_extents[k];
            if excess > 0.0 {
                v += excess * excess;
            }
        }
        v
    };

    let mut best = f64::INFINITY;
    for w in cuts.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        best = best.min(eval(ta)).min(eval(tb));
        if tb <= ta {
            continue;
        }
        // Fixed active set on the open interval: build the quadratic
        // A t^2 + B t + C from the violated coordinates at the midpoint.
        let tm = 0.5 * (ta + tb);
        let mut qa = 0.0;
        let mut qb = 0.0;
        let mut any = false;
        for k in 0..3 {
            let s = a[k] + tm * d[k];
            let offset = if s > half_extents[k] {
                a[k] - half_extents[k]
            } else if s < -half_extents[k] {
                a[k] + half_extents[k]
            } else {
                continue;
            };
            qa += d[k] * d[k];
            qb += 2.0 * d[k] * offset;
            any = true;
        }
        if !any {
            return 0.0; // the segment passes through the box interior
        }
        if qa > 0.0 {
            let t_star = -qb / (2.0 * qa);
            if t_star > ta && t_star < tb {
                best = best.min(eval(t_star));
            }
        }
    }
    best
}

/// Separating-axis test for two oriented boxes (15 candidate axes; cross
/// axes that degenerate for parallel edges are skipped, the face axes
/// already decide those cases).
fn cuboids_intersect(a: &Shape, b: &Shape) -> bool {
    let (
        Shape::Cuboid {
            center: ca,
            half_extents: ha,
            orientation: ra,
        },
        Shape::Cuboid {
            center: cb,
            half_extents: hb,
            orientation: rb,
        },
    ) = (a, b)
    else {
        unreachable!()
    };
    let t = cb - ca;
    let mut axes: [Vector3<f64>; 15] = [Vector3::zeros(); 15];
    let mut n = 0;
    for k in 0..3 {
        axes[n] = ra.column(k).into_owned();
        n += 1;
        axes[n] = rb.column(k).into_owned();
        n += 1;
    }
    for i in 0..3 {
        for j in 0..3 {
            let axis = ra.column(i).cross(&rb.column(j));
            if axis.norm_squared() > 1e-12 {
                axes[n] = axis;
                n += 1;
            }
        }
    }
    for axis in &axes[..n] {
        let dist = t.dot(axis).abs();
        let span_a: f64 = (0..3).map(|k| ha[k] * ra.column(k).dot(axis).abs()).sum();
        let span_b: f64 = (0..3).map(|k| hb[k] * rb.column(k).dot(axis).abs()).sum();
        if dist > span_a + span_b {
            return false;
        }
    }
    true
}

/// Identity of the first overlapping pair found by [`config_in_collision`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionHit {
    SelfPair {
        link_a: usize,
        shape_a: usize,
        link_b: usize,
        shape_b: usize,
    },
    Environment {
        link: usize,
        shape: usize,
        scene_shape: usize,
    },
}

/// Non-adjacent link-frame index pairs tested for self-collision:
/// all (j, k) with j < k except the consecutive pairs (j, j+1).
pub fn self_check_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..LINK_FRAMES)
        .flat_map(|j| (j + 1..LINK_FRAMES).map(move |k| (j, k)))
        .filter(|(j, k)| k - j > 1)
}

/// Poses every link shape via the forward-kinematic chain and returns the
/// first self- or environment-collision, if any. The scene margin inflates
/// each side of every tested pair by margin / 2.
pub fn config_in_collision(
    model: &RobotModel,
    scene: &Scene,
    q: &JointConfig,
) -> Option<CollisionHit> {
    let frames = link_frames(model, q);
    let half_margin = 0.5 * scene.margin;

    let mut posed: [Vec<Shape>; LINK_FRAMES] = Default::default();
    for link in 0..LINK_FRAMES {
        posed[link] = model.link_shapes[link]
            .iter()
            .map(|s| {
                let s = s.posed(&frames[link]);
                if half_margin > 0.0 {
                    s.inflated(half_margin)
                } else {
                    s
                }
            })
            .collect();
    }

    for (ja, jb) in self_check_pairs() {
        for (ia, sa) in posed[ja].iter().enumerate() {
            for (ib, sb) in posed[jb].iter().enumerate() {
                if world_shapes_intersect(sa, sb) {
                    return Some(CollisionHit::SelfPair {
                        link_a: ja,
                        shape_a: ia,
                        link_b: jb,
                        shape_b: ib,
                    });
                }
            }
        }
    }

    for link in 0..LINK_FRAMES {
        for (is, s) in posed[link].iter().enumerate() {
            for (ie, env) in scene.shapes.iter().enumerate() {
                let env = if half_margin > 0.0 {
                    env.inflated(half_margin)
                } else {
                    env.clone()
                };
                if world_shapes_intersect(s, &env) {
                    return Some(CollisionHit::Environment {
                        link,
                        shape: is,
                        scene_shape: ie,
                    });
                }
            }
        }
    }
    None
}

//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see them).

use nalgebra::{Matrix3, SMatrix, Vector3};

use redunplan_cli::export::trajectory_csv;
use redunplan_cli::threads::{plan_timed, ThreadedRunner};

use redunplan_core::constraints::{in_a, in_b};
use redunplan_core::dp::{
    brute_force_on_grid, build_grid, plan_on_grid, DpGrid, GridParams, PlanOptions, SerialRunner,
    StartMode, TerminalRule,
};
use redunplan_core::ik::augmented_ik;
use redunplan_core::kinematics::{forward_kinematics, jacobian_world, link_frames};
use redunplan_core::model::{JointConfig, RobotModel, SLIDE_INDEX};
use redunplan_core::presets::{
    default_model, demo_holes, four_leg_task, lateral_task, panel_scene, DEFAULT_U_RESOLUTION,
};
use redunplan_core::stiffness::{default_eta, mma_from_jjt};
use redunplan_core::task::{fixed_slide_plan, synthesize_path, FixedSlideError};

// Deterministic xorshift for the randomized criteria.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }
    fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

fn random_config(rng: &mut Rng, model: &RobotModel) -> JointConfig {
    let mut q = [0.0; 7];
    for (k, slot) in q.iter_mut().enumerate() {
        *slot = rng.range(model.q_min[k], model.q_max[k]);
    }
    JointConfig(q)
}

/// Criterion 1: rebuilding J J' from the two reference ellipsoid datasets and
/// evaluating the mechanical advantage along z reproduces 1.099 and 1.127
/// within 0.001.
#[test]
fn acceptance_1_mma_reconstruction() {
    type EllipsoidRows = [([f64; 3], f64); 3];
    let tables: [(&str, EllipsoidRows, f64); 2] = [
        (
            "fast pose",
            [
                ([0.4262, -0.0825, -0.9008], 1.7629),
                ([-0.8127, 0.4025, -0.4214], 0.5726),
                ([0.3973, 0.9117, 0.1045], 0.6608),
            ],
            1.099,
        ),
        (
            "slow pose",
            [
                ([0.4193, 0.001, -0.9079], 1.8),
                ([0.9077, -0.0183, 0.419], 0.5743),
                ([-0.0161, -0.9998, -0.008], 0.6613),
            ],
            1.127,
        ),
    ];
    for (label, rows, expected) in &tables {
        let mut block = Matrix3::zeros();
        for (v, len) in rows {
            let v = Vector3::new(v[0], v[1], v[2]);
            block += (1.0 / (len * len)) * v * v.transpose();
        }
        let mut jjt = SMatrix::<f64, 6, 6>::zeros();
        for r in 0..3 {
            for c in 0..3 {
                jjt[(r, c)] = block[(r, c)];
            }
        }
        let value = mma_from_jjt(&jjt, &default_eta()).unwrap();
        assert!(
            (value - expected).abs() <= 1e-3,
            "{label}: mma {value} vs expected {expected}"
        );
        println!("ACCEPTANCE 1 (mma reconstruction, {label}): PASS ({value:.4} ~ {expected})");
    }
}

fn synthetic_instance(rng: &mut Rng) -> (RobotModel, DpGrid, PlanOptions) {
    let mut model = default_model();
    for k in 0..7 {
        model.qd_max[k] = rng.range(0.25, 1.2);
    }
    let n_stages = 2 + rng.below(4); // waypoint counts N_i in 1..=4
    let n_cols = 1 + rng.below(7); // N_j in 0..=6
    let n_layers = 1 + rng.below(2); // N_g in 1..=2
    let u_values: Vec<f64> = (0..n_cols).map(|j| j as f64 * 0.1).collect();
    let mut grid = DpGrid::new(n_stages, n_cols, n_layers, u_values, 1.0);
    for i in 0..n_stages {
        for j in 0..n_cols {
            for g in 0..n_layers {
                if rng.unit() < 0.75 {
                    let mut q = [0.0; 7];
                    for v in q.iter_mut().take(6) {
                        *v = rng.range(-0.5, 0.5);
                    }
                    q[SLIDE_INDEX] = grid.u_values[j];
                    grid.set_feasible(i, j, g, JointConfig(q));
                }
            }
        }
    }
    let start = if rng.unit() < 0.5 {
        StartMode::Free
    } else {
        grid.stage_nodes(0)
            .find(|(_, _, n)| n.feasible())
            .map(|(_, _, n)| StartMode::Fixed(n.q.unwrap()))
            .unwrap_or(StartMode::Free)
    };
    let options = PlanOptions {
        start,
        ..PlanOptions::default()
    };
    (model, grid, options)
}

/// Criterion 2: the dynamic program and exhaustive enumeration agree
/// exactly (terminal node, cost bit pattern, full trajectory) on at least
/// 100 randomized small instances.
#[test]
fn acceptance_2_dp_equals_brute_force() {
    let mut rng = Rng::new(0xacce_0002);
    let mut compared = 0usize;
    let mut feasible = 0usize;
    while compared < 120 {
        let (model, mut grid, options) = synthetic_instance(&mut rng);
        let dp = plan_on_grid(&model, &mut grid, &options, &SerialRunner);
        let brute = brute_force_on_grid(&model, &grid, &options);
        compared += 1;
        match (dp, brute) {
            (Ok(a), Ok(b)) => {
                feasible += 1;
                assert_eq!(a.node_path.last(), b.node_path.last(), "terminal node");
                assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits(), "total cost");
                assert_eq!(a.node_path, b.node_path, "trajectory");
            }
            (Err(ea), Err(eb)) => {
                assert_eq!(
                    std::mem::discriminant(&ea),
                    std::mem::discriminant(&eb),
                    "{ea:?} vs {eb:?}"
                );
            }
            (a, b) => panic!("feasibility disagreement: {a:?} vs {b:?}"),
        }
    }
    assert!(
        compared >= 100 && feasible >= 60,
        "{feasible}/{compared} feasible"
    );
    println!("ACCEPTANCE 2 (dp = brute force): PASS ({compared} instances, {feasible} feasible)");
}

/// Criterion 3: the four-leg chained demo task (10/10/10/15
/// waypoints, 0.55 s legs, 13.2 mm slide resolution over the full +-2.1 m
/// domain, hence 318 slide intervals) plans end to end; every waypoint
/// passes pose tracking, limits, velocity and collision audits; each leg
/// stays under 60 s of wall clock.
#[test]
fn acceptance_3_demo_task_end_to_end() {
    let model = default_model();
    let scene = panel_scene();
    let task = four_leg_task();
    let params = GridParams::from_model(&model, DEFAULT_U_RESOLUTION);
    assert_eq!(params.column_count(), 319, "N_j must be 318");

    let runner = ThreadedRunner { threads: 1 };
    let mut start = StartMode::Free;
    for (leg, spec) in task.legs.iter().enumerate() {
        assert_eq!(spec.waypoints, [10, 10, 10, 15][leg]);
        assert_eq!(spec.duration, 0.55);
        let path = task.leg_path(leg).unwrap();
        let options = PlanOptions {
            start: start.clone(),
            ..PlanOptions::default()
        };
        let (result, _) = plan_timed(&model, &scene, &path, &params, &options, &runner).unwrap();
        assert!(
            result.planning_seconds < 60.0,
            "leg {leg} took {:.1} s",
            result.planning_seconds
        );
        for (i, q) in result.trajectory.iter().enumerate() {
            let fk = forward_kinematics(&model, q);
            assert!(fk.position_error(&path.poses[i]) <= 1e-9);
            assert!(fk.rotation_error(&path.poses[i]) <= 1e-9);
            assert!(in_a(&model, &scene, q).admissible());
            if i > 0 {
                assert!(in_b(&model, q, &result.trajectory[i - 1], path.tau).admissible());
            }
        }
        println!(
            "ACCEPTANCE 3 (demo task end to end): leg {leg} cost {:.4} mma {:.4} in {:.2} s",
            result.total_cost, result.terminal_mma, result.planning_seconds
        );
        start = StartMode::Fixed(*result.trajectory.last().unwrap());
    }
    println!("ACCEPTANCE 3 (demo task end to end): PASS");
}

/// Criterion 4: wall clock grows linearly with the waypoint count at fixed
/// slide sampling and branch structure; an affine fit over 5/10/20/40
/// waypoints leaves every point within 25 percent of the fit.
#[test]
fn acceptance_4_linear_stage_scaling() {
    let model = default_model();
    let scene = panel_scene();
    let holes = demo_holes();
    let params = GridParams::from_model(&model, DEFAULT_U_RESOLUTION);
    let runner = ThreadedRunner { threads: 1 };
    let tau = 0.055;

    // A short leg keeps the admissible set statistically identical at every
    // stage, and the constant sampling interval keeps the per-stage
    // transition window fixed, so the workload is proportional to the stage
    // count alone.
    let mut short = holes[0];
    short.position.z += 0.01;

    let sizes = [5usize, 10, 20, 40];
    let mut seconds = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let path = synthesize_path(&holes[0], &short, n, tau * n as f64).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..5 {
            let (result, _) = plan_timed(
                &model,
                &scene,
                &path,
                &params,
                &PlanOptions::default(),
                &runner,
            )
            .unwrap();
            best = best.min(result.planning_seconds);
        }
        seconds.push(best);
    }

    // Least-squares affine fit t = a + b n.
    let n = sizes.len() as f64;
    let sx: f64 = sizes.iter().map(|s| *s as f64).sum();
    let sy: f64 = seconds.iter().sum();
    let sxx: f64 = sizes.iter().map(|s| (*s as f64) * (*s as f64)).sum();
    let sxy: f64 = sizes.iter().zip(&seconds).map(|(s, t)| *s as f64 * t).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    assert!(slope > 0.0, "planning time must grow with the stage count");
    for (s, t) in sizes.iter().zip(&seconds) {
        let fit = intercept + slope * *s as f64;
        let deviation = (t - fit).abs() / fit;
        assert!(
            deviation <= 0.25,
            "N_i = {s}: {t:.4} s deviates {:.1}% from the fit {fit:.4} s",
            100.0 * deviation
        );
    }
    println!(
        "ACCEPTANCE 4 (linear stage scaling): PASS (times {seconds:?} s for N_i {sizes:?}, \
         fit {intercept:.4} + {slope:.5} n)"
    );
}

/// Criterion 5: re-planning the lateral leg with the duration raised from
/// 0.55 s to 1.4 s can only enlarge the velocity-feasible terminal set, so
/// the terminal stiffness does not drop.
#[test]
fn acceptance_5_slower_trajectory_stiffness() {
    let model = default_model();
    let scene = panel_scene();
    let params = GridParams::from_model(&model, DEFAULT_U_RESOLUTION);

    let fast_path = lateral_task(15, 0.55).leg_path(0).unwrap();
    let mut fast_grid = build_grid(&model, &scene, &fast_path, &params).unwrap();
    let free = plan_on_grid(
        &model,
        &mut fast_grid,
        &PlanOptions::default(),
        &SerialRunner,
    )
    .unwrap();
    let start = StartMode::Fixed(free.trajectory[0]);

    let options = PlanOptions {
        start,
        ..PlanOptions::default()
    };
    let fast = plan_on_grid(&model, &mut fast_grid, &options, &SerialRunner).unwrap();

    let slow_path = lateral_task(15, 1.4).leg_path(0).unwrap();
    let mut slow_grid = build_grid(&model, &scene, &slow_path, &params).unwrap();
    let slow = plan_on_grid(&model, &mut slow_grid, &options, &SerialRunner).unwrap();

    assert!(
        slow.terminal_mma >= fast.terminal_mma,
        "slow {} < fast {}",
        slow.terminal_mma,
        fast.terminal_mma
    );
    println!(
        "ACCEPTANCE 5 (slower trajectory stiffness): PASS (mma {:.4} at 0.55 s -> {:.4} at 1.4 s)",
        fast.terminal_mma, slow.terminal_mma
    );
}

/// Criterion 6: on a vertical sequence whose fixed-slide baseline lies on
/// the dynamic-programming grid and shares the start node, the moving-slide
/// cost never exceeds the fixed-slide cost, and the pinned-terminal variant
/// bounds it from below; the lateral leg is infeasible for the baseline but
/// plannable with the moving slide.
#[test]
fn acceptance_6_fixed_slide_dominance() {
    let model = default_model();
    let scene = panel_scene();
    let holes = demo_holes();
    let params = GridParams::from_model(&model, DEFAULT_U_RESOLUTION);

    let path = synthesize_path(&holes[0], &holes[1], 10, 4.0).unwrap();
    let mut grid = build_grid(&model, &scene, &path, &params).unwrap();
    let free = plan_on_grid(&model, &mut grid, &PlanOptions::default(), &SerialRunner).unwrap();
    let (term_col, term_layer) = *free.node_path.last().unwrap();
    let u_fixed = grid.u_values[term_col as usize];
    let q_start = grid
        .node(0, term_col as usize, term_layer as usize)
        .q
        .expect("stage-0 node at the terminal column");
    let start = StartMode::Fixed(q_start);

    let fixed = fixed_slide_plan(&model, &scene, &path, u_fixed, &start, &default_eta()).unwrap();
    let options = PlanOptions {
        start: start.clone(),
        ..PlanOptions::default()
    };
    let dp = plan_on_grid(&model, &mut grid, &options, &SerialRunner).unwrap();

    assert!(dp.terminal_mma >= fixed.terminal_mma);
    assert!(
        dp.total_cost <= fixed.total_cost,
        "dp {} > fixed {}",
        dp.total_cost,
        fixed.total_cost
    );

    let fixed_terminal = *fixed.trajectory.last().unwrap();
    let last = grid.n_stages - 1;
    let pinned_node = grid
        .stage_nodes(last)
        .find(|(_, _, n)| n.q.is_some_and(|q| q.max_abs_diff(&fixed_terminal) <= 1e-9))
        .map(|(j, g, _)| (j as u32, g as u32))
        .expect("fixed-slide terminal lies on the grid");
    let pinned = PlanOptions {
        start,
        terminal: TerminalRule::Pinned {
            column: pinned_node.0,
            layer: pinned_node.1,
        },
        ..PlanOptions::default()
    };
    let dp_pinned = plan_on_grid(&model, &mut grid, &pinned, &SerialRunner).unwrap();
    assert!(dp_pinned.total_cost <= fixed.total_cost);

    // Lateral leg: the baseline leaves the workspace, the moving slide plans.
    let lateral = lateral_task(15, 0.55).leg_path(0).unwrap();
    let baseline = fixed_slide_plan(
        &model,
        &scene,
        &lateral,
        0.0,
        &StartMode::Free,
        &default_eta(),
    );
    assert!(matches!(
        baseline,
        Err(FixedSlideError::InfeasibleAtFixedSlide { .. })
    ));
    let mut lateral_grid = build_grid(&model, &scene, &lateral, &params).unwrap();
    assert!(plan_on_grid(
        &model,
        &mut lateral_grid,
        &PlanOptions::default(),
        &SerialRunner
    )
    .is_ok());

    println!(
        "ACCEPTANCE 6 (fixed-slide dominance): PASS (dp {:.4} <= fixed {:.4}, pinned {:.4}; \
         lateral baseline infeasible)",
        dp.total_cost, fixed.total_cost, dp_pinned.total_cost
    );
}

/// Criterion 7: kinematics suite. Inverse-then-forward kinematics closes to
/// 1e-9 over 1000 random reachable poses across all branches; the analytic
/// Jacobian matches central finite differences to 1e-6; the wrist
/// singularity drops the arm Jacobian rank.
#[test]
fn acceptance_7_kinematics_suite() {
    let model = default_model();
    let mut rng = Rng::new(0xacce_0007);

    // Round trip over all branches.
    let mut worst = 0.0f64;
    let mut branches = 0usize;
    for _ in 0..1000 {
        let q_star = random_config(&mut rng, &model);
        let pose = forward_kinematics(&model, &q_star);
        for b in augmented_ik(&model, &pose, q_star.slide()) {
            let fk = forward_kinematics(&model, &b.q);
            worst = worst
                .max(fk.position_error(&pose))
                .max(fk.rotation_error(&pose));
            branches += 1;
        }
    }
    assert!(worst <= 1e-9, "worst IK->FK residual {worst}");
    assert!(branches >= 4000);

    // Jacobian against central finite differences.
    let mut worst_fd = 0.0f64;
    for _ in 0..50 {
        let q = random_config(&mut rng, &model);
        let jac = jacobian_world(&model, &q);
        let h = 1e-6;
        for k in 0..7 {
            let mut qp = q;
            let mut qm = q;
            qp.0[k] += h;
            qm.0[k] -= h;
            let fp = link_frames(&model, &qp)[7];
            let fm = link_frames(&model, &qm)[7];
            let lin = (fp.position - fm.position) / (2.0 * h);
            // World angular velocity from the rotation derivative:
            // dR R' is skew(omega).
            let r0 = link_frames(&model, &q)[7].rotation;
            let dr = (fp.rotation - fm.rotation) / (2.0 * h);
            let skew = dr * r0.transpose();
            let ang = Vector3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)]);
            for r in 0..3 {
                worst_fd = worst_fd
                    .max((jac[(r, k)] - lin[r]).abs())
                    .max((jac[(r + 3, k)] - ang[r]).abs());
            }
        }
    }
    assert!(worst_fd <= 1e-6, "worst Jacobian residual {worst_fd}");

    // Wrist singularity: the 6x6 arm block loses rank at q5 = 0.
    let mut q = JointConfig([0.3, 0.4, -0.2, 0.7, 0.0, 0.5, 0.1]);
    let jac = jacobian_world(&model, &q);
    let mut arm = SMatrix::<f64, 6, 6>::zeros();
    for r in 0..6 {
        for c in 0..6 {
            arm[(r, c)] = jac[(r, c)];
        }
    }
    let svd = arm.svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    assert!(smin < 1e-12 * smax.max(1.0), "arm block kept rank: {smin}");
    q.0[4] = 0.5;
    let healthy = jacobian_world(&model, &q);
    let mut arm = SMatrix::<f64, 6, 6>::zeros();
    for r in 0..6 {
        for c in 0..6 {
            arm[(r, c)] = healthy[(r, c)];
        }
    }
    assert!(arm.determinant().abs() > 1e-9);

    println!(
        "ACCEPTANCE 7 (kinematics suite): PASS (ik residual {worst:.2e}, fd residual {worst_fd:.2e})"
    );
}

/// Criterion 8: repeated runs and different worker counts produce
/// byte-identical trajectory artifacts.
#[test]
fn acceptance_8_determinism() {
    let model = default_model();
    let scene = panel_scene();
    let task = four_leg_task();
    let path = task.leg_path(0).unwrap();
    let params = GridParams::from_model(&model, 0.05);
    let options = PlanOptions::default();

    let mut artifacts = Vec::new();
    for threads in [1usize, 1, 2, 8] {
        let runner = ThreadedRunner { threads };
        let (result, grid) = plan_timed(&model, &scene, &path, &params, &options, &runner).unwrap();
        artifacts.push(trajectory_csv(&result, grid.tau));
    }
    for other in &artifacts[1..] {
        assert_eq!(artifacts[0].as_bytes(), other.as_bytes());
    }
    println!(
        "ACCEPTANCE 8 (determinism): PASS ({} byte-identical runs across 1/1/2/8 workers)",
        artifacts.len()
    );
}

//! The discrete dynamic program over the slide grid.
//!
//! A grid node (i, j, g) is one inverse-kinematics candidate for waypoint i
//! with the slide at sample j; g indexes the solution branch together with
//! its in-limit 2 pi representatives. The forward pass relaxes stage by
//! stage: a transition is admitted when its backward-Euler velocity is
//! feasible, and each reached node stores the cheapest predecessor. The
//! terminal node is the stiffest reachable configuration; the trajectory is
//! rebuilt backwards through the predecessor links.
//!
//! Relaxations of distinct target nodes at one stage are independent, so a
//! [`StageRunner`] may partition them across workers; results are bitwise
//! identical for any partition because each target scans its sources in a
//! fixed order.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::SVector;
// Float backs the math methods in no_std builds; under test, std is
// linked and its inherent methods shadow the trait.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::collision::{config_in_collision, Scene};
use crate::constraints::velocity_ok;
use crate::ik::{augmented_ik, max_representatives, representatives};
use crate::model::{JointConfig, RobotModel, TaskPath, JOINT_COUNT, SLIDE_INDEX};
use crate::stiffness::mma;

/// Slide discretization: samples u_min + j * u_resolution for
/// j = 0 ..= floor((u_max - u_min) / u_resolution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub u_min: f64,
    pub u_max: f64,
    pub u_resolution: f64,
}

impl GridParams {
    /// Full slide range of the model at the given resolution.
    pub fn from_model(model: &RobotModel, u_resolution: f64) -> Self {
        GridParams {
            u_min: model.slide_min(),
            u_max: model.slide_max(),
            u_resolution,
        }
    }

    pub fn column_count(&self) -> usize {
        ((self.u_max - self.u_min) / self.u_resolution + 1e-9).floor() as usize + 1
    }
}

/// One grid cell: the candidate configuration (when feasible), its best
/// known cumulative cost, the predecessor that achieved it, and whether the
/// node is reachable from stage 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpNode {
    pub q: Option<JointConfig>,
    pub cost: f64,
    pub pred: Option<(u32, u32)>,
    pub in_c: bool,
}

impl DpNode {
    fn infeasible() -> Self {
        DpNode {
            q: None,
            cost: f64::INFINITY,
            pred: None,
            in_c: false,
        }
    }

    pub fn feasible(&self) -> bool {
        self.q.is_some()
    }
}

/// Dense node storage, g-major: one (stage, column) matrix per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DpGrid {
    pub n_stages: usize,
    pub n_cols: usize,
    pub n_layers: usize,
    pub u_values: Vec<f64>,
    pub tau: f64,
    nodes: Vec<DpNode>,
}

impl DpGrid {
    /// An all-infeasible grid. `u_values` must be ascending, one per column.
    pub fn new(
        n_stages: usize,
        n_cols: usize,
        n_layers: usize,
        u_values: Vec<f64>,
        tau: f64,
    ) -> Self {
        assert_eq!(u_values.len(), n_cols);
        debug_assert!(u_values.windows(2).all(|w| w[0] < w[1]));
        DpGrid {
            n_stages,
            n_cols,
            n_layers,
            u_values,
            tau,
            nodes: vec![DpNode::infeasible(); n_stages * n_cols * n_layers],
        }
    }

    #[inline]
    fn idx(&self, stage: usize, column: usize, layer: usize) -> usize {
        (layer * self.n_stages + stage) * self.n_cols + column
    }

    pub fn node(&self, stage: usize, column: usize, layer: usize) -> &DpNode {
        &self.nodes[self.idx(stage, column, layer)]
    }

    pub fn node_mut(&mut self, stage: usize, column: usize, layer: usize) -> &mut DpNode {
        let idx = self.idx(stage, column, layer);
        &mut self.nodes[idx]
    }

    /// Marks a node feasible with configuration `q`. The slide component of
    /// `q` must equal the column's u value.
    pub fn set_feasible(&mut self, stage: usize, column: usize, layer: usize, q: JointConfig) {
        debug_assert_eq!(q.slide(), self.u_values[column]);
        self.node_mut(stage, column, layer).q = Some(q);
    }

    /// Nodes of one stage in ascending (column, layer) order.
    pub fn stage_nodes(&self, stage: usize) -> impl Iterator<Item = (usize, usize, &DpNode)> + '_ {
        (0..self.n_cols)
            .flat_map(move |j| (0..self.n_layers).map(move |g| (j, g, self.node(stage, j, g))))
    }

    /// All nodes in (stage, column, layer) order.
    pub fn iter_nodes(&self) -> impl Iterator<Item = (usize, usize, usize, &DpNode)> + '_ {
        (0..self.n_stages).flat_map(move |i| self.stage_nodes(i).map(move |(j, g, n)| (i, j, g, n)))
    }

    fn reset_annotations(&mut self) {
        for node in &mut self.nodes {
            node.cost = f64::INFINITY;
            node.pred = None;
            node.in_c = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    BadGridParams,
    /// Some waypoint has no admissible inverse-kinematics candidate at any
    /// slide sample: the task is unreachable under this grid.
    UnreachableStage {
        stage: usize,
    },
    /// Stage-to-stage propagation died out (velocity limits or an empty
    /// admissible set downstream).
    NoFeasiblePath {
        stage: usize,
    },
    /// The requested initial configuration matches no stage-0 node.
    InitialConfigNotOnGrid,
    /// The pinned terminal node was not reached.
    PinnedTerminalUnreached,
    /// Every reachable terminal node is singular along the chosen
    /// direction.
    SingularTerminal,
    /// Brute-force enumeration would exceed the instance guard.
    InstanceTooLarge {
        paths: u128,
    },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::BadGridParams => write!(f, "invalid slide grid parameters"),
            PlanError::UnreachableStage { stage } => {
                write!(f, "waypoint {stage} is unreachable at every slide sample")
            }
            PlanError::NoFeasiblePath { stage } => {
                write!(f, "no velocity-feasible path reaches stage {stage}")
            }
            PlanError::InitialConfigNotOnGrid => {
                write!(f, "the fixed initial configuration matches no stage-0 node")
            }
            PlanError::PinnedTerminalUnreached => {
                write!(f, "the pinned terminal node was not reached")
            }
            PlanError::SingularTerminal => {
                write!(f, "every reachable terminal configuration is singular")
            }
            PlanError::InstanceTooLarge { paths } => {
                write!(
                    f,
                    "instance too large for exhaustive enumeration ({paths} paths)"
                )
            }
        }
    }
}

/// How stage 0 is seeded: every admissible node at zero cost, or a single
/// given configuration (hole-to-hole chaining).
#[derive(Debug, Clone, PartialEq)]
pub enum StartMode {
    Free,
    Fixed(JointConfig),
}

/// Terminal-node policy: the stiffest reachable node, or a pinned (column,
/// layer) used for baseline comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalRule {
    Stiffest,
    Pinned { column: u32, layer: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub start: StartMode,
    pub terminal: TerminalRule,
    pub eta: SVector<f64, 6>,
    /// Per-joint weights of the displacement cost (all ones by default).
    pub cost_weights: [f64; JOINT_COUNT],
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            start: StartMode::Free,
            terminal: TerminalRule::Stiffest,
            eta: crate::stiffness::default_eta(),
            cost_weights: [1.0; JOINT_COUNT],
        }
    }
}

/// A planned joint-space trajectory with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub trajectory: Vec<JointConfig>,
    /// Grid (column, layer) per stage; empty for plans not tied to a grid.
    pub node_path: Vec<(u32, u32)>,
    pub total_cost: f64,
    /// Per-transition local costs, one per stage starting at stage 1.
    pub stage_costs: Vec<f64>,
    pub terminal_mma: f64,
    /// Wall-clock planning duration; measured and filled in by the caller
    /// (this crate has no clock).
    pub planning_seconds: f64,
}

/// Sum of absolute joint displacements between consecutive configurations,
/// slide included (rad and m summed directly).
pub fn local_cost(q_curr: &JointConfig, q_prev: &JointConfig) -> f64 {
    local_cost_weighted(q_curr, q_prev, &[1.0; JOINT_COUNT])
}

pub fn local_cost_weighted(
    q_curr: &JointConfig,
    q_prev: &JointConfig,
    weights: &[f64; JOINT_COUNT],
) -> f64 {
    let mut acc = 0.0;
    for k in 0..JOINT_COUNT {
        acc += weights[k] * (q_curr.0[k] - q_prev.0[k]).abs();
    }
    acc
}

/// Builds the admissibility grid: runs the branch enumeration per (stage,
/// column), keeps candidates that are collision free and inside position
/// limits, and errors when some stage ends up with no feasible node at all.
pub fn build_grid(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    params: &GridParams,
) -> Result<DpGrid, PlanError> {
    if !(params.u_resolution > 0.0)
        || !(params.u_min < params.u_max)
        || params.u_min < model.slide_min() - 1e-12
        || params.u_max > model.slide_max() + 1e-12
    {
        return Err(PlanError::BadGridParams);
    }
    let n_cols = params.column_count();
    let u_values: Vec<f64> = (0..n_cols)
        .map(|j| params.u_min + j as f64 * params.u_resolution)
        .collect();
    let reps_bound = max_representatives(model);
    let n_layers = 8 * reps_bound;
    let n_stages = path.poses.len();

    let mut grid = DpGrid::new(n_stages, n_cols, n_layers, u_values, path.tau);
    for stage in 0..n_stages {
        let mut feasible_here = 0usize;
        for column in 0..n_cols {
            let u = grid.u_values[column];
            for branch in augmented_ik(model, &path.poses[stage], u) {
                let reps = representatives(model, &branch.q);
                if reps.is_empty() {
                    continue;
                }
                // All representatives share the branch's physical pose, so
                // one collision verdict covers them.
                if config_in_collision(model, scene, &branch.q).is_some() {
                    continue;
                }
                for (r, rep) in reps.into_iter().enumerate() {
                    let layer = branch.branch as usize * reps_bound + r;
                    grid.set_feasible(stage, column, layer, rep);
                    feasible_here += 1;
                }
            }
        }
        if feasible_here == 0 {
            return Err(PlanError::UnreachableStage { stage });
        }
    }
    Ok(grid)
}

/// Result slot of one target-node relaxation.
#[derive(Debug, Clone, Copy)]
pub struct RelaxSlot {
    pub cost: f64,
    pub pred: Option<(u32, u32)>,
}

/// Executes the per-stage relaxation over disjoint chunks of the slot
/// array. Implementations must invoke `work(offset, chunk)` exactly once
/// per slot overall; `work` is safe to call from multiple threads.
pub trait StageRunner {
    fn run(&self, slots: &mut [RelaxSlot], work: &(dyn Fn(usize, &mut [RelaxSlot]) + Sync));
}

/// Reference single-threaded runner.
pub struct SerialRunner;

impl StageRunner for SerialRunner {
    fn run(&self, slots: &mut [RelaxSlot], work: &(dyn Fn(usize, &mut [RelaxSlot]) + Sync)) {
        work(0, slots);
    }
}

struct SourceNode {
    column: u32,
    layer: u32,
    q: JointConfig,
    cost: f64,
}

struct TargetNode {
    column: u32,
    layer: u32,
    q: JointConfig,
}

/// Runs the forward pass, terminal selection and backward reconstruction on
/// a built grid. Cost and predecessor annotations are (re)written into the
/// grid, so exports after planning see the final state.
pub fn plan_on_grid(
    model: &RobotModel,
    grid: &mut DpGrid,
    options: &PlanOptions,
    runner: &dyn StageRunner,
) -> Result<PlanResult, PlanError> {
    if grid.n_stages == 0 {
        return Err(PlanError::NoFeasiblePath { stage: 0 });
    }
    grid.reset_annotations();
    seed_stage_zero(grid, &options.start)?;

    let slide_reach = model.qd_max[SLIDE_INDEX] * grid.tau;
    let window = slide_reach + 1e-9 * (1.0 + slide_reach);

    for stage in 0..grid.n_stages - 1 {
        let sources: Vec<SourceNode> = grid
            .stage_nodes(stage)
            .filter(|(_, _, n)| n.in_c)
            .map(|(j, g, n)| SourceNode {
                column: j as u32,
                layer: g as u32,
                q: n.q.unwrap(),
                cost: n.cost,
            })
            .collect();
        if sources.is_empty() {
            return Err(PlanError::NoFeasiblePath { stage });
        }
        let targets: Vec<TargetNode> = grid
            .stage_nodes(stage + 1)
            .filter(|(_, _, n)| n.feasible())
            .map(|(j, g, n)| TargetNode {
                column: j as u32,
                layer: g as u32,
                q: n.q.unwrap(),
            })
            .collect();
        if targets.is_empty() {
            return Err(PlanError::NoFeasiblePath { stage: stage + 1 });
        }

        let mut slots = vec![
            RelaxSlot {
                cost: f64::INFINITY,
                pred: None,
            };
            targets.len()
        ];
        let u_values = &grid.u_values;
        let tau = grid.tau;
        let weights = &options.cost_weights;
        let work = |offset: usize, chunk: &mut [RelaxSlot]| {
            for (local, slot) in chunk.iter_mut().enumerate() {
                let target = &targets[offset + local];
                let u_t = u_values[target.column as usize];
                // Sources are sorted by column; restrict the scan to the
                // columns the slide can reach in one interval. The window
                // is slightly widened, the exact velocity check decides.
                let lo = sources.partition_point(|s| u_values[s.column as usize] < u_t - window);
                let hi = sources.partition_point(|s| u_values[s.column as usize] <= u_t + window);
                for source in &sources[lo..hi] {
                    if !velocity_ok(model, &target.q, &source.q, tau) {
                        continue;
                    }
                    let cost = source.cost + local_cost_weighted(&target.q, &source.q, weights);
                    if cost < slot.cost {
                        slot.cost = cost;
                        slot.pred = Some((source.column, source.layer));
                    }
                }
            }
        };
        runner.run(&mut slots, &work);

        for (target, slot) in targets.iter().zip(slots.iter()) {
            let node = grid.node_mut(stage + 1, target.column as usize, target.layer as usize);
            node.cost = slot.cost;
            node.pred = slot.pred;
            node.in_c = slot.cost.is_finite();
        }
    }

    let last = grid.n_stages - 1;
    let terminal = select_terminal(model, grid, options, last)?;
    Ok(reconstruct(grid, options, terminal))
}

fn seed_stage_zero(grid: &mut DpGrid, start: &StartMode) -> Result<(), PlanError> {
    match start {
        StartMode::Free => {
            let mut any = false;
            for j in 0..grid.n_cols {
                for g in 0..grid.n_layers {
                    let node = grid.node_mut(0, j, g);
                    if node.feasible() {
                        node.cost = 0.0;
                        node.in_c = true;
                        any = true;
                    }
                }
            }
            if !any {
                return Err(PlanError::NoFeasiblePath { stage: 0 });
            }
            Ok(())
        }
        StartMode::Fixed(q0) => {
            let matched = grid
                .stage_nodes(0)
                .find(|(_, _, n)| n.q.is_some_and(|q| q.max_abs_diff(q0) <= INITIAL_MATCH_TOL))
                .map(|(j, g, _)| (j, g));
            match matched {
                Some((j, g)) => {
                    let node = grid.node_mut(0, j, g);
                    node.cost = 0.0;
                    node.in_c = true;
                    Ok(())
                }
                None => Err(PlanError::InitialConfigNotOnGrid),
            }
        }
    }
}

/// Joint-space tolerance for matching a fixed initial configuration to a
/// stage-0 node.
pub const INITIAL_MATCH_TOL: f64 = 1e-9;

fn select_terminal(
    model: &RobotModel,
    grid: &DpGrid,
    options: &PlanOptions,
    last: usize,
) -> Result<((u32, u32), f64), PlanError> {
    let reached: Vec<(usize, usize, JointConfig)> = grid
        .stage_nodes(last)
        .filter(|(_, _, n)| n.in_c)
        .map(|(j, g, n)| (j, g, n.q.unwrap()))
        .collect();
    if reached.is_empty() {
        return Err(PlanError::NoFeasiblePath { stage: last });
    }
    match options.terminal {
        TerminalRule::Stiffest => {
            let mut best: Option<((u32, u32), f64)> = None;
            for (j, g, q) in &reached {
                let Ok(value) = mma(model, q, &options.eta) else {
                    continue;
                };
                if best.is_none_or(|(_, b)| value > b) {
                    best = Some(((*j as u32, *g as u32), value));
                }
            }
            best.ok_or(PlanError::SingularTerminal)
        }
        TerminalRule::Pinned { column, layer } => {
            let hit = reached
                .iter()
                .find(|(j, g, _)| *j as u32 == column && *g as u32 == layer)
                .ok_or(PlanError::PinnedTerminalUnreached)?;
            let value =
                mma(model, &hit.2, &options.eta).map_err(|_| PlanError::SingularTerminal)?;
            Ok(((column, layer), value))
        }
    }
}

fn reconstruct(grid: &DpGrid, options: &PlanOptions, terminal: ((u32, u32), f64)) -> PlanResult {
    let ((tj, tg), terminal_mma) = terminal;
    let n = grid.n_stages;
    let mut node_path = vec![(0u32, 0u32); n];
    node_path[n - 1] = (tj, tg);
    for stage in (1..n).rev() {
        let (j, g) = node_path[stage];
        let pred = grid
            .node(stage, j as usize, g as usize)
            .pred
            .expect("reached node at stage >= 1 must have a predecessor");
        node_path[stage - 1] = pred;
    }
    let trajectory: Vec<JointConfig> = node_path
        .iter()
        .enumerate()
        .map(|(stage, (j, g))| grid.node(stage, *j as usize, *g as usize).q.unwrap())
        .collect();
    let stage_costs: Vec<f64> = trajectory
        .windows(2)
        .map(|w| local_cost_weighted(&w[1], &w[0], &options.cost_weights))
        .collect();
    let total_cost = grid.node(n - 1, tj as usize, tg as usize).cost;
    PlanResult {
        trajectory,
        node_path,
        total_cost,
        stage_costs,
        terminal_mma,
        planning_seconds: 0.0,
    }
}

/// Builds the grid and plans on it with the reference serial runner.
pub fn plan(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    params: &GridParams,
    options: &PlanOptions,
) -> Result<(PlanResult, DpGrid), PlanError> {
    let mut grid = build_grid(model, scene, path, params)?;
    let result = plan_on_grid(model, &mut grid, options, &SerialRunner)?;
    Ok((result, grid))
}

/// Exhaustive-enumeration reference planner for small instances.
///
/// Enumerates every stage-wise sequence of feasible nodes, keeps the
/// velocity-feasible ones, selects the stiffest reached terminal and, among
/// the minimum-cost paths to it, the one matching the dynamic program's
/// deterministic tie-break (lowest (column, layer) read backwards from the
/// last stage).
pub fn brute_force_on_grid(
    model: &RobotModel,
    grid: &DpGrid,
    options: &PlanOptions,
) -> Result<PlanResult, PlanError> {
    let n = grid.n_stages;
    let mut candidates: Vec<Vec<(u32, u32, JointConfig)>> = Vec::with_capacity(n);
    for stage in 0..n {
        let mut list: Vec<(u32, u32, JointConfig)> = grid
            .stage_nodes(stage)
            .filter(|(_, _, node)| node.feasible())
            .map(|(j, g, node)| (j as u32, g as u32, node.q.unwrap()))
            .collect();
        if stage == 0 {
            if let StartMode::Fixed(q0) = &options.start {
                list.retain(|(_, _, q)| q.max_abs_diff(q0) <= INITIAL_MATCH_TOL);
                if list.is_empty() {
                    return Err(PlanError::InitialConfigNotOnGrid);
                }
            }
        }
        if list.is_empty() {
            return Err(PlanError::NoFeasiblePath { stage });
        }
        candidates.push(list);
    }

    let path_bound: u128 = candidates.iter().map(|c| c.len() as u128).product();
    if path_bound > BRUTE_FORCE_GUARD {
        return Err(PlanError::InstanceTooLarge { paths: path_bound });
    }

    struct BestPath {
        cost: f64,
        nodes: Vec<(u32, u32)>,
        qs: Vec<JointConfig>,
    }
    let mut per_terminal: BTreeMap<(u32, u32), BestPath> = BTreeMap::new();

    // Iterative product enumeration, lexicographic in stage order.
    let mut stack_nodes: Vec<(u32, u32)> = Vec::with_capacity(n);
    let mut stack_qs: Vec<JointConfig> = Vec::with_capacity(n);
    let mut stack_costs: Vec<f64> = Vec::with_capacity(n);

    fn backward_lex_less(a: &[(u32, u32)], b: &[(u32, u32)]) -> bool {
        for (x, y) in a.iter().rev().skip(1).zip(b.iter().rev().skip(1)) {
            if x != y {
                return x < y;
            }
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        model: &RobotModel,
        grid: &DpGrid,
        options: &PlanOptions,
        candidates: &[Vec<(u32, u32, JointConfig)>],
        stage: usize,
        stack_nodes: &mut Vec<(u32, u32)>,
        stack_qs: &mut Vec<JointConfig>,
        stack_costs: &mut Vec<f64>,
        per_terminal: &mut BTreeMap<(u32, u32), BestPath>,
    ) {
        let n = candidates.len();
        if stage == n {
            let terminal = *stack_nodes.last().unwrap();
            let cost = *stack_costs.last().unwrap();
            let replace = match per_terminal.get(&terminal) {
                None => true,
                Some(best) => {
                    cost < best.cost
                        || (cost == best.cost && backward_lex_less(stack_nodes, &best.nodes))
                }
            };
            if replace {
                per_terminal.insert(
                    terminal,
                    BestPath {
                        cost,
                        nodes: stack_nodes.clone(),
                        qs: stack_qs.clone(),
                    },
                );
            }
            return;
        }
        for (j, g, q) in &candidates[stage] {
            let step_cost = if stage == 0 {
                0.0
            } else {
                let prev = stack_qs.last().unwrap();
                if !velocity_ok(model, q, prev, grid.tau) {
                    continue;
                }
                local_cost_weighted(q, prev, &options.cost_weights)
            };
            let cost = stack_costs.last().copied().unwrap_or(0.0) + step_cost;
            stack_nodes.push((*j, *g));
            stack_qs.push(*q);
            stack_costs.push(cost);
            descend(
                model,
                grid,
                options,
                candidates,
                stage + 1,
                stack_nodes,
                stack_qs,
                stack_costs,
                per_terminal,
            );
            stack_nodes.pop();
            stack_qs.pop();
            stack_costs.pop();
        }
    }

    descend(
        model,
        grid,
        options,
        &candidates,
        0,
        &mut stack_nodes,
        &mut stack_qs,
        &mut stack_costs,
        &mut per_terminal,
    );

    if per_terminal.is_empty() {
        return Err(PlanError::NoFeasiblePath { stage: n - 1 });
    }

    let chosen: ((u32, u32), f64) = match options.terminal {
        TerminalRule::Stiffest => {
            let mut best: Option<((u32, u32), f64)> = None;
            for (terminal, path) in &per_terminal {
                let Ok(value) = mma(model, path.qs.last().unwrap(), &options.eta) else {
                    continue;
                };
                if best.is_none_or(|(_, b)| value > b) {
                    best = Some((*terminal, value));
                }
            }
            best.ok_or(PlanError::SingularTerminal)?
        }
        TerminalRule::Pinned { column, layer } => {
            let key = (column, layer);
            let path = per_terminal
                .get(&key)
                .ok_or(PlanError::PinnedTerminalUnreached)?;
            let value = mma(model, path.qs.last().unwrap(), &options.eta)
                .map_err(|_| PlanError::SingularTerminal)?;
            (key, value)
        }
    };

    let best = per_terminal.remove(&chosen.0).unwrap();
    let stage_costs: Vec<f64> = best
        .qs
        .windows(2)
        .map(|w| local_cost_weighted(&w[1], &w[0], &options.cost_weights))
        .collect();
    Ok(PlanResult {
        trajectory: best.qs,
        node_path: best.nodes,
        total_cost: best.cost,
        stage_costs,
        terminal_mma: chosen.1,
        planning_seconds: 0.0,
    })
}

/// Upper bound on enumerated paths for [`brute_force_on_grid`].
pub const BRUTE_FORCE_GUARD: u128 = 1_000_000;

/// Runs the redundancy-rank check over every feasible node of a built grid.
pub fn grid_rank_report(model: &RobotModel, grid: &DpGrid) -> crate::ik::RepresentativenessReport {
    crate::ik::check_representativeness(
        model,
        grid.iter_nodes()
            .filter_map(|(i, j, g, n)| n.q.map(|q| (i, j, g, q))),
    )
}

/// Builds the grid and runs the exhaustive reference planner.
pub fn brute_force_plan(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    params: &GridParams,
    options: &PlanOptions,
) -> Result<(PlanResult, DpGrid), PlanError> {
    let grid = build_grid(model, scene, path, params)?;
    let result = brute_force_on_grid(model, &grid, options)?;
    Ok((result, grid))
}

/// One node whose stored cost disagrees with the recomputed relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellmanViolation {
    pub stage: usize,
    pub column: usize,
    pub layer: usize,
    pub stored: f64,
    pub recomputed: f64,
}

/// Post-pass consistency sweep: every reached node at stage >= 1 must store
/// exactly the minimum over velocity-feasible reached predecessors of
/// predecessor cost plus local cost, and stage-0 reached nodes must store
/// zero. Returns the violations (empty on a healthy grid).
pub fn verify_bellman(
    model: &RobotModel,
    grid: &DpGrid,
    weights: &[f64; JOINT_COUNT],
) -> Vec<BellmanViolation> {
    let mut violations = Vec::new();
    for (j, g, node) in grid.stage_nodes(0) {
        if node.in_c && node.cost != 0.0 {
            violations.push(BellmanViolation {
                stage: 0,
                column: j,
                layer: g,
                stored: node.cost,
                recomputed: 0.0,
            });
        }
    }
    for stage in 1..grid.n_stages {
        let sources: Vec<(JointConfig, f64)> = grid
            .stage_nodes(stage - 1)
            .filter(|(_, _, n)| n.in_c)
            .map(|(_, _, n)| (n.q.unwrap(), n.cost))
            .collect();
        for (j, g, node) in grid.stage_nodes(stage) {
            if !node.in_c {
                continue;
            }
            let q = node.q.unwrap();
            let mut best = f64::INFINITY;
            for (sq, scost) in &sources {
                if velocity_ok(model, &q, sq, grid.tau) {
                    let c = scost + local_cost_weighted(&q, sq, weights);
                    if c < best {
                        best = c;
                    }
                }
            }
            if best != node.cost {
                violations.push(BellmanViolation {
                    stage,
                    column: j,
                    layer: g,
                    stored: node.cost,
                    recomputed: best,
                });
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward_kinematics;
    use crate::kinematics::test_rng::Rng;
    use crate::presets::default_model;
    use alloc::vec::Vec;

    #[test]
    fn local_cost_direct_cases() {
        let a = JointConfig([0.1, -0.2, 0.0, 0.0, 0.0, 0.0, 0.05]);
        let zero = JointConfig::zeros();
        assert!((local_cost(&a, &zero) - 0.35).abs() < 1e-15);
        assert_eq!(local_cost(&zero, &zero), 0.0);
    }

    #[test]
    fn local_cost_metric_properties() {
        let mut rng = Rng::new(0x5eed_0050);
        for _ in 0..300 {
            let mut randq = || {
                let mut q = [0.0; 7];
                for v in &mut q {
                    *v = rng.range(-2.0, 2.0);
                }
                JointConfig(q)
            };
            let (a, b, c) = (randq(), randq(), randq());
            let ab = local_cost(&a, &b);
            assert!(ab >= 0.0);
            assert_eq!(ab, local_cost(&b, &a));
            assert!(local_cost(&a, &c) <= ab + local_cost(&b, &c) + 1e-12);
        }
    }

    #[test]
    fn column_count_matches_span_over_resolution() {
        let params = GridParams {
            u_min: -2.1,
            u_max: 2.1,
            u_resolution: 0.0132,
        };
        // floor(4.2 / 0.0132) = 318 intervals, 319 samples.
        assert_eq!(params.column_count(), 319);
    }

    /// Synthetic instance: hand-authored feasibility and joint values on a
    /// small grid, paired with a model whose velocity limits prune some
    /// transitions.
    fn synthetic_instance(rng: &mut Rng) -> (RobotModel, DpGrid, PlanOptions) {
        let mut model = default_model();
        for k in 0..JOINT_COUNT {
            model.qd_max[k] = rng.range(0.25, 1.2);
        }
        let n_stages = 2 + rng.below(4); // 2..=5 samples, N_i <= 4
        let n_cols = 1 + rng.below(6);
        let n_layers = 1 + rng.below(2);
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
            let first = grid
                .stage_nodes(0)
                .find(|(_, _, n)| n.feasible())
                .map(|(_, _, n)| n.q.unwrap());
            match first {
                Some(q) => StartMode::Fixed(q),
                None => StartMode::Free,
            }
        };
        let options = PlanOptions {
            start,
            ..PlanOptions::default()
        };
        (model, grid, options)
    }

    #[test]
    fn dp_matches_brute_force_on_synthetic_instances() {
        let mut rng = Rng::new(0x5eed_0051);
        let mut compared = 0;
        let mut feasible = 0;
        while compared < 60 {
            let (model, mut grid, options) = synthetic_instance(&mut rng);
            let dp = plan_on_grid(&model, &mut grid, &options, &SerialRunner);
            let brute = brute_force_on_grid(&model, &grid, &options);
            compared += 1;
            match (dp, brute) {
                (Ok(a), Ok(b)) => {
                    feasible += 1;
                    assert_eq!(a.node_path.last(), b.node_path.last(), "terminal node");
                    assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits(), "cost");
                    assert_eq!(a.node_path, b.node_path, "trajectory");
                    assert_eq!(a.terminal_mma.to_bits(), b.terminal_mma.to_bits());
                }
                (Err(ea), Err(eb)) => {
                    assert_eq!(
                        core::mem::discriminant(&ea),
                        core::mem::discriminant(&eb),
                        "{ea:?} vs {eb:?}"
                    );
                }
                (a, b) => panic!("dp/brute disagree on feasibility: {a:?} vs {b:?}"),
            }
        }
        assert!(feasible >= 30, "too few feasible instances: {feasible}");
    }

    #[test]
    fn widening_velocity_limits_never_raises_the_cost() {
        let mut rng = Rng::new(0x5eed_0052);
        let mut checked = 0;
        while checked < 30 {
            let (mut model, mut grid, mut options) = synthetic_instance(&mut rng);
            // Compare same terminal to isolate the cost effect.
            let Ok(tight) = plan_on_grid(&model, &mut grid, &options, &SerialRunner) else {
                continue;
            };
            let terminal = *tight.node_path.last().unwrap();
            options.terminal = TerminalRule::Pinned {
                column: terminal.0,
                layer: terminal.1,
            };
            for k in 0..JOINT_COUNT {
                model.qd_max[k] *= 2.0;
            }
            let wide = plan_on_grid(&model, &mut grid, &options, &SerialRunner)
                .expect("wider limits keep the instance feasible");
            assert!(wide.total_cost <= tight.total_cost);
            checked += 1;
        }
    }

    #[test]
    fn constant_pose_path_with_fixed_start_has_zero_cost() {
        let model = default_model();
        let q_ref = JointConfig([0.1, 0.5, -0.4, 0.3, -0.9, 0.2, 0.0]);
        let pose = forward_kinematics(&model, &q_ref);
        let path = TaskPath::new(alloc::vec![pose; 4], 0.55).unwrap();
        let params = GridParams {
            u_min: -0.05,
            u_max: 0.05,
            u_resolution: 0.05,
        };
        let scene = crate::collision::Scene::empty();
        let mut grid = build_grid(&model, &scene, &path, &params).unwrap();

        // Staying put costs zero: with the terminal held at the start node
        // the optimum is the constant trajectory.
        let start_node = grid
            .stage_nodes(0)
            .find(|(_, _, n)| n.q.is_some_and(|q| q.max_abs_diff(&q_ref) <= 1e-9))
            .map(|(j, g, _)| (j as u32, g as u32))
            .expect("reference configuration must appear on the grid");
        let pinned = PlanOptions {
            start: StartMode::Fixed(q_ref),
            terminal: TerminalRule::Pinned {
                column: start_node.0,
                layer: start_node.1,
            },
            ..PlanOptions::default()
        };
        let result = plan_on_grid(&model, &mut grid, &pinned, &SerialRunner).unwrap();
        assert_eq!(result.total_cost, 0.0);
        for q in &result.trajectory {
            assert!(q.max_abs_diff(&q_ref) <= 1e-9);
        }
        assert!(verify_bellman(&model, &grid, &pinned.cost_weights).is_empty());
        // psi(q(0)) = 0: every reached stage-0 node carries zero cost.
        for (_, _, node) in grid.stage_nodes(0) {
            if node.in_c {
                assert_eq!(node.cost, 0.0);
            }
        }

        // Under the stiffness rule the terminal maximizes the mechanical
        // advantage over everything reachable, which may cost displacement;
        // the reconstruction still tracks the constant pose.
        let stiffest = PlanOptions {
            start: StartMode::Fixed(q_ref),
            ..PlanOptions::default()
        };
        let result = plan_on_grid(&model, &mut grid, &stiffest, &SerialRunner).unwrap();
        for q in &result.trajectory {
            let fk = forward_kinematics(&model, q);
            assert!(fk.position_error(&pose) <= 1e-9);
            assert!(fk.rotation_error(&pose) <= 1e-9);
        }
        assert!(
            result.terminal_mma
                >= crate::stiffness::mma(&model, &q_ref, &stiffest.eta).unwrap() - 1e-12
        );
    }

    #[test]
    fn single_stage_instance_reduces_to_stiffest_pick() {
        let mut rng = Rng::new(0x5eed_0053);
        let (model, mut grid, _) = synthetic_instance(&mut rng);
        let mut single = DpGrid::new(1, grid.n_cols, grid.n_layers, grid.u_values.clone(), 1.0);
        for (j, g, node) in grid.stage_nodes(0) {
            if let Some(q) = node.q {
                single.set_feasible(0, j, g, q);
            }
        }
        if single.stage_nodes(0).all(|(_, _, n)| !n.feasible()) {
            return;
        }
        let options = PlanOptions::default();
        let result = plan_on_grid(&model, &mut single, &options, &SerialRunner).unwrap();
        assert_eq!(result.total_cost, 0.0);
        assert_eq!(result.trajectory.len(), 1);
        let brute = brute_force_on_grid(&model, &single, &options).unwrap();
        assert_eq!(result.node_path, brute.node_path);
        let _ = plan_on_grid(&model, &mut grid, &options, &SerialRunner);
    }

    #[test]
    fn infeasible_instances_error_on_both_routes() {
        let model = default_model();
        // Two stages, one node each, a transition the velocity limits forbid.
        let mut grid = DpGrid::new(2, 1, 1, alloc::vec![0.0], 0.01);
        grid.set_feasible(0, 0, 0, JointConfig::zeros());
        let mut far = JointConfig::zeros();
        far.0[0] = 3.0; // 300 rad/s over tau = 0.01
        far.0[SLIDE_INDEX] = 0.0;
        grid.set_feasible(1, 0, 0, far);
        let options = PlanOptions::default();
        let dp = plan_on_grid(&model, &mut grid, &options, &SerialRunner);
        let brute = brute_force_on_grid(&model, &grid, &options);
        assert!(matches!(dp, Err(PlanError::NoFeasiblePath { .. })));
        assert!(matches!(brute, Err(PlanError::NoFeasiblePath { .. })));
    }

    #[test]
    fn brute_force_guard_trips_on_large_products() {
        let model = default_model();
        let n_cols = 40;
        let u_values: Vec<f64> = (0..n_cols).map(|j| j as f64 * 0.01).collect();
        let mut grid = DpGrid::new(4, n_cols, 2, u_values, 1.0);
        for i in 0..4 {
            for j in 0..n_cols {
                for g in 0..2 {
                    let mut q = [0.0; 7];
                    q[SLIDE_INDEX] = grid.u_values[j];
                    q[0] = (i + j + g) as f64 * 1e-3;
                    grid.set_feasible(i, j, g, JointConfig(q));
                }
            }
        }
        let err = brute_force_on_grid(&model, &grid, &PlanOptions::default()).unwrap_err();
        assert!(matches!(err, PlanError::InstanceTooLarge { .. }));
    }

    #[test]
    fn tampered_costs_fail_the_bellman_sweep() {
        let mut rng = Rng::new(0x5eed_0054);
        loop {
            let (model, mut grid, options) = synthetic_instance(&mut rng);
            if plan_on_grid(&model, &mut grid, &options, &SerialRunner).is_err() {
                continue;
            }
            assert!(verify_bellman(&model, &grid, &options.cost_weights).is_empty());
            // Corrupt a reached node at the last stage: no successors, so
            // exactly one violation results.
            let stage = grid.n_stages - 1;
            let (j, g) = grid
                .stage_nodes(stage)
                .find(|(_, _, n)| n.in_c)
                .map(|(j, g, _)| (j, g))
                .unwrap();
            grid.node_mut(stage, j, g).cost += 0.125;
            let violations = verify_bellman(&model, &grid, &options.cost_weights);
            assert_eq!(violations.len(), 1);
            assert_eq!(
                (
                    violations[0].stage,
                    violations[0].column,
                    violations[0].layer
                ),
                (stage, j, g)
            );
            break;
        }
    }
}

//! Stage-parallel execution and wall-clock measurement.
//!
//! Worker count never changes results: each relaxation slot is computed
//! independently from the frozen previous stage, so chunking the slot array
//! across scoped threads is bitwise equivalent to the serial pass.

use std::time::Instant;

use redunplan_core::collision::Scene;
use redunplan_core::dp::{
    build_grid, plan_on_grid, DpGrid, GridParams, PlanError, PlanOptions, PlanResult, RelaxSlot,
    StageRunner,
};
use redunplan_core::model::{RobotModel, TaskPath};

/// Splits each stage's relaxation across `threads` scoped workers.
pub struct ThreadedRunner {
    pub threads: usize,
}

impl StageRunner for ThreadedRunner {
    fn run(&self, slots: &mut [RelaxSlot], work: &(dyn Fn(usize, &mut [RelaxSlot]) + Sync)) {
        let workers = self.threads.max(1).min(slots.len().max(1));
        if workers <= 1 {
            work(0, slots);
            return;
        }
        let chunk = slots.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let mut offset = 0;
            for piece in slots.chunks_mut(chunk) {
                let len = piece.len();
                let start = offset;
                offset += len;
                scope.spawn(move || work(start, piece));
            }
        });
    }
}

/// Builds the grid and plans, measuring the wall-clock duration of the
/// whole pipeline into `planning_seconds`.
pub fn plan_timed(
    model: &RobotModel,
    scene: &Scene,
    path: &TaskPath,
    params: &GridParams,
    options: &PlanOptions,
    runner: &dyn StageRunner,
) -> Result<(PlanResult, DpGrid), PlanError> {
    let clock = Instant::now();
    let mut grid = build_grid(model, scene, path, params)?;
    let mut result = plan_on_grid(model, &mut grid, options, runner)?;
    result.planning_seconds = clock.elapsed().as_secs_f64();
    Ok((result, grid))
}

/// Resolves the worker count: explicit flag, then the REDUNPLAN_THREADS
/// environment variable, then single-threaded reference mode.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("REDUNPLAN_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    })
    .unwrap_or(1)
    .max(1)
}

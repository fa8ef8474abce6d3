//! End-to-end tests of the `redunplan` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_redunplan"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data(name: &str) -> String {
    repo_root().join("data").join(name).display().to_string()
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("redunplan_cli_{name}"));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary must run")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// A slow two-hole vertical task the fixed-slide baseline can follow.
fn write_vertical_task(dir: &Path) -> String {
    fs::create_dir_all(dir).unwrap();
    let path = dir.join("vertical_task.json");
    let text = r#"{
  "holes": [
    { "p": [1.39, 0.0, 0.95], "R": [[0.0,0.0,1.0],[0.0,1.0,0.0],[-1.0,0.0,0.0]] },
    { "p": [1.39, 0.0, 1.2385], "R": [[0.0,0.0,1.0],[0.0,1.0,0.0],[-1.0,0.0,0.0]] }
  ],
  "legs": [ { "from": 0, "to": 1, "N_i": 10, "T": 8.0 } ],
  "mode": "free-initial"
}
"#;
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn plan_runs_the_four_leg_task_end_to_end() {
    let out = fresh_dir("plan4");
    let output = run(bin()
        .args(["plan", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &data("four_leg_task.json")])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);

    for leg in 0..4 {
        assert!(out.join(format!("leg_{leg:02}_trajectory.csv")).is_file());
        assert!(out.join(format!("leg_{leg:02}_ellipsoid.json")).is_file());
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let legs = report["legs"].as_array().unwrap();
    assert_eq!(legs.len(), 4);
    for leg in legs {
        assert_eq!(leg["audit_violations"], 0);
        assert_eq!(leg["representativeness_violations"], 0);
        assert!(leg["within_budget"].as_bool().unwrap());
        assert!(leg["terminal_mma"].as_f64().unwrap() > 0.0);
    }
    // Atomic writes leave no temporaries behind.
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(!name.to_string_lossy().ends_with(".tmp"), "{name:?}");
    }
}

#[test]
fn malformed_robot_file_exits_bad_config_without_outputs() {
    let out = fresh_dir("badcfg");
    let broken = std::env::temp_dir().join("redunplan_cli_broken_robot.json");
    fs::write(
        &broken,
        "{ \"rail\": { \"axis\": [0, 1

",
    ) // truncated on purpose
    .unwrap();
    let output = run(bin()
        .args(["plan", "--robot", &broken.display().to_string()])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &data("four_leg_task.json")])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 2);
    assert!(!out.exists(), "no partial outputs on bad configuration");
}

#[test]
fn single_column_grid_still_plans_when_reachable() {
    let tmp = fresh_dir("singlecol");
    let task = write_vertical_task(&tmp);
    let out = tmp.join("out");
    // A resolution larger than the span collapses the grid to one column.
    let output = run(bin()
        .args(["plan", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &task])
        .args(["--u-res", "10", "--u-min", "-0.2", "--u-max", "0.2"])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);
    assert!(out.join("leg_00_trajectory.csv").is_file());
}

#[test]
fn check_accepts_fresh_output_and_flags_tampering() {
    let tmp = fresh_dir("check");
    let task = write_vertical_task(&tmp);
    let out = tmp.join("out");
    let output = run(bin()
        .args(["plan", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &task])
        .args(["--u-min", "-0.3", "--u-max", "0.3", "--export-grid"])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);

    let traj = out.join("leg_00_trajectory.csv");
    let grid = out.join("leg_00_grid.csv");
    fn check_args<'a>(cmd: &'a mut Command, task: &str) -> &'a mut Command {
        cmd.args(["check", "--robot", &data("default_robot.json")])
            .args(["--scene", &data("panel_scene.json")])
            .args(["--task", task])
            .args(["--leg", "0"])
    }

    // Fresh output audits clean, with and without the grid.
    let output =
        run(check_args(&mut bin(), &task).args(["--trajectory", &traj.display().to_string()]));
    assert_exit(&output, 0);
    let output = run(check_args(&mut bin(), &task)
        .args(["--trajectory", &traj.display().to_string()])
        .args(["--grid-csv", &grid.display().to_string()]));
    assert_exit(&output, 0);

    // Clamp one joint past its limit: the audit must flag it.
    let text = fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut fields: Vec<String> = lines[3].split(',').map(str::to_string).collect();
    fields[2] = "9.9e0".to_string();
    lines[3] = fields.join(",");
    let tampered = tmp.join("tampered.csv");
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let output =
        run(check_args(&mut bin(), &task).args(["--trajectory", &tampered.display().to_string()]));
    assert_exit(&output, 5);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("position limit on q2"), "stderr: {stderr}");

    // Corrupt one stored cost in the grid: the consistency sweep trips.
    let text = fs::read_to_string(&grid).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let victim = lines
        .iter()
        .position(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f.len() == 16 && f[0] != "i" && f[12] == "1" && f[0] != "0" && f[13] != "inf"
        })
        .expect("grid has a reached node past stage 0");
    let mut fields: Vec<String> = lines[victim].split(',').map(str::to_string).collect();
    fields[13] = "1.25e2".to_string();
    lines[victim] = fields.join(",");
    let tampered_grid = tmp.join("tampered_grid.csv");
    fs::write(&tampered_grid, lines.join("\n") + "\n").unwrap();
    let output = run(check_args(&mut bin(), &task)
        .args(["--trajectory", &traj.display().to_string()])
        .args(["--grid-csv", &tampered_grid.display().to_string()]));
    assert_exit(&output, 5);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("stores cost"), "stderr: {stderr}");
}

#[test]
fn compare_reports_vertical_parity_and_lateral_infeasibility() {
    let tmp = fresh_dir("compare");
    let task = write_vertical_task(&tmp);
    let out = tmp.join("out");
    let output = run(bin()
        .args(["compare", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &task])
        .args(["--fixed-slide", "0.0"])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    let leg = &report["legs"][0];
    assert_eq!(leg["moving_slide"]["feasible"], true);
    assert_eq!(leg["fixed_slide"]["feasible"], true);
    assert!(report["comparable_legs"].as_u64().unwrap() == 1);

    // Lateral motion: the fixed-slide row is infeasible, the run still
    // succeeds and reports it.
    let out2 = tmp.join("out_lateral");
    let output = run(bin()
        .args(["compare", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &data("lateral_task.json")])
        .args(["--fixed-slide", "0.0"])
        .args(["--out-dir", &out2.display().to_string()]));
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out2.join("compare.json")).unwrap()).unwrap();
    let leg = &report["legs"][0];
    assert_eq!(leg["moving_slide"]["feasible"], true);
    assert_eq!(leg["fixed_slide"]["feasible"], false);
    assert!(leg["fixed_slide"]["note"]
        .as_str()
        .unwrap()
        .contains("workspace"));
}

#[test]
fn compare_on_a_degenerate_leg_costs_nothing_for_both() {
    let tmp = fresh_dir("degenerate");
    fs::create_dir_all(&tmp).unwrap();
    let task = tmp.join("task.json");
    fs::write(
        &task,
        r#"{
  "holes": [ { "p": [1.39, 0.0, 1.1], "R": [[0.0,0.0,1.0],[0.0,1.0,0.0],[-1.0,0.0,0.0]] } ],
  "legs": [ { "from": 0, "to": 0, "N_i": 1, "T": 1.0 } ],
  "mode": "free-initial"
}
"#,
    )
    .unwrap();
    let out = tmp.join("out");
    let output = run(bin()
        .args(["compare", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &task.display().to_string()])
        .args(["--fixed-slide", "0.0"])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    let leg = &report["legs"][0];
    assert_eq!(leg["moving_slide"]["total_cost"], 0.0);
    assert_eq!(leg["fixed_slide"]["total_cost"], 0.0);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = fresh_dir("determinism");
    let task = write_vertical_task(&tmp);
    let mut artifacts: Vec<Vec<u8>> = Vec::new();
    for (label, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.join(format!("out_{label}"));
        let output = run(bin()
            .args(["plan", "--robot", &data("default_robot.json")])
            .args(["--scene", &data("panel_scene.json")])
            .args(["--task", &task])
            .args(["--u-min", "-0.3", "--u-max", "0.3"])
            .args(["--threads", threads])
            .args(["--out-dir", &out.display().to_string()]));
        assert_exit(&output, 0);
        artifacts.push(fs::read(out.join("leg_00_trajectory.csv")).unwrap());
    }
    assert_eq!(artifacts[0], artifacts[1]);
    assert_eq!(artifacts[0], artifacts[2]);
}

#[test]
fn export_grid_writes_csv_and_rasters() {
    let tmp = fresh_dir("exportgrid");
    let task = write_vertical_task(&tmp);
    let out = tmp.join("out");
    let output = run(bin()
        .args(["export-grid", "--robot", &data("default_robot.json")])
        .args(["--scene", &data("panel_scene.json")])
        .args(["--task", &task])
        .args(["--u-min", "-0.2", "--u-max", "0.2", "--u-res", "0.1"])
        .args(["--out-dir", &out.display().to_string()]));
    assert_exit(&output, 0);
    assert!(out.join("leg_00_grid.csv").is_file());
    let rasters = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".ppm")
        })
        .count();
    assert!(rasters > 0);
    // P6 header sanity on the first raster.
    let ppm = fs::read(out.join("leg_00_layer_000.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n"));
}

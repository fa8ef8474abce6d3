//! Artifact writers and readers: trajectory CSV, grid CSV, null-space
//! rasters. All writes go through a write-then-rename so a failed run never
//! leaves truncated files behind.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use redunplan_core::dp::{DpGrid, PlanResult};
use redunplan_core::model::JointConfig;

/// Writes `bytes` atomically: to `<path>.tmp` first, then renamed over the
/// destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// 17-significant-digit decimal, enough to reproduce the f64 bit pattern on
/// re-parse.
fn full_precision(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

// ------------------------------------------------------- trajectory CSV --

/// Renders a trajectory as CSV: header `t,q1..q7`, one row per waypoint,
/// timestamps at multiples of `tau`.
pub fn trajectory_csv(result: &PlanResult, tau: f64) -> String {
    let mut out = String::from("t,q1,q2,q3,q4,q5,q6,q7\n");
    for (i, q) in result.trajectory.iter().enumerate() {
        let t = i as f64 * tau;
        let _ = write!(out, "{}", full_precision(t));
        for k in 0..7 {
            let _ = write!(out, ",{}", full_precision(q.0[k]));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_field(line: usize, field: &str) -> Result<f64, CsvError> {
    field.trim().parse::<f64>().map_err(|e| CsvError::Parse {
        line,
        message: format!("bad number {field:?}: {e}"),
    })
}

/// Reads a trajectory CSV back into (t, q) rows.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<(f64, JointConfig)>, CsvError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if index == 0 {
            if line.trim() != "t,q1,q2,q3,q4,q5,q6,q7" {
                return Err(CsvError::Parse {
                    line: 1,
                    message: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CsvError::Parse {
                line: index + 1,
                message: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let t = parse_field(index + 1, fields[0])?;
        let mut q = [0.0; 7];
        for k in 0..7 {
            q[k] = parse_field(index + 1, fields[k + 1])?;
        }
        rows.push((t, JointConfig(q)));
    }
    Ok(rows)
}

// ------------------------------------------------------------- grid CSV --

pub const GRID_CSV_HEADER: &str = "i,j,g,u,q1,q2,q3,q4,q5,q6,q7,feasible,in_C,cost,pred_j,pred_g";

/// Renders the whole grid as CSV. Infeasible cells keep empty joint fields;
/// unreached costs print as `inf`; missing predecessors as -1.
pub fn grid_csv(grid: &DpGrid) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for (i, j, g, node) in grid.iter_nodes() {
        let _ = write!(out, "{i},{j},{g},{}", full_precision(grid.u_values[j]));
        match node.q {
            Some(q) => {
                for k in 0..7 {
                    let _ = write!(out, ",{}", full_precision(q.0[k]));
                }
            }
            None => out.push_str(",,,,,,,"),
        }
        let (pred_j, pred_g) = match node.pred {
            Some((pj, pg)) => (pj as i64, pg as i64),
            None => (-1, -1),
        };
        let _ = writeln!(
            out,
            ",{},{},{},{pred_j},{pred_g}",
            node.feasible() as u8,
            node.in_c as u8,
            full_precision(node.cost),
        );
    }
    out
}

/// Reads a grid CSV back into a [`DpGrid`]. `tau` is not stored in the file
/// and must be supplied by the caller (it is fixed by the task leg).
pub fn read_grid_csv(path: &Path, tau: f64) -> Result<DpGrid, CsvError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == GRID_CSV_HEADER => {}
        other => {
            return Err(CsvError::Parse {
                line: 1,
                message: format!("unexpected header {other:?}"),
            })
        }
    }

    struct Row {
        i: usize,
        j: usize,
        g: usize,
        u: f64,
        q: Option<JointConfig>,
        in_c: bool,
        cost: f64,
        pred: Option<(u32, u32)>,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(CsvError::Parse {
                line: index + 1,
                message: format!("expected 16 fields, got {}", fields.len()),
            });
        }
        let int = |f: &str| -> Result<i64, CsvError> {
            f.trim().parse::<i64>().map_err(|e| CsvError::Parse {
                line: index + 1,
                message: format!("bad integer {f:?}: {e}"),
            })
        };
        let i = int(fields[0])? as usize;
        let j = int(fields[1])? as usize;
        let g = int(fields[2])? as usize;
        let u = parse_field(index + 1, fields[3])?;
        let feasible = int(fields[11])? != 0;
        let q = if feasible {
            let mut q = [0.0; 7];
            for k in 0..7 {
                q[k] = parse_field(index + 1, fields[4 + k])?;
            }
            Some(JointConfig(q))
        } else {
            None
        };
        let in_c = int(fields[12])? != 0;
        let cost_field = fields[13].trim();
        let cost = match cost_field {
            "inf" => f64::INFINITY,
            other => parse_field(index + 1, other)?,
        };
        let (pj, pg) = (int(fields[14])?, int(fields[15])?);
        let pred = if pj >= 0 && pg >= 0 {
            Some((pj as u32, pg as u32))
        } else {
            None
        };
        rows.push(Row {
            i,
            j,
            g,
            u,
            q,
            in_c,
            cost,
            pred,
        });
    }

    let n_stages = rows.iter().map(|r| r.i).max().map_or(0, |m| m + 1);
    let n_cols = rows.iter().map(|r| r.j).max().map_or(0, |m| m + 1);
    let n_layers = rows.iter().map(|r| r.g).max().map_or(0, |m| m + 1);
    let mut u_values = vec![f64::NAN; n_cols];
    for row in &rows {
        u_values[row.j] = row.u;
    }
    if u_values.iter().any(|u| u.is_nan()) || u_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CsvError::Parse {
            line: 1,
            message: "slide columns are incomplete or not strictly ascending".to_string(),
        });
    }
    let mut grid = DpGrid::new(n_stages, n_cols, n_layers, u_values, tau);
    for row in rows {
        if let Some(q) = row.q {
            if q.slide() != grid.u_values[row.j] {
                return Err(CsvError::Parse {
                    line: 1,
                    message: format!(
                        "node ({}, {}, {}) stores q7 {} but the column's u is {}",
                        row.i,
                        row.j,
                        row.g,
                        q.slide(),
                        grid.u_values[row.j]
                    ),
                });
            }
            grid.set_feasible(row.i, row.j, row.g, q);
        }
        let node = grid.node_mut(row.i, row.j, row.g);
        node.cost = row.cost;
        node.in_c = row.in_c;
        node.pred = row.pred;
    }
    Ok(grid)
}

// ----------------------------------------------------------- PPM raster --

/// Raster legend (P6, one file per layer; row = stage, column = slide
/// sample): dark gray = infeasible, gray = admissible but never reached,
/// blue-to-red = reached with the cumulative cost normalized over the grid,
/// green = the reconstructed optimal path.
pub const RASTER_LEGEND: &str = "dark gray #282828 infeasible; gray #787878 feasible, \
     unreached; blue #0050ff to red #ff3c00 reached (cost gradient); green #00ff5a optimal path";

const INFEASIBLE_RGB: [u8; 3] = [40, 40, 40];
const UNREACHED_RGB: [u8; 3] = [120, 120, 120];
const PATH_RGB: [u8; 3] = [0, 255, 90];

fn cost_rgb(fraction: f64) -> [u8; 3] {
    let f = fraction.clamp(0.0, 1.0);
    let lerp = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    [lerp(0, 255), lerp(80, 60), lerp(255, 0)]
}

/// Renders one layer of the grid as a binary PPM image. `path_nodes`, when
/// given, overdraws the optimal path cells that live in this layer.
pub fn render_layer_ppm(grid: &DpGrid, layer: usize, path_nodes: Option<&[(u32, u32)]>) -> Vec<u8> {
    let width = grid.n_cols;
    let height = grid.n_stages;
    let max_cost = grid
        .iter_nodes()
        .map(|(_, _, _, n)| n.cost)
        .filter(|c| c.is_finite())
        .fold(0.0f64, f64::max);

    let mut body = Vec::with_capacity(width * height * 3);
    for stage in 0..height {
        for column in 0..width {
            let node = grid.node(stage, column, layer);
            let on_path = path_nodes.is_some_and(|nodes| {
                nodes
                    .get(stage)
                    .is_some_and(|(j, g)| *j as usize == column && *g as usize == layer)
            });
            let rgb = if on_path {
                PATH_RGB
            } else if node.in_c {
                let fraction = if max_cost > 0.0 {
                    node.cost / max_cost
                } else {
                    0.0
                };
                cost_rgb(fraction)
            } else if node.feasible() {
                UNREACHED_RGB
            } else {
                INFEASIBLE_RGB
            };
            body.extend_from_slice(&rgb);
        }
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&body);
    out
}

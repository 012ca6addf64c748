use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::world::OccupancyGrid;

use super::metrics::RunMetrics;
use super::run::{Method, Trace};
use super::task::TaskSpec;
use super::BenchError;

/// Results table, one row per run, grouped by task with the task label on
/// its first row only. Failed runs show `N -- -- --`.
pub fn format_table(results: &[RunMetrics]) -> String {
    let mut rows = results.to_vec();
    rows.sort_by(|a, b| a.task_id.cmp(&b.task_id).then(a.method.cmp(&b.method)));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<15} {:>7} {:>13} {:>9} {:>11}",
        "task", "method", "success", "interventions", "time(s)", "jerk(m/s3)"
    );
    let mut last = String::new();
    for r in &rows {
        let label = if r.task_id == last { "" } else { r.task_id.as_str() };
        last = r.task_id.clone();
        if r.success {
            let jerk = r.smoothness.map_or("--".to_string(), |j| format!("{j:.4}"));
            let _ = writeln!(
                s,
                "{:<12} {:<15} {:>7} {:>13} {:>9.1} {:>11}",
                label,
                r.method.label(),
                "Y",
                r.interventions,
                r.time,
                jerk
            );
        } else {
            let _ = writeln!(
                s,
                "{:<12} {:<15} {:>7} {:>13} {:>9} {:>11}",
                label,
                r.method.label(),
                "N",
                "--",
                "--",
                "--"
            );
        }
    }
    s
}

/// Picks a run's metrics by task and method.
pub fn find<'a>(results: &'a [RunMetrics], task: &str, method: Method) -> Option<&'a RunMetrics> {
    results.iter().find(|r| r.task_id == task && r.method == method)
}

/// Top-down picture of the map with the driven trace, resets and goals.
pub fn trace_image(grid: &OccupancyGrid, task: &TaskSpec, trace: &Trace) -> RgbImage {
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    let mut img = RgbImage::from_fn(w, h, |x, y| {
        // image row 0 is the top of the map
        let j = (h - 1 - y) as usize;
        if grid.cell(x as usize, j).is_blocked() {
            Rgb([40, 40, 40])
        } else {
            Rgb([235, 235, 235])
        }
    });
    let mut put = |p: [f64; 2], c: [u8; 3]| {
        if let Some((i, j)) = grid.world_to_cell(p) {
            img.put_pixel(i as u32, h - 1 - j as u32, Rgb(c));
        }
    };
    for s in &trace.samples {
        put(s.truth.xy(), if s.reset { [230, 20, 20] } else { [30, 80, 220] });
    }
    for g in &task.goals {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let r = grid.resolution();
                put([g.x + dx as f64 * r, g.y + dy as f64 * r], [20, 170, 60]);
            }
        }
    }
    put(task.start.xy(), [240, 160, 0]);
    img
}

/// Writes `<stem>.csv`, `<stem>.json` and `<stem>.png` for one run.
pub fn write_trace(
    dir: &Path,
    stem: &str,
    grid: &OccupancyGrid,
    task: &TaskSpec,
    trace: &Trace,
    metrics: &RunMetrics,
) -> Result<(), BenchError> {
    let io = |e: std::io::Error| BenchError::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{stem}.csv")), trace.to_csv()).map_err(io)?;
    let json = serde_json::to_string_pretty(metrics).map_err(|e| BenchError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json).map_err(io)?;
    trace_image(grid, task, trace)
        .save(dir.join(format!("{stem}.png")))
        .map_err(|e| BenchError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(task: &str, method: Method, ok: bool) -> RunMetrics {
        RunMetrics {
            task_id: task.into(),
            map_id: "A0".into(),
            method,
            success: ok,
            failure: (!ok).then(|| "time limit".into()),
            interventions: 2,
            goals_reached: 1,
            time: 42.0,
            distance: 20.0,
            smoothness: Some(0.25),
            plan_fallbacks: 0,
        }
    }

    #[test]
    fn table_labels_task_once_and_blanks_failures() {
        let t = format_table(&[m("J", Method::LpeNet, true), m("J", Method::NonIntention, false)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("J "));
        assert!(lines[2].starts_with("   "));
        let fail: Vec<&str> = lines[2].split_whitespace().collect();
        assert_eq!(&fail[fail.len() - 4..], &["N", "--", "--", "--"]);
        assert!(lines[1].contains("0.2500"));
    }
}

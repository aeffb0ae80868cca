//! SVG charts rebuilt from run artifacts.

use std::path::{Path, PathBuf};

use plotters::coord::Shift;
use plotters::prelude::*;

use crate::experiment::HistoryRow;
use crate::output::{self, Table};
use crate::CliError;

const SIZE: (u32, u32) = (800, 560);

fn draw_err(path: &Path) -> impl Fn(String) -> CliError + '_ {
    move |message| CliError::Data {
        path: path.to_path_buf(),
        message: format!("drawing failed: {message}"),
    }
}

fn missing(path: PathBuf) -> CliError {
    CliError::Io {
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        path,
    }
}

/// Repeat directories below `dir`: `dir` itself if it holds a history,
/// otherwise its `repeat_*` subdirectories.
pub fn repeat_dirs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if dir.join("history.csv").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let k = name.strip_prefix("repeat_")?.parse().ok()?;
            Some((k, e.path()))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(missing(dir.join("history.csv")));
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Renders every chart for the given run directories and returns the files
/// written. 2D error maps share one color range across all directories.
pub fn plot_runs(dirs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut repeats = Vec::new();
    for d in dirs {
        repeats.extend(repeat_dirs(d)?);
    }
    for r in &repeats {
        let h = r.join("history.csv");
        if !h.is_file() {
            return Err(missing(h));
        }
    }

    let mut fields = Vec::new();
    for r in &repeats {
        let path = r.join("solution.csv");
        let table = if path.is_file() {
            Some(output::read_table(&path)?)
        } else {
            None
        };
        fields.push(table);
    }
    let shared = fields
        .iter()
        .flatten()
        .filter(|t| t.column("y").is_some())
        .filter_map(|t| {
            Some(
                t.column("u")?
                    .iter()
                    .zip(t.column("reference")?)
                    .map(|(u, r)| (u - r).abs())
                    .fold(0.0, f64::max),
            )
        })
        .fold(0.0, f64::max);

    let mut written = Vec::new();
    for (dir, table) in repeats.iter().zip(&fields) {
        let rows = output::read_history(&dir.join("history.csv"))?;
        written.push(cost_chart(&dir.join("cost.svg"), &rows)?);
        if rows.iter().any(|r| r.err_l2.is_some()) {
            written.push(error_chart(&dir.join("errors.svg"), &rows)?);
        }
        if let Some(t) = table {
            if t.column("y").is_some() && t.column("reference").is_some() {
                let range = if shared > 0.0 { shared } else { 1.0 };
                written.push(heat_map(&dir.join("abs_error.svg"), t, range, true)?);
                written.push(heat_map(&dir.join("signed_error.svg"), t, range, false)?);
            } else if t.column("x").is_some() && t.column("reference").is_some() {
                written.push(profile_chart(&dir.join("solution.svg"), t)?);
            }
        }
        let traj = dir.join("trajectory.csv");
        if traj.is_file() {
            written.push(snapshots(
                &dir.join("snapshots.svg"),
                &output::read_table(&traj)?,
            )?);
        }
    }
    Ok(written)
}

fn positive_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo.is_finite() {
        (lo / 2.0, hi * 2.0)
    } else {
        (1e-16, 1.0)
    }
}

/// Legend label, color and value accessor of one history line.
type Series = (&'static str, RGBColor, fn(&HistoryRow) -> Option<f64>);

fn log_series_chart(
    path: &Path,
    caption: &str,
    y_label: &str,
    rows: &[HistoryRow],
    series: &[Series],
) -> Result<PathBuf, CliError> {
    let err = draw_err(path);
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let (lo, hi) = positive_range(
        series
            .iter()
            .flat_map(|(_, _, f)| rows.iter().filter_map(f)),
    );
    let last = rows.last().map_or(1, |r| r.iteration.max(1));
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0f64..last as f64, (lo..hi).log_scale())
        .map_err(|e| err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("iteration")
        .y_desc(y_label)
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(|e| err(e.to_string()))?;
    for (name, color, f) in series {
        let color = *color;
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| f(r).filter(|v| *v > 0.0).map(|v| (r.iteration as f64, v)))
            .collect();
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(|e| err(e.to_string()))?
            .label(*name)
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    root.present().map_err(|e| err(e.to_string()))?;
    Ok(path.to_path_buf())
}

fn cost_chart(path: &Path, rows: &[HistoryRow]) -> Result<PathBuf, CliError> {
    log_series_chart(
        path,
        "Cost",
        "cost",
        rows,
        &[
            ("consensus", BLUE, |r| Some(r.consensus_cost)),
            ("best agent", RED, |r| Some(r.best_cost)),
        ],
    )
}

fn error_chart(path: &Path, rows: &[HistoryRow]) -> Result<PathBuf, CliError> {
    log_series_chart(
        path,
        "Error of the consensus point",
        "error",
        rows,
        &[("L2", BLUE, |r| r.err_l2), ("Linf", RED, |r| r.err_linf)],
    )
}

fn profile_chart(path: &Path, t: &Table) -> Result<PathBuf, CliError> {
    let err = draw_err(path);
    let x = t.column("x").unwrap();
    let u = t.column("u").unwrap();
    let r = t.column("reference").unwrap();
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let (lo, hi) = u
        .iter()
        .chain(&r)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let pad = 0.05 * (hi - lo).max(1e-12);
    let mut chart = ChartBuilder::on(&root)
        .caption("Consensus solution", ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x[0]..x[x.len() - 1], (lo - pad)..(hi + pad))
        .map_err(|e| err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("x")
        .y_desc("u")
        .draw()
        .map_err(|e| err(e.to_string()))?;
    chart
        .draw_series(LineSeries::new(
            x.iter().copied().zip(r.iter().copied()),
            BLACK.stroke_width(1),
        ))
        .map_err(|e| err(e.to_string()))?
        .label("reference")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    chart
        .draw_series(LineSeries::new(
            x.iter().copied().zip(u.iter().copied()),
            BLUE.stroke_width(2),
        ))
        .map_err(|e| err(e.to_string()))?
        .label("consensus")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE.stroke_width(2)));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(e.to_string()))?;
    root.present().map_err(|e| err(e.to_string()))?;
    Ok(path.to_path_buf())
}

/// White to dark red on `[0, 1]`.
fn sequential(s: f64) -> RGBColor {
    let s = s.clamp(0.0, 1.0);
    RGBColor(
        255 - (95.0 * s) as u8,
        (255.0 * (1.0 - s)) as u8,
        (255.0 * (1.0 - s)) as u8,
    )
}

/// Blue through white to red on `[-1, 1]`.
fn diverging(s: f64) -> RGBColor {
    let s = s.clamp(-1.0, 1.0);
    let fade = (255.0 * (1.0 - s.abs())) as u8;
    if s >= 0.0 {
        RGBColor(255, fade, fade)
    } else {
        RGBColor(fade, fade, 255)
    }
}

fn unique_sorted(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn heat_map(path: &Path, t: &Table, range: f64, absolute: bool) -> Result<PathBuf, CliError> {
    let err = draw_err(path);
    let (x, y) = (t.column("x").unwrap(), t.column("y").unwrap());
    let u = t
        .column("u")
        .ok_or_else(|| err("solution.csv has no u column".into()))?;
    let r = t.column("reference").unwrap();
    let (xs, ys) = (unique_sorted(&x), unique_sorted(&y));
    let hx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1).max(1) as f64;
    let hy = (ys[ys.len() - 1] - ys[0]) / (ys.len() - 1).max(1) as f64;

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    let (main, bar) = root.split_horizontally(SIZE.0 - 130);
    let caption = if absolute { "|u - u_ref|" } else { "u - u_ref" };
    let mut chart = ChartBuilder::on(&main)
        .caption(caption, ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(
            (xs[0] - hx / 2.0)..(xs[xs.len() - 1] + hx / 2.0),
            (ys[0] - hy / 2.0)..(ys[ys.len() - 1] + hy / 2.0),
        )
        .map_err(|e| err(e.to_string()))?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("x")
        .y_desc("y")
        .draw()
        .map_err(|e| err(e.to_string()))?;
    let color = |d: f64| {
        if absolute {
            sequential(d.abs() / range)
        } else {
            diverging(d / range)
        }
    };
    chart
        .draw_series((0..x.len()).map(|k| {
            let d = u[k] - r[k];
            Rectangle::new(
                [
                    (x[k] - hx / 2.0, y[k] - hy / 2.0),
                    (x[k] + hx / 2.0, y[k] + hy / 2.0),
                ],
                color(d).filled(),
            )
        }))
        .map_err(|e| err(e.to_string()))?;
    color_bar(&bar, if absolute { 0.0 } else { -range }, range, color).map_err(&err)?;
    root.present().map_err(|e| err(e.to_string()))?;
    Ok(path.to_path_buf())
}

fn color_bar(
    area: &DrawingArea<SVGBackend<'_>, Shift>,
    lo: f64,
    hi: f64,
    color: impl Fn(f64) -> RGBColor,
) -> Result<(), String> {
    let mut chart = ChartBuilder::on(area)
        .margin_top(56)
        .margin_bottom(56)
        .margin_right(10)
        .y_label_area_size(75)
        .build_cartesian_2d(0f64..1.0, lo..hi)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .disable_mesh()
        .disable_x_axis()
        .y_label_formatter(&|v| format!("{v:.1e}"))
        .draw()
        .map_err(|e| e.to_string())?;
    let steps = 100;
    chart
        .draw_series((0..steps).map(|i| {
            let a = lo + (hi - lo) * i as f64 / steps as f64;
            let b = lo + (hi - lo) * (i + 1) as f64 / steps as f64;
            Rectangle::new([(0.0, a), (1.0, b)], color(0.5 * (a + b)).filled())
        }))
        .map_err(|e| e.to_string())?;
    Ok(())
}

/// Six frames of sheep (blue) and dogs (red) with the dog paths so far.
fn snapshots(path: &Path, t: &Table) -> Result<PathBuf, CliError> {
    let err = draw_err(path);
    let col = |name: &str| {
        t.column(name)
            .ok_or_else(|| err(format!("trajectory.csv has no {name} column")))
    };
    let (time, kind, x, y) = (col("t")?, col("kind")?, col("x")?, col("y")?);
    let times = unique_sorted(&time);
    let frames: Vec<f64> = (0..6).map(|i| times[(times.len() - 1) * i / 5]).collect();
    let (xlo, xhi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let (ylo, yhi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let pad = 0.05 * (xhi - xlo).max(yhi - ylo).max(1e-9);

    let root = SVGBackend::new(path, (1200, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(e.to_string()))?;
    for (panel, &tf) in root.split_evenly((2, 3)).iter().zip(&frames) {
        let mut chart = ChartBuilder::on(panel)
            .caption(format!("t = {tf:.2}"), ("sans-serif", 18))
            .margin(8)
            .x_label_area_size(25)
            .y_label_area_size(35)
            .build_cartesian_2d((xlo - pad)..(xhi + pad), (ylo - pad)..(yhi + pad))
            .map_err(|e| err(e.to_string()))?;
        chart
            .configure_mesh()
            .draw()
            .map_err(|e| err(e.to_string()))?;
        let dog_ids = unique_sorted(
            &(0..time.len())
                .filter(|&k| kind[k] == 1.0)
                .map(|k| t.rows[k][2])
                .collect::<Vec<_>>(),
        );
        for id in dog_ids {
            let trail: Vec<(f64, f64)> = (0..time.len())
                .filter(|&k| kind[k] == 1.0 && t.rows[k][2] == id && time[k] <= tf)
                .map(|k| (x[k], y[k]))
                .collect();
            chart
                .draw_series(LineSeries::new(trail, RED.mix(0.4)))
                .map_err(|e| err(e.to_string()))?;
        }
        let now: Vec<usize> = (0..time.len()).filter(|&k| time[k] == tf).collect();
        chart
            .draw_series(now.iter().map(|&k| {
                let c = if kind[k] == 1.0 { RED } else { BLUE };
                Circle::new((x[k], y[k]), if kind[k] == 1.0 { 5 } else { 3 }, c.filled())
            }))
            .map_err(|e| err(e.to_string()))?;
    }
    root.present().map_err(|e| err(e.to_string()))?;
    Ok(path.to_path_buf())
}

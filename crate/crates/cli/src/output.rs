//! CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use gpcbo::control;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::experiment::{HistoryRow, Scenario, Task};
use crate::CliError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Data {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_history(path: &Path, rows: &[HistoryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}

/// A CSV file as a header plus rows of numbers; empty cells become NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(&table.header).map_err(csv_err(path))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format!("{v:?}")))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse::<f64>().map_err(|e| CliError::Data {
                        path: path.to_path_buf(),
                        message: format!(
                            "line {}: {s:?}: {e}",
                            rec.position().map_or(0, |p| p.line())
                        ),
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Writes `solution.csv`, plus `trajectory.csv` for the shepherd problem.
pub fn write_solution(dir: &Path, scenario: &Scenario, consensus: &[f64]) -> Result<(), CliError> {
    let mesh = &scenario.mesh;
    let n = mesh.len();
    match &scenario.task {
        Task::Shepherd(params) => {
            let dogs = params.dogs();
            let mut header = vec!["t".to_string()];
            for d in 0..dogs {
                header.push(format!("dog{d}_ux"));
                header.push(format!("dog{d}_uy"));
            }
            let times = params.times();
            let rows = (0..n)
                .map(|k| {
                    let mut row = vec![times[k]];
                    row.extend((0..2 * dogs).map(|c| consensus[c * n + k]));
                    row
                })
                .collect();
            write_table(&dir.join("solution.csv"), &Table { header, rows })?;

            let traj = control::simulate(params, consensus)?;
            let header = ["t", "kind", "index", "x", "y"].map(String::from).to_vec();
            let mut rows = Vec::new();
            for (k, t) in traj.times.iter().enumerate() {
                for (i, p) in traj.x[k].iter().enumerate() {
                    rows.push(vec![*t, 0.0, i as f64, p[0], p[1]]);
                }
                for (i, p) in traj.d[k].iter().enumerate() {
                    rows.push(vec![*t, 1.0, i as f64, p[0], p[1]]);
                }
            }
            write_table(&dir.join("trajectory.csv"), &Table { header, rows })
        }
        task => {
            let reference = match task {
                Task::Bvp(p) => p.reference_solution(),
                Task::Quadratic { target, .. } => target.clone(),
                Task::Shepherd(_) => unreachable!(),
            };
            let coords: &[&str] = if mesh.dim() == 2 { &["x", "y"] } else { &["x"] };
            let mut header: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
            header.push("u".into());
            header.push("reference".into());
            let rows = mesh
                .points()
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let mut row = p.to_vec();
                    row.push(consensus[k]);
                    row.push(reference[k]);
                    row
                })
                .collect();
            write_table(&dir.join("solution.csv"), &Table { header, rows })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trip_keeps_empty_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let rows = vec![
            HistoryRow {
                iteration: 0,
                best_cost: 2.5,
                consensus_cost: 3.0,
                spread: 1.0,
                err_l2: None,
                err_linf: Some(0.25),
                seconds: None,
            };
            3
        ];
        write_history(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(
            text.starts_with("iteration,best_cost,consensus_cost,spread,err_l2,err_linf,seconds\n")
        );
        assert!(text.contains("0,2.5,3.0,1.0,,0.25,\n"));
        assert_eq!(read_history(&path).unwrap(), rows);
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = Table {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, -0.1], vec![1e-300, 3.0]],
        };
        write_table(&path, &t).unwrap();
        assert_eq!(read_table(&path).unwrap(), t);
        assert_eq!(
            read_table(&path).unwrap().column("b"),
            Some(vec![-0.1, 3.0])
        );
        let err = read_table(&dir.path().join("missing.csv")).unwrap_err();
        assert!(err.to_string().contains("missing.csv"));
    }
}

//! Comma-separated time series: speed/production inputs and simulated
//! storage trajectories.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! file read back yields the exact same `f64` values. Columns are located
//! by header name; extra columns are ignored.

use std::path::Path;

use stodyn_core::storage::TrajectoryRecord;

use crate::error::{Error, Result};

/// Speed series with optional production and acceleration columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeedSeries {
    pub t: Vec<f64>,
    pub omega: Vec<f64>,
    pub p_prod: Option<Vec<f64>>,
    pub accel: Option<Vec<f64>>,
}

impl SpeedSeries {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

const SERIES_HEADER: [&str; 4] = ["t", "omega", "p_prod", "accel"];
const TRAJECTORY_HEADER: [&str; 7] = ["t", "omega", "accel", "p_prod", "p_grid", "p_sto", "e_sto"];

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::format(path, e),
    }
}

fn write_columns(path: &Path, header: &[&str], cols: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    let n = cols.first().map_or(0, |c| c.len());
    let mut row: Vec<String> = vec![String::new(); cols.len()];
    for k in 0..n {
        for (cell, col) in row.iter_mut().zip(cols) {
            cell.clear();
            use std::fmt::Write;
            write!(cell, "{}", col[k]).expect("writing to a String");
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the named columns; `None` for a column that is absent and optional.
fn read_columns(path: &Path, wanted: &[(&str, bool)]) -> Result<Vec<Option<Vec<f64>>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let idx: Vec<Option<usize>> = wanted
        .iter()
        .map(|(name, required)| {
            let i = headers.iter().position(|h| h.trim() == *name);
            if i.is_none() && *required {
                Err(Error::format(path, format!("missing column {name:?}")))
            } else {
                Ok(i)
            }
        })
        .collect::<Result<_>>()?;
    let mut cols: Vec<Option<Vec<f64>>> = idx.iter().map(|i| i.map(|_| Vec::new())).collect();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (col, i) in cols.iter_mut().zip(&idx) {
            if let (Some(col), Some(i)) = (col.as_mut(), i) {
                let cell =
                    rec.get(*i).ok_or_else(|| Error::format(path, format!("row {}: missing field", line + 2)))?;
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, format!("row {}: cannot parse {cell:?}", line + 2)))?;
                if !v.is_finite() {
                    return Err(Error::format(path, format!("row {}: non-finite value", line + 2)));
                }
                col.push(v);
            }
        }
    }
    Ok(cols)
}

/// Writes `t,omega,p_prod,accel`; all four columns must be present.
pub fn write_series(path: &Path, s: &SpeedSeries) -> Result<()> {
    let (Some(p), Some(a)) = (&s.p_prod, &s.accel) else {
        return Err(Error::Usage("series needs p_prod and accel columns to be written".into()));
    };
    write_columns(path, &SERIES_HEADER, &[&s.t, &s.omega, p, a])
}

/// Reads a series file. Only `omega` is mandatory; `t` defaults to the
/// sample index times `dt`.
pub fn read_series(path: &Path, dt: f64) -> Result<SpeedSeries> {
    let mut cols = read_columns(path, &[("t", false), ("omega", true), ("p_prod", false), ("accel", false)])?;
    let accel = cols.pop().flatten();
    let p_prod = cols.pop().flatten();
    let omega = cols.pop().flatten().expect("required column");
    let t = cols.pop().flatten().unwrap_or_else(|| (0..omega.len()).map(|k| k as f64 * dt).collect());
    Ok(SpeedSeries { t, omega, p_prod, accel })
}

pub fn write_trajectory(path: &Path, tr: &TrajectoryRecord) -> Result<()> {
    write_columns(
        path,
        &TRAJECTORY_HEADER,
        &[&tr.t, &tr.omega, &tr.accel, &tr.p_prod, &tr.p_grid, &tr.p_sto, &tr.e_sto],
    )
}

/// Reads a trajectory file. The energy after the last step is not part of
/// the file and is returned as the last stored energy.
pub fn read_trajectory(path: &Path) -> Result<TrajectoryRecord> {
    let wanted: Vec<(&str, bool)> = TRAJECTORY_HEADER.iter().map(|h| (*h, true)).collect();
    let mut c: Vec<Vec<f64>> = read_columns(path, &wanted)?.into_iter().map(|c| c.expect("required")).collect();
    let e_final = c[6].last().copied().unwrap_or(0.0);
    let mut take = |i: usize| std::mem::take(&mut c[i]);
    Ok(TrajectoryRecord {
        t: take(0),
        omega: take(1),
        accel: take(2),
        p_prod: take(3),
        p_grid: take(4),
        p_sto: take(5),
        e_sto: take(6),
        e_final,
    })
}

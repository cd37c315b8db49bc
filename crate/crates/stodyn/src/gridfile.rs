//! On-disk form of grid functions and policies.
//!
//! A grid file is a small TOML document describing the grid plus a sibling
//! binary payload of little-endian `f64` values in row-major node order
//! (last axis fastest). Policies with several control components store them
//! one after the other in the same payload. Values round-trip bit for bit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stodyn_core::{Axis, GridFunction, Policy, RectGrid};

use crate::error::{self, Error, Result};

const FORMAT: &str = "stodyn-grid";
const DTYPE: &str = "f64le";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Value,
    Policy,
}

#[derive(Debug, Serialize, Deserialize)]
struct AxisMeta {
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format: String,
    kind: Kind,
    dtype: String,
    value_count: usize,
    components: usize,
    payload: String,
    axes: Vec<AxisMeta>,
}

/// Path of the binary payload next to `meta_path`.
pub fn payload_path(meta_path: &Path) -> PathBuf {
    meta_path.with_extension("bin")
}

fn write_components(meta_path: &Path, kind: Kind, grid: &RectGrid, comps: &[&[f64]]) -> Result<()> {
    let payload = payload_path(meta_path);
    let name = payload
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Usage(format!("{}: not a usable file name", meta_path.display())))?
        .to_owned();
    let meta = Meta {
        format: FORMAT.into(),
        kind,
        dtype: DTYPE.into(),
        value_count: grid.len(),
        components: comps.len(),
        payload: name,
        axes: grid.axes().iter().map(|a| AxisMeta { lo: a.lo(), hi: a.hi(), n: a.len() }).collect(),
    };
    let mut bytes = Vec::with_capacity(8 * grid.len() * comps.len());
    for c in comps {
        for v in c.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    error::write(&payload, bytes)?;
    let text = toml::to_string(&meta).map_err(|e| Error::format(meta_path, e))?;
    error::write(meta_path, text)
}

fn read_components(meta_path: &Path, kind: Kind) -> Result<(RectGrid, Vec<Vec<f64>>)> {
    let text = error::read_to_string(meta_path)?;
    let meta: Meta = toml::from_str(&text).map_err(|e| Error::format(meta_path, e))?;
    if meta.format != FORMAT {
        return Err(Error::format(meta_path, format!("unknown format {:?}", meta.format)));
    }
    if meta.kind != kind {
        return Err(Error::format(meta_path, format!("expected a {kind:?} file, found {:?}", meta.kind)));
    }
    if meta.dtype != DTYPE {
        return Err(Error::format(meta_path, format!("unsupported dtype {:?}", meta.dtype)));
    }
    let axes = meta
        .axes
        .iter()
        .map(|a| Axis::new(a.lo, a.hi, a.n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::format(meta_path, e))?;
    let grid = RectGrid::from_axes(axes).map_err(|e| Error::format(meta_path, e))?;
    if grid.len() != meta.value_count {
        return Err(Error::format(
            meta_path,
            format!("value_count {} does not match the grid ({} nodes)", meta.value_count, grid.len()),
        ));
    }
    if meta.components == 0 {
        return Err(Error::format(meta_path, "components must be positive"));
    }
    let base = meta_path.parent().unwrap_or(Path::new(""));
    let payload = base.join(&meta.payload);
    let bytes = std::fs::read(&payload).map_err(|e| Error::io(&payload, e))?;
    let expected = 8 * meta.value_count * meta.components;
    if bytes.len() != expected {
        return Err(Error::format(&payload, format!("payload has {} bytes, expected {expected}", bytes.len())));
    }
    let values: Vec<f64> =
        bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
    let comps = values.chunks_exact(meta.value_count).map(<[f64]>::to_vec).collect();
    Ok((grid, comps))
}

pub fn write_value(meta_path: &Path, value: &GridFunction) -> Result<()> {
    write_components(meta_path, Kind::Value, value.grid(), &[value.values()])
}

pub fn read_value(meta_path: &Path) -> Result<GridFunction> {
    let (grid, mut comps) = read_components(meta_path, Kind::Value)?;
    if comps.len() != 1 {
        return Err(Error::format(meta_path, "a value file holds exactly one component"));
    }
    GridFunction::new(grid, comps.pop().expect("one component")).map_err(|e| Error::format(meta_path, e))
}

pub fn write_policy(meta_path: &Path, policy: &Policy) -> Result<()> {
    let comps: Vec<&[f64]> = policy.components().iter().map(GridFunction::values).collect();
    write_components(meta_path, Kind::Policy, policy.grid(), &comps)
}

pub fn read_policy(meta_path: &Path) -> Result<Policy> {
    let (grid, comps) = read_components(meta_path, Kind::Policy)?;
    let fns = comps
        .into_iter()
        .map(|c| GridFunction::new(grid.clone(), c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::format(meta_path, e))?;
    Policy::new(fns).map_err(|e| Error::format(meta_path, e))
}

//! Map files.
//!
//! Structured form (TOML):
//!
//! ```toml
//! # frame: y up, azimuth from +z toward +x
//! resolution = 0.1
//! dims = [33, 30, 33]
//! origin = [0.0, 0.0, 0.0]
//! occupied = [[15, 0, 15], [16, 0, 15]]
//! ```
//!
//! ASCII form, for hand-authored scenes. The first line is the magic
//! `ascii-voxel-map`, followed by `resolution <m>` and an optional
//! `origin <x> <y> <z>`. Then come horizontal layers, bottom (`j = 0`)
//! first, separated by blank lines. Within a layer, row `r` is `k = r` and
//! column `c` is `i = c`; `#` marks an occupied cell and `.` a free one.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::voxel_map::{CellIndex, VoxelMap};

pub const ASCII_MAGIC: &str = "ascii-voxel-map";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    resolution: f64,
    dims: [usize; 3],
    #[serde(default)]
    origin: [f64; 3],
    #[serde(default)]
    occupied: Vec<[usize; 3]>,
}

/// Load a map in either format. The file is ASCII if its first line is the
/// magic header, TOML otherwise.
pub fn load_map(path: impl AsRef<Path>) -> Result<VoxelMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map(&text, path)
}

pub fn parse_map(text: &str, path: &Path) -> Result<VoxelMap> {
    if text.lines().next().map(str::trim) == Some(ASCII_MAGIC) {
        parse_ascii(text, path)
    } else {
        parse_toml(text, path)
    }
}

fn parse_toml(text: &str, path: &Path) -> Result<VoxelMap> {
    let doc: MapDoc = toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
    let map = VoxelMap::new(doc.resolution, doc.dims, doc.origin.into())
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let mut map = map;
    for (n, c) in doc.occupied.iter().enumerate() {
        map.set_occupied(CellIndex::new(c[0], c[1], c[2]), true)
            .map_err(|e| Error::parse(path, format!("occupied[{n}]: {e}")))?;
    }
    Ok(map)
}

fn parse_ascii(text: &str, path: &Path) -> Result<VoxelMap> {
    let mut resolution = None;
    let mut origin = Point3::ORIGIN;
    let mut layers: Vec<Vec<(usize, &str)>> = Vec::new();
    let mut current: Vec<(usize, &str)> = Vec::new();
    let mut in_grid = false;

    for (n, raw) in text.lines().enumerate().skip(1) {
        let line_no = n + 1;
        let line = raw.trim();
        if !in_grid {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("resolution") => {
                    let v = parts
                        .next()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| Error::parse(path, format!("line {line_no}: bad resolution")))?;
                    resolution = Some(v);
                    continue;
                }
                Some("origin") => {
                    let vals: Vec<f64> = parts.filter_map(|s| s.parse().ok()).collect();
                    if vals.len() != 3 {
                        return Err(Error::parse(path, format!("line {line_no}: origin needs 3 numbers")));
                    }
                    origin = Point3::new(vals[0], vals[1], vals[2]);
                    continue;
                }
                _ => in_grid = true,
            }
        }
        if line.is_empty() {
            if !current.is_empty() {
                layers.push(std::mem::take(&mut current));
            }
        } else {
            current.push((line_no, line));
        }
    }
    if !current.is_empty() {
        layers.push(current);
    }

    let resolution =
        resolution.ok_or_else(|| Error::parse(path, "missing `resolution` line".to_string()))?;
    let first = layers
        .first()
        .ok_or_else(|| Error::parse(path, "no grid layers".to_string()))?;
    let nz = first.len();
    let nx = first[0].1.chars().count();
    let ny = layers.len();
    let mut map = VoxelMap::new(resolution, [nx, ny, nz], origin)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for (j, layer) in layers.iter().enumerate() {
        if layer.len() != nz {
            return Err(Error::parse(
                path,
                format!("line {}: layer {j} has {} rows, expected {nz}", layer[0].0, layer.len()),
            ));
        }
        for (k, (line_no, row)) in layer.iter().enumerate() {
            if row.chars().count() != nx {
                return Err(Error::parse(
                    path,
                    format!("line {line_no}: row has {} cells, expected {nx}", row.chars().count()),
                ));
            }
            for (i, ch) in row.chars().enumerate() {
                match ch {
                    '#' => map.set_occupied(CellIndex::new(i, j, k), true)?,
                    '.' => {}
                    other => {
                        return Err(Error::parse(
                            path,
                            format!("line {line_no}: unexpected character {other:?}"),
                        ))
                    }
                }
            }
        }
    }
    Ok(map)
}

/// Serialize to the structured form. Occupied cells come out in linear
/// index order, so the output is deterministic.
pub fn map_to_toml(map: &VoxelMap) -> String {
    let mut out = String::new();
    out.push_str("# frame: y up, azimuth from +z toward +x\n");
    let o = map.origin();
    let d = map.dims();
    let _ = writeln!(out, "resolution = {:?}", map.resolution());
    let _ = writeln!(out, "dims = [{}, {}, {}]", d[0], d[1], d[2]);
    let _ = writeln!(out, "origin = [{:?}, {:?}, {:?}]", o.x, o.y, o.z);
    out.push_str("occupied = [\n");
    for c in map.occupied_cells() {
        let _ = writeln!(out, "  [{}, {}, {}],", c.i, c.j, c.k);
    }
    out.push_str("]\n");
    out
}

pub fn save_map(map: &VoxelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, map_to_toml(map)).map_err(|e| Error::io(path, e))
}

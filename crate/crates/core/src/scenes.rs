//! Procedural scenes.

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::voxel_map::VoxelMap;

/// Room extent of the reference scene (x, y, z), meters.
pub const ROOM_EXTENT: Point3 = Point3::new(3.3, 2.97, 3.3);
/// Footprint and height of the vertical shaft standing on the floor at the
/// room center.
pub const SHAFT_EXTENT: Point3 = Point3::new(0.33, 0.297, 0.33);

/// Empty map covering `extent` with at least one cell per axis.
pub fn room(extent: Point3, resolution: f64) -> Result<VoxelMap> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Validation(format!("resolution must be positive, got {resolution}")));
    }
    let cells = |len: f64| ((len / resolution) - 1e-9).ceil().max(1.0) as usize;
    VoxelMap::new(resolution, [cells(extent.x), cells(extent.y), cells(extent.z)], Point3::ORIGIN)
}

/// Mark every cell whose center lies inside the closed box `[lo, hi]`.
pub fn fill_box(map: &mut VoxelMap, lo: Point3, hi: Point3) {
    let cells: Vec<_> = (0..map.cell_count())
        .map(|i| map.from_linear(i))
        .filter(|&c| {
            let p = map.center(c);
            (0..3).all(|ax| p.axis(ax) >= lo.axis(ax) && p.axis(ax) <= hi.axis(ax))
        })
        .collect();
    for c in cells {
        map.set_occupied(c, true).expect("cell from map");
    }
}

/// The reference room with its centered shaft.
pub fn reference_room(resolution: f64) -> Result<VoxelMap> {
    let mut map = room(ROOM_EXTENT, resolution)?;
    let mid = Point3::new(ROOM_EXTENT.x * 0.5, 0.0, ROOM_EXTENT.z * 0.5);
    let half = Point3::new(SHAFT_EXTENT.x * 0.5, 0.0, SHAFT_EXTENT.z * 0.5);
    fill_box(
        &mut map,
        mid - half,
        mid + half + Point3::new(0.0, SHAFT_EXTENT.y, 0.0),
    );
    Ok(map)
}

/// Built-in scene by name.
pub fn builtin(name: &str, resolution: Option<f64>) -> Result<VoxelMap> {
    match name {
        "reference-room" => reference_room(resolution.unwrap_or(0.1)),
        other => Err(Error::Validation(format!("unknown built-in scene {other:?}"))),
    }
}

//! Fixtures shared by the benchmarks.

use tetherplan::scenes::reference_room;
use tetherplan::{Point3, VoxelMap};

pub const REEL: Point3 = Point3::new(1.65, 0.45, 0.35);

/// Reference room and its 0.3 m inflation.
pub fn room() -> (VoxelMap, VoxelMap) {
    let original = reference_room(0.1).expect("built-in scene");
    let inflated = original.inflate(0.3).expect("valid radius");
    (original, inflated)
}

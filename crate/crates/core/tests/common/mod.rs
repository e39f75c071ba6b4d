#![allow(dead_code)]

use tetherplan::{CellIndex, Point3, VoxelMap};

/// Slab test of segment `[a, b]` against `[lo, hi]`. `strict` uses the open box.
pub fn segment_hits_box(a: Point3, b: Point3, lo: Point3, hi: Point3, strict: bool) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for ax in 0..3 {
        let (p, d) = (a.axis(ax), b.axis(ax) - a.axis(ax));
        let (l, h) = (lo.axis(ax), hi.axis(ax));
        if d == 0.0 {
            let inside = if strict { p > l && p < h } else { p >= l && p <= h };
            if !inside {
                return false;
            }
            continue;
        }
        let (ta, tb) = ((l - p) / d, (h - p) / d);
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
    }
    if strict {
        t0 < t1
    } else {
        t0 <= t1
    }
}

pub fn all_cells(map: &VoxelMap) -> Vec<CellIndex> {
    let [nx, ny, nz] = map.dims();
    let mut v = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                v.push(CellIndex::new(i, j, k));
            }
        }
    }
    v
}

/// Closed-box line of sight through the occupied cells of `map`.
pub fn blocked_by_boxes(map: &VoxelMap, a: Point3, b: Point3) -> bool {
    map.occupied_cells().any(|c| {
        let (lo, hi) = map.cell_bounds(c);
        segment_hits_box(a, b, lo, hi, false)
    })
}

pub fn map_with(res: f64, dims: [usize; 3], cells: &[(usize, usize, usize)]) -> VoxelMap {
    let mut m = VoxelMap::new(res, dims, Point3::ORIGIN).unwrap();
    for &(i, j, k) in cells {
        let c = CellIndex::new(i % dims[0], j % dims[1], k % dims[2]);
        m.set_occupied(c, true).unwrap();
    }
    m
}

//! Straight-tether reachable space: free cells the reel can see.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{triangle_box_overlap, Point3};
use crate::plan::AnnotatedPath;
use crate::prm::{build_prm, plan_route, FreeSpace, PlannerConfig};
use crate::voxel_map::{CellIndex, VoxelMap};

/// Slack, in meters, added around obstacle boxes by the exact tether test.
const TETHER_TOL: f64 = 1e-9;

/// Inflated map plus the free cells hidden from the reel.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedMap {
    base: VoxelMap,
    reel: Point3,
    blocked: Vec<bool>,
}

impl ReducedMap {
    pub fn base(&self) -> &VoxelMap {
        &self.base
    }

    pub fn reel(&self) -> Point3 {
        self.reel
    }

    pub fn is_blocked(&self, c: CellIndex) -> bool {
        self.blocked[self.base.linear(c)]
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.base.from_linear(i))
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// Free in the base map and visible from the reel.
    pub fn reachable_count(&self) -> usize {
        self.base.free_count() - self.blocked_count()
    }

    /// The base map with blocked cells marked occupied.
    pub fn to_occupancy(&self) -> VoxelMap {
        let mut out = self.base.clone();
        for c in self.blocked_cells().collect::<Vec<_>>() {
            out.set_occupied(c, true).expect("blocked cells are in bounds");
        }
        out
    }
}

fn check_reel(map: &VoxelMap, reel: Point3) -> Result<()> {
    if !reel.is_finite() || !map.is_free(reel) {
        return Err(Error::InvalidReel(reel.to_string()));
    }
    Ok(())
}

fn check_same_grid(map: &VoxelMap, original: &VoxelMap) -> Result<()> {
    if map.dims() != original.dims()
        || map.resolution() != original.resolution()
        || map.origin() != original.origin()
    {
        return Err(Error::Validation(
            "inflated and original maps must share resolution, dims and origin".into(),
        ));
    }
    Ok(())
}

/// Block every free cell of `map` whose center has no line of sight to the
/// reel through `original`.
pub fn reduce_reachable_space(map: &VoxelMap, original: &VoxelMap, reel: Point3) -> Result<ReducedMap> {
    check_same_grid(map, original)?;
    check_reel(map, reel)?;
    let reel_cell = map.cell_of(reel).map(|c| map.linear(c));
    let blocked: Vec<bool> = (0..map.cell_count())
        .into_par_iter()
        .map(|idx| {
            if map.occupied_linear(idx) || Some(idx) == reel_cell {
                return false;
            }
            original.segment_collides(reel, map.center(map.from_linear(idx)))
        })
        .collect();
    Ok(ReducedMap {
        base: map.clone(),
        reel,
        blocked,
    })
}

/// Share of the base map's free cells that stay reachable.
pub fn reachability_fraction(reduced: &ReducedMap) -> Result<f64> {
    let free = reduced.base.free_count();
    if free == 0 {
        return Err(Error::UndefinedFraction);
    }
    Ok(reduced.reachable_count() as f64 / free as f64)
}

/// Planning space for a straight tether. A point is free when its cell is
/// reachable and the tether to it clears every original obstacle; a segment
/// is free when the whole tether sweep (the triangle reel, a, b) does.
pub struct ReachableSpace {
    occupancy: VoxelMap,
    reel: Point3,
    obstacles: Vec<(Point3, Point3)>,
}

impl ReachableSpace {
    pub fn new(reduced: &ReducedMap, original: &VoxelMap) -> Self {
        ReachableSpace {
            occupancy: reduced.to_occupancy(),
            reel: reduced.reel,
            obstacles: original.occupied_cells().map(|c| original.cell_bounds(c)).collect(),
        }
    }

    pub fn reel(&self) -> Point3 {
        self.reel
    }

    /// Whether the tether sweep from the reel over `[a, b]` clears every
    /// original obstacle.
    pub fn sweep_clear(&self, a: Point3, b: Point3) -> bool {
        let tri = [self.reel, a, b];
        let lo = a.component_min(b).component_min(self.reel);
        let hi = a.component_max(b).component_max(self.reel);
        self.obstacles.iter().all(|&(blo, bhi)| {
            let disjoint = (0..3).any(|ax| bhi.axis(ax) < lo.axis(ax) - TETHER_TOL || blo.axis(ax) > hi.axis(ax) + TETHER_TOL);
            disjoint || !triangle_box_overlap(tri, blo, bhi, TETHER_TOL)
        })
    }
}

impl FreeSpace for ReachableSpace {
    fn bounds(&self) -> (Point3, Point3) {
        self.occupancy.bounds()
    }

    fn point_free(&self, p: Point3) -> bool {
        self.occupancy.is_free(p) && self.sweep_clear(p, p)
    }

    fn segment_free(&self, a: Point3, b: Point3) -> bool {
        self.occupancy.segment_free(a, b) && self.sweep_clear(a, b)
    }

    fn has_free_space(&self) -> bool {
        self.occupancy.has_free_space()
    }
}

/// Plan through `stops` inside the straight-tether reachable space. Every
/// waypoint is annotated with the reel.
pub fn plan_raycast(
    map: &VoxelMap,
    original: &VoxelMap,
    reel: Point3,
    stops: &[Point3],
    config: &PlannerConfig,
) -> Result<AnnotatedPath> {
    let reduced = reduce_reachable_space(map, original, reel)?;
    plan_raycast_in(&reduced, original, stops, config)
}

/// [`plan_raycast`] on a precomputed reduction.
pub fn plan_raycast_in(
    reduced: &ReducedMap,
    original: &VoxelMap,
    stops: &[Point3],
    config: &PlannerConfig,
) -> Result<AnnotatedPath> {
    if stops.is_empty() {
        return Err(Error::Validation("route needs at least one stop".into()));
    }
    let space = ReachableSpace::new(reduced, original);
    for &p in stops {
        if !reduced.base.is_free(p) {
            return Err(Error::InvalidEndpoint(p.to_string()));
        }
        if !space.point_free(p) {
            return Err(Error::TetherBlockedEndpoint(p.to_string()));
        }
    }
    let roadmap = build_prm(&space, config.prm)?;
    let path = plan_route(&roadmap, &space, stops, config)?;
    Ok(AnnotatedPath::straight(reduced.reel, &path.waypoints))
}

//! Contact-point planning and relaxation over a smoothed path.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{strictly_inside_triangle, Plane, Point3};
use crate::plan::{AnnotatedPath, AnnotatedWaypoint};
use crate::prm::{build_prm, densify, plan_route, smooth_path, Path, PlannerConfig, ShortestPathTree};
use crate::stack::ContactStack;
use crate::voxel_map::{CellIndex, VoxelMap};

/// Corner nudge as a fraction of the cell edge.
pub const NUDGE_FRACTION: f64 = 0.01;

/// Max spacing of the fan samples between the last visible and the first
/// blocked waypoint, as a fraction of the cell edge.
pub const FAN_FRACTION: f64 = 0.25;

/// How many times a pipeline halves the waypoint spacing after an
/// unresolvable contact.
pub const DENSIFY_RETRIES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactEvent {
    /// `depth` is the stack depth after the push.
    Push { waypoint: usize, depth: usize, point: Point3 },
    /// `depth` is the stack depth after the pop.
    Pop { waypoint: usize, depth: usize, point: Point3 },
}

impl ContactEvent {
    pub fn waypoint(&self) -> usize {
        match *self {
            ContactEvent::Push { waypoint, .. } | ContactEvent::Pop { waypoint, .. } => waypoint,
        }
    }

    pub fn is_push(&self) -> bool {
        matches!(self, ContactEvent::Push { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactPlan {
    pub path: AnnotatedPath,
    pub events: Vec<ContactEvent>,
    pub max_depth: usize,
}

impl ContactPlan {
    pub fn pushes(&self) -> usize {
        self.events.iter().filter(|e| e.is_push()).count()
    }

    pub fn pops(&self) -> usize {
        self.events.len() - self.pushes()
    }
}

/// True iff some occupied cell center lies strictly inside triangle
/// `(a, b, c)` in each of the three axis-plane projections.
pub fn obstacle_confined(a: Point3, b: Point3, c: Point3, map: &VoxelMap) -> bool {
    let lo = a.component_min(b).component_min(c);
    let hi = a.component_max(b).component_max(c);
    map.occupied_cells().any(|cell| {
        let p = map.center(cell);
        let inside_box = (0..3).all(|ax| p.axis(ax) > lo.axis(ax) && p.axis(ax) < hi.axis(ax));
        inside_box
            && Plane::ALL.iter().all(|&pl| {
                strictly_inside_triangle(pl.project(p), pl.project(a), pl.project(b), pl.project(c))
            })
    })
}

/// The eight corners of `cell`, each pushed outward by `eps` per axis.
pub fn nudged_corners(map: &VoxelMap, cell: CellIndex, eps: f64) -> [Point3; 8] {
    let (lo, hi) = map.cell_bounds(cell);
    std::array::from_fn(|s| {
        let pick = |bit: usize, l: f64, h: f64| {
            if s >> bit & 1 == 1 {
                h + eps
            } else {
                l - eps
            }
        };
        Point3::new(pick(0, lo.x, hi.x), pick(1, lo.y, hi.y), pick(2, lo.z, hi.z))
    })
}

/// Occupied cells touched by the fan of tether segments from `top` to
/// points along `[visible, blocked]`, in linear index order.
pub fn swept_cells(top: Point3, visible: Point3, blocked: Point3, map: &VoxelMap) -> Vec<CellIndex> {
    let step = map.resolution() * FAN_FRACTION;
    let n = (visible.distance(blocked) / step).ceil().max(1.0) as usize;
    let mut cells = BTreeSet::new();
    for s in 0..=n {
        let q = visible.lerp(blocked, s as f64 / n as f64);
        for c in map.cells_on_segment(top, q) {
            if map.is_occupied(c) {
                cells.insert(map.linear(c));
            }
        }
    }
    cells.into_iter().map(|i| map.from_linear(i)).collect()
}

fn inside_bounds(map: &VoxelMap, p: Point3) -> bool {
    let (lo, hi) = (map.origin(), map.upper_corner());
    (0..3).all(|ax| p.axis(ax) > lo.axis(ax) && p.axis(ax) < hi.axis(ax))
}

/// New contact for a tether from `top` that saw `visible` but not
/// `blocked`. Chosen among nudged corners of the swept obstacle cells as the
/// one with the shortest wrap that clears both legs.
pub fn find_contact_point(top: Point3, visible: Point3, blocked: Point3, map: &VoxelMap) -> Result<Point3> {
    if map.segment_collides(top, visible) {
        return Err(Error::Precondition(format!("{visible} is not visible from contact {top}")));
    }
    if !map.segment_collides(top, blocked) {
        return Err(Error::Precondition(format!("{blocked} is already visible from contact {top}")));
    }
    let eps = map.resolution() * NUDGE_FRACTION;
    let mut best: Option<(f64, Point3)> = None;
    for cell in swept_cells(top, visible, blocked, map) {
        for cp in nudged_corners(map, cell, eps) {
            if !inside_bounds(map, cp) {
                continue;
            }
            let cost = top.distance(cp) + cp.distance(blocked);
            if best.is_some_and(|(b, _)| cost >= b) {
                continue;
            }
            if !map.segment_collides(top, cp) && !map.segment_collides(cp, blocked) {
                best = Some((cost, cp));
            }
        }
    }
    best.map(|(_, cp)| cp)
        .ok_or(Error::ContactUnresolvable { waypoint: 0 })
}

/// Annotate `path` with tether contacts. Tether checks use `original`;
/// the path must be valid in `inflated`.
pub fn plan_contacts(
    original: &VoxelMap,
    inflated: &VoxelMap,
    path: &Path,
    tether_origin: Point3,
) -> Result<ContactPlan> {
    let wps = &path.waypoints;
    if wps.is_empty() {
        return Err(Error::Validation("path has no waypoints".into()));
    }
    if !path.is_valid_in(inflated) {
        return Err(Error::Validation("path is not collision-free in the inflated map".into()));
    }
    if !original.is_free(tether_origin) {
        return Err(Error::InvalidReel(tether_origin.to_string()));
    }
    if original.segment_collides(tether_origin, wps[0]) {
        return Err(Error::Validation(format!(
            "first waypoint {} is not visible from the tether origin",
            wps[0]
        )));
    }

    let mut contacts = vec![tether_origin; wps.len()];
    let mut stack = ContactStack::new(tether_origin);
    let mut events = Vec::new();
    let mut max_depth = 1;

    for (i, &wp) in wps.iter().enumerate() {
        let current = stack.top();
        let mut relaxed = false;
        if let Some(last) = stack.below_top() {
            if !original.segment_collides(last, wp) && !obstacle_confined(current, last, wp, original) {
                stack.pop();
                events.push(ContactEvent::Pop {
                    waypoint: i,
                    depth: stack.depth(),
                    point: current,
                });
                contacts[i..].fill(stack.top());
                relaxed = true;
            }
        }
        if !relaxed && original.segment_collides(current, wp) {
            let cp = find_contact_point(current, wps[i - 1], wp, original).map_err(|e| match e {
                Error::ContactUnresolvable { .. } => Error::ContactUnresolvable { waypoint: i },
                other => other,
            })?;
            stack.push(cp);
            max_depth = max_depth.max(stack.depth());
            events.push(ContactEvent::Push {
                waypoint: i,
                depth: stack.depth(),
                point: cp,
            });
            contacts[i..].fill(cp);
        }
    }

    let records = wps
        .iter()
        .zip(contacts)
        .map(|(&waypoint, contact)| AnnotatedWaypoint { waypoint, contact })
        .collect();
    Ok(ContactPlan {
        path: AnnotatedPath {
            tether_origin,
            records,
        },
        events,
        max_depth,
    })
}

/// [`plan_contacts`], retrying on a denser copy of the path when a contact
/// cannot be placed.
pub fn plan_contacts_densifying(
    original: &VoxelMap,
    inflated: &VoxelMap,
    path: &Path,
    tether_origin: Point3,
    step_max: f64,
) -> Result<ContactPlan> {
    let mut step = step_max;
    let mut attempt = plan_contacts(original, inflated, path, tether_origin);
    for _ in 0..DENSIFY_RETRIES {
        match attempt {
            Err(Error::ContactUnresolvable { .. }) => {
                step *= 0.5;
                attempt = plan_contacts(original, inflated, &densify(path, step), tether_origin);
            }
            _ => break,
        }
    }
    attempt
}

fn check_stops(inflated: &VoxelMap, stops: &[Point3]) -> Result<()> {
    if stops.is_empty() {
        return Err(Error::Validation("route needs at least one stop".into()));
    }
    for &p in stops {
        if !inflated.is_free(p) {
            return Err(Error::InvalidEndpoint(p.to_string()));
        }
    }
    Ok(())
}

/// Full contact pipeline: roadmap in the inflated map, route through all
/// stops, then contact annotation over the concatenated path.
pub fn plan_with_contacts(
    original: &VoxelMap,
    inflated: &VoxelMap,
    tether_origin: Point3,
    stops: &[Point3],
    config: &PlannerConfig,
) -> Result<ContactPlan> {
    check_stops(inflated, stops)?;
    let roadmap = build_prm(inflated, config.prm)?;
    let path = plan_route(&roadmap, inflated, stops, config)?;
    plan_contacts_densifying(original, inflated, &path, tether_origin, config.smooth.step_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coverage {
    pub free_cells: usize,
    pub covered: usize,
    /// Free cells with no plan, in linear index order.
    pub failures: Vec<CellIndex>,
}

impl Coverage {
    pub fn fraction(&self) -> Result<f64> {
        if self.free_cells == 0 {
            return Err(Error::UndefinedFraction);
        }
        Ok(self.covered as f64 / self.free_cells as f64)
    }
}

/// Try to plan from `start` to the center of every free cell of `inflated`.
pub fn contact_coverage(
    original: &VoxelMap,
    inflated: &VoxelMap,
    tether_origin: Point3,
    start: Point3,
    config: &PlannerConfig,
) -> Result<Coverage> {
    use rayon::prelude::*;

    if inflated.free_count() == 0 {
        return Err(Error::UndefinedFraction);
    }
    check_stops(inflated, &[start])?;
    let roadmap = build_prm(inflated, config.prm)?;
    let tree = ShortestPathTree::new(&roadmap, inflated, start)?;
    let free: Vec<usize> = (0..inflated.cell_count())
        .filter(|&i| !inflated.occupied_linear(i))
        .collect();
    let ok: Vec<bool> = free
        .par_iter()
        .map(|&idx| {
            let goal = inflated.center(inflated.from_linear(idx));
            let planned = tree.path_to(inflated, goal).and_then(|raw| {
                let smooth = smooth_path(&raw, inflated, config.prm.seed ^ idx as u64, config.smooth);
                plan_contacts_densifying(original, inflated, &smooth, tether_origin, config.smooth.step_max)
            });
            planned.is_ok()
        })
        .collect();
    let failures: Vec<CellIndex> = free
        .iter()
        .zip(&ok)
        .filter(|(_, &ok)| !ok)
        .map(|(&i, _)| inflated.from_linear(i))
        .collect();
    Ok(Coverage {
        free_cells: free.len(),
        covered: free.len() - failures.len(),
        failures,
    })
}

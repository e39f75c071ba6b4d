//! Binary 3-D occupancy grid.
//!
//! Cells are closed boxes `[origin + res * (i, j, k), origin + res * (i+1, j+1, k+1)]`.
//! Segment queries walk the supercover of the segment: every cell whose
//! closed box the closed segment touches, corner and face grazes included.
//! That makes [`VoxelMap::segment_collides`] conservative: touching an
//! occupied cell counts as a collision.

use std::collections::HashSet;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Grid-coordinate distance within which a point counts as lying on a cell
/// boundary plane.
const PLANE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl CellIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        CellIndex { i, j, k }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelMap {
    resolution: f64,
    dims: [usize; 3],
    origin: Point3,
    occupied: Vec<bool>,
    inflated_by: f64,
}

impl VoxelMap {
    /// An all-free map.
    pub fn new(resolution: f64, dims: [usize; 3], origin: Point3) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::Validation(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Validation(format!(
                "dims must be at least 1 on every axis, got {dims:?}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::Validation("origin must be finite".into()));
        }
        let len = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::Validation(format!("dims {dims:?} overflow")))?;
        Ok(VoxelMap {
            resolution,
            dims,
            origin,
            occupied: vec![false; len],
            inflated_by: 0.0,
        })
    }

    pub fn with_occupied<I>(mut self, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = CellIndex>,
    {
        for c in cells {
            self.set_occupied(c, true)?;
        }
        Ok(self)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn inflated_by(&self) -> f64 {
        self.inflated_by
    }

    pub fn cell_count(&self) -> usize {
        self.occupied.len()
    }

    /// Max corner of the map bounds.
    pub fn upper_corner(&self) -> Point3 {
        self.origin
            + Point3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.resolution
    }

    pub fn in_bounds(&self, c: CellIndex) -> bool {
        c.i < self.dims[0] && c.j < self.dims[1] && c.k < self.dims[2]
    }

    pub fn linear(&self, c: CellIndex) -> usize {
        debug_assert!(self.in_bounds(c));
        c.i + self.dims[0] * (c.j + self.dims[1] * c.k)
    }

    pub fn from_linear(&self, idx: usize) -> CellIndex {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        CellIndex::new(i, rest % self.dims[1], rest / self.dims[1])
    }

    pub fn set_occupied(&mut self, c: CellIndex, occupied: bool) -> Result<()> {
        if !self.in_bounds(c) {
            return Err(Error::Validation(format!(
                "cell [{}, {}, {}] outside dims {:?}",
                c.i, c.j, c.k, self.dims
            )));
        }
        let idx = self.linear(c);
        self.occupied[idx] = occupied;
        Ok(())
    }

    /// Out-of-bounds cells are reported unoccupied; use [`VoxelMap::is_free`]
    /// for the conservative point query.
    pub fn is_occupied(&self, c: CellIndex) -> bool {
        self.in_bounds(c) && self.occupied[self.linear(c)]
    }

    pub(crate) fn occupied_linear(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(idx, _)| self.from_linear(idx))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn free_count(&self) -> usize {
        self.cell_count() - self.occupied_count()
    }

    /// Cell containing `p`, if inside the map bounds.
    pub fn cell_of(&self, p: Point3) -> Option<CellIndex> {
        let u = self.to_grid(p);
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            let v = u[axis];
            if !(v >= 0.0 && v < self.dims[axis] as f64) {
                return None;
            }
            idx[axis] = (v.floor() as usize).min(self.dims[axis] - 1);
        }
        Some(CellIndex::new(idx[0], idx[1], idx[2]))
    }

    pub fn center(&self, c: CellIndex) -> Point3 {
        self.origin
            + Point3::new(c.i as f64 + 0.5, c.j as f64 + 0.5, c.k as f64 + 0.5) * self.resolution
    }

    /// Min and max corners of a cell.
    pub fn cell_bounds(&self, c: CellIndex) -> (Point3, Point3) {
        let lo = self.origin + Point3::new(c.i as f64, c.j as f64, c.k as f64) * self.resolution;
        (lo, lo + Point3::splat(self.resolution))
    }

    /// True iff `p` is inside the map and its cell is unoccupied.
    pub fn is_free(&self, p: Point3) -> bool {
        match self.cell_of(p) {
            Some(c) => !self.is_occupied(c),
            None => false,
        }
    }

    fn to_grid(&self, p: Point3) -> [f64; 3] {
        let d = (p - self.origin) * (1.0 / self.resolution);
        [d.x, d.y, d.z]
    }

    /// Grow every occupied cell by `radius` meters, measured between cell
    /// centers.
    pub fn inflate(&self, radius: f64) -> Result<VoxelMap> {
        if radius.is_nan() || radius < 0.0 || !radius.is_finite() {
            return Err(Error::Validation(format!(
                "inflation radius must be non-negative, got {radius}"
            )));
        }
        let reach = radius / self.resolution;
        let limit = reach * reach + 1e-9;
        let span = reach.floor() as i64;
        let mut offsets = Vec::new();
        for dk in -span..=span {
            for dj in -span..=span {
                for di in -span..=span {
                    if ((di * di + dj * dj + dk * dk) as f64) <= limit {
                        offsets.push((di, dj, dk));
                    }
                }
            }
        }
        let mut out = self.clone();
        out.inflated_by = self.inflated_by + radius;
        let dims = self.dims.map(|d| d as i64);
        for c in self.occupied_cells() {
            for &(di, dj, dk) in &offsets {
                let (i, j, k) = (c.i as i64 + di, c.j as i64 + dj, c.k as i64 + dk);
                if i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2] {
                    continue;
                }
                let n = CellIndex::new(i as usize, j as usize, k as usize);
                let idx = out.linear(n);
                out.occupied[idx] = true;
            }
        }
        Ok(out)
    }

    /// Whether the closed segment `[a, b]` touches any occupied cell.
    pub fn segment_collides(&self, a: Point3, b: Point3) -> bool {
        self.walk_segment(a, b, |idx| {
            if self.occupied[idx] {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .is_break()
    }

    /// In-bounds supercover cells of `[a, b]`, ordered from `a` to `b`.
    pub fn cells_on_segment(&self, a: Point3, b: Point3) -> Vec<CellIndex> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let _ = self.walk_segment(a, b, |idx| {
            if seen.insert(idx) {
                out.push(self.from_linear(idx));
            }
            ControlFlow::<()>::Continue(())
        });
        out
    }

    /// Visit the linear index of every in-bounds cell touched by `[a, b]`.
    /// Cells come in segment order; a cell may be reported more than once
    /// when the segment runs along a boundary.
    pub(crate) fn walk_segment<B>(
        &self,
        a: Point3,
        b: Point3,
        mut visit: impl FnMut(usize) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let ua = self.to_grid(a);
        let ub = self.to_grid(b);
        let d = [ub[0] - ua[0], ub[1] - ua[1], ub[2] - ua[2]];

        // Skip the walk entirely when the segment misses the grid box.
        for axis in 0..3 {
            let (lo, hi) = (ua[axis].min(ub[axis]), ua[axis].max(ub[axis]));
            if hi < -PLANE_TOL || lo > self.dims[axis] as f64 + PLANE_TOL {
                return ControlFlow::Continue(());
            }
        }

        let mut events = vec![0.0, 1.0];
        for axis in 0..3 {
            if d[axis] == 0.0 {
                continue;
            }
            let (lo, hi) = (ua[axis].min(ub[axis]), ua[axis].max(ub[axis]));
            let first = lo.ceil().max(0.0) as i64;
            let last = hi.floor().min(self.dims[axis] as f64) as i64;
            for plane in first..=last {
                let t = (plane as f64 - ua[axis]) / d[axis];
                if (0.0..=1.0).contains(&t) {
                    events.push(t);
                }
            }
        }
        events.sort_by(|x, y| x.total_cmp(y));
        events.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);

        let at = |t: f64| [ua[0] + d[0] * t, ua[1] + d[1] * t, ua[2] + d[2] * t];
        for (n, &t) in events.iter().enumerate() {
            self.visit_point_cells(at(t), &mut visit)?;
            if let Some(&next) = events.get(n + 1) {
                self.visit_point_cells(at(0.5 * (t + next)), &mut visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    /// Every in-bounds cell whose closed box contains grid point `u`.
    fn visit_point_cells<B>(
        &self,
        u: [f64; 3],
        visit: &mut impl FnMut(usize) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let mut ranges = [(0i64, 0i64); 3];
        for axis in 0..3 {
            let v = u[axis];
            let r = v.round();
            ranges[axis] = if (v - r).abs() <= PLANE_TOL {
                (r as i64 - 1, r as i64)
            } else {
                (v.floor() as i64, v.floor() as i64)
            };
            let n = self.dims[axis] as i64;
            ranges[axis].0 = ranges[axis].0.max(0);
            ranges[axis].1 = ranges[axis].1.min(n - 1);
            if ranges[axis].0 > ranges[axis].1 {
                return ControlFlow::Continue(());
            }
        }
        for k in ranges[2].0..=ranges[2].1 {
            for j in ranges[1].0..=ranges[1].1 {
                for i in ranges[0].0..=ranges[0].1 {
                    let idx = i as usize + self.dims[0] * (j as usize + self.dims[1] * k as usize);
                    visit(idx)?;
                }
            }
        }
        ControlFlow::Continue(())
    }
}

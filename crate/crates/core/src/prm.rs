//! Probabilistic roadmap over any [`FreeSpace`], with uniform-cost queries
//! and random shortcut smoothing.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point3};
use crate::voxel_map::VoxelMap;

/// Configuration space the roadmap lives in.
pub trait FreeSpace: Sync {
    /// Axis-aligned sampling box.
    fn bounds(&self) -> (Point3, Point3);
    fn point_free(&self, p: Point3) -> bool;
    fn segment_free(&self, a: Point3, b: Point3) -> bool;
    /// Cheap emptiness check used before sampling.
    fn has_free_space(&self) -> bool;
}

impl FreeSpace for VoxelMap {
    fn bounds(&self) -> (Point3, Point3) {
        (self.origin(), self.upper_corner())
    }

    fn point_free(&self, p: Point3) -> bool {
        self.is_free(p)
    }

    fn segment_free(&self, a: Point3, b: Point3) -> bool {
        self.is_free(a) && self.is_free(b) && !self.segment_collides(a, b)
    }

    fn has_free_space(&self) -> bool {
        self.free_count() > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrmParams {
    pub n_samples: usize,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for PrmParams {
    fn default() -> Self {
        PrmParams {
            n_samples: 2000,
            k_neighbors: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothParams {
    pub iterations: usize,
    /// Max spacing between consecutive waypoints after densification.
    pub step_max: f64,
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            iterations: 200,
            step_max: 0.2,
        }
    }
}

/// Number of roadmap vertices a query endpoint is attached to.
pub const ATTACH_NEIGHBORS: usize = 10;

/// Rejection sampling gives up after this many attempts per requested sample.
pub const ATTEMPTS_PER_SAMPLE: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Roadmap {
    pub vertices: Vec<Point3>,
    /// Undirected edges `(a, b, length)` with `a < b`, in insertion order.
    pub edges: Vec<(usize, usize, f64)>,
    pub params: PrmParams,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Roadmap {
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Vertex indices sorted by distance to `p`, ties broken by index.
    fn by_distance(&self, p: Point3) -> Vec<(f64, usize)> {
        let mut order: Vec<(f64, usize)> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.distance(p), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order
    }

    /// Up to `count` nearest vertices with a free straight connection to `p`.
    pub fn visible_neighbors<S: FreeSpace + ?Sized>(
        &self,
        space: &S,
        p: Point3,
        count: usize,
    ) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(count);
        for (d, i) in self.by_distance(p) {
            if out.len() == count {
                break;
            }
            if space.segment_free(p, self.vertices[i]) {
                out.push((i, d));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Point3>,
}

impl Path {
    pub fn new(waypoints: Vec<Point3>) -> Self {
        Path { waypoints }
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.waypoints)
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Every waypoint is free and every consecutive segment is collision-free.
    pub fn is_valid_in<S: FreeSpace + ?Sized>(&self, space: &S) -> bool {
        !self.waypoints.is_empty()
            && self.waypoints.iter().all(|&p| space.point_free(p))
            && self.waypoints.windows(2).all(|w| space.segment_free(w[0], w[1]))
    }
}

pub fn build_prm<S: FreeSpace + ?Sized>(space: &S, params: PrmParams) -> Result<Roadmap> {
    if params.n_samples < 2 {
        return Err(Error::Validation("n_samples must be at least 2".into()));
    }
    if params.k_neighbors < 1 {
        return Err(Error::Validation("k_neighbors must be at least 1".into()));
    }
    if !space.has_free_space() {
        return Err(Error::NoFreeSpace);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (lo, hi) = space.bounds();
    let budget = ATTEMPTS_PER_SAMPLE * params.n_samples;
    let mut vertices = Vec::with_capacity(params.n_samples);
    let mut attempts = 0;
    while vertices.len() < params.n_samples {
        if attempts == budget {
            return Err(Error::SamplingExhausted {
                attempts,
                accepted: vertices.len(),
                requested: params.n_samples,
            });
        }
        attempts += 1;
        let p = Point3::new(
            rng.gen_range(lo.x..hi.x),
            rng.gen_range(lo.y..hi.y),
            rng.gen_range(lo.z..hi.z),
        );
        if space.point_free(p) {
            vertices.push(p);
        }
    }

    let n = vertices.len();
    let k = params.k_neighbors.min(n - 1);
    let mut tested = HashSet::new();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        candidates.clear();
        candidates.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (vertices[i].distance(vertices[j]), j)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, cmp);
            candidates.truncate(k);
        }
        candidates.sort_by(cmp);
        for &(d, j) in candidates.iter() {
            let key = (i.min(j), i.max(j));
            if !tested.insert(key) {
                continue;
            }
            if space.segment_free(vertices[i], vertices[j]) {
                edges.push((key.0, key.1, d));
                adjacency[i].push((j, d));
                adjacency[j].push((i, d));
            }
        }
    }

    Ok(Roadmap {
        vertices,
        edges,
        params,
        adjacency,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Uniform-cost search tree rooted at a query start. Answers many goal
/// queries against one roadmap without re-running the search.
#[derive(Clone, Debug)]
pub struct ShortestPathTree<'a> {
    roadmap: &'a Roadmap,
    start: Point3,
    cost: Vec<f64>,
    /// Predecessor vertex; `None` for vertices attached directly to start.
    parent: Vec<Option<usize>>,
}

impl<'a> ShortestPathTree<'a> {
    pub fn new<S: FreeSpace + ?Sized>(roadmap: &'a Roadmap, space: &S, start: Point3) -> Result<Self> {
        if !space.point_free(start) {
            return Err(Error::InvalidEndpoint(format!("start {start}")));
        }
        let n = roadmap.vertices.len();
        let mut cost = vec![f64::INFINITY; n];
        let mut parent = vec![None; n];
        let mut heap = BinaryHeap::new();
        for (v, d) in roadmap.visible_neighbors(space, start, ATTACH_NEIGHBORS) {
            if d < cost[v] {
                cost[v] = d;
                heap.push(Frontier { cost: d, vertex: v });
            }
        }
        while let Some(Frontier { cost: c, vertex }) = heap.pop() {
            if c > cost[vertex] {
                continue;
            }
            for &(next, w) in roadmap.neighbors(vertex) {
                let nc = c + w;
                if nc < cost[next] {
                    cost[next] = nc;
                    parent[next] = Some(vertex);
                    heap.push(Frontier {
                        cost: nc,
                        vertex: next,
                    });
                }
            }
        }
        Ok(ShortestPathTree {
            roadmap,
            start,
            cost,
            parent,
        })
    }

    pub fn start(&self) -> Point3 {
        self.start
    }

    /// Shortest roadmap path from the tree's start to `goal`.
    pub fn path_to<S: FreeSpace + ?Sized>(&self, space: &S, goal: Point3) -> Result<Path> {
        if !space.point_free(goal) {
            return Err(Error::InvalidEndpoint(format!("goal {goal}")));
        }
        if goal == self.start {
            return Ok(Path::new(vec![self.start]));
        }
        let best = self
            .roadmap
            .visible_neighbors(space, goal, ATTACH_NEIGHBORS)
            .into_iter()
            .filter(|&(v, _)| self.cost[v].is_finite())
            .map(|(v, d)| (self.cost[v] + d, v))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((_, mut v)) = best else {
            return Err(Error::NoPath {
                from: self.start.to_string(),
                to: goal.to_string(),
            });
        };
        let mut chain = vec![goal, self.roadmap.vertices[v]];
        while let Some(p) = self.parent[v] {
            v = p;
            chain.push(self.roadmap.vertices[v]);
        }
        chain.push(self.start);
        chain.reverse();
        Ok(Path::new(chain))
    }
}

/// Shortest path from `start` to `goal` through the roadmap.
pub fn query_path<S: FreeSpace + ?Sized>(
    roadmap: &Roadmap,
    space: &S,
    start: Point3,
    goal: Point3,
) -> Result<Path> {
    if !space.point_free(goal) {
        return Err(Error::InvalidEndpoint(format!("goal {goal}")));
    }
    ShortestPathTree::new(roadmap, space, start)?.path_to(space, goal)
}

/// Random shortcutting for a fixed budget. Endpoints are preserved and the
/// length never grows.
pub fn shortcut<S: FreeSpace + ?Sized>(path: &Path, space: &S, iterations: usize, seed: u64) -> Path {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = path.waypoints.clone();
    for _ in 0..iterations {
        if pts.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..pts.len() - 2);
        let j = rng.gen_range(i + 2..pts.len());
        let direct = pts[i].distance(pts[j]);
        let current = polyline_length(&pts[i..=j]);
        if direct <= current && space.segment_free(pts[i], pts[j]) {
            pts.drain(i + 1..j);
        }
    }
    Path::new(pts)
}

/// Insert evenly spaced points so no segment is longer than `step_max`.
pub fn densify(path: &Path, step_max: f64) -> Path {
    let Some(&first) = path.waypoints.first() else {
        return path.clone();
    };
    let mut out = vec![first];
    for w in path.waypoints.windows(2) {
        let pieces = (w[0].distance(w[1]) / step_max).ceil().max(1.0) as usize;
        for s in 1..=pieces {
            out.push(if s == pieces {
                w[1]
            } else {
                w[0].lerp(w[1], s as f64 / pieces as f64)
            });
        }
    }
    Path::new(out)
}

/// Shortcut, then densify.
pub fn smooth_path<S: FreeSpace + ?Sized>(path: &Path, space: &S, seed: u64, params: SmoothParams) -> Path {
    densify(&shortcut(path, space, params.iterations, seed), params.step_max)
}

/// Roadmap and smoothing settings shared by both planners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub prm: PrmParams,
    pub smooth: SmoothParams,
}

/// Plan through every stop in order on one roadmap and concatenate the
/// smoothed legs into a single path.
pub fn plan_route<S: FreeSpace + ?Sized>(
    roadmap: &Roadmap,
    space: &S,
    stops: &[Point3],
    config: &PlannerConfig,
) -> Result<Path> {
    let Some(&first) = stops.first() else {
        return Err(Error::Validation("route needs at least one stop".into()));
    };
    let mut waypoints = vec![first];
    for (leg, pair) in stops.windows(2).enumerate() {
        let raw = query_path(roadmap, space, pair[0], pair[1])?;
        let seed = config.prm.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(leg as u64 + 1));
        let smooth = smooth_path(&raw, space, seed, config.smooth);
        waypoints.extend_from_slice(&smooth.waypoints[1..]);
    }
    Ok(Path::new(waypoints))
}

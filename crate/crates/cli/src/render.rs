//! SVG figure and matching data table for a plan and its executions.
//!
//! Three orthographic panels (xy, yz, xz) side by side. Elements carry a
//! `class` so the figure can be restyled or checked without parsing paths.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use tetherplan::executor::Trajectory;
use tetherplan::geometry::Plane;
use tetherplan::{AnnotatedPath, CellIndex, Point3, ReducedMap, VoxelMap};

const SCALE: f64 = 120.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

pub struct Scene<'a> {
    pub original: &'a VoxelMap,
    pub inflated: &'a VoxelMap,
    pub reduced: Option<&'a ReducedMap>,
    pub plan: &'a AnnotatedPath,
    pub trajectories: &'a [Trajectory],
}

fn plane_axes(plane: Plane) -> (usize, usize) {
    match plane {
        Plane::Xy => (0, 1),
        Plane::Yz => (1, 2),
        Plane::Xz => (0, 2),
    }
}

struct Panel {
    plane: Plane,
    x0: f64,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Panel {
    fn width(&self) -> f64 {
        (self.hi.0 - self.lo.0) * SCALE
    }

    fn height(&self) -> f64 {
        (self.hi.1 - self.lo.1) * SCALE
    }

    fn to_px(&self, p: (f64, f64)) -> (f64, f64) {
        (
            self.x0 + (p.0 - self.lo.0) * SCALE,
            MARGIN + (self.hi.1 - p.1) * SCALE,
        )
    }

    fn point(&self, p: Point3) -> (f64, f64) {
        self.to_px(self.plane.project(p))
    }
}

fn panels(map: &VoxelMap) -> Vec<Panel> {
    let (lo, hi) = (map.origin(), map.upper_corner());
    let mut x0 = MARGIN;
    Plane::ALL
        .iter()
        .map(|&plane| {
            let (a, b) = plane_axes(plane);
            let panel = Panel {
                plane,
                x0,
                lo: (lo.axis(a), lo.axis(b)),
                hi: (hi.axis(a), hi.axis(b)),
            };
            x0 += panel.width() + MARGIN;
            panel
        })
        .collect()
}

/// Distinct projected footprints of `cells` in one plane.
fn footprint(cells: impl Iterator<Item = CellIndex>, plane: Plane) -> BTreeSet<(usize, usize)> {
    let (a, b) = plane_axes(plane);
    cells
        .map(|c| {
            let ix = [c.i, c.j, c.k];
            (ix[a], ix[b])
        })
        .collect()
}

fn cells_svg(out: &mut String, panel: &Panel, map: &VoxelMap, set: &BTreeSet<(usize, usize)>, class: &str) {
    let (a, b) = plane_axes(panel.plane);
    let res = map.resolution();
    let org = map.origin();
    let side = res * SCALE;
    for &(u, v) in set {
        let lo = (org.axis(a) + u as f64 * res, org.axis(b) + (v + 1) as f64 * res);
        let (x, y) = panel.to_px(lo);
        let _ = writeln!(
            out,
            r#"<rect class="{class}" x="{x:.3}" y="{y:.3}" width="{side:.3}" height="{side:.3}"/>"#
        );
    }
}

fn polyline_svg(out: &mut String, panel: &Panel, points: impl Iterator<Item = Point3>, attrs: &str) {
    let pts: Vec<String> = points
        .map(|p| {
            let (x, y) = panel.point(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(out, r#"<polyline {attrs} fill="none" points="{}"/>"#, pts.join(" "));
}

pub fn svg(scene: &Scene) -> String {
    let map = scene.original;
    let panels = panels(map);
    let width = panels.last().map(|p| p.x0 + p.width() + MARGIN).unwrap_or(MARGIN);
    let height = panels.iter().map(Panel::height).fold(0.0, f64::max) + 2.0 * MARGIN;

    let inflation: Vec<CellIndex> = scene
        .inflated
        .occupied_cells()
        .filter(|&c| !map.is_occupied(c))
        .collect();
    let blocked: Vec<CellIndex> = scene.reduced.map(|r| r.blocked_cells().collect()).unwrap_or_default();
    let contacts = scene.plan.distinct_contacts();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    out.push_str(
        "<style>.obstacle{fill:#444}.inflation{fill:#bbb}.blocked{fill:#f4c7c3}\
         .planned{stroke:#000;stroke-width:1.5}.contact{fill:#d62728}.reel{fill:#17becf}\
         .executed{stroke-width:1;stroke-opacity:0.8}</style>\n",
    );
    for panel in &panels {
        let _ = writeln!(out, r#"<g class="panel" data-plane="{}">"#, panel.plane.name());
        let _ = writeln!(
            out,
            r##"<rect class="frame" x="{:.3}" y="{MARGIN:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#888"/>"##,
            panel.x0,
            panel.width(),
            panel.height()
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="12">{}</text>"#,
            panel.x0,
            MARGIN - 6.0,
            panel.plane.name()
        );
        cells_svg(&mut out, panel, map, &footprint(blocked.iter().copied(), panel.plane), "blocked");
        cells_svg(&mut out, panel, map, &footprint(inflation.iter().copied(), panel.plane), "inflation");
        cells_svg(&mut out, panel, map, &footprint(map.occupied_cells(), panel.plane), "obstacle");
        polyline_svg(&mut out, panel, scene.plan.records.iter().map(|r| r.waypoint), r#"class="planned""#);
        for (n, t) in scene.trajectories.iter().enumerate() {
            let colour = PALETTE[n % PALETTE.len()];
            let attrs = format!(r#"class="executed" data-trajectory="{n}" stroke="{colour}""#);
            polyline_svg(&mut out, panel, t.samples.iter().map(|s| s.position), &attrs);
        }
        for (n, &c) in contacts.iter().enumerate() {
            let (x, y) = panel.point(c);
            let _ = writeln!(out, r#"<circle class="contact" data-contact="{n}" cx="{x:.3}" cy="{y:.3}" r="4"/>"#);
        }
        let (x, y) = panel.point(scene.plan.tether_origin);
        let _ = writeln!(out, r#"<circle class="reel" cx="{x:.3}" cy="{y:.3}" r="5"/>"#);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Every plotted point as `series,i,x,y,z`.
pub fn data_table(scene: &Scene) -> String {
    let mut out = String::from("series,i,x,y,z\n");
    let mut row = |series: &str, i: usize, p: Point3| {
        let _ = writeln!(out, "{series},{i},{:.3},{:.3},{:.3}", p.x, p.y, p.z);
    };
    row("reel", 0, scene.plan.tether_origin);
    for (i, r) in scene.plan.records.iter().enumerate() {
        row("planned", i, r.waypoint);
    }
    for (i, c) in scene.plan.distinct_contacts().into_iter().enumerate() {
        row("contact", i, c);
    }
    for (n, t) in scene.trajectories.iter().enumerate() {
        let name = format!("trajectory{n}");
        for (i, s) in t.samples.iter().enumerate() {
            row(&name, i, s.position);
        }
    }
    out
}

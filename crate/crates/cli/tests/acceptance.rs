//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any failure not listed in `KNOWN_FAILURES`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tetherplan::contact::contact_coverage;
use tetherplan::executor::{from_polar, run_trials};
use tetherplan::scenes::reference_room;
use tetherplan::{
    build_prm, desired_controls, obstacle_confined, plan_raycast, query_path, reachability_fraction,
    reduce_reachable_space, static_length, to_polar, AnnotatedPath, CellIndex, ContactEvent, ContactStack,
    ExecConfig, NoiseConfig, PlannerConfig, Point3, PrmParams, Scenario, VoxelMap,
};

/// Criteria that fail by construction of the reference scene. The line is
/// still printed as FAIL.
const KNOWN_FAILURES: &[&str] = &["2a"];

const REEL: Point3 = Point3::new(1.65, 0.45, 0.35);

const SHADOW_MAPS: usize = 200;
const SHADOW_SECONDS: f64 = 10.0;
const REACH_TARGET: f64 = 0.60;
const REACH_TOL: f64 = 0.15;
/// Max spacing of interpolated robot poses (m).
const POSE_STEP: f64 = 0.05;
const STRAIGHT_SEEDS: u64 = 20;
const MATH_TOL: f64 = 1e-9;
const POLAR_CASES: usize = 1_000_000;
const STACK_SEQUENCES: usize = 10_000;
const MC_SEEDS: u64 = 100;
const MC_SECONDS: f64 = 60.0;
const SIGMA_CP_SWEEP: [f64; 3] = [0.0, 0.1, 0.2];
const PRM_SEEDS: u64 = 50;
const PRM_REQUIRED: usize = 45;

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(scenarios_dir().join(name)).expect("bundled scenario loads")
}

fn occupied_boxes(map: &VoxelMap) -> Vec<(Point3, Point3)> {
    map.occupied_cells().map(|c| map.cell_bounds(c)).collect()
}

/// Slab test. `strict` asks for overlap with the open box.
fn segment_hits_box(a: Point3, b: Point3, lo: Point3, hi: Point3, strict: bool) -> bool {
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
        let (mut ta, mut tb) = ((l - p) / d, (h - p) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    if strict {
        t0 < t1
    } else {
        t0 <= t1
    }
}

fn segment_blocked(a: Point3, b: Point3, boxes: &[(Point3, Point3)]) -> bool {
    boxes.iter().any(|&(lo, hi)| segment_hits_box(a, b, lo, hi, false))
}

/// Overlap with a box interior, boxes shrunk by a hair to absorb rounding.
fn segment_enters(a: Point3, b: Point3, boxes: &[(Point3, Point3)]) -> bool {
    let e = Point3::splat(1e-9);
    boxes.iter().any(|&(lo, hi)| segment_hits_box(a, b, lo + e, hi - e, true))
}

/// Points spaced at most `step` along the polyline, endpoints included.
fn interpolate(points: &[Point3], step: f64) -> Vec<(usize, Point3)> {
    let mut out = vec![(0, points[0])];
    for (i, w) in points.windows(2).enumerate() {
        let n = (w[0].distance(w[1]) / step).ceil().max(1.0) as usize;
        for s in 1..=n {
            out.push((i + 1, w[0].lerp(w[1], s as f64 / n as f64)));
        }
    }
    out
}

/// Contact stack in force at each record, rebuilt from the annotations.
fn replay_stacks(plan: &AnnotatedPath) -> Vec<Vec<Point3>> {
    let mut stack = vec![plan.tether_origin];
    plan.records
        .iter()
        .map(|r| {
            if let Some(pos) = stack.iter().rposition(|&p| p == r.contact) {
                stack.truncate(pos + 1);
            } else {
                stack.push(r.contact);
            }
            stack.clone()
        })
        .collect()
}

fn shadow_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mismatches = 0;
    for _ in 0..SHADOW_MAPS {
        let mut map = VoxelMap::new(0.1, [10, 10, 10], Point3::ORIGIN).unwrap();
        for _ in 0..rng.gen_range(0..=20) {
            let c = CellIndex::new(rng.gen_range(0..10), rng.gen_range(0..10), rng.gen_range(0..10));
            map.set_occupied(c, true).unwrap();
        }
        let reel = loop {
            let p = Point3::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            if map.is_free(p) {
                break p;
            }
        };
        let reduced = reduce_reachable_space(&map, &map, reel).unwrap();
        let boxes = occupied_boxes(&map);
        for idx in 0..map.cell_count() {
            let c = map.from_linear(idx);
            if map.is_occupied(c) {
                continue;
            }
            let expected = segment_blocked(reel, map.center(c), &boxes);
            if expected != reduced.is_blocked(c) {
                mismatches += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Verdict {
        id: "1",
        title: "shadow oracle equivalence",
        pass: mismatches == 0 && secs < SHADOW_SECONDS,
        detail: format!("{SHADOW_MAPS} maps, {mismatches} mismatched cells, {secs:.2} s (limit {SHADOW_SECONDS} s)"),
    }
}

fn reachability() -> Verdict {
    let original = reference_room(0.1).unwrap();
    let inflated = original.inflate(0.3).unwrap();
    let reduced = reduce_reachable_space(&inflated, &original, REEL).unwrap();
    let f = reachability_fraction(&reduced).unwrap();
    Verdict {
        id: "2a",
        title: "reference-room raycast reachability",
        pass: (f - REACH_TARGET).abs() <= REACH_TOL,
        detail: format!(
            "reel {REEL}: fraction {f:.4} ({} of {} free cells blocked), target {REACH_TARGET} +/- {REACH_TOL}",
            reduced.blocked_count(),
            inflated.free_count()
        ),
    }
}

fn coverage() -> Verdict {
    let original = reference_room(0.1).unwrap();
    let inflated = original.inflate(0.3).unwrap();
    let c = contact_coverage(&original, &inflated, REEL, REEL, &PlannerConfig::default()).unwrap();
    Verdict {
        id: "2b",
        title: "reference-room contact coverage",
        pass: c.covered == c.free_cells,
        detail: format!("{} of {} inflated free cells planned, target all", c.covered, c.free_cells),
    }
}

fn straight_tether_validity() -> Verdict {
    let s = scenario("room_raycast.toml");
    let boxes = occupied_boxes(&s.original);
    let (mut planned, mut poses, mut violations) = (0, 0, 0);
    for seed in 0..STRAIGHT_SEEDS {
        let mut config = s.spec.planner_config();
        config.prm.seed = seed;
        let Ok(plan) = plan_raycast(&s.inflated, &s.original, s.spec.reel, &s.spec.stops(), &config) else {
            continue;
        };
        planned += 1;
        for (_, q) in interpolate(&plan.waypoints(), POSE_STEP) {
            poses += 1;
            if segment_blocked(plan.tether_origin, q, &boxes) {
                violations += 1;
            }
        }
    }
    Verdict {
        id: "3",
        title: "tether validity, straight case",
        pass: planned == STRAIGHT_SEEDS && violations == 0,
        detail: format!("{planned}/{STRAIGHT_SEEDS} plans, {poses} poses, {violations} violations"),
    }
}

fn contact_tether_validity() -> Verdict {
    let mut lines = Vec::new();
    let mut total = 0;
    for name in ["room_wrap_return.toml", "lwall_double_wrap.toml"] {
        let s = scenario(name);
        let boxes = occupied_boxes(&s.original);
        let plan = s.plan().unwrap().plan.path;
        let stacks = replay_stacks(&plan);
        let clear = |stack: &[Point3], q: Point3| {
            let mut pts = stack.to_vec();
            pts.push(q);
            !pts.windows(2).any(|w| segment_enters(w[0], w[1], &boxes))
        };
        let mut violations = 0;
        let poses = interpolate(&plan.waypoints(), POSE_STEP);
        for &(i, q) in &poses {
            // Between records the tether may be in either neighbour's state.
            let ok = clear(&stacks[i], q) || (i > 0 && clear(&stacks[i - 1], q));
            if !ok {
                violations += 1;
            }
        }
        total += violations;
        lines.push(format!("{name}: {} poses, {violations} violations", poses.len()));
    }
    Verdict {
        id: "4",
        title: "tether validity, contact case",
        pass: total == 0,
        detail: lines.join("; "),
    }
}

#[derive(Debug, PartialEq)]
struct Logged {
    push: bool,
    waypoint: usize,
    depth: usize,
    point: [f64; 3],
}

fn logged(events: &[ContactEvent]) -> Vec<Logged> {
    events
        .iter()
        .map(|e| match *e {
            ContactEvent::Push { waypoint, depth, point } => (true, waypoint, depth, point),
            ContactEvent::Pop { waypoint, depth, point } => (false, waypoint, depth, point),
        })
        .map(|(push, waypoint, depth, p)| Logged {
            push,
            waypoint,
            depth,
            point: [p.x, p.y, p.z].map(|v| (v * 1e6).round() / 1e6),
        })
        .collect()
}

fn event_traces() -> Verdict {
    let wrap = scenario("room_wrap_return.toml").plan().unwrap();
    let cp = [1.701, 0.301, 1.801];
    let wrap_expected = vec![
        Logged { push: true, waypoint: 12, depth: 2, point: cp },
        Logged { push: false, waypoint: 15, depth: 1, point: cp },
    ];
    let wrap_log = logged(&wrap.events);
    let final_contact = wrap.plan.path.records.last().unwrap().contact;
    let wrap_ok = wrap_log == wrap_expected && final_contact == wrap.plan.path.tether_origin;

    let s = scenario("lwall_double_wrap.toml");
    let double = s.plan().unwrap();
    let double_expected = vec![
        Logged { push: true, waypoint: 6, depth: 2, point: [1.101, 1.001, 0.999] },
        Logged { push: true, waypoint: 18, depth: 3, point: [3.001, 0.601, 0.999] },
    ];
    let double_log = logged(&double.events);
    // Waypoints after the second push where the previous contact is visible
    // again and only the confinement test keeps the stack.
    let stacks = replay_stacks(&double.plan.path);
    let held = double
        .plan
        .path
        .records
        .iter()
        .zip(&stacks)
        .filter(|(r, st)| {
            st.len() == 3
                && !s.original.segment_collides(st[1], r.waypoint)
                && obstacle_confined(st[2], st[1], r.waypoint, &s.original)
        })
        .count();
    let double_ok = double_log == double_expected && held > 0;

    Verdict {
        id: "5",
        title: "contact event traces",
        pass: wrap_ok && double_ok,
        detail: format!(
            "wrap-and-return {} (final contact {}); double-wrap {} ({} pushes, {} pops, relaxation held by confinement at {held} waypoints)",
            if wrap_log == wrap_expected { "matches log" } else { "differs from log" },
            final_contact,
            if double_log == double_expected { "matches log" } else { "differs from log" },
            double.events.iter().filter(|e| e.is_push()).count(),
            double.events.iter().filter(|e| !e.is_push()).count(),
        ),
    }
}

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Point3 {
    Point3::new(
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
        rng.gen_range(-half..half),
    )
}

fn executor_math() -> Verdict {
    let close = |a: f64, b: f64| (a - b).abs() <= MATH_TOL;
    let o = Point3::ORIGIN;
    let mut cases = Vec::new();
    let p = to_polar(Point3::new(0.0, 0.0, 1.0), o);
    cases.push(close(p.r, 1.0) && close(p.theta, 0.0) && close(p.phi, 0.0));
    let p = to_polar(Point3::new(1.0, 0.0, 0.0), o);
    cases.push(close(p.r, 1.0) && close(p.theta, 0.0) && close(p.phi, FRAC_PI_2));
    let p = to_polar(Point3::new(1.0, 1.0, 2f64.sqrt()), o);
    cases.push(close(p.r, 2.0) && close(p.theta, FRAC_PI_6) && close(p.phi, 1f64.atan2(2f64.sqrt())));
    let p = to_polar(o, o);
    cases.push(p.r == 0.0 && p.theta == 0.0 && p.phi == 0.0);
    cases.push(static_length(&[o]) == 0.0);
    cases.push(close(
        static_length(&[o, Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.0)]),
        2.0,
    ));
    let c = desired_controls(Point3::new(0.0, 0.0, 2.0), &ContactStack::new(o));
    cases.push(close(c.r, 2.0) && close(c.theta, 0.0) && close(c.phi, 0.0));
    let mut st = ContactStack::new(o);
    st.push(Point3::new(0.0, 0.0, 1.0));
    let c = desired_controls(Point3::new(1.0, 0.0, 1.0), &st);
    cases.push(close(c.r, 2.0) && close(c.theta, 0.0) && close(c.phi, FRAC_PI_2));
    let trivial = cases.iter().filter(|&&ok| ok).count();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_polar = 0.0f64;
    for _ in 0..POLAR_CASES {
        let cp = random_point(&mut rng, 5.0);
        let p = random_point(&mut rng, 5.0);
        worst_polar = worst_polar.max(from_polar(cp, to_polar(p, cp)).distance(p));
    }

    let mut worst_sta = 0.0f64;
    for _ in 0..STACK_SEQUENCES {
        let mut st = ContactStack::new(random_point(&mut rng, 3.0));
        for _ in 0..rng.gen_range(1..40) {
            if st.depth() > 1 && rng.gen_bool(0.4) {
                st.pop();
            } else {
                st.push(random_point(&mut rng, 3.0));
            }
            let direct: f64 = st.points().windows(2).map(|w| w[0].distance(w[1])).sum();
            worst_sta = worst_sta.max((st.static_length() - direct).abs());
        }
    }

    Verdict {
        id: "6",
        title: "executor math",
        pass: trivial == cases.len() && worst_polar <= MATH_TOL && worst_sta <= MATH_TOL,
        detail: format!(
            "{trivial}/{} closed-form cases; polar round trip worst {worst_polar:.1e} m over 1e6; r_sta worst {worst_sta:.1e} m over 1e4 sequences (tol 1e-9)",
            cases.len()
        ),
    }
}

fn error_ordering() -> Verdict {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..MC_SEEDS).collect();
    let exec = ExecConfig::default();
    let classes = [
        ("raycast", "room_raycast.toml"),
        ("1 contact", "room_wrap_return.toml"),
        ("2 contacts", "lwall_double_wrap.toml"),
    ];
    let mut means = Vec::new();
    let mut monotone = true;
    let mut sweep = Vec::new();
    for (label, file) in classes {
        let plan = scenario(file).plan().unwrap().plan.path;
        let mean_at = |sigma_cp: Option<f64>| {
            let mut noise = NoiseConfig::default();
            if let Some(s) = sigma_cp {
                noise.sigma_cp = s;
            }
            let trials = run_trials(&plan, &noise, &exec, &seeds).unwrap();
            trials.iter().map(|t| t.error.mean).sum::<f64>() / trials.len() as f64
        };
        means.push((label, mean_at(None)));
        let by_sigma: Vec<f64> = SIGMA_CP_SWEEP.iter().map(|&s| mean_at(Some(s))).collect();
        monotone &= by_sigma.windows(2).all(|w| w[0] <= w[1]);
        sweep.push(format!(
            "{label} {}",
            by_sigma.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join("/")
        ));
    }
    let ordered = means.windows(2).all(|w| w[0].1 < w[1].1);
    let secs = started.elapsed().as_secs_f64();
    Verdict {
        id: "7",
        title: "error-accumulation ordering",
        pass: ordered && monotone && secs < MC_SECONDS,
        detail: format!(
            "mean CTE {}; sigma_cp 0/0.1/0.2: {}; {secs:.1} s (limit {MC_SECONDS} s)",
            means.iter().map(|(l, m)| format!("{l} {m:.4}")).collect::<Vec<_>>().join(" < "),
            sweep.join(", ")
        ),
    }
}

fn prm_smoke() -> Verdict {
    let original = reference_room(0.1).unwrap();
    let inflated = original.inflate(0.3).unwrap();
    let boxes = occupied_boxes(&inflated);
    let (lo, hi) = (inflated.origin(), inflated.upper_corner());
    let start = inflated.center(CellIndex::new(0, 0, 0));
    let [nx, ny, nz] = inflated.dims();
    let goal = inflated.center(CellIndex::new(nx - 1, ny - 1, nz - 1));
    let (mut found, mut invalid) = (0, 0);
    for seed in 0..PRM_SEEDS {
        let params = PrmParams { n_samples: 2000, k_neighbors: 10, seed };
        let Ok(roadmap) = build_prm(&inflated, params) else { continue };
        let Ok(path) = query_path(&roadmap, &inflated, start, goal) else { continue };
        found += 1;
        let wps = &path.waypoints;
        let in_bounds = wps
            .iter()
            .all(|p| (0..3).all(|ax| p.axis(ax) >= lo.axis(ax) && p.axis(ax) <= hi.axis(ax)));
        let ends = wps.first() == Some(&start) && wps.last() == Some(&goal);
        if !in_bounds || !ends || wps.windows(2).any(|w| segment_blocked(w[0], w[1], &boxes)) {
            invalid += 1;
        }
    }
    Verdict {
        id: "8",
        title: "PRM smoke",
        pass: found >= PRM_REQUIRED && invalid == 0,
        detail: format!("{found}/{PRM_SEEDS} seeds found a corner-to-corner path (need {PRM_REQUIRED}), {invalid} failed validation"),
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
    }
    out
}

fn run_cli(args: &[&str], out: &Path) -> (bool, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_tetherplan"))
        .args(args)
        .env("TETHERPLAN_OUT_DIR", out)
        .output()
        .expect("binary runs");
    (o.status.success(), o.stdout)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let dir = scenarios_dir();
    let sc = |n: &str| dir.join(n).to_string_lossy().into_owned();
    let pl = |n: &str| out.join(n).to_string_lossy().into_owned();
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("plan", vec!["plan".into(), sc("room_raycast.toml")]),
        ("plan", vec!["plan".into(), sc("room_wrap_return.toml")]),
        ("plan", vec!["plan".into(), sc("lwall_double_wrap.toml")]),
        (
            "simulate",
            vec![
                "simulate".into(),
                pl("room_raycast.plan"),
                pl("room_wrap_return.plan"),
                pl("lwall_double_wrap.plan"),
            ],
        ),
        ("stats", vec!["stats".into(), "--scenario".into(), sc("room_raycast.toml")]),
        (
            "render",
            vec![
                "render".into(),
                pl("lwall_double_wrap.plan"),
                pl("lwall_double_wrap-trial0.csv"),
                pl("lwall_double_wrap-trial1.csv"),
            ],
        ),
    ];
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for (name, args) in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (ok1, stdout1) = run_cli(&args, out);
        let files1 = snapshot(out);
        let (ok2, stdout2) = run_cli(&args, out);
        let files2 = snapshot(out);
        if !(ok1 && ok2) {
            failed.push(*name);
        }
        if stdout1 != stdout2 || files1 != files2 {
            differing.push(*name);
        }
    }
    let files = snapshot(out).len();
    Verdict {
        id: "9",
        title: "determinism",
        pass: differing.is_empty() && failed.is_empty(),
        detail: format!(
            "{} command runs repeated, {files} output files; differing: {differing:?}, failed: {failed:?}",
            commands.len()
        ),
    }
}

fn main() {
    // `cargo test -- --list` and filters are not supported; run everything.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let checks: [fn() -> Verdict; 10] = [
        shadow_oracle,
        reachability,
        coverage,
        straight_tether_validity,
        contact_tether_validity,
        event_traces,
        executor_math,
        error_ordering,
        prm_smoke,
        determinism,
    ];
    let mut unexpected = 0;
    for check in checks {
        let v = check();
        let known = KNOWN_FAILURES.contains(&v.id);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} [{}] {}: {}", v.id, v.title, v.detail);
        if !v.pass && !known {
            unexpected += 1;
        }
        if v.pass && known {
            println!("note: criterion {} is listed as a known failure but passed", v.id);
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}

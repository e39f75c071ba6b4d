use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tetherplan::contact::{contact_coverage, ContactEvent};
use tetherplan::executor::{run_trials, ExecConfig, NoiseConfig, Outcome, Trajectory};
use tetherplan::scenario::{resolve_map, BUILTIN_PREFIX};
use tetherplan::{reachability_fraction, reduce_reachable_space, Error, PlanFile, Point3, Scenario, ScenarioSpec};

mod render;

/// Default output directory when `--out-dir` is not given.
const OUT_DIR_ENV: &str = "TETHERPLAN_OUT_DIR";

#[derive(Parser)]
#[command(name = "tetherplan", version, about = "Tether-aware planning and execution for a UAV on a taut tether")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write its plan file.
    Plan(PlanArgs),
    /// Run seeded executions of one or more plans.
    Simulate(SimulateArgs),
    /// Reachability of both planners on a map.
    Stats(StatsArgs),
    /// Draw a plan and optional trajectories in three projections.
    Render(RenderArgs),
}

#[derive(Args)]
struct MapOverrides {
    /// Roadmap seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cell size for built-in scenes (m).
    #[arg(long)]
    resolution: Option<f64>,
    /// Robot radius used to inflate the map (m).
    #[arg(long)]
    inflate: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    scenario: PathBuf,
    /// Output plan file. Defaults to `<out-dir>/<scenario>.plan`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: MapOverrides,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(required = true)]
    plans: Vec<PathBuf>,
    #[arg(long, default_value_t = 6)]
    trials: usize,
    /// Seed of the first trial; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sigma_cp: Option<f64>,
    #[arg(long)]
    sigma_drift: Option<f64>,
    #[arg(long)]
    sigma_loc: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    r_acc: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Take map, reel and inflation from a scenario file.
    #[arg(long, conflicts_with = "map")]
    scenario: Option<PathBuf>,
    /// Map file or `builtin:<name>`.
    #[arg(long, requires = "reel")]
    map: Option<String>,
    /// Reel position `x,y,z`.
    #[arg(long, value_parser = parse_point)]
    reel: Option<Point3>,
    /// Skip the contact-planner coverage sweep.
    #[arg(long)]
    no_coverage: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: MapOverrides,
}

#[derive(Args)]
struct RenderArgs {
    plan: PathBuf,
    trajectories: Vec<PathBuf>,
    /// Output SVG. The data table goes next to it with a `.csv` extension.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

/// CLI failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoPath { .. }
            | Error::TetherBlockedEndpoint(_)
            | Error::ContactUnresolvable { .. }
            | Error::SamplingExhausted { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        kind: "io".into(),
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = Result<T, Failure>;

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn load_scenario(path: &Path, o: &MapOverrides) -> CliResult<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Failure::from(Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))?;
    let mut spec = ScenarioSpec::parse(&text, path)?;
    if let Some(seed) = o.seed {
        spec.prm.seed = seed;
    }
    if let Some(r) = o.resolution {
        spec.resolution = Some(r);
    }
    if let Some(r) = o.inflate {
        spec.inflate = r;
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Scenario::from_spec(spec, &dir)?)
}

#[derive(Serialize)]
struct EventRecord {
    kind: &'static str,
    waypoint: usize,
    depth: usize,
    point: Point3,
}

impl From<&ContactEvent> for EventRecord {
    fn from(e: &ContactEvent) -> Self {
        let (kind, waypoint, depth, point) = match *e {
            ContactEvent::Push { waypoint, depth, point } => ("push", waypoint, depth, point),
            ContactEvent::Pop { waypoint, depth, point } => ("pop", waypoint, depth, point),
        };
        EventRecord {
            kind,
            waypoint,
            depth,
            point,
        }
    }
}

#[derive(Serialize)]
struct PlanSummary {
    plan: String,
    planner: String,
    waypoints: usize,
    length: f64,
    contacts: Vec<Point3>,
    events: Vec<EventRecord>,
}

fn cmd_plan(args: &PlanArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.scenario, &args.overrides)?;
    let planned = scenario.plan()?;
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir(&args.out_dir).join(format!("{}.plan", stem(&args.scenario))));
    write_file(&output, &planned.plan.to_text())?;
    let path = &planned.plan.path;
    let summary = PlanSummary {
        plan: output.display().to_string(),
        planner: planned.plan.planner.to_string(),
        waypoints: path.len(),
        length: tetherplan::geometry::polyline_length(&path.waypoints()),
        contacts: path.distinct_contacts(),
        events: planned.events.iter().map(EventRecord::from).collect(),
    };
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    plan: String,
    planner: String,
    map: String,
    seeds: Vec<u64>,
    trial_means: Vec<f64>,
    trial_max: Vec<f64>,
    mean: f64,
    completed: usize,
    /// Mean over trials of the per-stage means, keyed by active contacts.
    stage_means: BTreeMap<usize, f64>,
}

#[derive(Serialize)]
struct Report {
    trials: usize,
    seed: u64,
    r_acc: f64,
    noise: NoiseConfig,
    rows: Vec<ReportRow>,
}

fn trajectory_text(map: &str, plan: &str, seed: u64, traj: &Trajectory) -> String {
    let outcome = match traj.outcome {
        Outcome::Completed => "completed",
        Outcome::Aborted => "aborted",
    };
    format!(
        "# map: {map}\n# plan: {plan}\n# seed: {seed}\n# outcome: {outcome}\n{}",
        traj.to_csv()
    )
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let defaults = NoiseConfig::default();
    let noise = NoiseConfig {
        sigma_cp: args.sigma_cp.unwrap_or(defaults.sigma_cp),
        sigma_drift: args.sigma_drift.unwrap_or(defaults.sigma_drift),
        sigma_loc: args.sigma_loc.unwrap_or(defaults.sigma_loc),
        seed: args.seed,
    };
    noise.validate()?;
    let exec = ExecConfig {
        r_acc: args.r_acc,
        ..ExecConfig::default()
    };
    exec.validate()?;
    if args.trials == 0 {
        return Err(Error::Validation("--trials must be at least 1".into()).into());
    }
    let dir = out_dir(&args.out_dir);
    let seeds: Vec<u64> = (0..args.trials as u64).map(|k| args.seed.wrapping_add(k)).collect();
    let mut rows = Vec::new();
    for plan_path in &args.plans {
        let plan = PlanFile::load(plan_path)?;
        let trials = run_trials(&plan.path, &noise, &exec, &seeds)?;
        let name = stem(plan_path);
        let plan_name = plan_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for (k, t) in trials.iter().enumerate() {
            let file = dir.join(format!("{name}-trial{k}.csv"));
            write_file(&file, &trajectory_text(&plan.map, &plan_name, t.seed, &t.trajectory))?;
        }
        let mut stages: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for t in &trials {
            for (&k, &v) in &t.error.stage_means {
                let e = stages.entry(k).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        let trial_means: Vec<f64> = trials.iter().map(|t| t.error.mean).collect();
        rows.push(ReportRow {
            plan: plan_name,
            planner: plan.planner.to_string(),
            map: plan.map.clone(),
            seeds: seeds.clone(),
            mean: trial_means.iter().sum::<f64>() / trial_means.len() as f64,
            trial_max: trials.iter().map(|t| t.error.max).collect(),
            trial_means,
            completed: trials.iter().filter(|t| t.trajectory.outcome == Outcome::Completed).count(),
            stage_means: stages.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        });
    }
    let report = Report {
        trials: args.trials,
        seed: args.seed,
        r_acc: args.r_acc,
        noise,
        rows,
    };
    write_file(&dir.join("report.json"), &to_json(&report))?;
    print_table(&report);
    Ok(())
}

fn print_table(report: &Report) {
    print!("{:<28} {:<8}", "plan", "planner");
    for k in 0..report.trials {
        print!(" {:>8}", format!("trial{k}"));
    }
    println!(" {:>8}", "mean");
    for row in &report.rows {
        print!("{:<28} {:<8}", row.plan, row.planner);
        for m in &row.trial_means {
            print!(" {m:>8.4}");
        }
        println!(" {:>8.4}", row.mean);
    }
}

#[derive(Serialize)]
struct CoverageRecord {
    free_cells: usize,
    covered: usize,
    fraction: f64,
}

#[derive(Serialize)]
struct StatsReport {
    map: String,
    reel: Point3,
    inflate: f64,
    free_cells: usize,
    blocked_cells: usize,
    raycast_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    contact: Option<CoverageRecord>,
}

fn cmd_stats(args: &StatsArgs) -> CliResult<()> {
    let (map_ref, original, reel, inflate, config) = match (&args.scenario, &args.map) {
        (Some(path), _) => {
            let s = load_scenario(path, &args.overrides)?;
            let cfg = s.spec.planner_config();
            (s.map_ref, s.original, s.spec.reel, s.spec.inflate, cfg)
        }
        (None, Some(map)) => {
            let map_ref = match (map.strip_prefix(BUILTIN_PREFIX), args.overrides.resolution) {
                (Some(name), r) => format!("{BUILTIN_PREFIX}{name}@{:?}", r.unwrap_or(0.1)),
                (None, Some(_)) => {
                    return Err(Error::Validation("--resolution applies only to built-in scenes".into()).into())
                }
                (None, None) => map.clone(),
            };
            let original = resolve_map(&map_ref)?;
            let mut cfg = tetherplan::PlannerConfig::default();
            if let Some(seed) = args.overrides.seed {
                cfg.prm.seed = seed;
            }
            let reel = args.reel.expect("clap requires --reel with --map");
            (map_ref, original, reel, args.overrides.inflate.unwrap_or(0.3), cfg)
        }
        (None, None) => {
            return Err(Error::Validation("stats needs --scenario or --map with --reel".into()).into());
        }
    };
    let inflated = original.inflate(inflate)?;
    if inflated.free_count() == 0 {
        return Err(Error::UndefinedFraction.into());
    }
    let reduced = reduce_reachable_space(&inflated, &original, reel)?;
    let contact = if args.no_coverage {
        None
    } else {
        let c = contact_coverage(&original, &inflated, reel, reel, &config)?;
        Some(CoverageRecord {
            free_cells: c.free_cells,
            covered: c.covered,
            fraction: c.fraction()?,
        })
    };
    let report = StatsReport {
        map: map_ref,
        reel,
        inflate,
        free_cells: inflated.free_count(),
        blocked_cells: reduced.blocked_count(),
        raycast_fraction: reachability_fraction(&reduced)?,
        contact,
    };
    let text = to_json(&report);
    if let Some(path) = &args.output {
        write_file(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> CliResult<()> {
    let plan = PlanFile::load(&args.plan)?;
    let mut trajectories = Vec::new();
    for path in &args.trajectories {
        let text = fs::read_to_string(path).map_err(|e| Failure::from(Error::Io {
            path: path.clone(),
            source: e,
        }))?;
        let map = text
            .lines()
            .find_map(|l| l.strip_prefix("# map:").map(str::trim))
            .unwrap_or_default();
        if map != plan.map {
            return Err(Error::Validation(format!(
                "{} references map {map:?}, plan references {:?}",
                path.display(),
                plan.map
            ))
            .into());
        }
        trajectories.push(Trajectory::from_csv(&text, path)?);
    }
    let original = resolve_map(&plan.map)?;
    let inflated = original.inflate(plan.inflate)?;
    let reduced = reduce_reachable_space(&inflated, &original, plan.path.tether_origin).ok();
    let scene = render::Scene {
        original: &original,
        inflated: &inflated,
        reduced: reduced.as_ref(),
        plan: &plan.path,
        trajectories: &trajectories,
    };
    let svg_path = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir(&args.out_dir).join(format!("{}.svg", stem(&args.plan))));
    write_file(&svg_path, &render::svg(&scene))?;
    write_file(&svg_path.with_extension("csv"), &render::data_table(&scene))?;
    Ok(())
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = ErrorRecord {
                error: &f.kind,
                message: &f.message,
                exit_code: f.code,
            };
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::from(f.code)
        }
    }
}

//! Scenario files: a map reference, the reel, the stops to visit and every
//! planner/executor knob.
//!
//! ```toml
//! map = "builtin:reference-room"   # or a map file relative to this file
//! planner = "contact"
//! reel = [1.65, 0.45, 0.35]
//! start = [1.65, 0.6, 0.6]
//! mids = [[1.65, 0.15, 2.6]]
//! goal = [2.6, 1.2, 0.7]
//! inflate = 0.3
//! r_acc = 0.4
//!
//! [prm]
//! n_samples = 2000
//! k_neighbors = 10
//! seed = 7
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact::{plan_with_contacts, ContactEvent};
use crate::error::{Error, Result};
use crate::executor::{ExecConfig, NoiseConfig};
use crate::geometry::Point3;
use crate::map_file::load_map;
use crate::plan::{PlanFile, PlannerId};
use crate::prm::{PlannerConfig, PrmParams, SmoothParams};
use crate::raycast::plan_raycast;
use crate::scenes;
use crate::voxel_map::VoxelMap;

pub const BUILTIN_PREFIX: &str = "builtin:";

fn default_inflate() -> f64 {
    0.3
}

fn default_r_acc() -> f64 {
    0.4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub map: String,
    /// Cell size for built-in scenes.
    #[serde(default)]
    pub resolution: Option<f64>,
    pub planner: PlannerId,
    pub reel: Point3,
    pub start: Point3,
    #[serde(default)]
    pub mids: Vec<Point3>,
    pub goal: Point3,
    /// Robot radius (m).
    #[serde(default = "default_inflate")]
    pub inflate: f64,
    #[serde(default = "default_r_acc")]
    pub r_acc: f64,
    #[serde(default)]
    pub prm: PrmParams,
    #[serde(default)]
    pub smooth: SmoothParams,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl ScenarioSpec {
    pub fn parse(text: &str, path: &Path) -> Result<ScenarioSpec> {
        toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))
    }

    /// start, mids..., goal
    pub fn stops(&self) -> Vec<Point3> {
        let mut v = vec![self.start];
        v.extend_from_slice(&self.mids);
        v.push(self.goal);
        v
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            prm: self.prm,
            smooth: self.smooth,
        }
    }

    pub fn exec_config(&self) -> ExecConfig {
        ExecConfig {
            r_acc: self.r_acc,
            ..ExecConfig::default()
        }
    }
}

/// A scenario with its maps loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    /// Stable reference to the map, written into plan files.
    pub map_ref: String,
    pub original: VoxelMap,
    pub inflated: VoxelMap,
}

#[derive(Clone, Debug)]
pub struct PlannedScenario {
    pub plan: PlanFile,
    /// Contact events; empty for the straight-tether planner.
    pub events: Vec<ContactEvent>,
}

/// Resolve a map reference (`builtin:<name>[@<resolution>]` or a path).
pub fn resolve_map(reference: &str) -> Result<VoxelMap> {
    if let Some(rest) = reference.strip_prefix(BUILTIN_PREFIX) {
        let (name, res) = match rest.split_once('@') {
            Some((n, r)) => {
                let r = r
                    .parse::<f64>()
                    .map_err(|_| Error::Validation(format!("bad resolution in map reference {reference:?}")))?;
                (n, Some(r))
            }
            None => (rest, None),
        };
        scenes::builtin(name, res)
    } else {
        load_map(reference)
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec = ScenarioSpec::parse(&text, path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::from_spec(spec, &dir)
    }

    /// Load the referenced map. Relative map paths resolve against `dir`.
    pub fn from_spec(spec: ScenarioSpec, dir: &Path) -> Result<Scenario> {
        let map_ref = if let Some(name) = spec.map.strip_prefix(BUILTIN_PREFIX) {
            let res = spec.resolution.unwrap_or(0.1);
            format!("{BUILTIN_PREFIX}{name}@{res:?}")
        } else {
            if spec.resolution.is_some() {
                return Err(Error::Validation(
                    "`resolution` applies only to built-in scenes; map files carry their own".into(),
                ));
            }
            let p = PathBuf::from(&spec.map);
            let p = if p.is_absolute() { p } else { dir.join(p) };
            let p = p.canonicalize().map_err(|e| Error::io(&p, e))?;
            p.to_string_lossy().into_owned()
        };
        let original = resolve_map(&map_ref)?;
        Scenario::with_map(spec, map_ref, original)
    }

    pub fn with_map(spec: ScenarioSpec, map_ref: String, original: VoxelMap) -> Result<Scenario> {
        let inflated = original.inflate(spec.inflate)?;
        let scenario = Scenario {
            spec,
            map_ref,
            original,
            inflated,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.original.origin(), self.original.upper_corner());
        let inside = |p: Point3| p.is_finite() && (0..3).all(|a| p.axis(a) >= lo.axis(a) && p.axis(a) <= hi.axis(a));
        let named = [("reel", self.spec.reel), ("start", self.spec.start), ("goal", self.spec.goal)];
        for (name, p) in named.into_iter().chain(self.spec.mids.iter().map(|&m| ("mid", m))) {
            if !inside(p) {
                return Err(Error::Validation(format!("{name} {p} lies outside the map")));
            }
        }
        self.spec.noise.validate()?;
        self.spec.exec_config().validate()
    }

    pub fn plan(&self) -> Result<PlannedScenario> {
        let spec = &self.spec;
        let config = spec.planner_config();
        let stops = spec.stops();
        let (path, events) = match spec.planner {
            PlannerId::Raycast => (
                plan_raycast(&self.inflated, &self.original, spec.reel, &stops, &config)?,
                Vec::new(),
            ),
            PlannerId::Contact => {
                let plan = plan_with_contacts(&self.original, &self.inflated, spec.reel, &stops, &config)?;
                (plan.path, plan.events)
            }
        };
        Ok(PlannedScenario {
            plan: PlanFile {
                map: self.map_ref.clone(),
                planner: spec.planner,
                inflate: spec.inflate,
                path,
            },
            events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
map = "builtin:reference-room"
planner = "raycast"
reel = [1.65, 0.45, 0.35]
start = [0.6, 1.0, 0.6]
goal = [2.7, 1.0, 0.6]
"#;

    #[test]
    fn defaults_fill_in() {
        let spec = ScenarioSpec::parse(BASIC, Path::new("s.toml")).unwrap();
        assert_eq!(spec.inflate, 0.3);
        assert_eq!(spec.r_acc, 0.4);
        assert_eq!(spec.prm, PrmParams::default());
        assert_eq!(spec.stops().len(), 2);
        let s = Scenario::from_spec(spec, Path::new(".")).unwrap();
        assert_eq!(s.map_ref, "builtin:reference-room@0.1");
        assert_eq!(s.original.dims(), [33, 30, 33]);
    }

    #[test]
    fn unknown_planner_and_fields_are_rejected() {
        let bad = BASIC.replace("raycast", "rrt");
        assert!(ScenarioSpec::parse(&bad, Path::new("s.toml")).is_err());
        let bad = format!("{BASIC}\nspeed_of_light = 3\n");
        assert!(ScenarioSpec::parse(&bad, Path::new("s.toml")).is_err());
    }

    #[test]
    fn points_outside_the_map_are_rejected() {
        let bad = BASIC.replace("goal = [2.7, 1.0, 0.6]", "goal = [2.7, 4.0, 0.6]");
        let spec = ScenarioSpec::parse(&bad, Path::new("s.toml")).unwrap();
        let err = Scenario::from_spec(spec, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}

//! Waypoints annotated with tether contacts, and the plan file that carries
//! them from a planner to the executor.
//!
//! Plan file layout:
//!
//! ```text
//! # tetherplan plan v1
//! # map: scenes/reference_room.toml
//! # planner: contact
//! # inflate: 0.3
//! # tether_origin: 1.65,0.45,0.35
//! wx,wy,wz,cx,cy,cz
//! 1.65,0.45,0.35,1.65,0.45,0.35
//! ...
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so write -> read -> write is byte-identical.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const PLAN_MAGIC: &str = "# tetherplan plan v1";
pub const PLAN_COLUMNS: &str = "wx,wy,wz,cx,cy,cz";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnotatedWaypoint {
    pub waypoint: Point3,
    pub contact: Point3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedPath {
    pub tether_origin: Point3,
    pub records: Vec<AnnotatedWaypoint>,
}

impl AnnotatedPath {
    /// Every waypoint annotated with the tether origin.
    pub fn straight(tether_origin: Point3, waypoints: &[Point3]) -> Self {
        AnnotatedPath {
            tether_origin,
            records: waypoints
                .iter()
                .map(|&waypoint| AnnotatedWaypoint {
                    waypoint,
                    contact: tether_origin,
                })
                .collect(),
        }
    }

    pub fn waypoints(&self) -> Vec<Point3> {
        self.records.iter().map(|r| r.waypoint).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct contacts other than the tether origin, in order of first use.
    pub fn distinct_contacts(&self) -> Vec<Point3> {
        let mut out: Vec<Point3> = Vec::new();
        for r in &self.records {
            if r.contact != self.tether_origin && !out.contains(&r.contact) {
                out.push(r.contact);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerId {
    Raycast,
    Contact,
}

impl fmt::Display for PlannerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerId::Raycast => "raycast",
            PlannerId::Contact => "contact",
        })
    }
}

impl FromStr for PlannerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raycast" => Ok(PlannerId::Raycast),
            "contact" => Ok(PlannerId::Contact),
            other => Err(Error::Validation(format!(
                "unknown planner {other:?} (expected raycast or contact)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanFile {
    /// Map reference as written in the scenario (usually a relative path).
    pub map: String,
    pub planner: PlannerId,
    /// Robot radius the planning map was inflated by.
    pub inflate: f64,
    pub path: AnnotatedPath,
}

fn fmt_point(out: &mut String, p: Point3) {
    let _ = write!(out, "{:?},{:?},{:?}", p.x, p.y, p.z);
}

fn parse_numbers(s: &str, expected: usize, line: usize, path: &Path) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == expected && v.iter().all(|x| x.is_finite()) => Ok(v),
        Ok(v) if v.len() != expected => Err(Error::parse(
            path,
            format!("line {line}: expected {expected} values, found {}", v.len()),
        )),
        _ => Err(Error::parse(path, format!("line {line}: invalid number in {s:?}"))),
    }
}

impl PlanFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(PLAN_MAGIC);
        out.push('\n');
        let _ = writeln!(out, "# map: {}", self.map);
        let _ = writeln!(out, "# planner: {}", self.planner);
        let _ = writeln!(out, "# inflate: {:?}", self.inflate);
        out.push_str("# tether_origin: ");
        fmt_point(&mut out, self.path.tether_origin);
        out.push('\n');
        out.push_str(PLAN_COLUMNS);
        out.push('\n');
        for r in &self.path.records {
            fmt_point(&mut out, r.waypoint);
            out.push(',');
            fmt_point(&mut out, r.contact);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<PlanFile> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == PLAN_MAGIC => {}
            _ => return Err(Error::parse(path, format!("line 1: expected {PLAN_MAGIC:?}"))),
        }
        let mut map = None;
        let mut planner = None;
        let mut inflate = None;
        let mut origin = None;
        let mut records = Vec::new();
        let mut saw_columns = false;
        for (n, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.split_once(':') else {
                    continue;
                };
                let value = value.trim();
                match key.trim() {
                    "map" => map = Some(value.to_string()),
                    "planner" => {
                        planner = Some(
                            value
                                .parse::<PlannerId>()
                                .map_err(|e| Error::parse(path, format!("line {n}: {e}")))?,
                        )
                    }
                    "inflate" => {
                        inflate = Some(value.parse::<f64>().map_err(|_| {
                            Error::parse(path, format!("line {n}: invalid inflate {value:?}"))
                        })?)
                    }
                    "tether_origin" => {
                        let v = parse_numbers(value, 3, n, path)?;
                        origin = Some(Point3::new(v[0], v[1], v[2]));
                    }
                    _ => {}
                }
                continue;
            }
            if !saw_columns {
                if line != PLAN_COLUMNS {
                    return Err(Error::parse(path, format!("line {n}: expected column header {PLAN_COLUMNS:?}")));
                }
                saw_columns = true;
                continue;
            }
            let v = parse_numbers(line, 6, n, path)?;
            records.push(AnnotatedWaypoint {
                waypoint: Point3::new(v[0], v[1], v[2]),
                contact: Point3::new(v[3], v[4], v[5]),
            });
        }
        let missing = |field: &str| Error::parse(path, format!("missing header field `{field}`"));
        let plan = PlanFile {
            map: map.ok_or_else(|| missing("map"))?,
            planner: planner.ok_or_else(|| missing("planner"))?,
            inflate: inflate.ok_or_else(|| missing("inflate"))?,
            path: AnnotatedPath {
                tether_origin: origin.ok_or_else(|| missing("tether_origin"))?,
                records,
            },
        };
        if plan.path.records.is_empty() {
            return Err(Error::parse(path, "plan has no waypoint records"));
        }
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PlanFile> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PlanFile::parse(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("plan.txt")
    }

    #[test]
    fn rejects_missing_header() {
        let err = PlanFile::parse("wx,wy,wz,cx,cy,cz\n", p()).unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let text = format!("{PLAN_MAGIC}\n# planner: raycast\n# inflate: 0.3\n# tether_origin: 0,0,0\n{PLAN_COLUMNS}\n1,2,3,0,0,0\n");
        let err = PlanFile::parse(&text, p()).unwrap_err();
        assert!(err.to_string().contains("`map`"));
    }

    #[test]
    fn rejects_short_record() {
        let text = format!("{PLAN_MAGIC}\n# map: m.toml\n# planner: contact\n# inflate: 0.3\n# tether_origin: 0,0,0\n{PLAN_COLUMNS}\n1,2,3,0,0\n");
        let err = PlanFile::parse(&text, p()).unwrap_err();
        assert!(err.to_string().contains("line 7"), "{err}");
    }

    fn coord() -> impl Strategy<Value = f64> {
        -100.0f64..100.0
    }

    fn point() -> impl Strategy<Value = Point3> {
        (coord(), coord(), coord()).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn write_read_write_is_byte_identical(
            origin in point(),
            recs in prop::collection::vec((point(), point()), 1..20),
            contact in any::<bool>(),
        ) {
            let plan = PlanFile {
                map: "scenes/room.toml".into(),
                planner: if contact { PlannerId::Contact } else { PlannerId::Raycast },
                inflate: 0.3,
                path: AnnotatedPath {
                    tether_origin: origin,
                    records: recs.into_iter().map(|(waypoint, contact)| AnnotatedWaypoint { waypoint, contact }).collect(),
                },
            };
            let text = plan.to_text();
            let back = PlanFile::parse(&text, p()).unwrap();
            prop_assert_eq!(&back, &plan);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}

//! Polar tether controls and a kinematic, noisy execution model.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point3};
use crate::plan::AnnotatedPath;
use crate::stack::ContactStack;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polar {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Length, elevation (from the horizontal) and azimuth (from +z toward +x)
/// of `p` as seen from `cp`.
pub fn to_polar(p: Point3, cp: Point3) -> Polar {
    let d = p - cp;
    let r = d.norm();
    if r == 0.0 {
        return Polar { r: 0.0, theta: 0.0, phi: 0.0 };
    }
    Polar {
        r,
        theta: (d.y / r).clamp(-1.0, 1.0).asin(),
        phi: d.x.atan2(d.z),
    }
}

/// Unit direction for elevation `theta` and azimuth `phi`.
pub fn direction(theta: f64, phi: f64) -> Point3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Point3::new(ct * sp, st, ct * cp)
}

pub fn from_polar(cp: Point3, polar: Polar) -> Point3 {
    cp + direction(polar.theta, polar.phi) * polar.r
}

/// Tether command: total paid-out length plus the direction from the top
/// contact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Controls {
    /// Effective length beyond the top contact.
    pub fn r_eff(&self, r_sta: f64) -> f64 {
        self.r - r_sta
    }
}

pub fn desired_controls(wp: Point3, stack: &ContactStack) -> Controls {
    let eff = to_polar(wp, stack.top());
    Controls {
        r: eff.r + stack.static_length(),
        theta: eff.theta,
        phi: eff.phi,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Contact placement error per new contact (m).
    pub sigma_cp: f64,
    /// Contact random walk (m per step).
    pub sigma_drift: f64,
    /// Localization random walk (m per step).
    pub sigma_loc: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_cp: 0.15,
            sigma_drift: 0.01,
            sigma_loc: 0.002,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn zero(seed: u64) -> Self {
        NoiseConfig {
            sigma_cp: 0.0,
            sigma_drift: 0.0,
            sigma_loc: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_cp", self.sigma_cp),
            ("sigma_drift", self.sigma_drift),
            ("sigma_loc", self.sigma_loc),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    /// Acceptance ball radius (m).
    pub r_acc: f64,
    /// m/s
    pub speed: f64,
    /// Hz
    pub rate: f64,
    pub max_steps: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            r_acc: 0.4,
            speed: 0.5,
            rate: 120.0,
            max_steps: 100_000,
        }
    }
}

impl ExecConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive, got {v}")))
            }
        };
        positive("r_acc", self.r_acc)?;
        positive("speed", self.speed)?;
        positive("rate", self.rate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Point3,
    pub active_contacts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
}

impl Trajectory {
    /// Delimited export: `t,x,y,z,active_contacts`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,x,y,z,active_contacts\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{}",
                s.t, s.position.x, s.position.y, s.position.z, s.active_contacts
            );
        }
        out
    }

    pub fn from_csv(text: &str, path: &std::path::Path) -> Result<Trajectory> {
        let mut samples = Vec::new();
        let mut header = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "t,x,y,z,active_contacts" {
                    return Err(Error::parse(path, format!("line {}: expected trajectory header", n + 1)));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::parse(path, format!("line {}: malformed trajectory record", n + 1));
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            samples.push(Sample {
                t: num(f[0])?,
                position: Point3::new(num(f[1])?, num(f[2])?, num(f[3])?),
                active_contacts: f[4].trim().parse().map_err(|_| bad())?,
            });
        }
        if samples.is_empty() {
            return Err(Error::parse(path, "trajectory has no samples"));
        }
        Ok(Trajectory {
            samples,
            outcome: Outcome::Completed,
        })
    }
}

fn gauss3(rng: &mut ChaCha8Rng, sigma: f64) -> Point3 {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    Point3::new(g(), g(), g()) * sigma
}

/// Planned stack plus the simulated (perturbed) copy of every contact.
struct Tether {
    planned: ContactStack,
    truth: ContactStack,
}

impl Tether {
    /// Bring the planned stack in line with the annotation `contact`.
    fn sync(&mut self, contact: Point3, rng: &mut ChaCha8Rng, sigma_cp: f64) {
        if contact == self.planned.top() {
            return;
        }
        if let Some(depth) = self.planned.points().iter().rposition(|&p| p == contact) {
            while self.planned.depth() > depth + 1 {
                self.planned.pop();
                self.truth.pop();
            }
            return;
        }
        self.planned.push(contact);
        let placed = contact + gauss3(rng, sigma_cp);
        self.truth.push(placed);
    }

    fn drift(&mut self, rng: &mut ChaCha8Rng, sigma: f64) {
        if self.truth.contacts() == 0 {
            return;
        }
        let mut pts = self.truth.points().to_vec();
        for p in pts.iter_mut().skip(1) {
            *p += gauss3(rng, sigma);
        }
        let mut rebuilt = ContactStack::new(pts[0]);
        for &p in &pts[1..] {
            rebuilt.push(p);
        }
        self.truth = rebuilt;
    }
}

/// Fly `plan` with a bounded-step point robot. Targets and acceptance use
/// the believed position; samples record the true one.
pub fn simulate_execution(plan: &AnnotatedPath, noise: &NoiseConfig, exec: &ExecConfig) -> Result<Trajectory> {
    if plan.is_empty() {
        return Err(Error::Validation("plan has no waypoints".into()));
    }
    noise.validate()?;
    exec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let recs = &plan.records;
    let step = exec.speed / exec.rate;
    let mut tether = Tether {
        planned: ContactStack::new(plan.tether_origin),
        truth: ContactStack::new(plan.tether_origin),
    };
    let mut belief = recs[0].waypoint;
    let mut loc = Point3::ORIGIN;
    let mut target = 0;
    tether.sync(recs[0].contact, &mut rng, noise.sigma_cp);

    let truth_of = |belief: Point3, tether: &Tether, loc: Point3| {
        let c = desired_controls(belief, &tether.planned);
        let r_eff = (c.r - tether.truth.static_length()).max(0.0);
        tether.truth.top() + direction(c.theta, c.phi) * r_eff + loc
    };

    let mut samples = vec![Sample {
        t: 0.0,
        position: truth_of(belief, &tether, loc),
        active_contacts: tether.planned.contacts(),
    }];
    for n in 1..=exec.max_steps {
        while belief.distance(recs[target].waypoint) <= exec.r_acc {
            if target + 1 == recs.len() {
                return Ok(Trajectory {
                    samples,
                    outcome: Outcome::Completed,
                });
            }
            target += 1;
            tether.sync(recs[target].contact, &mut rng, noise.sigma_cp);
        }
        let goal = recs[target].waypoint;
        let d = belief.distance(goal);
        belief = if d <= step { goal } else { belief.lerp(goal, step / d) };
        tether.drift(&mut rng, noise.sigma_drift);
        loc += gauss3(&mut rng, noise.sigma_loc);
        samples.push(Sample {
            t: n as f64 / exec.rate,
            position: truth_of(belief, &tether, loc),
            active_contacts: tether.planned.contacts(),
        });
    }
    Ok(Trajectory {
        samples,
        outcome: Outcome::Aborted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossTrack {
    pub mean: f64,
    pub max: f64,
    #[serde(skip)]
    pub per_sample: Vec<f64>,
    /// Mean error keyed by active contact count.
    pub stage_means: BTreeMap<usize, f64>,
}

/// Distance from every sample to the planned waypoint polyline.
pub fn cross_track_error(traj: &Trajectory, plan: &AnnotatedPath) -> Result<CrossTrack> {
    if plan.len() < 2 {
        return Err(Error::Validation("cross-track error needs a plan with at least 2 waypoints".into()));
    }
    if traj.samples.is_empty() {
        return Err(Error::Validation("trajectory has no samples".into()));
    }
    let wps = plan.waypoints();
    let per_sample: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            wps.windows(2)
                .map(|w| point_segment_distance(s.position, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut stages: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (s, &e) in traj.samples.iter().zip(&per_sample) {
        let entry = stages.entry(s.active_contacts).or_insert((0.0, 0));
        entry.0 += e;
        entry.1 += 1;
    }
    Ok(CrossTrack {
        mean: per_sample.iter().sum::<f64>() / per_sample.len() as f64,
        max: per_sample.iter().copied().fold(0.0, f64::max),
        stage_means: stages.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect(),
        per_sample,
    })
}

#[derive(Clone, Debug)]
pub struct Trial {
    pub seed: u64,
    pub trajectory: Trajectory,
    pub error: CrossTrack,
}

/// One simulation per seed, run in parallel, returned in seed order.
pub fn run_trials(plan: &AnnotatedPath, noise: &NoiseConfig, exec: &ExecConfig, seeds: &[u64]) -> Result<Vec<Trial>> {
    let mut trials = seeds
        .par_iter()
        .map(|&seed| {
            let trajectory = simulate_execution(plan, &NoiseConfig { seed, ..*noise }, exec)?;
            let error = cross_track_error(&trajectory, plan)?;
            Ok(Trial { seed, trajectory, error })
        })
        .collect::<Result<Vec<_>>>()?;
    trials.sort_by_key(|t| t.seed);
    Ok(trials)
}

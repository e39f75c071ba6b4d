//! Motion planning for a UAV on a taut tether.
//!
//! Two planners share one roadmap layer: [`raycast`] keeps the robot where
//! the reel can see it, and [`contact`] lets the tether wrap obstacles by
//! tracking a stack of contact points. Both emit an [`AnnotatedPath`] that
//! [`executor`] turns into tether controls and simulates.
//!
//! Frame: y is up; azimuth is measured from +z toward +x.

pub mod contact;
pub mod error;
pub mod executor;
pub mod geometry;
pub mod map_file;
pub mod plan;
pub mod prm;
pub mod raycast;
pub mod scenario;
pub mod scenes;
pub mod stack;
pub mod voxel_map;

pub use contact::{find_contact_point, obstacle_confined, plan_contacts, ContactEvent, ContactPlan};
pub use error::{Error, Result};
pub use executor::{
    cross_track_error, desired_controls, simulate_execution, to_polar, Controls, CrossTrack, ExecConfig,
    NoiseConfig, Outcome, Trajectory,
};
pub use geometry::Point3;
pub use map_file::load_map;
pub use plan::{AnnotatedPath, AnnotatedWaypoint, PlanFile, PlannerId};
pub use prm::{build_prm, query_path, smooth_path, Path, PlannerConfig, PrmParams, Roadmap, SmoothParams};
pub use raycast::{plan_raycast, reachability_fraction, reduce_reachable_space, ReducedMap};
pub use scenario::{Scenario, ScenarioSpec};
pub use stack::{static_length, ContactStack};
pub use voxel_map::{CellIndex, VoxelMap};

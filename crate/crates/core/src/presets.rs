//! Built-in scenarios.

use crate::controller::Gains;
use crate::geometry::{UnitVec3, Vec3};
use crate::graph::build_digraph;
use crate::sim::{AgentState, Scenario, DEFAULT_DT, DEFAULT_SEPARATION_GUARD, DEFAULT_T_END};
use crate::trajectory::{rotating_rigid_trajectory, DesiredTrajectory};

pub const PYRAMID_PERIOD: f64 = 2.5;

/// Desired positions of the rotating pyramid at `t = 0`; agent 1 sits at the origin.
pub fn pyramid_shape() -> Vec<Vec3> {
    let s3 = 3f64.sqrt();
    vec![Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(s3 / 2.0, 0.5, 0.0), Vec3::new(0.5, s3 / 2.0, 1.0)]
}

pub fn pyramid_trajectory() -> DesiredTrajectory {
    rotating_rigid_trajectory(pyramid_shape(), UnitVec3::z(), PYRAMID_PERIOD).expect("positive period")
}

pub fn pyramid_initial() -> Vec<AgentState> {
    vec![
        AgentState::new(Vec3::zeros(), Vec3::zeros()),
        AgentState::new(Vec3::new(-1.0, 2.0, 1.0), Vec3::new(0.0, 1.0, 0.0)),
        AgentState::new(Vec3::new(-2.0, -1.0, -1.0), Vec3::new(1.0, 0.0, 0.0)),
        AgentState::new(Vec3::new(-0.5, -0.5, 1.0), Vec3::new(1.0, 0.0, -1.0)),
    ]
}

/// Four agents on the path 4 → 3 → 2 → 1 tracking a pyramid that spins about
/// the z axis around a static leader, `kp = 3`, `kd = 10` for every follower.
pub fn pyramid() -> Scenario {
    let graph = build_digraph(4, &[(2, 1), (3, 2), (4, 3)]).expect("valid path graph");
    Scenario::new(
        graph,
        pyramid_trajectory(),
        vec![Gains::new(3.0, 10.0); 4],
        pyramid_initial(),
        DEFAULT_DT,
        DEFAULT_T_END,
        DEFAULT_SEPARATION_GUARD,
    )
    .expect("pyramid scenario is valid")
}

//! Simulator and learning stack for joint path planning and uplink power
//! allocation of a cellular-connected UAV.

pub mod bc;
pub mod channel;
pub mod dec;
pub mod demo;
pub mod dqn;
pub mod harness;
pub mod irl;
pub mod learn;
pub mod lfa;
pub mod policy;
pub mod seed;
pub mod trajectories;
pub mod world;

pub use channel::{ChannelMode, ChannelParams};
pub use harness::{LearnerKind, MetricsRow, PolicyArtifact, RunConfig};
pub use irl::RewardWeights;
pub use policy::PolicyModel;
pub use trajectories::{StepRecord, Trajectory, TrajectorySource};
pub use world::{Action, CellCoord, Direction, FeatureVector, Scenario, ScenarioConfig, StepMetrics, UavState};

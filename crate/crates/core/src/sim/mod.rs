//! Deterministic fixed-step flight simulation: rigid body, pose controller,
//! reference trajectories and scenario orchestration.

pub mod controller;
pub mod metrics;
pub mod rigid_body;
pub mod scenario;
pub mod trajectory;

pub use controller::PoseController;
pub use metrics::{MetricsReport, RunMetrics, ScrewTrace, TickRecord, SCHEMA_VERSION};
pub use rigid_body::{step_rigid_body, Integrator, RigidBodyState};
pub use scenario::{
    run_scenario, run_screw_scenario, AllocParams, AllocationMethod, ScenarioSetup, ScrewParams,
    SimParams,
};
pub use trajectory::{OscAxis, Reference, TrajectorySpec};

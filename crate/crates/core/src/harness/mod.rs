//! Verification and application tooling built on the damper model.

pub mod oracle;
pub mod profiles;
pub mod tower;
pub mod tune;

pub use oracle::{inertial_oracle, OracleRecord, OracleTrajectory, PenaltyOracleConfig};
pub use tower::{coupled_tower_simulate, Multisine, TowerModel, TowerTrajectory};
pub use tune::{tune_passive, Objective, SearchBox, TuneResult};

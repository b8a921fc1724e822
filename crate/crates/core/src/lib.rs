//! Tuned mass dampers riding in a moving, rotating wind-turbine nacelle.
//!
//! [`tmd`] holds the non-inertial equations of motion and the reaction loads
//! on the nacelle, [`integrate`] steps them under prescribed nacelle motion,
//! and [`harness`] provides an inertial-frame reference, a coupled tower
//! model and a passive tuner.

pub mod cli;
pub mod error;
pub mod frames;
pub mod harness;
pub mod integrate;
pub mod io;
pub mod tmd;

pub use error::{Error, Result};
pub use frames::{NacelleMotionNacelleFrame, NacelleMotionSample, RotationMatrix, Vec3};
pub use integrate::{simulate, MotionSeries, SimResult, SimSettings};
pub use tmd::{ExternalForce, LoadOutput, TmdAxisParams, TmdConfig, TmdState};

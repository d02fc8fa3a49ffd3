//! Control allocation and a deterministic flight-simulation benchmark for
//! omnidirectional tilt-rotor multirotors.
//!
//! The crate compares allocation schemes that map a desired body wrench (or
//! its time derivative) to tilt-servo and rotor commands:
//!
//! - `ageom`: minimum-norm inversion of the constant allocation matrix with
//!   trigonometric extraction ([`alloc::geometric`]);
//! - `adiffold` / `adiff`: differential allocation with a weighted
//!   pseudoinverse and nullspace objectives, fed by acceleration-derived or
//!   wrench-error jerk commands ([`alloc::differential`]);
//! - `asecond` / `anosecond`: the same jerk task normalized by actuator rate
//!   limits instead of hand-tuned weights ([`alloc::normalized`]);
//! - `apower`: normalization driven by speed-dependent propeller acceleration
//!   limit curves derived from the motor power balance ([`power`]), which
//!   also enables stopping propellers in flight.
//!
//! The [`sim`] module runs the methods closed-loop on a rigid-body platform
//! model; [`bench`] executes method-by-trajectory matrices and emits
//! plot-ready CSV/JSON reports.

pub mod alloc;
pub mod bench;
pub mod config;
pub mod error;
pub mod limits;
pub mod platform;
pub mod power;
pub mod sim;
pub mod stats;
pub mod types;

pub use error::{Error, Result};

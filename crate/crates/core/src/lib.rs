//! Planar model of a tendon-driven hand exoskeleton for the index finger.
//!
//! A finger is a chain of three phalanges with linear torsion springs standing
//! in for spastic joint stiffness. A tendon routed along the back of the finger
//! through one of several guide layouts pulls it straight; the crate computes
//! tendon paths, joint moment arms, the tension needed to hold any posture, and
//! the posture reached at any tension.

pub mod checks;
pub mod config;
pub mod error;
pub mod fingermodel;
pub mod geometry;
pub mod routing;
pub mod runner;
pub mod statics;
pub mod studies;
pub mod table;

pub use error::{Error, Result};

//! Kinematics and quasi-static assembly simulation for a double jaw robot
//! hand: an inner crank-slider gripper and an outer parallelogram gripper
//! joined by a lead-screw prismatic joint along the approach vector.
//!
//! Module map:
//! - [`mechanisms`]: forward/inverse kinematics and force transmission.
//! - [`hand`]: the 4-DoF hand state, grasp checks, v-groove alignment, holds.
//! - [`world`]: parts, scenes, contact classification, admittance stepping.
//! - [`search`]: guarded linear search, spiral search and compliant insertion.
//! - [`tasks`]: peg-in-multi-hole workflows as explicit state machines.
//! - [`parallel`]: data-parallel helpers with a sequential fallback.

// `!(x > 0.0)` comparisons are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod hand;
pub mod mechanisms;
pub mod parallel;
pub mod search;
pub mod tasks;
pub mod world;

/// Name of a part in a scene or catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

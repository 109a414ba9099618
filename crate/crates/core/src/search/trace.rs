use serde::{Deserialize, Serialize};

use crate::world::ContactClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Approach,
    Spiral,
    Insert,
    PullIn,
    PushOut,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Approach => "approach",
            Phase::Spiral => "spiral",
            Phase::Insert => "insert",
            Phase::PullIn => "pull_in",
            Phase::PushOut => "push_out",
            Phase::Done => "done",
        }
    }
}

/// One simulation step: tip position and reaction force on the peg in world
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub position_mm: [f64; 3],
    pub tilt_deg: f64,
    pub force_n: [f64; 3],
    pub phase: Phase,
    pub contact: ContactClass,
}

//! The three-step insertion routine: a guarded linear approach until the
//! peg hits the part, a lateral search pattern to find the hole, and a
//! compliant admittance-controlled insertion.
//!
//! All motion is simulated in the entry frame of the target part (see
//! [`crate::world::TipState`]); the trace is reported in world coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{AdmittanceGains, WorldError};

mod episode;
mod pattern;
mod trace;

pub use episode::{Episode, EpisodeSetup, LinearOutcome, SpiralOutcome};
pub use pattern::{circles_point, spiral_point, Pattern, Samples};
pub use trace::{Phase, TraceRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub approach_speed_mm_s: f64,
    pub contact_force_threshold_n: f64,
    /// Axial force a hole probe presses with before giving up on a sample.
    pub preload_n: f64,
    pub spiral_pitch_mm: f64,
    pub spiral_step_mm: f64,
    pub spiral_max_radius_mm: f64,
    pub pattern: Pattern,
    pub detection_drop_mm: f64,
    pub insertion_target_depth_mm: f64,
    /// How far past the target the insertion set point ramps.
    pub overtravel_mm: f64,
    /// Consecutive blocked steps before an insertion is declared stuck.
    pub jam_patience_steps: u32,
    pub gains: AdmittanceGains,
    pub max_duration_s: f64,
    pub dt_s: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            approach_speed_mm_s: 5.0,
            contact_force_threshold_n: 2.0,
            preload_n: 1.0,
            spiral_pitch_mm: 0.5,
            spiral_step_mm: 0.25,
            spiral_max_radius_mm: 5.0,
            pattern: Pattern::Spiral,
            detection_drop_mm: 0.5,
            insertion_target_depth_mm: 10.0,
            overtravel_mm: 0.5,
            jam_patience_steps: 5,
            gains: AdmittanceGains::default(),
            max_duration_s: 300.0,
            dt_s: 0.01,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let positive = [
            ("approach_speed_mm_s", self.approach_speed_mm_s),
            ("contact_force_threshold_n", self.contact_force_threshold_n),
            ("preload_n", self.preload_n),
            ("spiral_pitch_mm", self.spiral_pitch_mm),
            ("spiral_step_mm", self.spiral_step_mm),
            ("spiral_max_radius_mm", self.spiral_max_radius_mm),
            ("detection_drop_mm", self.detection_drop_mm),
            ("insertion_target_depth_mm", self.insertion_target_depth_mm),
            ("overtravel_mm", self.overtravel_mm),
            ("max_duration_s", self.max_duration_s),
            ("dt_s", self.dt_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SearchError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.spiral_step_mm > self.spiral_pitch_mm {
            return Err(SearchError::Config(format!(
                "spiral_step_mm {} exceeds spiral_pitch_mm {}",
                self.spiral_step_mm, self.spiral_pitch_mm
            )));
        }
        if self.dt_s > 0.1 {
            return Err(SearchError::Config(format!("dt_s {} exceeds 0.1 s", self.dt_s)));
        }
        if self.jam_patience_steps == 0 {
            return Err(SearchError::Config("jam_patience_steps must be at least 1".into()));
        }
        self.gains.check_step(self.dt_s)?;
        Ok(())
    }

    /// Nominal lateral search pattern sample `k`.
    pub fn pattern_point(&self, k: usize) -> (f64, f64) {
        match self.pattern {
            Pattern::Spiral => spiral_point(k, self.spiral_pitch_mm, self.spiral_step_mm),
            Pattern::Circles => circles_point(k, self.spiral_pitch_mm, self.spiral_step_mm),
        }
    }

    pub fn samples(&self) -> Samples {
        Samples::new(
            self.pattern,
            self.spiral_pitch_mm,
            self.spiral_step_mm,
            self.spiral_max_radius_mm,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertOutcome {
    Success,
    Jammed,
    Wedged,
    HoleNotFound,
    Timeout,
}

impl InsertOutcome {
    pub fn is_success(self) -> bool {
        self == InsertOutcome::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionResult {
    pub outcome: InsertOutcome,
    pub depth_reached_mm: f64,
    pub target_depth_mm: f64,
    pub time_elapsed_s: f64,
    pub impact_count: u32,
    /// Tip distance from the axis of the bore segment it ends in.
    pub final_lateral_error_mm: f64,
    /// Radial clearance of that segment.
    pub final_radial_clearance_mm: f64,
    pub spiral_samples: Option<usize>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SearchConfig::default().validate().unwrap();
    }

    #[test]
    fn step_longer_than_pitch_is_rejected() {
        let cfg = SearchConfig {
            spiral_step_mm: 0.6,
            ..SearchConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(SearchError::Config(_))));
    }

    #[test]
    fn large_time_step_is_rejected() {
        let cfg = SearchConfig {
            dt_s: 0.2,
            ..SearchConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig {
            preload_n: 0.0,
            ..SearchConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}

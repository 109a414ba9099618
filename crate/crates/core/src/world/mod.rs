//! Quasi-static scene model: pegs and bored parts, relative pose bookkeeping,
//! contact classification, admittance stepping and the spacer tilt
//! disturbance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod admittance;
mod catalog;
mod contact;
mod geometry;
mod scene;

pub use admittance::{step_admittance, AdmittanceGains};
pub use catalog::{
    Catalog, CatalogEntry, ClearanceSpec, BASE_BEARING, BASE_SLOT, CLAMPING_PULLEY, IDLE_PULLEY, PIN_SPACER,
    PULLEY_SHAFT, RETAINER_PIN, SHAFT_SPACER,
};
pub use contact::{
    classify_local, contact_query, entry_frame, tip_in_entry, ContactClass, ContactSet, PENETRATION_TOLERANCE_MM,
};
pub use geometry::{
    Advance, Block, BoreSegment, BoredPart, ClearanceConvention, Compliance, Engagement, Entry, LocalBore,
    LocalSegment, Peg, PegHead, TipState, CONTACT_EPS_MM,
};
pub use scene::{Holder, Part, Scene, SceneObject};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("interpenetration of {penetration_mm:.4} mm exceeds tolerance")]
    Interpenetration { penetration_mm: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("time step {0} s outside (0, 0.1]")]
    BadTimeStep(f64),
    #[error("invalid admittance gains: {0}")]
    BadGains(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{0}` already exists")]
    DuplicateObject(String),
    #[error("object `{object}` is a {found}, expected a {expected}")]
    WrongKind {
        object: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("{holder} is already holding `{object}`")]
    HolderBusy { holder: Holder, object: String },
    #[error("`{0}` is already held or mounted")]
    AlreadyAttached(String),
    #[error("{0} is not holding anything")]
    HolderEmpty(Holder),
    #[error("held object `{object}` drifted {drift_mm:.3e} mm from its holder")]
    DetachedHold { object: String, drift_mm: f64 },
}

/// Global physical constants of the simulated world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    /// Reported reaction per mm of refused penetration.
    pub contact_stiffness_n_per_mm: f64,
    pub tilt_increment_deg: f64,
    pub tilt_cap_deg: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            contact_stiffness_n_per_mm: 100.0,
            tilt_increment_deg: 0.2,
            tilt_cap_deg: 10.0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.contact_stiffness_n_per_mm > 0.0 && self.contact_stiffness_n_per_mm.is_finite()) {
            return Err(WorldError::InvalidGeometry("contact stiffness must be positive".into()));
        }
        if !(self.tilt_increment_deg >= 0.0 && self.tilt_cap_deg >= 0.0) {
            return Err(WorldError::InvalidGeometry(
                "tilt increment and cap must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn tilt_increment_rad(&self) -> f64 {
        self.tilt_increment_deg.to_radians()
    }

    pub fn tilt_cap_rad(&self) -> f64 {
        self.tilt_cap_deg.to_radians()
    }
}

/// Rocks a loosely held part a little further for every impact. Negative
/// increments are treated as zero. A part already past the cap is left alone.
pub fn apply_tilt_perturbation(
    part: &BoredPart,
    impact_count: u32,
    tilt_increment_rad: f64,
    tilt_cap_rad: f64,
) -> BoredPart {
    let mut out = part.clone();
    if part.tilt_rad < tilt_cap_rad {
        let grown = part.tilt_rad + f64::from(impact_count) * tilt_increment_rad.max(0.0);
        out.tilt_rad = grown.min(tilt_cap_rad);
    }
    out
}

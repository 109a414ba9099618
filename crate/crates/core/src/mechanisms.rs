//! Transmission mechanisms of the hand: the crank-slider that drives the
//! inner jaws, the parallelogram that carries each outer finger, and the
//! lead screw of the prismatic joint.
//!
//! All lengths are millimetres and all angles radians.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full travel of the prismatic joint, calibrated so that 0 mm is fully pulled in.
pub const PRISMATIC_TRAVEL_MM: f64 = 73.0;
/// Time for one full stroke of the prismatic joint.
pub const PRISMATIC_FULL_STROKE_S: f64 = 55.0;
/// Maximum servo torque at 12 V.
pub const SERVO_MAX_TORQUE_NM: f64 = 4.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("commanded extension {extension_mm} mm outside travel [0, {max_mm}] mm")]
    TravelLimit { extension_mm: f64, max_mm: f64 },
    #[error("invalid mechanism parameters: {0}")]
    InvalidParams(String),
}

/// Closed angle interval in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleRange {
    pub lo: f64,
    pub hi: f64,
}

impl AngleRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    fn check(&self, what: &'static str, theta: f64) -> Result<(), MechanismError> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(MechanismError::OutOfRange {
                what,
                value: theta,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrankSliderParams {
    pub crank_radius_mm: f64,
    pub rod_length_mm: f64,
    pub theta_range_rad: AngleRange,
}

impl Default for CrankSliderParams {
    fn default() -> Self {
        Self {
            crank_radius_mm: 5.0,
            rod_length_mm: 20.0,
            theta_range_rad: AngleRange::new(0.0, PI),
        }
    }
}

impl CrankSliderParams {
    pub fn validate(&self) -> Result<(), MechanismError> {
        let r = self.crank_radius_mm;
        let l = self.rod_length_mm;
        if !(r > 0.0 && l > r) {
            return Err(MechanismError::InvalidParams(format!(
                "crank-slider needs rod > crank > 0 (crank {r}, rod {l})"
            )));
        }
        let range = self.theta_range_rad;
        if !(range.lo >= 0.0 && range.hi <= PI && range.lo < range.hi) {
            return Err(MechanismError::InvalidParams(format!(
                "crank angle range [{}, {}] not inside [0, pi]",
                range.lo, range.hi
            )));
        }
        Ok(())
    }

    /// Slider position measured from the crank pivot.
    pub fn slider_position(&self, theta: f64) -> f64 {
        let r = self.crank_radius_mm;
        let l = self.rod_length_mm;
        let s = theta.sin();
        r * theta.cos() + (l * l - r * r * s * s).sqrt()
    }

    /// Analytic ds/dθ in mm/rad.
    pub fn slider_rate(&self, theta: f64) -> f64 {
        let r = self.crank_radius_mm;
        let l = self.rod_length_mm;
        let (s, c) = theta.sin_cos();
        -r * s - r * r * s * c / (l * l - r * r * s * s).sqrt()
    }

    /// Jaw opening when both jaws are driven symmetrically by the crank.
    pub fn stroke_mm(&self) -> f64 {
        4.0 * self.crank_radius_mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParallelogramParams {
    pub link_length_mm: f64,
    pub theta_range_rad: AngleRange,
}

impl Default for ParallelogramParams {
    fn default() -> Self {
        Self {
            link_length_mm: 75.0,
            theta_range_rad: AngleRange::new(0.0, FRAC_PI_2),
        }
    }
}

impl ParallelogramParams {
    pub fn validate(&self) -> Result<(), MechanismError> {
        let range = self.theta_range_rad;
        if !(self.link_length_mm > 0.0) {
            return Err(MechanismError::InvalidParams(format!(
                "parallelogram link length {} must be positive",
                self.link_length_mm
            )));
        }
        if !(range.lo >= 0.0 && range.hi <= FRAC_PI_2 && range.lo < range.hi) {
            return Err(MechanismError::InvalidParams(format!(
                "parallelogram angle range [{}, {}] not inside [0, pi/2]",
                range.lo, range.hi
            )));
        }
        Ok(())
    }

    /// Displacement of one finger at the end of its range.
    pub fn finger_stroke_mm(&self) -> f64 {
        self.link_length_mm * self.theta_range_rad.hi.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeadScrewParams {
    pub lead_mm_per_rev: f64,
    pub travel_max_mm: f64,
    pub linear_speed_mm_s: f64,
}

impl Default for LeadScrewParams {
    fn default() -> Self {
        Self {
            lead_mm_per_rev: 2.0,
            travel_max_mm: PRISMATIC_TRAVEL_MM,
            linear_speed_mm_s: PRISMATIC_TRAVEL_MM / PRISMATIC_FULL_STROKE_S,
        }
    }
}

impl LeadScrewParams {
    pub fn validate(&self) -> Result<(), MechanismError> {
        if !(self.lead_mm_per_rev > 0.0 && self.linear_speed_mm_s > 0.0 && self.travel_max_mm > 0.0) {
            return Err(MechanismError::InvalidParams(format!(
                "lead screw needs positive lead, speed and travel ({self:?})"
            )));
        }
        Ok(())
    }

    pub fn check_extension(&self, extension_mm: f64) -> Result<(), MechanismError> {
        if (0.0..=self.travel_max_mm).contains(&extension_mm) {
            Ok(())
        } else {
            Err(MechanismError::TravelLimit {
                extension_mm,
                max_mm: self.travel_max_mm,
            })
        }
    }
}

/// Grip force from the crank-slider. Toggle positions transmit unbounded
/// force, which is reported as a tag rather than an infinite number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "newtons", rename_all = "snake_case")]
pub enum GripForce {
    Finite(f64),
    Unbounded,
}

impl GripForce {
    pub fn newtons(self) -> Option<f64> {
        match self {
            GripForce::Finite(f) => Some(f),
            GripForce::Unbounded => None,
        }
    }
}

pub fn crank_slider_forward(theta: f64, p: &CrankSliderParams) -> Result<f64, MechanismError> {
    p.theta_range_rad.check("crank angle", theta)?;
    Ok(2.0 * (p.slider_position(theta) - p.slider_position(PI)))
}

/// Inverts the opening map by bisection on the monotone branch.
pub fn crank_slider_inverse(opening_mm: f64, p: &CrankSliderParams) -> Result<f64, MechanismError> {
    let range = p.theta_range_rad;
    let open_at = |theta: f64| 2.0 * (p.slider_position(theta) - p.slider_position(PI));
    // Opening decreases with theta.
    let max_open = open_at(range.lo);
    let min_open = open_at(range.hi);
    if !(opening_mm >= min_open && opening_mm <= max_open) {
        return Err(MechanismError::OutOfRange {
            what: "inner jaw opening",
            value: opening_mm,
            lo: min_open,
            hi: max_open,
        });
    }
    if opening_mm == max_open {
        return Ok(range.lo);
    }
    if opening_mm == min_open {
        return Ok(range.hi);
    }
    let (mut lo, mut hi) = (range.lo, range.hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if open_at(mid) > opening_mm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = if (open_at(lo) - opening_mm).abs() <= (open_at(hi) - opening_mm).abs() {
        lo
    } else {
        hi
    };
    Ok(theta)
}

/// Per-jaw grip force `τ / |ds/dθ|` with the slider rate converted to metres.
pub fn crank_slider_force_ratio(
    theta: f64,
    p: &CrankSliderParams,
    motor_torque_nm: f64,
) -> Result<GripForce, MechanismError> {
    p.theta_range_rad.check("crank angle", theta)?;
    let rate_m = p.slider_rate(theta).abs() * 1e-3;
    if theta <= 0.0 || theta >= PI || rate_m == 0.0 {
        return Ok(GripForce::Unbounded);
    }
    Ok(GripForce::Finite(motor_torque_nm.abs() / rate_m))
}

pub fn parallelogram_forward(theta: f64, p: &ParallelogramParams) -> Result<f64, MechanismError> {
    p.theta_range_rad.check("parallelogram angle", theta)?;
    Ok(p.link_length_mm * theta.sin())
}

pub fn parallelogram_inverse(displacement_mm: f64, p: &ParallelogramParams) -> Result<f64, MechanismError> {
    let range = p.theta_range_rad;
    let lo = p.link_length_mm * range.lo.sin();
    let hi = p.link_length_mm * range.hi.sin();
    if !(displacement_mm >= lo && displacement_mm <= hi) {
        return Err(MechanismError::OutOfRange {
            what: "outer finger displacement",
            value: displacement_mm,
            lo,
            hi,
        });
    }
    let theta = (displacement_mm / p.link_length_mm).clamp(-1.0, 1.0).asin();
    Ok(theta.clamp(range.lo, range.hi))
}

/// Pose of a parallelogram fingertip in the finger base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingertipFrame {
    /// Displacement along the closing direction.
    pub displacement_mm: f64,
    /// Coupler rise along the approach direction.
    pub rise_mm: f64,
    /// Planar rotation of the fingertip, row-major 2x2.
    pub rotation: [[f64; 2]; 2],
}

/// The coupler of a parallelogram translates on a circular arc, so the
/// fingertip rotation is the identity at every crank angle.
pub fn parallelogram_fingertip(theta: f64, p: &ParallelogramParams) -> Result<FingertipFrame, MechanismError> {
    let displacement_mm = parallelogram_forward(theta, p)?;
    Ok(FingertipFrame {
        displacement_mm,
        rise_mm: p.link_length_mm * (1.0 - theta.cos()),
        rotation: [[1.0, 0.0], [0.0, 1.0]],
    })
}

pub fn leadscrew_position(revolutions: f64, p: &LeadScrewParams) -> Result<f64, MechanismError> {
    let extension_mm = p.lead_mm_per_rev * revolutions;
    p.check_extension(extension_mm)?;
    Ok(extension_mm)
}

pub fn leadscrew_revolutions(extension_mm: f64, p: &LeadScrewParams) -> Result<f64, MechanismError> {
    p.check_extension(extension_mm)?;
    Ok(extension_mm / p.lead_mm_per_rev)
}

pub fn leadscrew_travel_time(distance_mm: f64, p: &LeadScrewParams) -> Result<f64, MechanismError> {
    if !(distance_mm >= 0.0) {
        return Err(MechanismError::OutOfRange {
            what: "travel distance",
            value: distance_mm,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(distance_mm / p.linear_speed_mm_s)
}

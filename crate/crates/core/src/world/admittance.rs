use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::WorldError;

/// Per-axis first-order admittance: v = (F + K (target - x)) / D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmittanceGains {
    pub stiffness_n_per_mm: [f64; 3],
    pub damping_ns_per_mm: [f64; 3],
    pub force_deadband_n: f64,
}

impl Default for AdmittanceGains {
    fn default() -> Self {
        Self {
            stiffness_n_per_mm: [0.5, 0.5, 1.0],
            damping_ns_per_mm: [0.1, 0.1, 0.2],
            force_deadband_n: 0.05,
        }
    }
}

impl AdmittanceGains {
    pub fn validate(&self) -> Result<(), WorldError> {
        for axis in 0..3 {
            let k = self.stiffness_n_per_mm[axis];
            let d = self.damping_ns_per_mm[axis];
            if !(k > 0.0 && k.is_finite() && d > 0.0 && d.is_finite()) {
                return Err(WorldError::BadGains(format!(
                    "axis {axis}: stiffness {k} and damping {d} must be positive"
                )));
            }
        }
        if !(self.force_deadband_n >= 0.0) {
            return Err(WorldError::BadGains(format!(
                "deadband {} must be non-negative",
                self.force_deadband_n
            )));
        }
        Ok(())
    }

    /// Explicit Euler stays monotone (no overshoot) while K dt / D <= 1.
    pub fn check_step(&self, dt_s: f64) -> Result<(), WorldError> {
        self.validate()?;
        for axis in 0..3 {
            let ratio = self.stiffness_n_per_mm[axis] * dt_s / self.damping_ns_per_mm[axis];
            if ratio > 1.0 {
                return Err(WorldError::BadGains(format!(
                    "axis {axis}: K*dt/D = {ratio:.3} > 1 overshoots the target"
                )));
            }
        }
        Ok(())
    }
}

pub fn step_admittance(
    pose: Vector3<f64>,
    external_force_n: Vector3<f64>,
    target: Vector3<f64>,
    gains: &AdmittanceGains,
    dt_s: f64,
) -> Result<Vector3<f64>, WorldError> {
    if !(dt_s > 0.0 && dt_s <= 0.1) {
        return Err(WorldError::BadTimeStep(dt_s));
    }
    if !external_force_n.iter().all(|f| f.is_finite()) {
        return Err(WorldError::NonFinite("external force"));
    }
    if !(pose.iter().all(|v| v.is_finite()) && target.iter().all(|v| v.is_finite())) {
        return Err(WorldError::NonFinite("pose"));
    }
    let mut next = pose;
    for axis in 0..3 {
        let f = external_force_n[axis];
        let f = if f.abs() < gains.force_deadband_n { 0.0 } else { f };
        let v = (f + gains.stiffness_n_per_mm[axis] * (target[axis] - pose[axis])) / gains.damping_ns_per_mm[axis];
        next[axis] += v * dt_s;
    }
    Ok(next)
}

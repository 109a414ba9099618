//! The four-DoF double jaw hand: one crank-slider inner gripper, two
//! independent parallelogram outer fingers and a lead-screw prismatic joint
//! between the grippers along the shared approach vector.

use std::fmt;

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{self, CrankSliderParams, LeadScrewParams, MechanismError, ParallelogramParams};
use crate::ObjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    Inner,
    OuterLeft,
    OuterRight,
    Prismatic,
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dof::Inner => "inner",
            Dof::OuterLeft => "outer_left",
            Dof::OuterRight => "outer_right",
            Dof::Prismatic => "prismatic",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gripper {
    Inner,
    Outer,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HandError {
    #[error("{dof} DoF: {source}")]
    Dof {
        dof: Dof,
        #[source]
        source: MechanismError,
    },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("cylinder diameter must be positive, got {0} mm")]
    NonPositiveDiameter(f64),
    #[error("cylinder of {diameter_mm} mm does not fit the v-groove (largest zone {capacity_mm:.3} mm)")]
    NoAlignment { diameter_mm: f64, capacity_mm: f64 },
    #[error("{gripper:?} gripper already holds {holding}")]
    Occupied { gripper: Gripper, holding: ObjectId },
    #[error("{object} is already held by the {other:?} gripper")]
    AlreadyHeld { object: ObjectId, other: Gripper },
    #[error("{0:?} gripper holds nothing")]
    EmptyRelease(Gripper),
    #[error("trajectory sample period must be positive, got {0} s")]
    BadSamplePeriod(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HandParams {
    pub inner: CrankSliderParams,
    pub outer: ParallelogramParams,
    pub screw: LeadScrewParams,
    pub inner_groove: VGroove,
    pub outer_groove: VGroove,
}

impl Default for HandParams {
    fn default() -> Self {
        Self {
            inner: CrankSliderParams::default(),
            outer: ParallelogramParams::default(),
            screw: LeadScrewParams::default(),
            inner_groove: VGroove::inner_default(),
            outer_groove: VGroove::outer_default(),
        }
    }
}

impl HandParams {
    pub fn validate(&self) -> Result<(), HandError> {
        let dof = |dof, r: Result<(), MechanismError>| r.map_err(|source| HandError::Dof { dof, source });
        dof(Dof::Inner, self.inner.validate())?;
        dof(Dof::OuterLeft, self.outer.validate())?;
        dof(Dof::Prismatic, self.screw.validate())?;
        for g in [&self.inner_groove, &self.outer_groove] {
            if !(g.half_angle_rad > 0.0 && g.half_angle_rad < std::f64::consts::FRAC_PI_2 && g.capacity_mm() > 0.0) {
                return Err(HandError::Mechanism(MechanismError::InvalidParams(format!(
                    "bad v-groove {g:?}"
                ))));
            }
        }
        Ok(())
    }

    pub fn stroke_mm(&self, gripper: Gripper) -> f64 {
        match gripper {
            Gripper::Inner => self.inner.stroke_mm(),
            Gripper::Outer => 2.0 * self.outer.finger_stroke_mm(),
        }
    }
}

/// Motor coordinates of the hand plus the jaw openings they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub inner_theta: f64,
    pub outer_theta_left: f64,
    pub outer_theta_right: f64,
    pub prismatic_rev: f64,
    pub prismatic_mm: f64,
    pub inner_opening_mm: f64,
    pub outer_opening_left_mm: f64,
    pub outer_opening_right_mm: f64,
}

impl HandState {
    /// Combined opening between the two outer fingertips.
    pub fn outer_opening_mm(&self) -> f64 {
        self.outer_opening_left_mm + self.outer_opening_right_mm
    }

    pub fn motors(&self) -> [f64; 4] {
        [
            self.inner_theta,
            self.outer_theta_left,
            self.outer_theta_right,
            self.prismatic_rev,
        ]
    }

    /// Re-derives the openings from the motor coordinates and compares.
    pub fn is_consistent(&self, params: &HandParams) -> bool {
        hand_state_from_motors(self.motors(), params).is_ok_and(|s| s == *self)
    }

    /// Moves the prismatic joint to an absolute extension.
    pub fn with_prismatic_mm(&self, extension_mm: f64, params: &HandParams) -> Result<Self, HandError> {
        let rev = mechanisms::leadscrew_revolutions(extension_mm, &params.screw).map_err(|source| HandError::Dof {
            dof: Dof::Prismatic,
            source,
        })?;
        let mut motors = self.motors();
        motors[3] = rev;
        hand_state_from_motors(motors, params)
    }
}

/// `motors` = (inner crank angle, left finger angle, right finger angle,
/// lead-screw revolutions).
pub fn hand_state_from_motors(motors: [f64; 4], params: &HandParams) -> Result<HandState, HandError> {
    let dof_err = |dof| move |source| HandError::Dof { dof, source };
    let inner_opening_mm = mechanisms::crank_slider_forward(motors[0], &params.inner).map_err(dof_err(Dof::Inner))?;
    let outer_opening_left_mm =
        mechanisms::parallelogram_forward(motors[1], &params.outer).map_err(dof_err(Dof::OuterLeft))?;
    let outer_opening_right_mm =
        mechanisms::parallelogram_forward(motors[2], &params.outer).map_err(dof_err(Dof::OuterRight))?;
    let prismatic_mm = mechanisms::leadscrew_position(motors[3], &params.screw).map_err(dof_err(Dof::Prismatic))?;
    Ok(HandState {
        inner_theta: motors[0],
        outer_theta_left: motors[1],
        outer_theta_right: motors[2],
        prismatic_rev: motors[3],
        prismatic_mm,
        inner_opening_mm,
        outer_opening_left_mm,
        outer_opening_right_mm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCheck {
    pub feasible: bool,
    pub margin_mm: f64,
}

pub fn grasp_feasible(
    gripper: Gripper,
    cylinder_diameter_mm: f64,
    params: &HandParams,
) -> Result<GraspCheck, HandError> {
    if !(cylinder_diameter_mm > 0.0) {
        return Err(HandError::NonPositiveDiameter(cylinder_diameter_mm));
    }
    let stroke = params.stroke_mm(gripper);
    Ok(GraspCheck {
        feasible: cylinder_diameter_mm < stroke,
        margin_mm: stroke - cylinder_diameter_mm,
    })
}

/// V-shaped fingertip cut. The bisector of the V is the fingertip x axis
/// (the closing direction); the groove runs along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VGroove {
    pub half_angle_rad: f64,
    pub depth_mm: f64,
    pub axis: Unit<Vector3<f64>>,
    /// Diameter accepted by the larger lower cut, if the fingertip has one.
    pub secondary_cut_diameter_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrooveZone {
    Primary,
    Secondary,
}

impl VGroove {
    pub fn inner_default() -> Self {
        Self {
            half_angle_rad: 45f64.to_radians(),
            depth_mm: 3.0,
            axis: Vector3::z_axis(),
            secondary_cut_diameter_mm: Some(10.5),
        }
    }

    pub fn outer_default() -> Self {
        Self {
            half_angle_rad: 45f64.to_radians(),
            depth_mm: 25.0,
            axis: Vector3::z_axis(),
            secondary_cut_diameter_mm: None,
        }
    }

    /// Largest cylinder whose flank tangent points stay on the flanks.
    pub fn primary_capacity_mm(&self) -> f64 {
        let a = self.half_angle_rad;
        2.0 * self.depth_mm * a.sin() / (a.cos() * a.cos())
    }

    pub fn capacity_mm(&self) -> f64 {
        self.primary_capacity_mm()
            .max(self.secondary_cut_diameter_mm.unwrap_or(0.0))
    }

    /// Chooses the cut that seats a section of the given diameter.
    pub fn zone_for(&self, local_diameter_mm: f64) -> Result<GrooveZone, HandError> {
        if !(local_diameter_mm > 0.0) {
            return Err(HandError::NonPositiveDiameter(local_diameter_mm));
        }
        if local_diameter_mm <= self.primary_capacity_mm() {
            return Ok(GrooveZone::Primary);
        }
        match self.secondary_cut_diameter_mm {
            Some(d) if local_diameter_mm <= d => Ok(GrooveZone::Secondary),
            _ => Err(HandError::NoAlignment {
                diameter_mm: local_diameter_mm,
                capacity_mm: self.capacity_mm(),
            }),
        }
    }
}

/// Axis line of a cylinder expressed in a fingertip frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPose {
    pub axis_point: Point3<f64>,
    pub axis_dir: Unit<Vector3<f64>>,
    pub diameter_mm: f64,
}

impl CylinderPose {
    /// Distance from the axis point to the groove axis line.
    pub fn lateral_offset_mm(&self, groove: &VGroove) -> f64 {
        let p = self.axis_point.coords;
        (p - groove.axis.into_inner() * p.dot(&groove.axis)).norm()
    }

    pub fn misalignment_rad(&self, groove: &VGroove) -> f64 {
        let cross = self.axis_dir.cross(&groove.axis).norm();
        cross.atan2(self.axis_dir.dot(&groove.axis).abs())
    }
}

const SEATED_TOL: f64 = 1e-12;

/// Seats a cylinder in a closing v-groove pair: the axis moves onto the groove
/// axis and turns parallel to it, keeping its position along the groove.
pub fn v_groove_align(cylinder: &CylinderPose, groove: &VGroove, closing: bool) -> Result<CylinderPose, HandError> {
    groove.zone_for(cylinder.diameter_mm)?;
    if !closing {
        return Ok(*cylinder);
    }
    if cylinder.lateral_offset_mm(groove) <= SEATED_TOL && cylinder.misalignment_rad(groove) <= SEATED_TOL {
        return Ok(*cylinder);
    }
    let a = groove.axis.into_inner();
    let along = cylinder.axis_point.coords.dot(&a);
    let dir = if cylinder.axis_dir.dot(&a) >= 0.0 {
        groove.axis
    } else {
        -groove.axis
    };
    Ok(CylinderPose {
        axis_point: Point3::from(a * along),
        axis_dir: dir,
        diameter_mm: cylinder.diameter_mm,
    })
}

/// Which object each jaw of the hand holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldAssignment {
    pub inner_holds: Option<ObjectId>,
    pub outer_holds: Option<ObjectId>,
}

impl HoldAssignment {
    pub fn get(&self, gripper: Gripper) -> Option<&ObjectId> {
        match gripper {
            Gripper::Inner => self.inner_holds.as_ref(),
            Gripper::Outer => self.outer_holds.as_ref(),
        }
    }

    fn slot(&mut self, gripper: Gripper) -> &mut Option<ObjectId> {
        match gripper {
            Gripper::Inner => &mut self.inner_holds,
            Gripper::Outer => &mut self.outer_holds,
        }
    }

    pub fn is_dual_hold(&self) -> bool {
        self.inner_holds.is_some() && self.outer_holds.is_some()
    }

    pub fn holds(&self, object: &ObjectId) -> Option<Gripper> {
        if self.inner_holds.as_ref() == Some(object) {
            Some(Gripper::Inner)
        } else if self.outer_holds.as_ref() == Some(object) {
            Some(Gripper::Outer)
        } else {
            None
        }
    }

    pub fn is_exclusive(&self) -> bool {
        match (&self.inner_holds, &self.outer_holds) {
            (Some(a), Some(b)) => a != b,
            _ => true,
        }
    }
}

pub fn set_hold(assignment: &HoldAssignment, gripper: Gripper, object: ObjectId) -> Result<HoldAssignment, HandError> {
    if let Some(holding) = assignment.get(gripper) {
        return Err(HandError::Occupied {
            gripper,
            holding: holding.clone(),
        });
    }
    if let Some(other) = assignment.holds(&object) {
        return Err(HandError::AlreadyHeld { object, other });
    }
    let mut next = assignment.clone();
    *next.slot(gripper) = Some(object);
    Ok(next)
}

pub fn release_hold(assignment: &HoldAssignment, gripper: Gripper) -> Result<HoldAssignment, HandError> {
    if assignment.get(gripper).is_none() {
        return Err(HandError::EmptyRelease(gripper));
    }
    let mut next = assignment.clone();
    *next.slot(gripper) = None;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t_s: f64,
    pub prismatic_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrismaticTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub duration_s: f64,
}

/// Constant-speed prismatic motion sampled every `dt_s`; the last sample is
/// the exact endpoint even when the final interval is partial.
pub fn pull_in_trajectory(
    from_mm: f64,
    to_mm: f64,
    dt_s: f64,
    screw: &LeadScrewParams,
) -> Result<PrismaticTrajectory, HandError> {
    screw.check_extension(from_mm)?;
    screw.check_extension(to_mm)?;
    if !(dt_s > 0.0) {
        return Err(HandError::BadSamplePeriod(dt_s));
    }
    let distance = (to_mm - from_mm).abs();
    let duration_s = mechanisms::leadscrew_travel_time(distance, screw)?;
    if distance == 0.0 {
        return Ok(PrismaticTrajectory {
            samples: Vec::new(),
            duration_s: 0.0,
        });
    }
    let sign = (to_mm - from_mm).signum();
    let intervals = ((duration_s / dt_s) - 1e-9).ceil().max(1.0) as usize;
    let mut samples = Vec::with_capacity(intervals + 1);
    for k in 0..intervals {
        let t = k as f64 * dt_s;
        samples.push(TrajectorySample {
            t_s: t,
            prismatic_mm: from_mm + sign * screw.linear_speed_mm_s * t,
        });
    }
    samples.push(TrajectorySample {
        t_s: duration_s,
        prismatic_mm: to_mm,
    });
    Ok(PrismaticTrajectory { samples, duration_s })
}

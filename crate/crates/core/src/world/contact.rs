use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{Block, BoredPart, Compliance, Engagement, Entry, LocalBore, Peg, TipState};
use super::{WorldError, CONTACT_EPS_MM};

pub const PENETRATION_TOLERANCE_MM: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactClass {
    None,
    TipOnFace,
    RimOnePoint,
    RimTwoPoint,
    Bottomed,
}

impl ContactClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactClass::None => "none",
            ContactClass::TipOnFace => "tip_on_face",
            ContactClass::RimOnePoint => "rim_one_point",
            ContactClass::RimTwoPoint => "rim_two_point",
            ContactClass::Bottomed => "bottomed",
        }
    }
}

impl From<Block> for ContactClass {
    fn from(block: Block) -> Self {
        match block {
            Block::Face => ContactClass::TipOnFace,
            // A stall on an internal step loads the step edge and the
            // opposite wall (or the rigid holder) at once.
            Block::Step(_) | Block::TwoPoint | Block::Wedge => ContactClass::RimTwoPoint,
            Block::Shoulder(_) | Block::Bottom => ContactClass::Bottomed,
        }
    }
}

/// Contact classification with normals on the part surface, pointing
/// toward the peg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub class: ContactClass,
    pub normals: Vec<Vector3<f64>>,
    pub reaction_dir: Option<Vector3<f64>>,
    pub penetration_mm: f64,
}

impl ContactSet {
    fn free() -> Self {
        Self {
            class: ContactClass::None,
            normals: Vec::new(),
            reaction_dir: None,
            penetration_mm: 0.0,
        }
    }

    fn transformed(mut self, frame: &Isometry3<f64>) -> Self {
        for n in &mut self.normals {
            *n = frame.rotation * *n;
        }
        self.reaction_dir = self.reaction_dir.map(|r| frame.rotation * r);
        self
    }
}

/// Frame on the entry face a peg uses to go into `part`. The part's own
/// tilt is a rotation about its x axis through the front entry centre.
pub fn entry_frame(part: &BoredPart, part_pose: &Isometry3<f64>, entry: Entry) -> Isometry3<f64> {
    let tilted = part_pose * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), part.tilt_rad);
    match entry {
        Entry::Front => tilted,
        Entry::Back => {
            tilted
                * Translation3::new(0.0, 0.0, -part.total_depth_mm())
                * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI)
        }
    }
}

/// Peg tip position in an entry frame and the angle between the peg and
/// bore axes. A peg frame has its origin at the tip with the body along +z.
pub fn tip_in_entry(peg_pose: &Isometry3<f64>, frame: &Isometry3<f64>) -> (TipState, f64) {
    let rel = frame.inverse() * peg_pose;
    let t = rel.translation.vector;
    let axis = rel.rotation * Vector3::z();
    let tilt = axis.xy().norm().atan2(axis.z);
    (TipState::new(t.x, t.y, -t.z), tilt)
}

pub fn contact_query(
    peg: &Peg,
    peg_pose: &Isometry3<f64>,
    part: &BoredPart,
    part_pose: &Isometry3<f64>,
    entry: Entry,
) -> Result<ContactSet, WorldError> {
    peg.validate()?;
    let bore = LocalBore::new(part, entry)?;
    let frame = entry_frame(part, part_pose, entry);
    let (tip, tilt) = tip_in_entry(peg_pose, &frame);
    let local_axis = frame.inverse().rotation * peg_pose.rotation * Vector3::z();
    let eng = Engagement::new(peg, &bore, tilt, Compliance::Rigid);
    Ok(classify_local(&eng, tip, local_axis.xy())?.transformed(&frame))
}

/// Classifies a tip state in the entry frame. `tilt_dir` is the lateral part
/// of the peg axis, used to orient two-point normals.
pub fn classify_local(eng: &Engagement<'_>, tip: TipState, tilt_dir: Vector2<f64>) -> Result<ContactSet, WorldError> {
    let eng = Engagement {
        compliance: Compliance::Rigid,
        ..*eng
    };
    let up = Vector3::z();
    let axial = |class, penetration_mm| ContactSet {
        class,
        normals: vec![up],
        reaction_dir: Some(up),
        penetration_mm,
    };

    if tip.depth_mm <= CONTACT_EPS_MM {
        let offset = (tip.lateral - eng.bore.entry_center()).norm();
        return Ok(if offset > eng.bore.capture_radius_mm(eng.peg) + CONTACT_EPS_MM {
            axial(ContactClass::TipOnFace, tip.depth_mm.max(0.0))
        } else {
            ContactSet::free()
        });
    }

    match eng.feasible(tip.lateral, tip.depth_mm) {
        Ok(_) => {
            let deeper = eng.feasible(tip.lateral, tip.depth_mm + 1e-7);
            if matches!(deeper, Err(Block::Shoulder(_) | Block::Bottom)) {
                return Ok(axial(ContactClass::Bottomed, 0.0));
            }
            if eng.two_point_active(tip) || matches!(deeper, Err(Block::Step(_))) {
                return Ok(two_point(tilt_dir, 0.0));
            }
            if eng.touches_wall(tip) {
                return Ok(one_point(&eng, tip, 0.0));
            }
            Ok(ContactSet::free())
        }
        Err(block) => {
            let (limit, _) = eng.depth_limit(TipState::new(tip.lateral.x, tip.lateral.y, 0.0), tip.depth_mm);
            let axial_pen = tip.depth_mm - limit;
            let lateral_pen = if matches!(block, Block::Face | Block::Step(_)) {
                eng.lateral_violation_mm(tip).unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            };
            let penetration = axial_pen.min(lateral_pen);
            if penetration > PENETRATION_TOLERANCE_MM {
                return Err(WorldError::Interpenetration {
                    penetration_mm: penetration,
                });
            }
            if lateral_pen <= axial_pen {
                return Ok(one_point(&eng, tip, lateral_pen));
            }
            Ok(match ContactClass::from(block) {
                ContactClass::RimTwoPoint => two_point(tilt_dir, penetration),
                class => axial(class, penetration),
            })
        }
    }
}

fn one_point(eng: &Engagement<'_>, tip: TipState, penetration_mm: f64) -> ContactSet {
    let n = eng
        .wall_normal(tip)
        .map_or(Vector3::x(), |n| Vector3::new(n.x, n.y, 0.0));
    ContactSet {
        class: ContactClass::RimOnePoint,
        normals: vec![n],
        reaction_dir: Some(n),
        penetration_mm,
    }
}

fn two_point(tilt_dir: Vector2<f64>, penetration_mm: f64) -> ContactSet {
    let d = if tilt_dir.norm() > 1e-12 {
        tilt_dir.normalize()
    } else {
        Vector2::x()
    };
    let n = Vector3::new(d.x, d.y, 0.0);
    ContactSet {
        class: ContactClass::RimTwoPoint,
        normals: vec![n, -n],
        reaction_dir: Some(Vector3::z()),
        penetration_mm,
    }
}

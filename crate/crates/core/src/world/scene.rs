use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};

use super::geometry::{BoredPart, Peg};
use super::WorldError;
use crate::hand::HoldAssignment;
use crate::ObjectId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Part {
    Peg(Peg),
    Bored(BoredPart),
}

impl Part {
    pub fn kind(&self) -> &'static str {
        match self {
            Part::Peg(_) => "peg",
            Part::Bored(_) => "bored part",
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        match self {
            Part::Peg(p) => p.validate(),
            Part::Bored(b) => b.validate(),
        }
    }
}

/// Anything that can hold an object rigidly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holder {
    /// The second arm's simple gripper.
    LeftGripper,
    InnerJaw,
    OuterJaw,
    /// A fixed table fixture.
    Fixture,
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Holder::LeftGripper => "left gripper",
            Holder::InnerJaw => "inner jaw",
            Holder::OuterJaw => "outer jaw",
            Holder::Fixture => "fixture",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub part: Part,
    pub pose: Isometry3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Grasp {
    object: ObjectId,
    in_holder: Isometry3<f64>,
}

/// Poses of every object and holder, which holder grips what, and which
/// objects have been assembled into rigid complexes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    objects: BTreeMap<ObjectId, SceneObject>,
    holder_frames: BTreeMap<Holder, Isometry3<f64>>,
    grasps: BTreeMap<Holder, Grasp>,
    mounts: BTreeSet<(ObjectId, ObjectId)>,
    pub time_s: f64,
}

const ATTACH_TOL_MM: f64 = 1e-6;

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: impl Into<ObjectId>, part: Part, pose: Isometry3<f64>) -> Result<(), WorldError> {
        let id = id.into();
        part.validate()?;
        if self.objects.contains_key(&id) {
            return Err(WorldError::DuplicateObject(id.to_string()));
        }
        self.objects.insert(id, SceneObject { part, pose });
        Ok(())
    }

    pub fn objects(&self) -> impl Iterator<Item = (&ObjectId, &SceneObject)> {
        self.objects.iter()
    }

    pub fn object(&self, id: &ObjectId) -> Result<&SceneObject, WorldError> {
        self.objects
            .get(id)
            .ok_or_else(|| WorldError::UnknownObject(id.to_string()))
    }

    pub fn pose(&self, id: &ObjectId) -> Result<Isometry3<f64>, WorldError> {
        Ok(self.object(id)?.pose)
    }

    pub fn peg(&self, id: &ObjectId) -> Result<&Peg, WorldError> {
        match &self.object(id)?.part {
            Part::Peg(p) => Ok(p),
            other => Err(WorldError::WrongKind {
                object: id.to_string(),
                expected: "peg",
                found: other.kind(),
            }),
        }
    }

    pub fn bored(&self, id: &ObjectId) -> Result<&BoredPart, WorldError> {
        match &self.object(id)?.part {
            Part::Bored(b) => Ok(b),
            other => Err(WorldError::WrongKind {
                object: id.to_string(),
                expected: "bored part",
                found: other.kind(),
            }),
        }
    }

    pub fn bored_mut(&mut self, id: &ObjectId) -> Result<&mut BoredPart, WorldError> {
        match self.objects.get_mut(id) {
            Some(SceneObject {
                part: Part::Bored(b), ..
            }) => Ok(b),
            Some(other) => Err(WorldError::WrongKind {
                object: id.to_string(),
                expected: "bored part",
                found: other.part.kind(),
            }),
            None => Err(WorldError::UnknownObject(id.to_string())),
        }
    }

    pub fn holder_frame(&self, holder: Holder) -> Isometry3<f64> {
        self.holder_frames
            .get(&holder)
            .copied()
            .unwrap_or_else(Isometry3::identity)
    }

    /// Places an empty holder.
    pub fn set_holder_frame(&mut self, holder: Holder, frame: Isometry3<f64>) -> Result<(), WorldError> {
        if let Some(g) = self.grasps.get(&holder) {
            return Err(WorldError::HolderBusy {
                holder,
                object: g.object.to_string(),
            });
        }
        self.holder_frames.insert(holder, frame);
        Ok(())
    }

    pub fn held_by(&self, holder: Holder) -> Option<&ObjectId> {
        self.grasps.get(&holder).map(|g| &g.object)
    }

    pub fn holders_of(&self, id: &ObjectId) -> Vec<Holder> {
        self.grasps
            .iter()
            .filter(|(_, g)| &g.object == id)
            .map(|(h, _)| *h)
            .collect()
    }

    /// Grips `id` where it currently is.
    pub fn grasp(&mut self, holder: Holder, id: &ObjectId) -> Result<(), WorldError> {
        let pose = self.pose(id)?;
        if let Some(g) = self.grasps.get(&holder) {
            return Err(WorldError::HolderBusy {
                holder,
                object: g.object.to_string(),
            });
        }
        let in_holder = self.holder_frame(holder).inverse() * pose;
        self.grasps.insert(
            holder,
            Grasp {
                object: id.clone(),
                in_holder,
            },
        );
        Ok(())
    }

    pub fn release(&mut self, holder: Holder) -> Result<ObjectId, WorldError> {
        self.grasps
            .remove(&holder)
            .map(|g| g.object)
            .ok_or(WorldError::HolderEmpty(holder))
    }

    /// Joins two objects into one rigid complex.
    pub fn mount(&mut self, a: &ObjectId, b: &ObjectId) -> Result<(), WorldError> {
        self.object(a)?;
        self.object(b)?;
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        if !self.mounts.insert(key) {
            return Err(WorldError::AlreadyAttached(format!("{a}+{b}")));
        }
        Ok(())
    }

    /// Objects rigidly joined to `id` through mounts, including itself.
    pub fn complex(&self, id: &ObjectId) -> BTreeSet<ObjectId> {
        let mut seen = BTreeSet::from([id.clone()]);
        let mut frontier = vec![id.clone()];
        while let Some(cur) = frontier.pop() {
            for (a, b) in &self.mounts {
                let other = if a == &cur {
                    b
                } else if b == &cur {
                    a
                } else {
                    continue;
                };
                if seen.insert(other.clone()) {
                    frontier.push(other.clone());
                }
            }
        }
        seen
    }

    /// Rigidly moves the given holders, and everything they carry, by a
    /// world-frame displacement. Fails if some other holder also grips part
    /// of the moving group.
    pub fn move_holders(&mut self, holders: &[Holder], delta: &Isometry3<f64>) -> Result<(), WorldError> {
        let mut group = BTreeSet::new();
        for h in holders {
            if let Some(g) = self.grasps.get(h) {
                group.extend(self.complex(&g.object));
            }
        }
        for (h, g) in &self.grasps {
            if !holders.contains(h) && group.contains(&g.object) {
                return Err(WorldError::DetachedHold {
                    object: g.object.to_string(),
                    drift_mm: delta.translation.vector.norm(),
                });
            }
        }
        for h in holders {
            let frame = delta * self.holder_frame(*h);
            self.holder_frames.insert(*h, frame);
        }
        for id in &group {
            let obj = self.objects.get_mut(id).expect("grasped objects exist");
            obj.pose = delta * obj.pose;
        }
        Ok(())
    }

    /// Moves an unheld object and its complex, e.g. when it is pushed.
    pub fn move_free(&mut self, id: &ObjectId, delta: &Isometry3<f64>) -> Result<(), WorldError> {
        self.object(id)?;
        let group = self.complex(id);
        if let Some(g) = self.grasps.values().find(|g| group.contains(&g.object)) {
            return Err(WorldError::AlreadyAttached(g.object.to_string()));
        }
        for id in &group {
            let obj = self.objects.get_mut(id).expect("complex members exist");
            obj.pose = delta * obj.pose;
        }
        Ok(())
    }

    /// Double jaw hand holds in the hand module's terms.
    pub fn hand_holds(&self) -> HoldAssignment {
        HoldAssignment {
            inner_holds: self.held_by(Holder::InnerJaw).cloned(),
            outer_holds: self.held_by(Holder::OuterJaw).cloned(),
        }
    }

    /// Every grasp still coincides with its holder.
    pub fn check_attachments(&self) -> Result<(), WorldError> {
        for (h, g) in &self.grasps {
            let expected = self.holder_frame(*h) * g.in_holder;
            let actual = self.pose(&g.object)?;
            let drift = (expected.translation.vector - actual.translation.vector).norm()
                + expected.rotation.angle_to(&actual.rotation);
            if !(drift <= ATTACH_TOL_MM) {
                return Err(WorldError::DetachedHold {
                    object: g.object.to_string(),
                    drift_mm: drift,
                });
            }
        }
        Ok(())
    }
}

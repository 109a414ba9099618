use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::geometry::{BoreSegment, BoredPart, ClearanceConvention, Peg, PegHead};
use super::scene::Part;
use super::WorldError;
use crate::ObjectId;

/// Pin-to-pulley clearance and how to read it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClearanceSpec {
    pub pin_pulley_clearance_mm: f64,
    pub convention: ClearanceConvention,
}

impl Default for ClearanceSpec {
    fn default() -> Self {
        Self {
            pin_pulley_clearance_mm: 0.01,
            convention: ClearanceConvention::Diametral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub part: Part,
    /// False when the dimensions are placeholders rather than measurements
    /// of the real part.
    pub measured: bool,
    pub note: String,
}

/// Named part table used to build task scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: BTreeMap<ObjectId, CatalogEntry>,
}

pub const PULLEY_SHAFT: &str = "pulley_shaft";
pub const RETAINER_PIN: &str = "retainer_pin";
pub const IDLE_PULLEY: &str = "idle_pulley";
pub const CLAMPING_PULLEY: &str = "clamping_pulley";
pub const SHAFT_SPACER: &str = "pulley_shaft_spacer";
pub const PIN_SPACER: &str = "retainer_pin_spacer";
pub const BASE_BEARING: &str = "base_bearing";
pub const BASE_SLOT: &str = "base_slot";

impl Catalog {
    pub fn builtin(clearance: &ClearanceSpec) -> Self {
        let pin_bore = clearance
            .convention
            .bore_diameter(6.0, clearance.pin_pulley_clearance_mm);
        let spacer = |d: f64, depth: f64, outer: f64| {
            let mut p = BoredPart::through(vec![BoreSegment::new(d, depth)], outer, 0.3);
            p.tilts_on_impact = true;
            p
        };
        let shaft_spacer = spacer(10.4, 8.0, 16.0);
        let pin_spacer = spacer(6.4, 5.0, 12.0);
        let blind = |d: f64, depth: f64| {
            let mut p = BoredPart::through(vec![BoreSegment::new(d, depth)], 60.0, 0.5);
            p.blind = true;
            p
        };
        let entries = [
            (
                PULLEY_SHAFT,
                Part::Peg(Peg::cylinder(10.0, 60.0, 0.3)),
                true,
                "diameter 10 mm; length and chamfer assumed",
            ),
            (
                RETAINER_PIN,
                Part::Peg(Peg {
                    shank_diameter_mm: 6.0,
                    length_mm: 30.0,
                    head: Some(PegHead {
                        diameter_mm: 9.0,
                        length_mm: 3.5,
                    }),
                    tip_chamfer_mm: 0.3,
                }),
                true,
                "shank 6 mm, head 9 mm; lengths assumed",
            ),
            (
                IDLE_PULLEY,
                Part::Bored(BoredPart::through(vec![BoreSegment::new(pin_bore, 11.5)], 30.0, 0.3)),
                true,
                "pin bore from the clearance setting; hub length assumed",
            ),
            (
                CLAMPING_PULLEY,
                Part::Bored(BoredPart::through(
                    vec![
                        BoreSegment::new(10.6, 7.0),
                        BoreSegment::new(10.02, 8.0).offset(0.2, 0.0),
                    ],
                    40.0,
                    0.3,
                )),
                false,
                "clamp segment first, narrower eccentric hub bore second",
            ),
            (SHAFT_SPACER, Part::Bored(shaft_spacer), false, "placeholder bore"),
            (PIN_SPACER, Part::Bored(pin_spacer), false, "placeholder bore"),
            (
                BASE_BEARING,
                Part::Bored(blind(10.02, 12.0)),
                false,
                "placeholder bearing seat",
            ),
            (BASE_SLOT, Part::Bored(blind(6.05, 10.0)), false, "placeholder slot"),
        ];
        Self {
            entries: entries
                .into_iter()
                .map(|(id, part, measured, note)| {
                    (
                        ObjectId::from(id),
                        CatalogEntry {
                            part,
                            measured,
                            note: note.to_owned(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn get(&self, id: &ObjectId) -> Result<&Part, WorldError> {
        self.entries
            .get(id)
            .map(|e| &e.part)
            .ok_or_else(|| WorldError::UnknownObject(id.to_string()))
    }

    pub fn peg(&self, id: &str) -> Result<Peg, WorldError> {
        match self.get(&id.into())? {
            Part::Peg(p) => Ok(*p),
            other => Err(WorldError::WrongKind {
                object: id.to_owned(),
                expected: "peg",
                found: other.kind(),
            }),
        }
    }

    pub fn bored(&self, id: &str) -> Result<BoredPart, WorldError> {
        match self.get(&id.into())? {
            Part::Bored(b) => Ok(b.clone()),
            other => Err(WorldError::WrongKind {
                object: id.to_owned(),
                expected: "bored part",
                found: other.kind(),
            }),
        }
    }

    /// Replaces a part, keeping its kind.
    pub fn set(&mut self, id: &ObjectId, part: Part) -> Result<(), WorldError> {
        part.validate()?;
        let entry = self
            .entries
            .get_mut(id)
            .ok_or_else(|| WorldError::UnknownObject(id.to_string()))?;
        if entry.part.kind() != part.kind() {
            return Err(WorldError::WrongKind {
                object: id.to_string(),
                expected: entry.part.kind(),
                found: part.kind(),
            });
        }
        entry.part = part;
        entry.note = "overridden".into();
        Ok(())
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        self.entries.values().try_for_each(|e| e.part.validate())
    }
}

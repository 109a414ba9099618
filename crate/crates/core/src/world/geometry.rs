//! Peg and bore geometry, and the kinematic constraint engine that keeps a
//! peg tip out of the part material.
//!
//! Everything here works in the *entry frame* of a bored part: origin at the
//! centre of the entry face, +z pointing out of the part. Insertion depth is
//! measured positive into the part (depth = -z).

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::WorldError;

/// Numerical slack for "touching" tests.
pub const CONTACT_EPS_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PegHead {
    pub diameter_mm: f64,
    pub length_mm: f64,
}

/// A cylindrical peg with an optional larger head at the end opposite the tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Peg {
    pub shank_diameter_mm: f64,
    pub length_mm: f64,
    #[serde(default)]
    pub head: Option<PegHead>,
    #[serde(default)]
    pub tip_chamfer_mm: f64,
}

impl Peg {
    pub fn cylinder(diameter_mm: f64, length_mm: f64, tip_chamfer_mm: f64) -> Self {
        Self {
            shank_diameter_mm: diameter_mm,
            length_mm,
            head: None,
            tip_chamfer_mm,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |msg: String| Err(WorldError::InvalidGeometry(msg));
        if !(self.shank_diameter_mm > 0.0 && self.length_mm > 0.0) {
            return bad(format!("peg diameter and length must be positive ({self:?})"));
        }
        if !(self.tip_chamfer_mm >= 0.0 && self.tip_chamfer_mm < self.shank_diameter_mm / 2.0) {
            return bad(format!("peg tip chamfer {} out of range", self.tip_chamfer_mm));
        }
        if let Some(head) = self.head {
            if !(head.diameter_mm >= self.shank_diameter_mm) {
                return bad(format!(
                    "peg head {} mm narrower than shank {} mm",
                    head.diameter_mm, self.shank_diameter_mm
                ));
            }
            if !(head.length_mm > 0.0 && head.length_mm < self.length_mm) {
                return bad(format!("peg head length {} out of range", head.length_mm));
            }
        }
        Ok(())
    }

    pub fn radius_mm(&self) -> f64 {
        self.shank_diameter_mm / 2.0
    }

    /// Distance from the tip at which the head starts.
    pub fn head_start_mm(&self) -> f64 {
        match self.head {
            Some(h) => self.length_mm - h.length_mm,
            None => self.length_mm,
        }
    }

    /// Largest peg diameter over the section `[u_lo, u_hi]` measured from the tip.
    fn section_diameter(&self, u_lo: f64, u_hi: f64) -> (f64, Section) {
        match self.head {
            Some(h) if u_hi > self.head_start_mm() && u_lo < self.length_mm => {
                if h.diameter_mm > self.shank_diameter_mm {
                    (h.diameter_mm, Section::Head)
                } else {
                    (self.shank_diameter_mm, Section::Shank)
                }
            }
            _ => (self.shank_diameter_mm, Section::Shank),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Shank,
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoreSegment {
    pub diameter_mm: f64,
    pub depth_mm: f64,
    /// Lateral offset of this segment's axis from the part axis.
    #[serde(default)]
    pub offset_mm: [f64; 2],
}

impl BoreSegment {
    pub fn new(diameter_mm: f64, depth_mm: f64) -> Self {
        Self {
            diameter_mm,
            depth_mm,
            offset_mm: [0.0, 0.0],
        }
    }

    pub fn offset(mut self, x: f64, y: f64) -> Self {
        self.offset_mm = [x, y];
        self
    }
}

/// A part with a (possibly stepped) bore, listed from the front face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoredPart {
    pub bore_segments: Vec<BoreSegment>,
    pub outer_diameter_mm: f64,
    #[serde(default)]
    pub entry_chamfer_mm: f64,
    /// Blind bores can only be entered from the front.
    #[serde(default)]
    pub blind: bool,
    #[serde(default)]
    pub tilt_rad: f64,
    /// Parts held loosely (spacers in a simple gripper) rock a little every
    /// time a peg is pressed on them.
    #[serde(default)]
    pub tilts_on_impact: bool,
}

impl BoredPart {
    pub fn through(segments: Vec<BoreSegment>, outer_diameter_mm: f64, entry_chamfer_mm: f64) -> Self {
        Self {
            bore_segments: segments,
            outer_diameter_mm,
            entry_chamfer_mm,
            blind: false,
            tilt_rad: 0.0,
            tilts_on_impact: false,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |msg: String| Err(WorldError::InvalidGeometry(msg));
        if self.bore_segments.is_empty() {
            return bad("bored part needs at least one bore segment".into());
        }
        for (i, s) in self.bore_segments.iter().enumerate() {
            if !(s.diameter_mm > 0.0 && s.depth_mm > 0.0) {
                return bad(format!(
                    "bore segment {i} must have positive diameter and depth ({s:?})"
                ));
            }
            if !(s.diameter_mm < self.outer_diameter_mm) {
                return bad(format!("bore segment {i} wider than the part"));
            }
        }
        if !(self.entry_chamfer_mm >= 0.0) {
            return bad(format!("entry chamfer {} must be non-negative", self.entry_chamfer_mm));
        }
        Ok(())
    }

    pub fn total_depth_mm(&self) -> f64 {
        self.bore_segments.iter().map(|s| s.depth_mm).sum()
    }

    pub fn entry_segment(&self, entry: Entry) -> &BoreSegment {
        match entry {
            Entry::Front => &self.bore_segments[0],
            Entry::Back => self.bore_segments.last().expect("validated non-empty"),
        }
    }
}

/// Which face of a bored part the peg enters through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    #[default]
    Front,
    Back,
}

/// How a clearance figure is split between the two sides of a peg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearanceConvention {
    #[default]
    Diametral,
    Radial,
}

impl ClearanceConvention {
    /// Bore diameter that gives the stated clearance around a peg.
    pub fn bore_diameter(self, peg_diameter_mm: f64, clearance_mm: f64) -> f64 {
        match self {
            ClearanceConvention::Diametral => peg_diameter_mm + clearance_mm,
            ClearanceConvention::Radial => peg_diameter_mm + 2.0 * clearance_mm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSegment {
    pub z_start: f64,
    pub z_end: f64,
    pub diameter_mm: f64,
    pub center: Vector2<f64>,
}

/// A bore expressed in the frame of the face the peg enters through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBore {
    pub segments: Vec<LocalSegment>,
    pub entry_chamfer_mm: f64,
    pub blind: bool,
}

impl LocalBore {
    pub fn new(part: &BoredPart, entry: Entry) -> Result<Self, WorldError> {
        part.validate()?;
        let ordered: Vec<BoreSegment> = match entry {
            Entry::Front => part.bore_segments.clone(),
            Entry::Back => {
                if part.blind {
                    return Err(WorldError::InvalidGeometry(
                        "a blind bore cannot be entered from the back".into(),
                    ));
                }
                // Turning the part over about x mirrors y.
                part.bore_segments
                    .iter()
                    .rev()
                    .map(|s| BoreSegment {
                        offset_mm: [s.offset_mm[0], -s.offset_mm[1]],
                        ..*s
                    })
                    .collect()
            }
        };
        let mut z = 0.0;
        let segments = ordered
            .iter()
            .map(|s| {
                let seg = LocalSegment {
                    z_start: z,
                    z_end: z + s.depth_mm,
                    diameter_mm: s.diameter_mm,
                    center: Vector2::new(s.offset_mm[0], s.offset_mm[1]),
                };
                z += s.depth_mm;
                seg
            })
            .collect();
        Ok(Self {
            segments,
            entry_chamfer_mm: part.entry_chamfer_mm,
            blind: part.blind,
        })
    }

    pub fn total_depth_mm(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.z_end)
    }

    pub fn entry_center(&self) -> Vector2<f64> {
        self.segments[0].center
    }

    pub fn radial_clearance_mm(&self, peg: &Peg) -> f64 {
        (self.segments[0].diameter_mm - peg.shank_diameter_mm) / 2.0
    }

    /// Largest tip offset from the entry axis that the chamfers funnel into the bore.
    pub fn capture_radius_mm(&self, peg: &Peg) -> f64 {
        self.radial_clearance_mm(peg) + self.entry_chamfer_mm + peg.tip_chamfer_mm
    }
}

/// Why the peg cannot advance further.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Tip resting on the entry face outside the chamfer.
    Face,
    /// Tip section caught on an internal step of segment `n`.
    Step(usize),
    /// A wider peg section seated on a narrower segment.
    Shoulder(usize),
    Bottom,
    /// Tilted peg spanning the clearance with two diametral contacts.
    TwoPoint,
    /// No lateral position satisfies every engaged segment at once.
    Wedge,
}

impl Block {
    /// Blocks that stall an insertion short of a seat.
    pub fn is_jam(self) -> bool {
        matches!(self, Block::Step(_) | Block::TwoPoint | Block::Wedge | Block::Face)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Disk {
    center: Vector2<f64>,
    radius: f64,
    capture: f64,
    clearance: f64,
    fail: Block,
}

/// Whether the holder lets the peg slide sideways under contact forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compliance {
    #[default]
    Compliant,
    Rigid,
}

/// Tip position in an entry frame: lateral offset and insertion depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipState {
    pub lateral: Vector2<f64>,
    pub depth_mm: f64,
}

impl TipState {
    pub fn new(x: f64, y: f64, depth_mm: f64) -> Self {
        Self {
            lateral: Vector2::new(x, y),
            depth_mm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub state: TipState,
    pub block: Option<Block>,
    /// Commanded depth that the constraint refused.
    pub axial_penetration_mm: f64,
    /// Lateral displacement applied by the constraint projection.
    pub lateral_correction: Vector2<f64>,
}

/// Peg-in-bore constraint evaluation for one peg, one bore and a fixed
/// relative tilt.
#[derive(Debug, Clone, Copy)]
pub struct Engagement<'a> {
    pub peg: &'a Peg,
    pub bore: &'a LocalBore,
    pub tilt_rad: f64,
    pub compliance: Compliance,
}

impl<'a> Engagement<'a> {
    pub fn new(peg: &'a Peg, bore: &'a LocalBore, tilt_rad: f64, compliance: Compliance) -> Self {
        Self {
            peg,
            bore,
            tilt_rad,
            compliance,
        }
    }

    fn disks(&self, depth: f64) -> Result<Vec<Disk>, Block> {
        let peg = self.peg;
        let top = depth - peg.length_mm;
        let mut out = Vec::with_capacity(self.bore.segments.len());
        for (j, seg) in self.bore.segments.iter().enumerate() {
            if depth <= seg.z_start || top >= seg.z_end {
                continue;
            }
            let u_lo = depth - depth.min(seg.z_end);
            let u_hi = depth - top.max(seg.z_start);
            let (d, section) = peg.section_diameter(u_lo, u_hi);
            let clearance = (seg.diameter_mm - d) / 2.0;
            let fail = match section {
                Section::Shank => Block::Step(j),
                Section::Head => Block::Shoulder(j),
            };
            let (leading_edge, section_chamfer) = match section {
                Section::Shank => (depth, peg.tip_chamfer_mm),
                Section::Head => (depth - peg.head_start_mm(), 0.0),
            };
            let chamfer = section_chamfer + if j == 0 { self.bore.entry_chamfer_mm } else { 0.0 };
            let into = leading_edge - seg.z_start;
            let allowance = if into >= 0.0 { (chamfer - into).max(0.0) } else { 0.0 };
            // Without clearance only the chamfers let the peg in.
            if clearance <= 0.0 && (section == Section::Head || clearance + allowance <= 0.0) {
                return Err(fail);
            }
            out.push(Disk {
                center: seg.center,
                radius: clearance + allowance,
                capture: clearance + chamfer,
                clearance,
                fail: if j == 0 && section == Section::Shank {
                    Block::Face
                } else {
                    fail
                },
            });
        }
        Ok(out)
    }

    fn tilt_blocks(&self, depth: f64, disks: &[Disk]) -> bool {
        if self.tilt_rad <= 0.0 || disks.is_empty() {
            return false;
        }
        let engaged = depth.min(self.bore.total_depth_mm());
        let c_min = disks.iter().map(|d| d.clearance).fold(f64::INFINITY, f64::min);
        engaged * self.tilt_rad.tan() > 2.0 * c_min
    }

    /// Checks a tip state; on success returns the lateral position after the
    /// compliant projection (unchanged for rigid holds).
    pub fn feasible(&self, lateral: Vector2<f64>, depth: f64) -> Result<Vector2<f64>, Block> {
        if depth <= 0.0 {
            return Ok(lateral);
        }
        if self.bore.blind && depth > self.bore.total_depth_mm() {
            return Err(Block::Bottom);
        }
        let disks = self.disks(depth)?;
        if self.tilt_blocks(depth, &disks) {
            return Err(Block::TwoPoint);
        }
        for d in &disks {
            if (lateral - d.center).norm() > d.capture + CONTACT_EPS_MM {
                return Err(d.fail);
            }
        }
        if disks
            .iter()
            .all(|d| (lateral - d.center).norm() <= d.radius + CONTACT_EPS_MM)
        {
            return Ok(lateral);
        }
        match self.compliance {
            Compliance::Rigid => {
                // Stopped on a chamfer: attribute it to the tightest violated disk.
                let worst = disks
                    .iter()
                    .filter(|d| (lateral - d.center).norm() > d.radius + CONTACT_EPS_MM)
                    .min_by(|a, b| a.clearance.total_cmp(&b.clearance))
                    .expect("some disk is violated");
                Err(match worst.fail {
                    Block::Face => Block::Step(0),
                    other => other,
                })
            }
            Compliance::Compliant => project_onto_disks(lateral, &disks).ok_or(Block::Wedge),
        }
    }

    /// Moves from a feasible state toward a proposed one, stopping on the
    /// first constraint met.
    pub fn advance(&self, from: TipState, to: TipState) -> Advance {
        match self.feasible(to.lateral, to.depth_mm) {
            Ok(lateral) => Advance {
                state: TipState {
                    lateral,
                    depth_mm: to.depth_mm,
                },
                block: None,
                axial_penetration_mm: 0.0,
                lateral_correction: lateral - to.lateral,
            },
            Err(block) => {
                // Keep the commanded lateral if it is reachable at the start depth.
                let (lateral_cmd, base) = match self.feasible(to.lateral, from.depth_mm) {
                    Ok(l) => (to.lateral, l),
                    Err(_) => (from.lateral, from.lateral),
                };
                if to.depth_mm <= from.depth_mm {
                    return Advance {
                        state: TipState {
                            lateral: base,
                            depth_mm: from.depth_mm,
                        },
                        block: Some(block),
                        axial_penetration_mm: 0.0,
                        lateral_correction: base - to.lateral,
                    };
                }
                let mut lo = from.depth_mm;
                let mut hi = to.depth_mm;
                let mut best = base;
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match self.feasible(lateral_cmd, mid) {
                        Ok(l) => {
                            lo = mid;
                            best = l;
                        }
                        Err(_) => hi = mid,
                    }
                }
                Advance {
                    state: TipState {
                        lateral: best,
                        depth_mm: lo,
                    },
                    block: Some(block),
                    axial_penetration_mm: to.depth_mm - lo,
                    lateral_correction: best - to.lateral,
                }
            }
        }
    }

    /// Clearance-limited radius around each engaged segment axis at `depth`,
    /// for diagnostics.
    pub fn lateral_slack_mm(&self, state: TipState) -> Option<f64> {
        let disks = self.disks(state.depth_mm).ok()?;
        disks
            .iter()
            .map(|d| d.radius - (state.lateral - d.center).norm())
            .reduce(f64::min)
    }

    /// Inward normal of the wall with the least slack at `state`.
    pub fn wall_normal(&self, state: TipState) -> Option<Vector2<f64>> {
        let disks = self.disks(state.depth_mm).ok()?;
        let d = disks.iter().min_by(|a, b| {
            let sa = a.radius - (state.lateral - a.center).norm();
            let sb = b.radius - (state.lateral - b.center).norm();
            sa.total_cmp(&sb)
        })?;
        let v = state.lateral - d.center;
        (v.norm() > 1e-15).then(|| -v.normalize())
    }

    /// Lateral distance to the nearest position the bore walls allow at
    /// this depth, ignoring the capture funnel.
    pub fn lateral_violation_mm(&self, state: TipState) -> Option<f64> {
        let disks = self.disks(state.depth_mm).ok()?;
        project_onto_disks(state.lateral, &disks).map(|q| (q - state.lateral).norm())
    }

    /// True when the tip is against at least one bore wall.
    pub fn touches_wall(&self, state: TipState) -> bool {
        self.lateral_slack_mm(state)
            .is_some_and(|slack| slack <= CONTACT_EPS_MM)
    }

    /// Two tilted-peg contacts are active (equality in the jam criterion).
    pub fn two_point_active(&self, state: TipState) -> bool {
        if self.tilt_rad <= 0.0 || state.depth_mm <= 0.0 {
            return false;
        }
        self.disks(state.depth_mm)
            .is_ok_and(|disks| self.tilt_blocks(state.depth_mm + 1e-7, &disks))
    }

    /// Deepest feasible depth straight below `state`, up to `max_depth`.
    pub fn depth_limit(&self, state: TipState, max_depth: f64) -> (f64, Option<Block>) {
        let probe = self.advance(
            state,
            TipState {
                lateral: state.lateral,
                depth_mm: max_depth,
            },
        );
        (probe.state.depth_mm, probe.block)
    }
}

/// Euclidean projection onto an intersection of disks. The projection lies
/// either on one boundary arc or at a corner where two circles cross.
fn project_onto_disks(p: Vector2<f64>, disks: &[Disk]) -> Option<Vector2<f64>> {
    let inside = |q: Vector2<f64>| disks.iter().all(|d| (q - d.center).norm() <= d.radius + CONTACT_EPS_MM);
    let mut best: Option<(f64, Vector2<f64>)> = None;
    let mut consider = |q: Vector2<f64>| {
        if inside(q) {
            let dist = (q - p).norm();
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, q));
            }
        }
    };
    for d in disks {
        let v = p - d.center;
        let n = v.norm();
        let q = if n <= d.radius {
            p
        } else {
            d.center + v * (d.radius / n)
        };
        consider(q);
    }
    for (i, a) in disks.iter().enumerate() {
        for b in &disks[i + 1..] {
            for q in circle_intersections(a, b) {
                consider(q);
            }
        }
    }
    best.map(|(_, q)| q)
}

fn circle_intersections(a: &Disk, b: &Disk) -> Vec<Vector2<f64>> {
    let d = b.center - a.center;
    let dist = d.norm();
    if dist == 0.0 || dist > a.radius + b.radius || dist < (a.radius - b.radius).abs() {
        return Vec::new();
    }
    let along = (a.radius * a.radius - b.radius * b.radius + dist * dist) / (2.0 * dist);
    let h = (a.radius * a.radius - along * along).max(0.0).sqrt();
    let base = a.center + d * (along / dist);
    let perp = Vector2::new(-d.y, d.x) / dist;
    vec![base + perp * h, base - perp * h]
}

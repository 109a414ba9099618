use nalgebra::{Isometry3, Point3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{InsertOutcome, InsertionResult, Phase, SearchConfig, SearchError, TraceRow};
use crate::world::{
    apply_tilt_perturbation, classify_local, entry_frame, step_admittance, tip_in_entry, Block, BoredPart, Compliance,
    ContactClass, Engagement, Entry, LocalBore, Peg, Scene, TipState, WorldConfig, CONTACT_EPS_MM,
};
use crate::ObjectId;

/// Geometry and starting configuration of one peg/part insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSetup {
    pub peg: Peg,
    pub part: BoredPart,
    pub entry: Entry,
    /// Entry frame in world coordinates.
    pub frame: Isometry3<f64>,
    pub start: TipState,
    /// Angle between peg and bore axes.
    pub tilt_rad: f64,
    pub compliance: Compliance,
}

impl EpisodeSetup {
    pub fn from_scene(
        scene: &Scene,
        peg_id: &ObjectId,
        part_id: &ObjectId,
        entry: Entry,
        compliance: Compliance,
    ) -> Result<Self, SearchError> {
        let peg = *scene.peg(peg_id)?;
        let part = scene.bored(part_id)?.clone();
        let frame = entry_frame(&part, &scene.pose(part_id)?, entry);
        let (start, tilt_rad) = tip_in_entry(&scene.pose(peg_id)?, &frame);
        Ok(Self {
            peg,
            part,
            entry,
            frame,
            start,
            tilt_rad,
            compliance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinearOutcome {
    /// Stopped on the face, or slid straight into the bore (`entered`).
    Contact {
        tip: TipState,
        travel_mm: f64,
        reaction_n: f64,
        entered: bool,
    },
    NoContact {
        travel_mm: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpiralOutcome {
    HoleFound { sample_index: usize, lateral: Vector2<f64> },
    HoleNotFound { samples_tried: usize, timed_out: bool },
}

/// A running insertion simulation owning its clock, trace and disturbance
/// state.
pub struct Episode<'a, R: Rng> {
    setup: EpisodeSetup,
    bore: LocalBore,
    cfg: &'a SearchConfig,
    world: &'a WorldConfig,
    rng: &'a mut R,
    force_noise: Option<Normal<f64>>,
    state: TipState,
    tilt_rad: f64,
    t_s: f64,
    t_start: f64,
    impacts: u32,
    spiral_samples: Option<usize>,
    trace: Vec<TraceRow>,
}

impl<'a, R: Rng> Episode<'a, R> {
    pub fn new(
        setup: EpisodeSetup,
        cfg: &'a SearchConfig,
        world: &'a WorldConfig,
        force_noise_std_n: f64,
        t_start: f64,
        rng: &'a mut R,
    ) -> Result<Self, SearchError> {
        cfg.validate()?;
        world.validate()?;
        setup.peg.validate()?;
        let bore = LocalBore::new(&setup.part, setup.entry)?;
        let force_noise = if force_noise_std_n > 0.0 {
            Some(Normal::new(0.0, force_noise_std_n).map_err(|e| SearchError::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            state: setup.start,
            tilt_rad: setup.tilt_rad,
            setup,
            bore,
            cfg,
            world,
            rng,
            force_noise,
            t_s: t_start,
            t_start,
            impacts: 0,
            spiral_samples: None,
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> TipState {
        self.state
    }

    pub fn time_s(&self) -> f64 {
        self.t_s
    }

    pub fn tilt_rad(&self) -> f64 {
        self.tilt_rad
    }

    pub fn part(&self) -> &BoredPart {
        &self.setup.part
    }

    pub fn impact_count(&self) -> u32 {
        self.impacts
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// Tip displacement since the start, in world coordinates.
    pub fn displacement_world(&self) -> Vector3<f64> {
        let d = self.state.lateral - self.setup.start.lateral;
        let local = Vector3::new(d.x, d.y, -(self.state.depth_mm - self.setup.start.depth_mm));
        self.setup.frame.rotation * local
    }

    fn engagement(&self) -> Engagement<'_> {
        Engagement::new(&self.setup.peg, &self.bore, self.tilt_rad, self.setup.compliance)
    }

    fn noise3(&mut self) -> Vector3<f64> {
        match self.force_noise {
            Some(n) => Vector3::new(
                n.sample(&mut *self.rng),
                n.sample(&mut *self.rng),
                n.sample(&mut *self.rng),
            ),
            None => Vector3::zeros(),
        }
    }

    fn reaction(&self, axial_penetration_mm: f64, correction: Vector2<f64>) -> Vector3<f64> {
        let k = self.world.contact_stiffness_n_per_mm;
        Vector3::new(k * correction.x, k * correction.y, k * axial_penetration_mm)
    }

    fn record(&mut self, phase: Phase, force_local: Vector3<f64>, block: Option<Block>) {
        let contact = match block {
            Some(b) => ContactClass::from(b),
            None => {
                let eng = self.engagement();
                let axis = Vector2::new(self.tilt_rad.sin(), 0.0);
                classify_local(&eng, self.state, axis).map_or(ContactClass::None, |c| c.class)
            }
        };
        let p = self.setup.frame * Point3::new(self.state.lateral.x, self.state.lateral.y, -self.state.depth_mm);
        let f = self.setup.frame.rotation * force_local;
        self.trace.push(TraceRow {
            t_s: self.t_s,
            position_mm: [p.x, p.y, p.z],
            tilt_deg: self.tilt_rad.to_degrees(),
            force_n: [f.x, f.y, f.z],
            phase,
            contact,
        });
    }

    fn impact(&mut self) {
        self.impacts += 1;
        if self.setup.part.tilts_on_impact {
            let before = self.setup.part.tilt_rad;
            self.setup.part = apply_tilt_perturbation(
                &self.setup.part,
                1,
                self.world.tilt_increment_rad(),
                self.world.tilt_cap_rad(),
            );
            self.tilt_rad += self.setup.part.tilt_rad - before;
        }
    }

    fn max_steps(&self) -> u64 {
        (self.cfg.max_duration_s / self.cfg.dt_s).ceil() as u64
    }

    /// Guarded move along the bore axis until the reaction reaches the
    /// contact threshold.
    pub fn linear_search(&mut self) -> Result<LinearOutcome, SearchError> {
        self.linear_search_along(Vector3::z())
    }

    /// Guarded move along `axis`, given in entry-frame (x, y, depth)
    /// components.
    pub fn linear_search_along(&mut self, axis: Vector3<f64>) -> Result<LinearOutcome, SearchError> {
        if !((axis.norm() - 1.0).abs() <= 1e-9) {
            return Err(SearchError::Config(format!(
                "approach axis {axis:?} is not unit length"
            )));
        }
        let dt = self.cfg.dt_s;
        let step = self.cfg.approach_speed_mm_s * dt;
        let start = self.state;
        for i in 1..=self.max_steps() {
            let d = axis * (step * i as f64);
            let commanded = TipState {
                lateral: start.lateral + d.xy(),
                depth_mm: start.depth_mm + d.z,
            };
            let adv = self.engagement().advance(self.state, commanded);
            self.state = adv.state;
            self.t_s += dt;
            let reaction = self.reaction(adv.axial_penetration_mm, adv.lateral_correction);
            let noise = self.noise3();
            self.record(Phase::Approach, reaction + noise, adv.block);
            let travel_mm = (self.state.lateral - start.lateral)
                .norm()
                .hypot(self.state.depth_mm - start.depth_mm);
            if reaction.z >= self.cfg.contact_force_threshold_n {
                self.impact();
                return Ok(LinearOutcome::Contact {
                    tip: self.state,
                    travel_mm,
                    reaction_n: reaction.z,
                    entered: false,
                });
            }
            if self.state.depth_mm >= self.cfg.detection_drop_mm {
                return Ok(LinearOutcome::Contact {
                    tip: self.state,
                    travel_mm,
                    reaction_n: reaction.z,
                    entered: true,
                });
            }
        }
        Ok(LinearOutcome::NoContact {
            travel_mm: (self.state.lateral - start.lateral)
                .norm()
                .hypot(self.state.depth_mm - start.depth_mm),
        })
    }

    /// Visits pattern samples around the current tip position, probing
    /// downward at each one under a light preload. A sample finds the hole
    /// when the tip drops by the detection distance.
    pub fn spiral_search(&mut self) -> Result<SpiralOutcome, SearchError> {
        let dt = self.cfg.dt_s;
        let step = self.cfg.approach_speed_mm_s * dt;
        let origin = self.state.lateral;
        let budget = self.max_steps();
        let mut steps = 0u64;
        let preload = Vector3::new(0.0, 0.0, self.cfg.preload_n);
        let mut tried = 0;
        macro_rules! tick {
            () => {
                steps += 1;
                self.t_s += dt;
                if steps > budget {
                    self.spiral_samples = Some(tried);
                    return Ok(SpiralOutcome::HoleNotFound {
                        samples_tried: tried,
                        timed_out: true,
                    });
                }
            };
        }
        for (k, (sx, sy)) in self.cfg.samples() {
            tried = k + 1;
            if self.state.depth_mm >= self.cfg.detection_drop_mm {
                self.spiral_samples = Some(tried);
                return Ok(SpiralOutcome::HoleFound {
                    sample_index: k,
                    lateral: self.state.lateral,
                });
            }
            if self.state.depth_mm > 0.0 {
                let up = TipState {
                    lateral: self.state.lateral,
                    depth_mm: 0.0,
                };
                self.state = self.engagement().advance(self.state, up).state;
                tick!();
                self.record(Phase::Spiral, Vector3::zeros(), None);
            }
            let goal = origin + Vector2::new(sx, sy);
            let from = self.state.lateral;
            let n = ((goal - from).norm() / step).ceil() as u64;
            for i in 1..=n {
                let lateral = from + (goal - from) * (i as f64 / n as f64);
                let to = TipState {
                    lateral,
                    depth_mm: self.state.depth_mm.min(0.0),
                };
                let adv = self.engagement().advance(self.state, to);
                self.state = adv.state;
                tick!();
                let on_face = self.state.depth_mm >= -CONTACT_EPS_MM;
                let noise = self.noise3();
                let f = if on_face { preload } else { Vector3::zeros() };
                self.record(Phase::Spiral, f + noise, adv.block);
            }
            let mut commanded = self.state.depth_mm;
            loop {
                commanded += step;
                let to = TipState {
                    lateral: goal,
                    depth_mm: commanded,
                };
                let adv = self.engagement().advance(self.state, to);
                self.state = adv.state;
                tick!();
                let reaction = self.reaction(adv.axial_penetration_mm, adv.lateral_correction);
                let noise = self.noise3();
                self.record(Phase::Spiral, reaction + noise, adv.block);
                if self.state.depth_mm >= self.cfg.detection_drop_mm {
                    self.spiral_samples = Some(tried);
                    return Ok(SpiralOutcome::HoleFound {
                        sample_index: k,
                        lateral: self.state.lateral,
                    });
                }
                if reaction.z >= self.cfg.preload_n {
                    self.impact();
                    break;
                }
            }
        }
        self.spiral_samples = Some(tried);
        Ok(SpiralOutcome::HoleNotFound {
            samples_tried: tried,
            timed_out: false,
        })
    }

    /// Stop rule shared by the insertion drivers.
    fn settle(&self, block: Option<Block>, jams: &mut u32, stalls: &mut u32, target: f64) -> Option<InsertOutcome> {
        if self.state.depth_mm >= target - 1e-9 {
            return Some(InsertOutcome::Success);
        }
        let patience = self.cfg.jam_patience_steps;
        match block {
            Some(b) if b.is_jam() => {
                *jams += 1;
                *stalls = 0;
                if *jams >= patience {
                    return Some(if self.state.depth_mm < self.setup.peg.radius_mm() {
                        InsertOutcome::Wedged
                    } else {
                        InsertOutcome::Jammed
                    });
                }
            }
            Some(_) => {
                *stalls += 1;
                *jams = 0;
                // Seated short of the target: no further progress is possible.
                if *stalls >= patience {
                    return Some(InsertOutcome::Timeout);
                }
            }
            None => {
                *jams = 0;
                *stalls = 0;
            }
        }
        None
    }

    /// Admittance-controlled insertion toward `target_depth_mm` with the
    /// lateral axes free to comply with the bore walls.
    pub fn insert(&mut self, target_depth_mm: f64) -> Result<InsertOutcome, SearchError> {
        if self.state.depth_mm >= target_depth_mm - 1e-9 {
            return Ok(InsertOutcome::Success);
        }
        let dt = self.cfg.dt_s;
        let gains = self.cfg.gains;
        let ramp = self.cfg.approach_speed_mm_s * dt;
        let start_depth = self.state.depth_mm;
        let set_end = target_depth_mm + self.cfg.overtravel_mm;
        let hold = self.state.lateral;
        let (mut jams, mut stalls) = (0, 0);
        for i in 1..=self.max_steps() {
            let set = (start_depth + ramp * i as f64).min(set_end);
            let pose = Vector3::new(self.state.lateral.x, self.state.lateral.y, self.state.depth_mm);
            let noise = self.noise3();
            let next = step_admittance(pose, noise, Vector3::new(hold.x, hold.y, set), &gains, dt)?;
            let to = TipState::new(next.x, next.y, next.z);
            let adv = self.engagement().advance(self.state, to);
            self.state = adv.state;
            self.t_s += dt;
            let reaction = self.reaction(adv.axial_penetration_mm, adv.lateral_correction);
            self.record(Phase::Insert, reaction + noise, adv.block);
            if let Some(outcome) = self.settle(adv.block, &mut jams, &mut stalls, target_depth_mm) {
                return Ok(outcome);
            }
        }
        Ok(InsertOutcome::Timeout)
    }

    /// Scripted axial drive, e.g. a prismatic joint trajectory, given as
    /// (time since start, commanded depth) samples.
    pub fn drive(&mut self, commands: &[(f64, f64)], target_depth_mm: f64, phase: Phase) -> InsertOutcome {
        if self.state.depth_mm >= target_depth_mm - 1e-9 {
            return InsertOutcome::Success;
        }
        let t0 = self.t_s;
        let lateral = self.state.lateral;
        let (mut jams, mut stalls) = (0, 0);
        for &(t_rel, depth) in commands {
            let adv = self.engagement().advance(
                self.state,
                TipState {
                    lateral,
                    depth_mm: depth,
                },
            );
            self.state = adv.state;
            self.t_s = t0 + t_rel;
            let reaction = self.reaction(adv.axial_penetration_mm, adv.lateral_correction);
            let noise = self.noise3();
            self.record(phase, reaction + noise, adv.block);
            if let Some(outcome) = self.settle(adv.block, &mut jams, &mut stalls, target_depth_mm) {
                return outcome;
            }
        }
        InsertOutcome::Timeout
    }

    /// Linear search, pattern search and insertion in sequence.
    pub fn run(&mut self, target_depth_mm: f64) -> Result<InsertOutcome, SearchError> {
        match self.linear_search()? {
            LinearOutcome::NoContact { .. } => return Ok(InsertOutcome::Timeout),
            LinearOutcome::Contact { .. } => {}
        }
        match self.spiral_search()? {
            SpiralOutcome::HoleNotFound { timed_out: true, .. } => Ok(InsertOutcome::Timeout),
            SpiralOutcome::HoleNotFound { .. } => Ok(InsertOutcome::HoleNotFound),
            SpiralOutcome::HoleFound { .. } => self.insert(target_depth_mm),
        }
    }

    pub fn finish(mut self, outcome: InsertOutcome, target_depth_mm: f64) -> InsertionResult {
        self.record(Phase::Done, Vector3::zeros(), None);
        let depth = self.state.depth_mm;
        let seg = self
            .bore
            .segments
            .iter()
            .find(|s| depth <= s.z_end)
            .or(self.bore.segments.last())
            .expect("bore has segments");
        InsertionResult {
            outcome,
            depth_reached_mm: depth,
            target_depth_mm,
            time_elapsed_s: self.t_s - self.t_start,
            impact_count: self.impacts,
            final_lateral_error_mm: (self.state.lateral - seg.center).norm(),
            final_radial_clearance_mm: (seg.diameter_mm - self.setup.peg.shank_diameter_mm) / 2.0,
            spiral_samples: self.spiral_samples,
            trace: self.trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::BoreSegment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pin() -> Peg {
        Peg::cylinder(6.0, 40.0, 0.0)
    }

    fn pulley(chamfer: f64) -> BoredPart {
        BoredPart::through(vec![BoreSegment::new(6.01, 12.0)], 30.0, chamfer)
    }

    fn setup(peg: Peg, part: BoredPart, start: TipState, tilt: f64) -> EpisodeSetup {
        EpisodeSetup {
            peg,
            part,
            entry: Entry::Front,
            frame: Isometry3::identity(),
            start,
            tilt_rad: tilt,
            compliance: Compliance::Compliant,
        }
    }

    fn run_with<T>(s: EpisodeSetup, cfg: &SearchConfig, f: impl FnOnce(&mut Episode<'_, ChaCha8Rng>) -> T) -> T {
        let world = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ep = Episode::new(s, cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        f(&mut ep)
    }

    #[test]
    fn guarded_move_stops_at_the_surface() {
        let cfg = SearchConfig::default();
        let s = setup(pin(), pulley(0.3), TipState::new(10.0, 0.0, -30.0), 0.0);
        let (out, t) = run_with(s, &cfg, |ep| (ep.linear_search().unwrap(), ep.time_s()));
        let LinearOutcome::Contact {
            travel_mm,
            reaction_n,
            entered,
            ..
        } = out
        else {
            panic!("{out:?}")
        };
        assert!(!entered);
        assert!((travel_mm - 30.0).abs() <= 0.05, "{travel_mm}");
        assert!((t - 6.0).abs() <= 0.01 + 1e-9, "{t}");
        assert!(reaction_n >= cfg.contact_force_threshold_n);
    }

    #[test]
    fn guarded_move_away_from_the_surface_times_out() {
        let cfg = SearchConfig {
            max_duration_s: 2.0,
            ..SearchConfig::default()
        };
        let s = setup(pin(), pulley(0.3), TipState::new(10.0, 0.0, -30.0), 0.0);
        let (out, t) = run_with(s, &cfg, |ep| {
            (ep.linear_search_along(-Vector3::z()).unwrap(), ep.time_s())
        });
        assert!(matches!(out, LinearOutcome::NoContact { .. }), "{out:?}");
        assert!((t - 2.0).abs() < 1e-9);
        let s = setup(pin(), pulley(0.3), TipState::new(10.0, 0.0, -30.0), 0.0);
        run_with(s, &cfg, |ep| {
            assert!(ep.linear_search_along(Vector3::new(1.0, 1.0, 0.0)).is_err())
        });
    }

    #[test]
    fn stop_penetration_is_bounded_by_threshold_over_stiffness() {
        let cfg = SearchConfig {
            contact_force_threshold_n: 0.5,
            ..SearchConfig::default()
        };
        let s = setup(pin(), pulley(0.3), TipState::new(10.0, 0.0, -3.0), 0.0);
        let out = run_with(s, &cfg, |ep| ep.linear_search().unwrap());
        let LinearOutcome::Contact { reaction_n, .. } = out else {
            panic!()
        };
        let penetration = reaction_n / 100.0;
        assert!(reaction_n >= 0.5);
        assert!(penetration <= 0.005 + 0.05 + 1e-12, "{penetration}");
    }

    #[test]
    fn coaxial_approach_enters_directly() {
        let cfg = SearchConfig::default();
        let s = setup(pin(), pulley(0.3), TipState::new(0.0, 0.0, -3.0), 0.0);
        let (lin, spiral) = run_with(s, &cfg, |ep| (ep.linear_search().unwrap(), ep.spiral_search().unwrap()));
        assert!(matches!(lin, LinearOutcome::Contact { entered: true, .. }));
        assert!(matches!(spiral, SpiralOutcome::HoleFound { sample_index: 0, .. }));
    }

    #[test]
    fn centred_hole_is_found_at_the_first_sample() {
        let cfg = SearchConfig::default();
        let s = setup(pin(), pulley(0.3), TipState::new(0.0, 0.0, 0.0), 0.0);
        let out = run_with(s, &cfg, |ep| ep.spiral_search().unwrap());
        assert!(
            matches!(out, SpiralOutcome::HoleFound { sample_index: 0, .. }),
            "{out:?}"
        );
    }

    #[test]
    fn hole_beyond_reach_is_not_found() {
        let cfg = SearchConfig::default();
        let far = cfg.spiral_max_radius_mm + 0.305 + 0.5;
        let s = setup(pin(), pulley(0.3), TipState::new(-far, 0.0, 0.0), 0.0);
        let out = run_with(s, &cfg, |ep| ep.spiral_search().unwrap());
        assert!(
            matches!(out, SpiralOutcome::HoleNotFound { timed_out: false, .. }),
            "{out:?}"
        );
    }

    #[test]
    fn spiral_hit_matches_enumeration() {
        let cfg = SearchConfig::default();
        let hole = Vector2::new(1.2, -0.8);
        let capture = 0.005 + 0.3;
        let expected = cfg
            .samples()
            .find(|(_, (x, y))| (Vector2::new(*x, *y) - hole).norm() <= capture)
            .map(|(k, _)| k)
            .unwrap();
        let s = setup(pin(), pulley(0.3), TipState::new(-hole.x, -hole.y, 0.0), 0.0);
        let (out, impacts) = run_with(s, &cfg, |ep| (ep.spiral_search().unwrap(), ep.impact_count()));
        match out {
            SpiralOutcome::HoleFound { sample_index, .. } => assert_eq!(sample_index, expected),
            other => panic!("{other:?}"),
        }
        assert_eq!(impacts as usize, expected);
    }

    #[test]
    fn coaxial_insertion_succeeds() {
        let cfg = SearchConfig::default();
        let s = setup(pin(), pulley(0.3), TipState::new(0.0, 0.0, -2.0), 0.0);
        let world = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(s, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        let outcome = ep.run(10.0).unwrap();
        let r = ep.finish(outcome, 10.0);
        assert_eq!(r.outcome, InsertOutcome::Success);
        assert!(r.depth_reached_mm >= 10.0 - 1e-9);
        assert!(r.final_lateral_error_mm <= r.final_radial_clearance_mm + 1e-9);
        assert_eq!(r.trace.last().unwrap().phase, Phase::Done);
    }

    #[test]
    fn tilt_past_the_two_point_limit_jams() {
        let cfg = SearchConfig::default();
        let peg = Peg::cylinder(10.0, 60.0, 0.3);
        let part = BoredPart::through(vec![BoreSegment::new(10.4, 20.0)], 40.0, 0.3);
        // Two-point limit at 12 mm engagement is atan(0.4 / 12).
        let limit = (0.4f64 / 12.0).atan();
        let s = setup(peg, part.clone(), TipState::new(0.0, 0.0, 1.0), limit * 1.05);
        let world = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(s, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        let outcome = ep.insert(12.0).unwrap();
        let r = ep.finish(outcome, 12.0);
        assert_eq!(r.outcome, InsertOutcome::Jammed);
        assert!(r.trace.iter().any(|row| row.contact == ContactClass::RimTwoPoint));
        let jam_depth = 0.4 / (limit * 1.05).tan();
        assert!((r.depth_reached_mm - jam_depth).abs() < 1e-6);

        let s = setup(peg, part, TipState::new(0.0, 0.0, 1.0), limit * 0.95);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(s, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(ep.insert(12.0).unwrap(), InsertOutcome::Success);
    }

    #[test]
    fn misaligned_step_jams_at_the_transition() {
        let cfg = SearchConfig::default();
        let peg = Peg::cylinder(6.0, 40.0, 0.2);
        let part = BoredPart::through(
            vec![BoreSegment::new(6.1, 5.0), BoreSegment::new(6.01, 8.0).offset(0.3, 0.0)],
            30.0,
            0.3,
        );
        let s = setup(peg, part, TipState::new(0.0, 0.0, 1.0), 0.0);
        let world = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(s, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        let outcome = ep.insert(10.0).unwrap();
        let r = ep.finish(outcome, 10.0);
        assert_eq!(r.outcome, InsertOutcome::Jammed);
        assert!((r.depth_reached_mm - 5.0).abs() < 1e-6, "{}", r.depth_reached_mm);
    }

    #[test]
    fn shallow_jam_is_a_wedge() {
        let cfg = SearchConfig::default();
        let peg = Peg::cylinder(6.0, 40.0, 0.2);
        let part = BoredPart::through(
            vec![BoreSegment::new(6.1, 1.5), BoreSegment::new(6.01, 8.0).offset(0.3, 0.0)],
            30.0,
            0.3,
        );
        let s = setup(peg, part, TipState::new(0.0, 0.0, 0.6), 0.0);
        let world = WorldConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(s, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(ep.insert(8.0).unwrap(), InsertOutcome::Wedged);
    }

    #[test]
    fn noisy_runs_repeat_exactly() {
        let cfg = SearchConfig::default();
        let go = || {
            let s = setup(pin(), pulley(0.3), TipState::new(0.4, -0.2, -2.0), 0.0);
            let world = WorldConfig::default();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut ep = Episode::new(s, &cfg, &world, 0.05, 0.0, &mut rng).unwrap();
            let o = ep.run(8.0).unwrap();
            ep.finish(o, 8.0)
        };
        let (a, b) = (go(), go());
        assert_eq!(a.outcome, InsertOutcome::Success);
        assert_eq!(a.trace, b.trace);
    }
}

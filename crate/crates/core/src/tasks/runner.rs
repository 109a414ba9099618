use nalgebra::{Isometry3, Point3, Translation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitDisc};
use serde::{Deserialize, Serialize};

use super::{
    task_step, StageName, StageReport, StageSpec, TaskError, TaskEvent, TaskKind, TaskReport, TaskScript, TaskState,
    PIN_SEAT_DEPTH_MM,
};
use crate::hand::{grasp_feasible, pull_in_trajectory, v_groove_align, CylinderPose, Gripper, HandParams};
use crate::mechanisms::PRISMATIC_TRAVEL_MM;
use crate::search::{Episode, EpisodeSetup, InsertOutcome, LinearOutcome, Phase, SearchConfig, SpiralOutcome};
use crate::world::{
    entry_frame, tip_in_entry, Catalog, ClearanceSpec, Compliance, Entry, Holder, Scene, WorldConfig, BASE_BEARING,
    BASE_SLOT, CLAMPING_PULLEY, IDLE_PULLEY, PIN_SPACER, PULLEY_SHAFT, RETAINER_PIN, SHAFT_SPACER,
};

/// Largest accepted seat error of the retainer pin.
pub const FLUSHNESS_TOLERANCE_MM: f64 = 0.1;

/// Placement and sensing disturbances of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Radius of the uniform disk a peg's lateral placement error is drawn
    /// from at every search stage.
    pub placement_offset_mm: f64,
    /// Deterministic lateral offset in the entry frame, at
    /// `nominal_offset_angle_deg` from its x axis.
    pub nominal_offset_mm: f64,
    pub nominal_offset_angle_deg: f64,
    pub force_noise_std_n: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            placement_offset_mm: 1.0,
            nominal_offset_mm: 0.0,
            nominal_offset_angle_deg: 0.0,
            force_noise_std_n: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), TaskError> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.placement_offset_mm)
            && ok(self.force_noise_std_n)
            && self.nominal_offset_mm.is_finite()
            && self.nominal_offset_angle_deg.is_finite())
        {
            return Err(TaskError::Script(format!("invalid noise model {self:?}")));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vector2<f64> {
        let [x, y]: [f64; 2] = UnitDisc.sample(rng);
        let a = self.nominal_offset_angle_deg.to_radians();
        self.nominal_offset_mm * Vector2::new(a.cos(), a.sin()) + self.placement_offset_mm * Vector2::new(x, y)
    }
}

/// Everything a task run reads besides its script.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub catalog: Catalog,
    pub search: SearchConfig,
    pub world: WorldConfig,
    pub hand: HandParams,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for RunContext {
    fn default() -> Self {
        Self {
            catalog: Catalog::builtin(&ClearanceSpec::default()),
            search: SearchConfig::default(),
            world: WorldConfig::default(),
            hand: HandParams::default(),
            noise: NoiseModel::default(),
            seed: 0,
        }
    }
}

impl RunContext {
    pub fn validate(&self) -> Result<(), TaskError> {
        self.catalog.validate()?;
        self.search.validate()?;
        self.world.validate()?;
        self.hand.validate()?;
        self.noise.validate()
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

fn at(x: f64, y: f64, z: f64) -> Isometry3<f64> {
    Isometry3::translation(x, y, z)
}

/// Initial table layout and grasps for a task. Parts start face up at
/// separate spots; the stage sequencer moves holders from there.
pub fn build_scene(task: TaskKind, script: &TaskScript, catalog: &Catalog) -> Result<Scene, TaskError> {
    let mut scene = Scene::new();
    let put = |scene: &mut Scene, id: &str, pose| -> Result<(), TaskError> {
        scene.add(id, catalog.get(&id.into())?.clone(), pose)?;
        Ok(())
    };
    match task {
        TaskKind::ClampingPulleySet => {
            put(&mut scene, PULLEY_SHAFT, at(0.0, -150.0, 100.0))?;
            put(&mut scene, CLAMPING_PULLEY, at(0.0, 0.0, 200.0))?;
            put(&mut scene, SHAFT_SPACER, at(150.0, 0.0, 0.0))?;
            put(&mut scene, BASE_BEARING, at(300.0, 0.0, 0.0))?;
            scene.grasp(Holder::LeftGripper, &PULLEY_SHAFT.into())?;
            scene.grasp(Holder::OuterJaw, &CLAMPING_PULLEY.into())?;
        }
        TaskKind::IdlePulleySet => {
            put(&mut scene, RETAINER_PIN, at(0.0, -150.0, 100.0))?;
            put(&mut scene, IDLE_PULLEY, at(0.0, 0.0, 0.0))?;
            put(&mut scene, PIN_SPACER, at(150.0, 0.0, 0.0))?;
            put(&mut scene, BASE_SLOT, at(300.0, 0.0, 0.0))?;
            scene.grasp(Holder::InnerJaw, &RETAINER_PIN.into())?;
            scene.grasp(Holder::Fixture, &IDLE_PULLEY.into())?;
        }
        TaskKind::OneHandPinInsertion => {
            let st = &script.stages[0];
            put(&mut scene, st.target.as_str(), Isometry3::identity())?;
            put(&mut scene, st.peg.as_str(), at(0.0, 0.0, st.approach_gap_mm))?;
            scene.grasp(Holder::OuterJaw, &st.target)?;
            scene.grasp(Holder::InnerJaw, &st.peg)?;
        }
    }
    Ok(scene)
}

pub fn run_task(script: &TaskScript, ctx: &RunContext) -> Result<TaskReport, TaskError> {
    match script.task {
        TaskKind::ClampingPulleySet => run_clamping_pulley_task(script, ctx),
        TaskKind::IdlePulleySet => run_idle_pulley_task(script, ctx),
        TaskKind::OneHandPinInsertion => run_onehand_insertion(script, ctx),
    }
}

struct Run<'a> {
    script: &'a TaskScript,
    ctx: &'a RunContext,
    scene: Scene,
    rng: ChaCha8Rng,
    log: EventLog,
    stages: Vec<StageReport>,
    failed_stage: Option<StageName>,
    regrasps: u32,
    handovers: u32,
}

fn outcome_event(outcome: InsertOutcome) -> TaskEvent {
    match outcome {
        InsertOutcome::Success => TaskEvent::DepthReached,
        InsertOutcome::Jammed => TaskEvent::Jammed,
        InsertOutcome::Wedged => TaskEvent::Wedged,
        InsertOutcome::HoleNotFound => TaskEvent::HoleNotFound,
        InsertOutcome::Timeout => TaskEvent::TimedOut,
    }
}

struct EventLog {
    state: TaskState,
    events: Vec<TaskEvent>,
}

impl Default for EventLog {
    fn default() -> Self {
        Self {
            state: TaskState::Ready,
            events: Vec::new(),
        }
    }
}

impl EventLog {
    fn fire(&mut self, event: TaskEvent) -> Result<(), TaskError> {
        self.state = task_step(self.state, event)?;
        self.events.push(event);
        Ok(())
    }
}

/// Where an episode left the peg.
struct EpisodeEnd {
    displacement: Vector3<f64>,
    part_tilt_rad: f64,
    time_s: f64,
}

impl EpisodeEnd {
    fn of<R: Rng>(ep: &Episode<'_, R>) -> Self {
        Self {
            displacement: ep.displacement_world(),
            part_tilt_rad: ep.part().tilt_rad,
            time_s: ep.time_s(),
        }
    }
}

impl<'a> Run<'a> {
    fn new(script: &'a TaskScript, ctx: &'a RunContext) -> Result<Self, TaskError> {
        script.validate()?;
        ctx.catalog.validate()?;
        ctx.search.validate()?;
        ctx.world.validate()?;
        ctx.noise.validate()?;
        let scene = build_scene(script.task, script, &ctx.catalog)?;
        Ok(Self {
            script,
            ctx,
            scene,
            rng: ChaCha8Rng::seed_from_u64(ctx.seed),
            log: EventLog::default(),
            stages: Vec::new(),
            failed_stage: None,
            regrasps: 0,
            handovers: 0,
        })
    }

    fn handover(&mut self) -> Result<(), TaskError> {
        self.handovers += 1;
        if self.handovers > self.script.handover_budget {
            return Err(TaskError::HandoverBudget {
                count: self.handovers,
                budget: self.script.handover_budget,
            });
        }
        Ok(())
    }

    fn cfg(&self, stage: &StageSpec) -> SearchConfig {
        stage.search.clone().unwrap_or_else(|| self.ctx.search.clone())
    }

    /// Holders that carry the peg's complex.
    fn carriers(&self, stage: &StageSpec) -> Result<Vec<Holder>, TaskError> {
        let name = stage.name.as_str();
        if !self.scene.holders_of(&stage.peg).contains(&stage.holder) {
            return Err(TaskError::Precondition {
                stage: name,
                detail: format!("{} does not hold {}", stage.holder, stage.peg),
            });
        }
        let group = self.scene.complex(&stage.peg);
        if group.contains(&stage.target) {
            return Err(TaskError::Precondition {
                stage: name,
                detail: format!("{} is already mounted on {}", stage.target, stage.peg),
            });
        }
        let mut holders: Vec<Holder> = group.iter().flat_map(|id| self.scene.holders_of(id)).collect();
        holders.sort();
        holders.dedup();
        Ok(holders)
    }

    fn entry_frame(&self, stage: &StageSpec) -> Result<Isometry3<f64>, TaskError> {
        let part = self.scene.bored(&stage.target)?;
        Ok(entry_frame(part, &self.scene.pose(&stage.target)?, stage.entry))
    }

    /// Moves the carriers so the peg tip sits `gap` above the entry face at
    /// a lateral offset, coaxial with the bore.
    fn place(
        &mut self,
        stage: &StageSpec,
        holders: &[Holder],
        lateral: Vector2<f64>,
        gap: f64,
    ) -> Result<(), TaskError> {
        let desired = self.entry_frame(stage)? * Translation3::new(lateral.x, lateral.y, gap);
        let delta = desired * self.scene.pose(&stage.peg)?.inverse();
        self.scene.move_holders(holders, &delta)?;
        Ok(())
    }

    fn commit(&mut self, stage: &StageSpec, holders: &[Holder], end: EpisodeEnd) -> Result<(), TaskError> {
        let delta = Isometry3::from_parts(Translation3::from(end.displacement), Default::default());
        if holders.is_empty() {
            self.scene.move_free(&stage.peg, &delta)?;
        } else {
            self.scene.move_holders(holders, &delta)?;
        }
        self.scene.bored_mut(&stage.target)?.tilt_rad = end.part_tilt_rad;
        self.scene.time_s = end.time_s;
        Ok(())
    }

    /// Finishes a failed stage by script: the peg is put at the target depth
    /// on the bore axis.
    fn recover(&mut self, stage: &StageSpec, holders: &[Holder]) -> Result<(), TaskError> {
        let desired = self.entry_frame(stage)? * Translation3::new(0.0, 0.0, -stage.target_depth_mm);
        let delta = desired * self.scene.pose(&stage.peg)?.inverse();
        if holders.is_empty() {
            self.scene.move_free(&stage.peg, &delta)?;
        } else {
            self.scene.move_holders(holders, &delta)?;
        }
        Ok(())
    }

    /// Linear search, pattern search and compliant insertion of one stage.
    /// Returns whether the task may continue.
    fn search_stage(&mut self, stage: &StageSpec, mount: bool) -> Result<bool, TaskError> {
        let holders = self.carriers(stage)?;
        let holds_at_entry = self.scene.hand_holds();
        let offset = self.ctx.noise.sample(&mut self.rng);
        self.place(stage, &holders, offset, stage.approach_gap_mm)?;
        let cfg = self.cfg(stage);
        let setup = EpisodeSetup::from_scene(
            &self.scene,
            &stage.peg,
            &stage.target,
            stage.entry,
            Compliance::Compliant,
        )?;
        let t0 = self.scene.time_s;
        self.log.fire(TaskEvent::StartStage)?;
        let mut ep = Episode::new(
            setup,
            &cfg,
            &self.ctx.world,
            self.ctx.noise.force_noise_std_n,
            t0,
            &mut self.rng,
        )?;
        let outcome = match ep.linear_search()? {
            LinearOutcome::NoContact { .. } => {
                self.log.fire(TaskEvent::NoContact)?;
                None
            }
            LinearOutcome::Contact { .. } => {
                self.log.fire(TaskEvent::ContactDetected)?;
                Some(ep.spiral_search()?)
            }
        };
        let outcome = match outcome {
            None => InsertOutcome::Timeout,
            Some(SpiralOutcome::HoleNotFound { timed_out, .. }) => {
                let (event, outcome) = if timed_out {
                    (TaskEvent::TimedOut, InsertOutcome::Timeout)
                } else {
                    (TaskEvent::HoleNotFound, InsertOutcome::HoleNotFound)
                };
                self.log.fire(event)?;
                outcome
            }
            Some(SpiralOutcome::HoleFound { .. }) => {
                self.log.fire(TaskEvent::HoleFound)?;
                let outcome = ep.insert(stage.target_depth_mm)?;
                let event = outcome_event(outcome);
                self.log.fire(event)?;
                outcome
            }
        };
        let end = EpisodeEnd::of(&ep);
        let result = ep.finish(outcome, stage.target_depth_mm);
        self.commit(stage, &holders, end)?;
        self.finish_stage(stage, &holders, holds_at_entry, offset, result, mount)
    }

    fn finish_stage(
        &mut self,
        stage: &StageSpec,
        holders: &[Holder],
        holds_at_entry: crate::hand::HoldAssignment,
        offset: Vector2<f64>,
        result: crate::search::InsertionResult,
        mount: bool,
    ) -> Result<bool, TaskError> {
        let success = result.outcome.is_success();
        let mut recovered = false;
        if !success {
            self.failed_stage.get_or_insert(stage.name);
            if !self.script.abort_on_failure {
                self.recover(stage, holders)?;
                recovered = true;
            }
        }
        if mount && (success || recovered) {
            self.scene.mount(&stage.peg, &stage.target)?;
        }
        self.stages.push(StageReport {
            name: stage.name,
            scripted: stage.scripted,
            skipped: false,
            recovered,
            holds_at_entry,
            placement_offset_mm: [offset.x, offset.y],
            result: Some(result),
            flushness_mm: None,
        });
        Ok(success || recovered)
    }

    fn skip(&mut self, stage: &StageSpec) {
        self.stages.push(StageReport {
            name: stage.name,
            scripted: stage.scripted,
            skipped: true,
            recovered: false,
            holds_at_entry: self.scene.hand_holds(),
            placement_offset_mm: [0.0, 0.0],
            result: None,
            flushness_mm: None,
        });
    }

    fn require_dual_hold(&self, stage: &StageSpec) -> Result<(), TaskError> {
        let holds = self.scene.hand_holds();
        if !holds.is_dual_hold() {
            return Err(TaskError::DualHold {
                stage: stage.name.as_str(),
                holds,
            });
        }
        Ok(())
    }

    /// Seat error of the pin in the idle pulley: how far the head stands
    /// off the pulley face.
    fn flushness(&self) -> Result<f64, TaskError> {
        let pulley = self.scene.bored(&IDLE_PULLEY.into())?;
        let frame = entry_frame(pulley, &self.scene.pose(&IDLE_PULLEY.into())?, Entry::Front);
        let (tip, _) = tip_in_entry(&self.scene.pose(&RETAINER_PIN.into())?, &frame);
        Ok((PIN_SEAT_DEPTH_MM - tip.depth_mm).abs())
    }

    fn report(mut self) -> Result<TaskReport, TaskError> {
        self.log.fire(TaskEvent::Finish)?;
        let success = self.failed_stage.is_none()
            && self
                .stages
                .iter()
                .all(|s| s.skipped || s.outcome().is_some_and(InsertOutcome::is_success));
        Ok(TaskReport {
            task: self.script.task,
            stages: self.stages,
            success,
            failed_stage: self.failed_stage,
            total_time_s: self.scene.time_s,
            regrasp_count: self.regrasps,
            handover_count: self.handovers,
            events: self.log.events,
            final_state: self.log.state,
        })
    }
}

/// Two-arm workflow: shaft into the clamping pulley from its back face,
/// then the shaft/pulley complex into the spacer and the base bearing.
pub fn run_clamping_pulley_task(script: &TaskScript, ctx: &RunContext) -> Result<TaskReport, TaskError> {
    if script.task != TaskKind::ClampingPulleySet {
        return Err(TaskError::Script(format!(
            "{:?} script given to the clamping pulley task",
            script.task
        )));
    }
    let mut run = Run::new(script, ctx)?;
    let stages = script.stages.clone();
    for stage in &stages {
        if stage.skip {
            run.skip(stage);
            continue;
        }
        if stage.name == StageName::B {
            run.require_dual_hold(stage)?;
        }
        if !run.search_stage(stage, true)? {
            break;
        }
        if stage.name == StageName::A {
            // The hand takes the shaft over from the second arm.
            run.scene.grasp(Holder::InnerJaw, &stage.peg)?;
            run.scene.release(Holder::LeftGripper)?;
            run.handover()?;
        }
    }
    run.report()
}

/// Dual-hold workflow: pin into the idle pulley, pin pushed flush in hand,
/// then the pin/pulley complex into the spacer and the base slot.
pub fn run_idle_pulley_task(script: &TaskScript, ctx: &RunContext) -> Result<TaskReport, TaskError> {
    if script.task != TaskKind::IdlePulleySet {
        return Err(TaskError::Script(format!(
            "{:?} script given to the idle pulley task",
            script.task
        )));
    }
    let mut run = Run::new(script, ctx)?;
    let stages = script.stages.clone();
    for stage in &stages {
        if stage.skip {
            run.skip(stage);
            continue;
        }
        let go_on = match stage.name {
            StageName::A1 => {
                // Mounted only once the pin is seated.
                let ok = run.search_stage(stage, false)?;
                if ok {
                    run.scene.grasp(Holder::OuterJaw, &stage.target)?;
                    run.scene.release(Holder::Fixture)?;
                    run.regrasps += 1;
                }
                ok
            }
            StageName::A2 => run.push_stage(stage)?,
            StageName::B => {
                let flush = run.flushness()?;
                if flush > FLUSHNESS_TOLERANCE_MM {
                    return Err(TaskError::Precondition {
                        stage: stage.name.as_str(),
                        detail: format!("retainer pin protrudes {flush:.3} mm beyond the pulley face"),
                    });
                }
                run.require_dual_hold(stage)?;
                run.search_stage(stage, true)?
            }
            _ => run.search_stage(stage, true)?,
        };
        if !go_on {
            break;
        }
    }
    run.report()
}

impl Run<'_> {
    /// In-hand push: the inner jaw lets go of the pin and the prismatic
    /// joint pushes it until the head seats on the pulley.
    fn push_stage(&mut self, stage: &StageSpec) -> Result<bool, TaskError> {
        let holds_at_entry = self.scene.hand_holds();
        if self.scene.held_by(Holder::OuterJaw) != Some(&stage.target) {
            return Err(TaskError::Precondition {
                stage: stage.name.as_str(),
                detail: format!("outer jaw must hold {}", stage.target),
            });
        }
        self.scene.release(stage.holder)?;
        let cfg = self.cfg(stage);
        let setup = EpisodeSetup::from_scene(
            &self.scene,
            &stage.peg,
            &stage.target,
            stage.entry,
            Compliance::Compliant,
        )?;
        let d0 = setup.start.depth_mm;
        let stroke = (stage.target_depth_mm - d0 + cfg.overtravel_mm).clamp(0.0, PRISMATIC_TRAVEL_MM);
        let traj = pull_in_trajectory(0.0, stroke, cfg.dt_s, &self.ctx.hand.screw)?;
        let commands: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t_s, d0 + s.prismatic_mm)).collect();
        self.log.fire(TaskEvent::StartInHand)?;
        let mut ep = Episode::new(
            setup,
            &cfg,
            &self.ctx.world,
            self.ctx.noise.force_noise_std_n,
            self.scene.time_s,
            &mut self.rng,
        )?;
        let outcome = ep.drive(&commands, stage.target_depth_mm, Phase::PushOut);
        self.log.fire(outcome_event(outcome))?;
        let end = EpisodeEnd::of(&ep);
        let result = ep.finish(outcome, stage.target_depth_mm);
        self.commit(stage, &[], end)?;
        self.scene.grasp(stage.holder, &stage.peg)?;
        self.regrasps += 1;
        let go_on = self.finish_stage(stage, &[stage.holder], holds_at_entry, Vector2::zeros(), result, true)?;
        let flush = self.flushness()?;
        if let Some(last) = self.stages.last_mut() {
            last.flushness_mm = Some(flush);
        }
        Ok(go_on)
    }
}

/// One-hand insertion: both parts are seated in the v-grooves of the two
/// jaws and the prismatic joint pulls the peg into the bore.
pub fn run_onehand_insertion(script: &TaskScript, ctx: &RunContext) -> Result<TaskReport, TaskError> {
    if script.task != TaskKind::OneHandPinInsertion {
        return Err(TaskError::Script(format!(
            "{:?} script given to the one-hand insertion",
            script.task
        )));
    }
    let mut run = Run::new(script, ctx)?;
    let stage = script.stages[0].clone();
    if stage.skip {
        run.skip(&stage);
        return run.report();
    }
    let peg = *run.scene.peg(&stage.peg)?;
    let part = run.scene.bored(&stage.target)?.clone();
    let hand = &ctx.hand;
    for (gripper, d) in [
        (Gripper::Inner, peg.shank_diameter_mm),
        (Gripper::Outer, part.outer_diameter_mm),
    ] {
        if !grasp_feasible(gripper, d, hand)?.feasible {
            return Err(TaskError::Precondition {
                stage: stage.name.as_str(),
                detail: format!("{gripper:?} gripper cannot grasp a {d} mm cylinder"),
            });
        }
    }
    // Grasp errors in each fingertip frame, removed as the grooves close.
    let grip_diameter = peg.head.map_or(peg.shank_diameter_mm, |h| h.diameter_mm);
    let mut seat = |diameter_mm: f64, groove| -> Result<Vector2<f64>, TaskError> {
        let e = run.ctx.noise.sample(&mut run.rng);
        let raw = CylinderPose {
            axis_point: Point3::new(e.x, e.y, 0.0),
            axis_dir: Vector3::z_axis(),
            diameter_mm,
        };
        let aligned = v_groove_align(&raw, groove, true)?;
        Ok(aligned.axis_point.coords.xy())
    };
    let pin_at = seat(grip_diameter, &hand.inner_groove)?;
    let pulley_at = seat(part.outer_diameter_mm, &hand.outer_groove)?;
    let lateral = pin_at - pulley_at;
    let holders = [Holder::InnerJaw];
    let holds_at_entry = run.scene.hand_holds();
    run.place(&stage, &holders, lateral, stage.approach_gap_mm)?;

    let cfg = run.cfg(&stage);
    let setup = EpisodeSetup::from_scene(&run.scene, &stage.peg, &stage.target, stage.entry, Compliance::Rigid)?;
    let gap = stage.approach_gap_mm;
    let p0 = PRISMATIC_TRAVEL_MM;
    let p1 = (p0 - (gap + stage.target_depth_mm)).max(0.0);
    let traj = pull_in_trajectory(p0, p1, cfg.dt_s, &hand.screw)?;
    let commands: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.t_s, (p0 - s.prismatic_mm) - gap))
        .collect();
    run.log.fire(TaskEvent::StartInHand)?;
    let mut ep = Episode::new(
        setup,
        &cfg,
        &ctx.world,
        ctx.noise.force_noise_std_n,
        run.scene.time_s,
        &mut run.rng,
    )?;
    let outcome = ep.drive(&commands, stage.target_depth_mm, Phase::PullIn);
    run.log.fire(outcome_event(outcome))?;
    let end = EpisodeEnd::of(&ep);
    let result = ep.finish(outcome, stage.target_depth_mm);
    run.commit(&stage, &holders, end)?;
    run.finish_stage(&stage, &holders, holds_at_entry, lateral, result, true)?;
    run.report()
}

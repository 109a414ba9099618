//! Peg-in-multi-hole workflows driven through an explicit state machine:
//! the clamping pulley set (two arms), the idle pulley set (dual hold with an
//! in-hand push) and a one-hand insertion by prismatic pull-in.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{HandError, HoldAssignment};
use crate::search::{InsertOutcome, InsertionResult, SearchConfig, SearchError};
use crate::world::{
    Entry, Holder, WorldError, BASE_BEARING, BASE_SLOT, CLAMPING_PULLEY, IDLE_PULLEY, PIN_SPACER, PULLEY_SHAFT,
    RETAINER_PIN, SHAFT_SPACER,
};
use crate::ObjectId;

mod machine;
mod runner;

pub use machine::{allowed_events, replay, task_step, TaskEvent, TaskState, TransitionError};
pub use runner::{
    build_scene, run_clamping_pulley_task, run_idle_pulley_task, run_onehand_insertion, run_task, NoiseModel,
    RunContext, FLUSHNESS_TOLERANCE_MM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "clamping_pulley", alias = "clamping_pulley_set")]
    ClampingPulleySet,
    #[serde(rename = "idle_pulley", alias = "idle_pulley_set")]
    IdlePulleySet,
    #[serde(rename = "one_hand", alias = "one_hand_pin_insertion")]
    OneHandPinInsertion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    A,
    A1,
    A2,
    B,
    C,
    PullIn,
}

impl StageName {
    pub fn as_str(self) -> &'static str {
        match self {
            StageName::A => "a",
            StageName::A1 => "a1",
            StageName::A2 => "a2",
            StageName::B => "b",
            StageName::C => "c",
            StageName::PullIn => "pull_in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: StageName,
    pub peg: ObjectId,
    pub target: ObjectId,
    /// Holder that carries the peg into the target.
    pub holder: Holder,
    #[serde(default)]
    pub entry: Entry,
    pub target_depth_mm: f64,
    /// Axial stand-off between tip and entry face when the stage starts.
    #[serde(default = "default_gap")]
    pub approach_gap_mm: f64,
    /// Stands in for a manual step of the original experiments.
    #[serde(default)]
    pub scripted: bool,
    /// Only scripted stages may be skipped.
    #[serde(default)]
    pub skip: bool,
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

fn default_gap() -> f64 {
    5.0
}

impl StageSpec {
    fn new(name: StageName, peg: &str, target: &str, holder: Holder, target_depth_mm: f64) -> Self {
        Self {
            name,
            peg: peg.into(),
            target: target.into(),
            holder,
            entry: Entry::Front,
            target_depth_mm,
            approach_gap_mm: default_gap(),
            scripted: false,
            skip: false,
            search: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskScript {
    pub task: TaskKind,
    pub stages: Vec<StageSpec>,
    pub handover_budget: u32,
    /// Stop at the first failed stage. When off, a failed stage is finished
    /// by script so later stages still run.
    pub abort_on_failure: bool,
}

/// Seat depth of the pin shoulder on the idle pulley face.
pub const PIN_SEAT_DEPTH_MM: f64 = 26.5;

impl TaskScript {
    pub fn canonical(task: TaskKind) -> Self {
        use Holder::*;
        let stages = match task {
            TaskKind::ClampingPulleySet => {
                let mut a = StageSpec::new(StageName::A, PULLEY_SHAFT, CLAMPING_PULLEY, LeftGripper, 33.0);
                a.entry = Entry::Back;
                vec![
                    a,
                    StageSpec::new(StageName::B, PULLEY_SHAFT, SHAFT_SPACER, InnerJaw, 18.0),
                    StageSpec::new(StageName::C, PULLEY_SHAFT, BASE_BEARING, InnerJaw, 10.0),
                ]
            }
            TaskKind::IdlePulleySet => {
                let mut a2 = StageSpec::new(StageName::A2, RETAINER_PIN, IDLE_PULLEY, InnerJaw, PIN_SEAT_DEPTH_MM);
                a2.scripted = true;
                a2.approach_gap_mm = 0.0;
                vec![
                    StageSpec::new(StageName::A1, RETAINER_PIN, IDLE_PULLEY, InnerJaw, 8.0),
                    a2,
                    StageSpec::new(StageName::B, RETAINER_PIN, PIN_SPACER, InnerJaw, 15.0),
                    StageSpec::new(StageName::C, RETAINER_PIN, BASE_SLOT, InnerJaw, 8.0),
                ]
            }
            TaskKind::OneHandPinInsertion => vec![StageSpec::new(
                StageName::PullIn,
                RETAINER_PIN,
                IDLE_PULLEY,
                InnerJaw,
                PIN_SEAT_DEPTH_MM,
            )],
        };
        Self {
            task,
            stages,
            handover_budget: match task {
                TaskKind::ClampingPulleySet => 1,
                _ => 0,
            },
            abort_on_failure: true,
        }
    }

    /// One-hand pull-in of the pulley shaft into the stepped clamping pulley.
    pub fn onehand_clamping() -> Self {
        let mut s = Self::canonical(TaskKind::OneHandPinInsertion);
        let st = &mut s.stages[0];
        st.peg = PULLEY_SHAFT.into();
        st.target = CLAMPING_PULLEY.into();
        st.target_depth_mm = 15.0;
        s
    }

    pub fn stage(&self, name: StageName) -> Option<&StageSpec> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn stage_mut(&mut self, name: StageName) -> Option<&mut StageSpec> {
        self.stages.iter_mut().find(|s| s.name == name)
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let canon = Self::canonical(self.task);
        let names: Vec<_> = self.stages.iter().map(|s| s.name).collect();
        let expected: Vec<_> = canon.stages.iter().map(|s| s.name).collect();
        if names != expected {
            return Err(TaskError::Script(format!(
                "stages {names:?} do not follow the canonical order {expected:?}"
            )));
        }
        for (stage, want) in self.stages.iter().zip(&canon.stages) {
            let name = stage.name.as_str();
            let pair_ok = if self.task == TaskKind::OneHandPinInsertion {
                [(RETAINER_PIN, IDLE_PULLEY), (PULLEY_SHAFT, CLAMPING_PULLEY)]
                    .iter()
                    .any(|(p, t)| stage.peg.as_str() == *p && stage.target.as_str() == *t)
            } else {
                stage.peg == want.peg && stage.target == want.target
            };
            if !pair_ok {
                return Err(TaskError::Script(format!(
                    "stage {name}: {} into {} is not part of this task",
                    stage.peg, stage.target
                )));
            }
            if stage.holder != want.holder {
                return Err(TaskError::Script(format!(
                    "stage {name}: peg must be carried by the {}",
                    want.holder
                )));
            }
            if stage.entry != want.entry {
                return Err(TaskError::Script(format!("stage {name}: wrong entry face")));
            }
            if !(stage.target_depth_mm > 0.0 && stage.target_depth_mm.is_finite()) {
                return Err(TaskError::Script(format!(
                    "stage {name}: target depth must be positive"
                )));
            }
            if !(stage.approach_gap_mm >= 0.0 && stage.approach_gap_mm.is_finite()) {
                return Err(TaskError::Script(format!(
                    "stage {name}: approach gap must be non-negative"
                )));
            }
            if stage.skip && !stage.scripted {
                return Err(TaskError::Script(format!(
                    "stage {name}: only scripted stages can be skipped"
                )));
            }
            if let Some(cfg) = &stage.search {
                cfg.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("task script: {0}")]
    Script(String),
    #[error("stage {stage} precondition failed: {detail}")]
    Precondition { stage: &'static str, detail: String },
    #[error("handover count {count} exceeds the script budget {budget}")]
    HandoverBudget { count: u32, budget: u32 },
    #[error("dual hold missing at stage {stage}: {holds:?}")]
    DualHold { stage: &'static str, holds: HoldAssignment },
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Hand(#[from] HandError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: StageName,
    pub scripted: bool,
    pub skipped: bool,
    /// A failed stage that was completed by script.
    pub recovered: bool,
    pub holds_at_entry: HoldAssignment,
    pub placement_offset_mm: [f64; 2],
    pub result: Option<InsertionResult>,
    /// Seat error of the retainer pin after the stage; zero is flush.
    pub flushness_mm: Option<f64>,
}

impl StageReport {
    pub fn outcome(&self) -> Option<InsertOutcome> {
        self.result.as_ref().map(|r| r.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub stages: Vec<StageReport>,
    pub success: bool,
    pub failed_stage: Option<StageName>,
    pub total_time_s: f64,
    pub regrasp_count: u32,
    pub handover_count: u32,
    pub events: Vec<TaskEvent>,
    pub final_state: TaskState,
}

impl TaskReport {
    pub fn stage(&self, name: StageName) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }
}

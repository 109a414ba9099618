use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Ready,
    AwaitContact,
    Spiral,
    Inserting,
    InHand,
    StageComplete,
    Failed,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskEvent {
    StartStage,
    StartInHand,
    ContactDetected,
    NoContact,
    HoleFound,
    HoleNotFound,
    DepthReached,
    Jammed,
    Wedged,
    TimedOut,
    Finish,
}

impl TaskEvent {
    pub const ALL: [TaskEvent; 11] = [
        TaskEvent::StartStage,
        TaskEvent::StartInHand,
        TaskEvent::ContactDetected,
        TaskEvent::NoContact,
        TaskEvent::HoleFound,
        TaskEvent::HoleNotFound,
        TaskEvent::DepthReached,
        TaskEvent::Jammed,
        TaskEvent::Wedged,
        TaskEvent::TimedOut,
        TaskEvent::Finish,
    ];
}

impl TaskState {
    pub const ALL: [TaskState; 8] = [
        TaskState::Ready,
        TaskState::AwaitContact,
        TaskState::Spiral,
        TaskState::Inserting,
        TaskState::InHand,
        TaskState::StageComplete,
        TaskState::Failed,
        TaskState::Done,
    ];
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {event:?} is not valid in state {state}; allowed: {allowed:?}")]
pub struct TransitionError {
    pub state: TaskState,
    pub event: TaskEvent,
    pub allowed: Vec<TaskEvent>,
}

fn next_state(state: TaskState, event: TaskEvent) -> Option<TaskState> {
    use TaskEvent as E;
    use TaskState as S;
    Some(match (state, event) {
        (S::Ready | S::StageComplete | S::Failed, E::StartStage) => S::AwaitContact,
        (S::Ready | S::StageComplete | S::Failed, E::StartInHand) => S::InHand,
        (S::Ready | S::StageComplete | S::Failed, E::Finish) => S::Done,
        (S::AwaitContact, E::ContactDetected) => S::Spiral,
        (S::AwaitContact, E::NoContact | E::TimedOut) => S::Failed,
        (S::Spiral, E::HoleFound) => S::Inserting,
        (S::Spiral, E::HoleNotFound | E::TimedOut) => S::Failed,
        (S::Inserting | S::InHand, E::DepthReached) => S::StageComplete,
        (S::Inserting | S::InHand, E::Jammed | E::Wedged | E::TimedOut) => S::Failed,
        _ => return None,
    })
}

pub fn allowed_events(state: TaskState) -> Vec<TaskEvent> {
    TaskEvent::ALL
        .into_iter()
        .filter(|e| next_state(state, *e).is_some())
        .collect()
}

/// Deterministic transition function; rejected events leave the caller's
/// state untouched.
pub fn task_step(state: TaskState, event: TaskEvent) -> Result<TaskState, TransitionError> {
    next_state(state, event).ok_or_else(|| TransitionError {
        state,
        event,
        allowed: allowed_events(state),
    })
}

pub fn replay(events: &[TaskEvent]) -> Result<TaskState, TransitionError> {
    events.iter().try_fold(TaskState::Ready, |s, e| task_step(s, *e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_transitions() {
        assert_eq!(
            task_step(TaskState::AwaitContact, TaskEvent::ContactDetected),
            Ok(TaskState::Spiral)
        );
        assert_eq!(
            task_step(TaskState::Spiral, TaskEvent::HoleFound),
            Ok(TaskState::Inserting)
        );
        let err = task_step(TaskState::Inserting, TaskEvent::ContactDetected).unwrap_err();
        assert_eq!(err.state, TaskState::Inserting);
        assert!(err.allowed.contains(&TaskEvent::DepthReached));
        assert!(!err.allowed.contains(&TaskEvent::ContactDetected));
    }

    #[test]
    fn done_is_terminal() {
        assert!(allowed_events(TaskState::Done).is_empty());
    }

    #[test]
    fn full_stage_replays() {
        let log = [
            TaskEvent::StartStage,
            TaskEvent::ContactDetected,
            TaskEvent::HoleFound,
            TaskEvent::DepthReached,
            TaskEvent::StartInHand,
            TaskEvent::DepthReached,
            TaskEvent::Finish,
        ];
        assert_eq!(replay(&log), Ok(TaskState::Done));
    }

    #[test]
    fn every_pair_is_decided() {
        for s in TaskState::ALL {
            for e in TaskEvent::ALL {
                match task_step(s, e) {
                    Ok(next) => assert!(TaskState::ALL.contains(&next)),
                    Err(err) => assert_eq!(err.allowed, allowed_events(s)),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fuzzed_events_never_leave_the_state_set(events in prop::collection::vec(0usize..11, 0..200)) {
            let mut state = TaskState::Ready;
            for i in events {
                let e = TaskEvent::ALL[i];
                match task_step(state, e) {
                    Ok(next) => state = next,
                    Err(err) => {
                        prop_assert_eq!(err.state, state);
                        prop_assert!(!err.allowed.contains(&e));
                    }
                }
                prop_assert!(TaskState::ALL.contains(&state));
            }
        }
    }
}

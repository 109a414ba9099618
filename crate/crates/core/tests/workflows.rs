use duojaw_core::search::InsertOutcome;
use duojaw_core::search::SearchConfig;
use duojaw_core::tasks::{
    replay, run_task, RunContext, StageName, TaskError, TaskKind, TaskReport, TaskScript, TaskState,
    FLUSHNESS_TOLERANCE_MM,
};
use nalgebra::Vector2;
use proptest::prelude::*;

fn clamping(ctx: &RunContext, abort: bool) -> TaskReport {
    let mut script = TaskScript::canonical(TaskKind::ClampingPulleySet);
    script.abort_on_failure = abort;
    run_task(&script, ctx).unwrap()
}

fn offset_ctx(mm: f64, deg: f64, tilt_increment_deg: f64) -> RunContext {
    let mut ctx = RunContext::with_seed(1);
    ctx.noise.placement_offset_mm = 0.0;
    ctx.noise.nominal_offset_mm = mm;
    ctx.noise.nominal_offset_angle_deg = deg;
    ctx.world.tilt_increment_deg = tilt_increment_deg;
    ctx
}

/// Start offset whose first spiral sample inside the spacer capture disk
/// is sample `k`, by enumeration over a polar grid.
fn offset_with_first_hit(k: usize) -> (f64, f64) {
    let cfg = SearchConfig::default();
    // Shaft/spacer radial clearance plus both chamfers.
    let capture = 0.2 + 0.3 + 0.3;
    let samples: Vec<Vector2<f64>> = cfg.samples().map(|(_, (x, y))| Vector2::new(x, y)).collect();
    for mm in (0..300).map(|i| i as f64 * 0.01) {
        for deg in (0..360).map(f64::from) {
            let a = deg.to_radians();
            let o = mm * Vector2::new(a.cos(), a.sin());
            let first = samples.iter().position(|p| (o + p).norm() <= capture - 1e-6);
            let next_margin = samples.get(k).map_or(0.0, |p| capture - (o + p).norm());
            if first == Some(k) && next_margin > 1e-3 && samples[..k].iter().all(|p| (o + p).norm() > capture + 1e-3) {
                return (mm, deg);
            }
        }
    }
    panic!("no offset hits first at sample {k}");
}

#[test]
fn eight_impacts_at_half_a_degree_jam_the_spacer() {
    let (mm, deg) = offset_with_first_hit(7);
    let free = clamping(&offset_ctx(mm, deg, 0.0), true);
    let b = free.stage(StageName::B).unwrap().result.as_ref().unwrap();
    assert_eq!(b.outcome, InsertOutcome::Success);
    // The face contact plus seven failed probes.
    assert_eq!(b.impact_count, 8);
    assert_eq!(b.spiral_samples, Some(8));

    let ctx = offset_ctx(mm, deg, 0.5);
    let r = clamping(&ctx, false);
    let b = r.stage(StageName::B).unwrap();
    let res = b.result.as_ref().unwrap();
    assert_eq!(res.outcome, InsertOutcome::Jammed);
    assert_eq!(res.impact_count, 8);
    // 4 degrees of tilt jam once engagement * tan(tilt) exceeds the diametral clearance.
    let jam = 0.4 / 4f64.to_radians().tan();
    assert!((res.depth_reached_mm - jam).abs() < 0.05, "{}", res.depth_reached_mm);
    assert!(b.recovered);
    assert_eq!(r.stage(StageName::A).unwrap().outcome(), Some(InsertOutcome::Success));
    assert_eq!(r.stage(StageName::C).unwrap().outcome(), Some(InsertOutcome::Success));
    assert!(!r.success);
    assert_eq!(r.failed_stage, Some(StageName::B));
}

#[test]
fn aborting_script_stops_at_the_failed_stage() {
    let mut ctx = RunContext::with_seed(1);
    ctx.noise.placement_offset_mm = 0.0;
    ctx.noise.nominal_offset_mm = 1.5;
    ctx.world.tilt_increment_deg = 1.0;
    let r = clamping(&ctx, true);
    assert_eq!(r.stages.len(), 2);
    assert_eq!(r.failed_stage, Some(StageName::B));
    assert_eq!(replay(&r.events), Ok(TaskState::Done));
}

#[test]
fn idle_task_keeps_both_jaws_busy() {
    let r = run_task(
        &TaskScript::canonical(TaskKind::IdlePulleySet),
        &RunContext::with_seed(42),
    )
    .unwrap();
    assert!(r.success);
    assert_eq!(r.handover_count, 0);
    let a2 = r.stage(StageName::A2).unwrap();
    assert!(a2.scripted);
    assert!(a2.flushness_mm.unwrap() <= FLUSHNESS_TOLERANCE_MM);
    // The pin is released for the push, so only the outer jaw holds at entry.
    assert!(a2.holds_at_entry.outer_holds.is_some());
    let b = r.stage(StageName::B).unwrap();
    assert!(b.holds_at_entry.is_dual_hold());
}

#[test]
fn reordered_script_is_rejected_before_running() {
    let mut script = TaskScript::canonical(TaskKind::IdlePulleySet);
    script.stages.reverse();
    assert!(matches!(
        run_task(&script, &RunContext::default()),
        Err(TaskError::Script(_))
    ));
}

#[test]
fn budget_of_zero_handovers_breaks_the_two_arm_task() {
    let mut script = TaskScript::canonical(TaskKind::ClampingPulleySet);
    script.handover_budget = 0;
    let err = run_task(&script, &RunContext::with_seed(42)).unwrap_err();
    assert!(matches!(err, TaskError::HandoverBudget { count: 1, budget: 0 }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reports_replay_and_respect_handover_rules(seed in 0u64..10_000, idle in any::<bool>()) {
        let kind = if idle { TaskKind::IdlePulleySet } else { TaskKind::ClampingPulleySet };
        let script = TaskScript::canonical(kind);
        let r = run_task(&script, &RunContext::with_seed(seed)).unwrap();
        prop_assert_eq!(replay(&r.events), Ok(r.final_state));
        prop_assert!(r.handover_count <= script.handover_budget);
        if idle {
            prop_assert_eq!(r.handover_count, 0);
        }
        let all_ok = r.stages.iter().all(|s| s.outcome() == Some(InsertOutcome::Success));
        prop_assert_eq!(r.success, all_ok);
    }

    #[test]
    fn onehand_pin_never_needs_a_handover(seed in 0u64..10_000) {
        let mut ctx = RunContext::with_seed(seed);
        ctx.noise.placement_offset_mm = 0.5;
        let r = run_task(&TaskScript::canonical(TaskKind::OneHandPinInsertion), &ctx).unwrap();
        prop_assert_eq!(r.handover_count, 0);
        prop_assert!(r.success);
    }
}

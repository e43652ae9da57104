mod common;

use common::*;
use ebpd::domains::{gen_experience, gen_stack, stacking_blocks};
use ebpd::learner::learn_schema;
use ebpd::planner::*;

#[test]
fn solved_problem_needs_no_plan() {
    let b = stacking_blocks();
    let mut p = gen_stack(1, 3, 3, 1).unwrap();
    p.goal = p.init[..2].to_vec();
    let sol = solve(&p, &[], domains(&b), &PlannerConfig::default()).unwrap();
    assert!(sol.plan.is_empty());
    assert_eq!(sol.schema, None);
    assert_eq!(sol.metrics.plan_length, 0);
}

#[test]
fn empty_library_has_no_schema() {
    let b = stacking_blocks();
    let p = gen_stack(1, 3, 3, 1).unwrap();
    assert!(matches!(solve(&p, &[], domains(&b), &PlannerConfig::default()), Err(PlanError::NoSchema)));
}

#[test]
fn one_schema_per_class_problem() {
    let b = stacking_blocks();
    let library = class_library(4);
    let p = gen_stack(2, 7, 7, 3).unwrap();
    assert_eq!(retrieve(&p, &library, &b.hierarchy).unwrap(), vec![1]);
}

#[test]
fn metrics_describe_the_plan() {
    let b = stacking_blocks();
    let library = class_library(4);
    let p = gen_stack(1, 5, 5, 8).unwrap();
    let sol = solve(&p, &library, domains(&b), &PlannerConfig::default()).unwrap();
    assert_eq!(sol.schema, Some(0));
    assert_eq!(sol.metrics.plan_length, sol.plan.len());
    assert!(sol.metrics.evaluated_states >= sol.abstract_plan.len());
    assert!(sol.iterations.iter().flatten().sum::<usize>() > 0);
}

#[test]
fn reverse_tie_break_also_plans() {
    let b = stacking_blocks();
    let library = class_library(4);
    let cfg = PlannerConfig { tie_break: TieBreak::ReverseLexicographic, ..PlannerConfig::default() };
    for class in [1u8, 3, 4] {
        let p = gen_stack(class, 4, 4, 2).unwrap();
        let sol = solve(&p, &library, domains(&b), &cfg).unwrap();
        validate_plan(&p, &sol.plan, &b.concrete).unwrap();
    }
}

#[test]
fn depth_bound_zero_cannot_move_the_hoist() {
    let b = stacking_blocks();
    let library = class_library(4);
    let p = gen_stack(1, 3, 3, 0).unwrap();
    let cfg = PlannerConfig { depth_bound: 0, ..PlannerConfig::default() };
    match solve(&p, &library, domains(&b), &cfg) {
        Err(PlanError::DepthBound { bound: 0, .. }) => {}
        other => panic!("expected a depth-bound error, got {:?}", other.map(|s| s.plan.len())),
    }
}

#[test]
fn unreachable_goal_is_reported() {
    let b = stacking_blocks();
    let library = class_library(4);
    let mut p = gen_stack(1, 3, 3, 0).unwrap();
    // a block on itself can never hold
    let x = p.goal[0].args[0].clone();
    p.goal.push(ebpd::Atom::new("on", vec![x.clone(), x]));
    assert!(plan_with_schema(&p, &library[0], domains(&b), &PlannerConfig::default()).is_err());
    assert!(matches!(baseline_plan(&p, &b.concrete, 200_000), Err(PlanError::Unsolvable { .. })));
}

#[test]
fn baseline_is_no_longer_than_schema_plans() {
    let b = stacking_blocks();
    let library = class_library(4);
    for class in [1u8, 3, 4] {
        let p = gen_stack(class, 2, 2, 5).unwrap();
        let opt = baseline_plan(&p, &b.concrete, 2_000_000).unwrap();
        validate_plan(&p, &opt.plan, &b.concrete).unwrap();
        let sol = solve(&p, &library, domains(&b), &PlannerConfig::default()).unwrap();
        assert!(opt.plan.len() <= sol.plan.len());
    }
}

#[test]
fn baseline_budget() {
    let b = stacking_blocks();
    let p = gen_stack(3, 3, 3, 0).unwrap();
    assert!(matches!(baseline_plan(&p, &b.concrete, 10), Err(PlanError::Budget { .. })));
}

#[test]
fn validator_reports_the_failing_step() {
    let b = stacking_blocks();
    let library = class_library(4);
    let p = gen_stack(1, 3, 3, 0).unwrap();
    let mut plan = solve(&p, &library, domains(&b), &PlannerConfig::default()).unwrap().plan;
    let removed = plan.remove(1);
    let f = validate_plan(&p, &plan, &b.concrete).unwrap_err();
    assert!(f.index >= 1, "{} after removing {}", f, removed);
    plan.clear();
    assert_eq!(validate_plan(&p, &plan, &b.concrete).unwrap_err().index, 0);
}

#[test]
fn refinement_failure_names_the_step() {
    let b = stacking_blocks();
    let p = gen_stack(2, 2, 2, 0).unwrap();
    let task = GroundTask::new(&b.concrete, &p.objects, &p.static_facts, &p.init, &p.goal).unwrap();
    let r = Refinements::new(&task, &b.hierarchy).unwrap();
    // nothing lies on the table at the start of a reds-under-blues problem
    let block = p.objects.iter().find(|o| o.starts_with("block")).unwrap();
    let step = ebpd::Atom::from_tokens("pick", &[block, "table1"]);
    match sbp(&task, &r, &[step], DEFAULT_DEPTH_BOUND) {
        Err(PlanError::Refinement { index: 0, .. }) | Err(PlanError::DepthBound { index: 0, .. }) => {}
        other => panic!("unexpected {:?}", other.map(|s| s.plan)),
    }
}

/// The reds-under-blues schema learned from 4+4 blocks has one loop and
/// only fits 4+4 problems; from 5+5 blocks it has two and generalizes.
#[test]
fn reds_under_blues_needs_a_larger_experience() {
    let b = stacking_blocks();
    let small = learn_schema(&gen_experience(2, 4, 4).unwrap(), &b.hierarchy).unwrap();
    assert_eq!(small.loop_count(), 1);
    let large = learn_schema(&gen_experience(2, 5, 5).unwrap(), &b.hierarchy).unwrap();
    assert_eq!(large.loop_count(), 2);
    let cfg = PlannerConfig::default();
    for n in [3, 4, 6, 10] {
        let p = gen_stack(2, n, n, n as u64).unwrap();
        let sol = solve(&p, std::slice::from_ref(&large), domains(&b), &cfg).unwrap();
        validate_plan(&p, &sol.plan, &b.concrete).unwrap();
    }
    let p = gen_stack(2, 6, 6, 1).unwrap();
    assert!(solve(&p, std::slice::from_ref(&small), domains(&b), &cfg).is_err());
}

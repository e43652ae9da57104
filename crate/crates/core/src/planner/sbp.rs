//! Refinement of a ground abstract plan into concrete actions, inserting
//! shortest runs of nil-class actions where preconditions are not met.

use std::collections::{HashMap, HashSet};

use log::debug;

use crate::model::{natural_cmp_terms, AbstractionHierarchy, Atom};

use super::ground::{BitState, GroundTask};
use super::PlanError;

pub const DEFAULT_DEPTH_BOUND: usize = 8;

#[derive(Clone, Debug)]
pub struct SbpResult {
    pub plan: Vec<Atom>,
    pub evaluated_states: usize,
}

/// Concrete ground actions grouped by the abstract action they refine.
pub struct Refinements {
    by_parent: HashMap<Atom, Vec<usize>>,
    nil: Vec<usize>,
}

impl Refinements {
    pub fn new(task: &GroundTask, h: &AbstractionHierarchy) -> Result<Self, PlanError> {
        let mut atoms: Vec<(usize, Atom)> =
            task.actions.iter().enumerate().map(|(i, a)| (i, task.action_atom(a))).collect();
        atoms.sort_by(|(_, a), (_, b)| a.predicate.cmp(&b.predicate).then_with(|| natural_cmp_terms(&a.args, &b.args)));
        let mut by_parent: HashMap<Atom, Vec<usize>> = HashMap::new();
        let mut nil = Vec::new();
        for (i, atom) in atoms {
            match h.parent_operator(&atom).map_err(PlanError::Model)? {
                Some(p) => by_parent.entry(p).or_default().push(i),
                None => nil.push(i),
            }
        }
        Ok(Refinements { by_parent, nil })
    }
}

pub fn sbp(
    task: &GroundTask,
    refinements: &Refinements,
    abstract_plan: &[Atom],
    depth_bound: usize,
) -> Result<SbpResult, PlanError> {
    let mut state = task.init.clone();
    let mut plan: Vec<Atom> = Vec::new();
    let mut evaluated = 0;
    let none = Vec::new();
    for (index, a) in abstract_plan.iter().enumerate() {
        let candidates = refinements.by_parent.get(a).unwrap_or(&none);
        let found = nil_search(task, &refinements.nil, &state, depth_bound, &mut evaluated, |s| {
            candidates.iter().position(|&c| task.actions[c].applicable(s))
        });
        match found {
            Search::Found(prefix, s, k) => {
                let c = candidates[k];
                plan.extend(prefix.iter().map(|&n| task.action_atom(&task.actions[n])));
                plan.push(task.action_atom(&task.actions[c]));
                state = task.actions[c].apply(&s);
            }
            Search::Exhausted => return Err(PlanError::Refinement { index, action: a.to_string(), partial: plan }),
            Search::DepthBound => return Err(PlanError::DepthBound { index, bound: depth_bound, partial: plan }),
        }
    }
    if !task.is_goal(&state) {
        let index = abstract_plan.len();
        match nil_search(task, &refinements.nil, &state, depth_bound, &mut evaluated, |s| task.is_goal(s).then_some(0)) {
            Search::Found(prefix, _, _) => plan.extend(prefix.iter().map(|&n| task.action_atom(&task.actions[n]))),
            Search::Exhausted => {
                return Err(PlanError::Refinement { index, action: "goal".into(), partial: plan })
            }
            Search::DepthBound => return Err(PlanError::DepthBound { index, bound: depth_bound, partial: plan }),
        }
    }
    debug!("sbp: {} concrete actions, {} states", plan.len(), evaluated);
    Ok(SbpResult { plan, evaluated_states: evaluated })
}

enum Search {
    /// Nil prefix, state after it, and the value returned by the test.
    Found(Vec<usize>, BitState, usize),
    Exhausted,
    DepthBound,
}

/// Breadth-first search over nil-class actions, layer by layer. The first
/// layer where `test` succeeds wins; within it, the smallest test value,
/// then the earliest discovered state.
fn nil_search(
    task: &GroundTask,
    nil: &[usize],
    start: &BitState,
    bound: usize,
    evaluated: &mut usize,
    test: impl Fn(&BitState) -> Option<usize>,
) -> Search {
    let mut layer: Vec<(BitState, Vec<usize>)> = vec![(start.clone(), Vec::new())];
    let mut seen: HashSet<BitState> = HashSet::new();
    seen.insert(start.clone());
    let mut depth = 0;
    loop {
        *evaluated += layer.len();
        let best = layer.iter().enumerate().filter_map(|(i, (s, _))| test(s).map(|v| (v, i))).min();
        if let Some((v, i)) = best {
            let (s, path) = layer.swap_remove(i);
            return Search::Found(path, s, v);
        }
        if depth == bound {
            return Search::DepthBound;
        }
        let mut next = Vec::new();
        for (s, path) in &layer {
            for &n in nil {
                let a = &task.actions[n];
                if a.applicable(s) {
                    let t = a.apply(s);
                    if seen.insert(t.clone()) {
                        let mut p = path.clone();
                        p.push(n);
                        next.push((t, p));
                    }
                }
            }
        }
        if next.is_empty() {
            return Search::Exhausted;
        }
        layer = next;
        depth += 1;
    }
}

//! Plan checking by direct simulation over atoms, independent of grounding.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::model::{Atom, PlanningDomain, TaskProblem, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanFailure {
    /// Index of the failing action; `plan.len()` when the goal does not hold.
    pub index: usize,
    pub reason: String,
}

impl fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.index, self.reason)
    }
}

/// Runs `plan` from the problem's initial state and checks the goal.
pub fn validate_plan(p: &TaskProblem, plan: &[Atom], domain: &PlanningDomain) -> Result<(), PlanFailure> {
    let state = simulate(p, plan, domain)?;
    if let Some(g) = p.goal.iter().find(|g| !state.contains(*g)) {
        return Err(PlanFailure { index: plan.len(), reason: format!("goal {} does not hold", g) });
    }
    Ok(())
}

/// The state reached by executing `plan`, or the first inapplicable step.
pub fn simulate(p: &TaskProblem, plan: &[Atom], domain: &PlanningDomain) -> Result<BTreeSet<Atom>, PlanFailure> {
    let statics: BTreeSet<&Atom> = p.static_facts.iter().collect();
    let mut state: BTreeSet<Atom> = p.init.iter().cloned().collect();
    for (i, action) in plan.iter().enumerate() {
        let fail = |reason: String| PlanFailure { index: i, reason };
        let op = domain
            .operator(&action.predicate, action.arity())
            .ok_or_else(|| fail(format!("unknown operator {}/{}", action.predicate, action.arity())))?;
        if !action.is_ground() {
            return Err(fail(format!("{} is not ground", action)));
        }
        let sub: HashMap<Term, Term> = op.head.args.iter().cloned().zip(action.args.iter().cloned()).collect();
        for a in &op.static_pre {
            let g = a.apply(&sub);
            if !statics.contains(&g) {
                return Err(fail(format!("static precondition {} of {} does not hold", g, action)));
            }
        }
        for l in &op.pre {
            let g = l.atom.apply(&sub);
            if state.contains(&g) != l.positive {
                let sign = if l.positive { "" } else { "not " };
                return Err(fail(format!("precondition {}{} of {} does not hold", sign, g, action)));
            }
        }
        for l in op.eff.iter().filter(|l| !l.positive) {
            state.remove(&l.atom.apply(&sub));
        }
        for l in op.eff.iter().filter(|l| l.positive) {
            state.insert(l.atom.apply(&sub));
        }
    }
    Ok(state)
}

//! Uninformed breadth-first search over the concrete task, used as the
//! reference planner for short problems.

use std::collections::{HashMap, VecDeque};

use crate::model::Atom;

use super::ground::{BitState, GroundTask};
use super::PlanError;

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub plan: Vec<Atom>,
    pub evaluated_states: usize,
}

/// Shortest plan by number of actions, or `Budget` after `max_states`
/// expansions.
pub fn bfs(task: &GroundTask, max_states: usize) -> Result<BaselineResult, PlanError> {
    let mut parent: HashMap<BitState, Option<(BitState, usize)>> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(task.init.clone(), None);
    queue.push_back(task.init.clone());
    let mut expanded = 0;
    while let Some(s) = queue.pop_front() {
        if task.is_goal(&s) {
            let mut plan = Vec::new();
            let mut cur = s;
            while let Some(Some((prev, a))) = parent.get(&cur) {
                plan.push(task.action_atom(&task.actions[*a]));
                cur = prev.clone();
            }
            plan.reverse();
            return Ok(BaselineResult { plan, evaluated_states: expanded });
        }
        if expanded >= max_states {
            return Err(PlanError::Budget { evaluated_states: expanded });
        }
        expanded += 1;
        for (i, a) in task.actions.iter().enumerate() {
            if a.applicable(&s) {
                let n = a.apply(&s);
                if !parent.contains_key(&n) {
                    parent.insert(n.clone(), Some((s.clone(), i)));
                    queue.push_back(n);
                }
            }
        }
    }
    Err(PlanError::Unsolvable { evaluated_states: expanded })
}

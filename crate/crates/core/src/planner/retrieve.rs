//! Schema retrieval by the embedding test.

use crate::logic::LogicalStructure;
use crate::model::{AbstractionHierarchy, ActivitySchema, ModelError, TaskProblem};
use crate::scope::{embeds, problem_to_struct, Embedding};

/// Indices of the schemata in `library` whose scope the problem embeds
/// into, in library order. Schemata for another task are skipped.
pub fn retrieve(p: &TaskProblem, library: &[ActivitySchema], h: &AbstractionHierarchy) -> Result<Vec<usize>, ModelError> {
    let c = problem_to_struct(p, h)?;
    Ok(retrieve_struct(p, &c, library).into_iter().filter(|(_, e)| e.holds()).map(|(i, _)| i).collect())
}

/// The embedding verdict of every task-compatible schema.
pub fn retrieve_struct(p: &TaskProblem, c: &LogicalStructure, library: &[ActivitySchema]) -> Vec<(usize, Embedding)> {
    library
        .iter()
        .enumerate()
        .filter(|(_, s)| s.task.signature() == p.task.signature())
        .map(|(i, s)| (i, embeds(c, &s.scope)))
        .collect()
}

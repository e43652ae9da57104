//! Plan generation from schemata: retrieval, abstract instantiation (ASBP),
//! refinement (SBP), plan validation and a reference search.

pub mod asbp;
pub mod baseline;
pub mod ground;
pub mod retrieve;
pub mod sbp;
pub mod validate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{AbstractionHierarchy, ActivitySchema, Atom, ModelError, PlanningDomain, TaskProblem};
use crate::scope::problem_to_struct;

pub use asbp::{asbp, AbstractProblem, AsbpOptions, AsbpResult};
pub use baseline::{bfs, BaselineResult};
pub use ground::GroundTask;
pub use retrieve::retrieve;
pub use sbp::{sbp, Refinements, SbpResult, DEFAULT_DEPTH_BOUND};
pub use validate::{simulate, validate_plan, PlanFailure};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grounding failed: {0}")]
    Grounding(String),
    #[error("schema operator {0} is not in the abstract domain")]
    UnknownOperator(String),
    #[error("schema task {schema} does not match problem task {problem}")]
    TaskMismatch { schema: String, problem: String },
    #[error("no applicable schema")]
    NoSchema,
    #[error("no instantiation of the schema reaches the goal ({evaluated_states} states)")]
    NoAbstractPlan { evaluated_states: usize },
    #[error("cannot refine abstract step {index} ({action}); {} concrete actions so far", partial.len())]
    Refinement { index: usize, action: String, partial: Vec<Atom> },
    #[error("nil-action search for abstract step {index} exceeded depth {bound}")]
    DepthBound { index: usize, bound: usize, partial: Vec<Atom> },
    #[error("search budget exhausted after {evaluated_states} states")]
    Budget { evaluated_states: usize },
    #[error("problem is unsolvable ({evaluated_states} states)")]
    Unsolvable { evaluated_states: usize },
    #[error("plan fails validation at {0}")]
    Invalid(PlanFailure),
}

/// Order in which equally good groundings are tried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    Lexicographic,
    ReverseLexicographic,
}

impl FromStr for TieBreak {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lex" | "lexicographic" => Ok(TieBreak::Lexicographic),
            "rev" | "reverse" => Ok(TieBreak::ReverseLexicographic),
            _ => Err(format!("unknown tie-break `{}` (expected lex or rev)", s)),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Lexicographic => "lex",
            TieBreak::ReverseLexicographic => "rev",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlanMetrics {
    pub retrieval_time: Duration,
    pub search_time: Duration,
    pub evaluated_states: usize,
    pub plan_length: usize,
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub depth_bound: usize,
    pub tie_break: TieBreak,
    pub max_expansions: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { depth_bound: DEFAULT_DEPTH_BOUND, tie_break: TieBreak::Lexicographic, max_expansions: 200_000 }
    }
}

/// The domains and hierarchy a planning run needs.
#[derive(Clone, Copy, Debug)]
pub struct Domains<'a> {
    pub concrete: &'a PlanningDomain,
    pub abstract_domain: &'a PlanningDomain,
    pub hierarchy: &'a AbstractionHierarchy,
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Index into the library of the schema used; `None` when the goal
    /// already holds and no schema was needed.
    pub schema: Option<usize>,
    pub abstract_plan: Vec<Atom>,
    pub iterations: Vec<Option<usize>>,
    pub plan: Vec<Atom>,
    pub metrics: PlanMetrics,
}

/// Abstracts a problem through the hierarchy for ASBP.
pub fn abstract_problem(p: &TaskProblem, h: &AbstractionHierarchy) -> Result<AbstractProblem, ModelError> {
    let up = |atoms: &[Atom]| -> Result<Vec<Atom>, ModelError> {
        let mut out = Vec::new();
        for a in atoms {
            if let Some(x) = h.parent_predicate(a)? {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        Ok(out)
    };
    let s = problem_to_struct(p, h)?;
    let classes: HashMap<String, _> = (0..s.len()).map(|i| (s.node(i).name.clone(), s.class_of(i))).collect();
    Ok(AbstractProblem {
        task: p.task.clone(),
        objects: p.objects.clone(),
        static_facts: up(&p.static_facts)?,
        init: up(&p.init)?,
        goal: up(&p.goal)?,
        classes,
    })
}

/// Instantiates and refines one schema on `p`, then validates the plan.
pub fn plan_with_schema(
    p: &TaskProblem,
    schema: &ActivitySchema,
    d: Domains,
    cfg: &PlannerConfig,
) -> Result<(AsbpResult, SbpResult), PlanError> {
    p.validate()?;
    let ap = abstract_problem(p, d.hierarchy)?;
    let atask = GroundTask::new(d.abstract_domain, &ap.objects, &ap.static_facts, &ap.init, &ap.goal)?;
    let opts = AsbpOptions { max_expansions: cfg.max_expansions, tie_break: cfg.tie_break };
    let abs = asbp(schema, &ap, &atask, &opts)?;
    let ctask = GroundTask::new(d.concrete, &p.objects, &p.static_facts, &p.init, &p.goal)?;
    let refinements = Refinements::new(&ctask, d.hierarchy)?;
    let conc = sbp(&ctask, &refinements, &abs.plan, cfg.depth_bound)?;
    validate_plan(p, &conc.plan, d.concrete).map_err(PlanError::Invalid)?;
    Ok((abs, conc))
}

/// Retrieval followed by planning with the first applicable schema.
pub fn solve(p: &TaskProblem, library: &[ActivitySchema], d: Domains, cfg: &PlannerConfig) -> Result<Solution, PlanError> {
    p.validate()?;
    if p.goal.iter().all(|g| p.init.contains(g)) {
        return Ok(Solution {
            schema: None,
            abstract_plan: Vec::new(),
            iterations: Vec::new(),
            plan: Vec::new(),
            metrics: PlanMetrics::default(),
        });
    }
    let t0 = Instant::now();
    let matches = retrieve(p, library, d.hierarchy)?;
    let retrieval_time = t0.elapsed();
    let &schema = matches.first().ok_or(PlanError::NoSchema)?;
    let t1 = Instant::now();
    let (abs, conc) = plan_with_schema(p, &library[schema], d, cfg)?;
    let search_time = t1.elapsed();
    Ok(Solution {
        schema: Some(schema),
        metrics: PlanMetrics {
            retrieval_time,
            search_time,
            evaluated_states: abs.evaluated_states + conc.evaluated_states,
            plan_length: conc.plan.len(),
        },
        abstract_plan: abs.plan,
        iterations: abs.iterations,
        plan: conc.plan,
    })
}

/// Reference plan by breadth-first search over the concrete task.
pub fn baseline_plan(p: &TaskProblem, domain: &PlanningDomain, max_states: usize) -> Result<BaselineResult, PlanError> {
    p.validate()?;
    let task = GroundTask::new(domain, &p.objects, &p.static_facts, &p.init, &p.goal)?;
    bfs(&task, max_states)
}

//! Instantiation of a schema's enriched abstract plan on an abstracted
//! problem: best-first search over groundings, loops expanded one whole
//! iteration at a time.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use log::debug;

use crate::logic::NodeClass;
use crate::model::{ActivitySchema, Atom, KeyProperty, PlanElement, Temporal, Term};

use super::ground::{BitState, GroundTask};
use super::{PlanError, TieBreak};

/// The abstracted problem ASBP works on.
#[derive(Clone, Debug)]
pub struct AbstractProblem {
    pub task: Atom,
    pub objects: Vec<String>,
    pub static_facts: Vec<Atom>,
    pub init: Vec<Atom>,
    pub goal: Vec<Atom>,
    /// Canonical class of every object in `Struct(Abs(P))`.
    pub classes: HashMap<String, NodeClass>,
}

#[derive(Clone, Debug)]
pub struct AsbpOptions {
    pub max_expansions: usize,
    pub tie_break: TieBreak,
}

impl Default for AsbpOptions {
    fn default() -> Self {
        AsbpOptions { max_expansions: 200_000, tie_break: TieBreak::Lexicographic }
    }
}

#[derive(Clone, Debug)]
pub struct AsbpResult {
    pub plan: Vec<Atom>,
    /// Number of iterations taken for each schema element (`None` for singles).
    pub iterations: Vec<Option<usize>>,
    pub cost: usize,
    pub evaluated_states: usize,
}

struct CompiledOp {
    operator: usize,
    /// Variable index of each head argument, or the fixed object.
    args: Vec<Slot>,
    types: Vec<NodeClass>,
    checks: Vec<Check>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Fixed(Option<u32>),
}

struct Check {
    temporal: Temporal,
    predicate: String,
    args: Vec<Slot>,
}

type Binding = Vec<Option<u32>>;

struct Node {
    elem: usize,
    state: BitState,
    binding: Binding,
    g: usize,
    depth: usize,
    parent: Option<usize>,
    actions: Vec<usize>,
    iterated: bool,
}

struct Successor {
    elem: usize,
    state: BitState,
    binding: Binding,
    cost: usize,
    actions: Vec<usize>,
    iterated: bool,
}

pub fn asbp(
    schema: &ActivitySchema,
    problem: &AbstractProblem,
    task: &GroundTask,
    opts: &AsbpOptions,
) -> Result<AsbpResult, PlanError> {
    if schema.task.signature() != problem.task.signature() {
        return Err(PlanError::TaskMismatch { schema: schema.task.to_string(), problem: problem.task.to_string() });
    }
    let mut vars: HashMap<Term, usize> = HashMap::new();
    let mut var_of = |t: &Term| -> usize {
        let n = vars.len();
        *vars.entry(t.clone()).or_insert(n)
    };
    for t in &schema.task.args {
        var_of(t);
    }
    let facts = KeyIndex::new(problem, task);
    let mut elements: Vec<Vec<CompiledOp>> = Vec::new();
    for el in &schema.plan {
        let mut ops = Vec::new();
        for op in el.operators() {
            let operator = task
                .operators
                .iter()
                .position(|o| o.name() == op.head.predicate && o.arity() == op.head.arity())
                .ok_or_else(|| PlanError::UnknownOperator(format!("{}/{}", op.head.predicate, op.head.arity())))?;
            let mut slot = |t: &Term| match t {
                Term::Var(_) => Slot::Var(var_of(t)),
                Term::Const(c) => Slot::Fixed(task.object_id(c)),
            };
            let args = op.head.args.iter().map(&mut slot).collect();
            let checks = op
                .features
                .iter()
                .chain(op.outcomes.iter())
                .map(|k: &KeyProperty| Check {
                    temporal: k.temporal,
                    predicate: k.atom.predicate.clone(),
                    args: k.atom.args.iter().map(&mut slot).collect(),
                })
                .collect();
            ops.push(CompiledOp { operator, args, types: op.types.clone(), checks });
        }
        elements.push(ops);
    }
    let nvars = vars.len();
    let mut binding: Binding = vec![None; nvars];
    for (k, t) in problem.task.args.iter().enumerate() {
        binding[k] = match t {
            Term::Const(c) => Some(task.object_id(c).ok_or_else(|| PlanError::Grounding(format!("unknown object {}", c)))?),
            Term::Var(_) => None,
        };
    }
    // Loop-local variables: used in one loop only and not by the task.
    let mut users: Vec<HashSet<usize>> = vec![HashSet::new(); nvars];
    for (e, ops) in elements.iter().enumerate() {
        for op in ops {
            for s in op.args.iter().chain(op.checks.iter().flat_map(|c| c.args.iter())) {
                if let Slot::Var(v) = s {
                    users[*v].insert(e);
                }
            }
        }
    }
    let locals: Vec<Vec<usize>> = (0..elements.len())
        .map(|e| {
            if !schema.plan[e].is_loop() {
                return Vec::new();
            }
            (schema.task.arity()..nvars).filter(|&v| users[v].len() == 1 && users[v].contains(&e)).collect()
        })
        .collect();
    let ctx = Ctx { elements: &elements, locals: &locals, schema, problem, task, facts, tie_break: opts.tie_break };

    let mut nodes = vec![Node {
        elem: 0,
        state: task.init.clone(),
        binding,
        g: 0,
        depth: 0,
        parent: None,
        actions: Vec::new(),
        iterated: false,
    }];
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Reverse((0usize, Reverse(0usize), seq, 0usize)));
    let mut closed: HashSet<(usize, BitState, Binding)> = HashSet::new();
    let mut expanded = 0;
    while let Some(Reverse((_, _, _, id))) = heap.pop() {
        let node = &nodes[id];
        if !closed.insert((node.elem, node.state.clone(), node.binding.clone())) {
            continue;
        }
        if schema.plan[node.elem..].iter().all(PlanElement::is_loop) && task.is_goal(&node.state) {
            debug!("asbp: solved after {} expansions, cost {}", expanded, node.g);
            return Ok(extract(&nodes, id, task, schema.plan.len(), node.g, expanded));
        }
        if expanded >= opts.max_expansions {
            return Err(PlanError::Budget { evaluated_states: expanded });
        }
        expanded += 1;
        let (elem, state, binding, g, depth) =
            (node.elem, node.state.clone(), node.binding.clone(), node.g, node.depth);
        for s in ctx.successors(elem, &state, &binding) {
            let n = Node {
                elem: s.elem,
                g: g + s.cost,
                depth: depth + s.actions.len(),
                state: s.state,
                binding: s.binding,
                parent: Some(id),
                actions: s.actions,
                iterated: s.iterated,
            };
            if closed.contains(&(n.elem, n.state.clone(), n.binding.clone())) {
                continue;
            }
            seq += 1;
            heap.push(Reverse((n.g, Reverse(n.depth), seq, nodes.len())));
            nodes.push(n);
        }
    }
    Err(PlanError::NoAbstractPlan { evaluated_states: expanded })
}

fn extract(nodes: &[Node], mut id: usize, task: &GroundTask, elements: usize, cost: usize, expanded: usize) -> AsbpResult {
    let mut chain = Vec::new();
    loop {
        chain.push(id);
        match nodes[id].parent {
            Some(p) => id = p,
            None => break,
        }
    }
    chain.reverse();
    let mut plan = Vec::new();
    let mut iterations: Vec<Option<usize>> = vec![None; elements];
    for &i in &chain[1..] {
        let n = &nodes[i];
        plan.extend(n.actions.iter().map(|&a| task.action_atom(&task.actions[a])));
        if n.iterated {
            *iterations[n.elem].get_or_insert(0) += 1;
        }
    }
    AsbpResult { plan, iterations, cost, evaluated_states: expanded }
}

struct Ctx<'a> {
    elements: &'a [Vec<CompiledOp>],
    locals: &'a [Vec<usize>],
    schema: &'a ActivitySchema,
    problem: &'a AbstractProblem,
    task: &'a GroundTask,
    facts: KeyIndex,
    tie_break: TieBreak,
}

impl Ctx<'_> {
    /// Successors from schema position `elem`: for a loop, every complete
    /// iteration first, then whatever follows the loop.
    fn successors(&self, elem: usize, state: &BitState, binding: &Binding) -> Vec<Successor> {
        let mut out = Vec::new();
        if elem >= self.elements.len() {
            return out;
        }
        let ops = &self.elements[elem];
        if self.schema.plan[elem].is_loop() {
            let mut b = binding.clone();
            for &v in &self.locals[elem] {
                b[v] = None;
            }
            let mut partial = Vec::new();
            self.iterate(ops, 0, state, &b, 0, &mut partial, &mut |state, binding, cost, actions| {
                out.push(Successor { elem, state, binding, cost, actions, iterated: true })
            });
            out.extend(self.successors(elem + 1, state, binding));
        } else {
            for (a, nb, cost) in self.groundings(&ops[0], state, binding) {
                out.push(Successor {
                    elem: elem + 1,
                    state: self.task.actions[a].apply(state),
                    binding: nb,
                    cost,
                    actions: vec![a],
                    iterated: false,
                });
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn iterate(
        &self,
        ops: &[CompiledOp],
        j: usize,
        state: &BitState,
        binding: &Binding,
        cost: usize,
        actions: &mut Vec<usize>,
        emit: &mut dyn FnMut(BitState, Binding, usize, Vec<usize>),
    ) {
        if j == ops.len() {
            emit(state.clone(), binding.clone(), cost, actions.clone());
            return;
        }
        for (a, nb, c) in self.groundings(&ops[j], state, binding) {
            let next = self.task.actions[a].apply(state);
            if next == *state {
                continue;
            }
            actions.push(a);
            self.iterate(ops, j + 1, &next, &nb, cost + c, actions, emit);
            actions.pop();
        }
    }

    /// Applicable groundings of `op` consistent with `binding` and the
    /// argument classes, each with its feature cost, in tie-break order.
    fn groundings(&self, op: &CompiledOp, state: &BitState, binding: &Binding) -> Vec<(usize, Binding, usize)> {
        let mut out = Vec::new();
        let candidates = &self.task.by_operator[op.operator];
        let mut visit = |&a: &usize| {
            let ga = &self.task.actions[a];
            let mut nb = binding.clone();
            for (k, s) in op.args.iter().enumerate() {
                let obj = ga.args[k];
                match *s {
                    Slot::Fixed(f) => {
                        if f != Some(obj) {
                            return;
                        }
                    }
                    Slot::Var(v) => match nb[v] {
                        Some(x) if x != obj => return,
                        _ => nb[v] = Some(obj),
                    },
                }
                if !op.types.is_empty() {
                    let name = &self.task.objects[obj as usize];
                    let class = self.problem.classes.get(name).cloned().unwrap_or_default();
                    if class != op.types[k] {
                        return;
                    }
                }
            }
            if !ga.applicable(state) {
                return;
            }
            let cost = op.checks.iter().filter(|c| !self.facts.satisfiable(c, &nb)).count();
            out.push((a, nb, cost));
        };
        match self.tie_break {
            TieBreak::Lexicographic => candidates.iter().for_each(&mut visit),
            TieBreak::ReverseLexicographic => candidates.iter().rev().for_each(&mut visit),
        }
        out
    }
}

/// The problem's abstract key-properties by temporal tag and predicate.
struct KeyIndex {
    rows: HashMap<(Temporal, String), Vec<Vec<u32>>>,
}

impl KeyIndex {
    fn new(p: &AbstractProblem, task: &GroundTask) -> Self {
        let mut rows: HashMap<(Temporal, String), Vec<Vec<u32>>> = HashMap::new();
        for (t, atoms) in [(Temporal::Static, &p.static_facts), (Temporal::Init, &p.init), (Temporal::End, &p.goal)] {
            for a in atoms {
                let ids: Option<Vec<u32>> = a.args.iter().map(|x| task.object_id(x.name())).collect();
                if let Some(ids) = ids {
                    rows.entry((t, a.predicate.clone())).or_default().push(ids);
                }
            }
        }
        KeyIndex { rows }
    }

    /// Whether some fact matches `c` under `binding`, unbound variables
    /// ranging over objects.
    fn satisfiable(&self, c: &Check, binding: &Binding) -> bool {
        let Some(rows) = self.rows.get(&(c.temporal, c.predicate.clone())) else { return false };
        rows.iter().any(|row| {
            if row.len() != c.args.len() {
                return false;
            }
            let mut local: Vec<(usize, u32)> = Vec::new();
            c.args.iter().zip(row.iter()).all(|(s, &o)| match *s {
                Slot::Fixed(f) => f == Some(o),
                Slot::Var(v) => match binding[v] {
                    Some(x) => x == o,
                    None => match local.iter().find(|(w, _)| *w == v) {
                        Some(&(_, x)) => x == o,
                        None => {
                            local.push((v, o));
                            true
                        }
                    },
                },
            })
        })
    }
}

//! Grounded planning tasks: interned objects and facts, bitset states and
//! actions instantiated against the static facts.

use std::collections::HashMap;

use crate::model::{natural_cmp, Atom, Operator, PlanningDomain, Term};

use super::PlanError;

/// Upper bound on ground actions per task; beyond it grounding fails.
pub const MAX_GROUND_ACTIONS: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitState {
    words: Vec<u64>,
}

impl BitState {
    pub fn new(bits: usize) -> Self {
        BitState { words: vec![0; bits.div_ceil(64)] }
    }

    pub fn contains(&self, i: u32) -> bool {
        let i = i as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: u32) {
        let i = i as usize;
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: u32) {
        let i = i as usize;
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains_all(&self, ids: &[u32]) -> bool {
        ids.iter().all(|&i| self.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| (w * 64 + b) as u32)
        })
    }
}

#[derive(Clone, Debug)]
pub struct GroundAction {
    pub op: usize,
    pub args: Vec<u32>,
    pub pre_pos: Vec<u32>,
    pub pre_neg: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
}

impl GroundAction {
    pub fn applicable(&self, s: &BitState) -> bool {
        s.contains_all(&self.pre_pos) && !self.pre_neg.iter().any(|&f| s.contains(f))
    }

    /// Deletes first, then adds.
    pub fn apply(&self, s: &BitState) -> BitState {
        let mut n = s.clone();
        for &f in &self.del {
            n.remove(f);
        }
        for &f in &self.add {
            n.insert(f);
        }
        n
    }
}

#[derive(Clone, Debug)]
pub struct GroundTask {
    pub operators: Vec<Operator>,
    pub objects: Vec<String>,
    obj_index: HashMap<String, u32>,
    facts: Vec<(String, Vec<u32>)>,
    fact_index: HashMap<(String, Vec<u32>), u32>,
    pub actions: Vec<GroundAction>,
    /// Ground actions of each operator, in natural order of their arguments.
    pub by_operator: Vec<Vec<usize>>,
    pub init: BitState,
    pub goal: Vec<u32>,
}

impl GroundTask {
    pub fn new(
        domain: &PlanningDomain,
        objects: &[String],
        static_facts: &[Atom],
        init: &[Atom],
        goal: &[Atom],
    ) -> Result<Self, PlanError> {
        let obj_index: HashMap<String, u32> = objects.iter().enumerate().map(|(i, o)| (o.clone(), i as u32)).collect();
        let mut t = GroundTask {
            operators: domain.operators.clone(),
            objects: objects.to_vec(),
            obj_index,
            facts: Vec::new(),
            fact_index: HashMap::new(),
            actions: Vec::new(),
            by_operator: vec![Vec::new(); domain.operators.len()],
            init: BitState::new(0),
            goal: Vec::new(),
        };
        let mut statics: HashMap<&str, Vec<Vec<u32>>> = HashMap::new();
        for a in static_facts {
            let args = t.object_ids(a)?;
            statics.entry(a.predicate.as_str()).or_default().push(args);
        }
        // Objects sorted naturally so that enumeration order is the tie-break order.
        let mut order: Vec<u32> = (0..objects.len() as u32).collect();
        order.sort_by(|&a, &b| natural_cmp(&objects[a as usize], &objects[b as usize]));
        for (oi, op) in domain.operators.iter().enumerate() {
            let params = &op.head.args;
            let mut bindings = Vec::new();
            bind_statics(op, params, &statics, 0, &mut vec![None; params.len()], &mut bindings);
            let mut full = Vec::new();
            for b in bindings {
                expand_free(&b, 0, &order, &mut b.clone(), &mut full);
                if full.len() + t.actions.len() > MAX_GROUND_ACTIONS {
                    return Err(PlanError::Grounding(format!(
                        "more than {} ground actions for operator {}",
                        MAX_GROUND_ACTIONS,
                        op.name()
                    )));
                }
            }
            full.sort_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| natural_cmp(&objects[*x as usize], &objects[*y as usize]))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            full.dedup();
            for args in full {
                let sub: HashMap<&Term, u32> = params.iter().zip(args.iter().copied()).collect();
                let mut ground = |lits: &mut dyn Iterator<Item = (&Atom, bool)>| -> (Vec<u32>, Vec<u32>) {
                    let (mut pos, mut neg) = (Vec::new(), Vec::new());
                    for (a, positive) in lits {
                        let ids: Vec<u32> = a.args.iter().map(|x| sub[x]).collect();
                        let f = t.intern(&a.predicate, ids);
                        if positive {
                            pos.push(f);
                        } else {
                            neg.push(f);
                        }
                    }
                    (pos, neg)
                };
                let (pre_pos, pre_neg) = ground(&mut op.pre.iter().map(|l| (&l.atom, l.positive)));
                let (add, del) = ground(&mut op.eff.iter().map(|l| (&l.atom, l.positive)));
                t.by_operator[oi].push(t.actions.len());
                t.actions.push(GroundAction { op: oi, args, pre_pos, pre_neg, add, del });
            }
        }
        let mut init_ids = Vec::new();
        for a in init {
            let ids = t.object_ids(a)?;
            init_ids.push(t.intern(&a.predicate, ids));
        }
        for a in goal {
            let ids = t.object_ids(a)?;
            let f = t.intern(&a.predicate, ids);
            t.goal.push(f);
        }
        t.init = BitState::new(t.facts.len());
        for f in init_ids {
            t.init.insert(f);
        }
        Ok(t)
    }

    fn object_ids(&self, a: &Atom) -> Result<Vec<u32>, PlanError> {
        a.args
            .iter()
            .map(|x| match x {
                Term::Const(c) => {
                    self.obj_index.get(c).copied().ok_or_else(|| PlanError::Grounding(format!("unknown object {}", c)))
                }
                Term::Var(_) => Err(PlanError::Grounding(format!("{} is not ground", a))),
            })
            .collect()
    }

    fn intern(&mut self, predicate: &str, args: Vec<u32>) -> u32 {
        let key = (predicate.to_string(), args);
        if let Some(&f) = self.fact_index.get(&key) {
            return f;
        }
        let id = self.facts.len() as u32;
        self.facts.push(key.clone());
        self.fact_index.insert(key, id);
        id
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn fact_id(&self, a: &Atom) -> Option<u32> {
        let ids = self.object_ids(a).ok()?;
        self.fact_index.get(&(a.predicate.clone(), ids)).copied()
    }

    pub fn fact_atom(&self, f: u32) -> Atom {
        let (p, args) = &self.facts[f as usize];
        Atom::new(p.clone(), args.iter().map(|&o| Term::Const(self.objects[o as usize].clone())).collect())
    }

    pub fn object_id(&self, name: &str) -> Option<u32> {
        self.obj_index.get(name).copied()
    }

    pub fn action_atom(&self, a: &GroundAction) -> Atom {
        Atom::new(
            self.operators[a.op].name(),
            a.args.iter().map(|&o| Term::Const(self.objects[o as usize].clone())).collect(),
        )
    }

    pub fn is_goal(&self, s: &BitState) -> bool {
        s.contains_all(&self.goal)
    }

    /// Decodes a state into atoms.
    pub fn state_atoms(&self, s: &BitState) -> Vec<Atom> {
        s.iter().map(|f| self.fact_atom(f)).collect()
    }
}

fn bind_statics(
    op: &Operator,
    params: &[Term],
    statics: &HashMap<&str, Vec<Vec<u32>>>,
    k: usize,
    current: &mut Vec<Option<u32>>,
    out: &mut Vec<Vec<Option<u32>>>,
) {
    if k == op.static_pre.len() {
        out.push(current.clone());
        return;
    }
    let atom = &op.static_pre[k];
    let Some(rows) = statics.get(atom.predicate.as_str()) else { return };
    let positions: Vec<usize> =
        atom.args.iter().map(|a| params.iter().position(|p| p == a).expect("closed operator")).collect();
    for row in rows {
        if row.len() != positions.len() {
            continue;
        }
        let saved = current.clone();
        let mut ok = true;
        for (&p, &o) in positions.iter().zip(row.iter()) {
            match current[p] {
                Some(v) if v != o => {
                    ok = false;
                    break;
                }
                _ => current[p] = Some(o),
            }
        }
        if ok {
            bind_statics(op, params, statics, k + 1, current, out);
        }
        *current = saved;
    }
}

fn expand_free(partial: &[Option<u32>], k: usize, order: &[u32], current: &mut Vec<Option<u32>>, out: &mut Vec<Vec<u32>>) {
    if out.len() > MAX_GROUND_ACTIONS {
        return;
    }
    if k == partial.len() {
        out.push(current.iter().map(|x| x.unwrap()).collect());
        return;
    }
    if partial[k].is_some() {
        expand_free(partial, k + 1, order, current, out);
        return;
    }
    for &o in order {
        current[k] = Some(o);
        expand_free(partial, k + 1, order, current, out);
    }
    current[k] = None;
}

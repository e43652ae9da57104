//! Oracles and generators shared by the integration tests. The oracles
//! are written from the definitions, without the library's shortcuts.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ebpd::domains::{gen_experience, gen_stack, stacking_blocks, Bundle};
use ebpd::learner::learn_schema;
use ebpd::logic::{Fact, LogicalStructure, NodeClass, TruthValue};
use ebpd::model::*;
use ebpd::planner::Domains;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn atom(s: &str) -> Atom {
    let parts: Vec<&str> = s.trim_matches(|c| c == '(' || c == ')').split_whitespace().collect();
    Atom::from_tokens(parts[0], &parts[1..])
}

pub fn domains(b: &Bundle) -> Domains<'_> {
    Domains { concrete: &b.concrete, abstract_domain: &b.abstract_domain, hierarchy: &b.hierarchy }
}

// ------------------------------------------------------------ embedding

/// Decides `C ⊑ S` by trying every function from the nodes of `c` onto the
/// nodes of `s`. A map qualifies when it is surjective and, for every
/// temporal predicate and every tuple of `c`, the value in `c` equals the
/// value of the image tuple in `s` unless that value is 1/2. The task
/// position of a node is treated as one more unary predicate.
pub fn embeds_brute(c: &LogicalStructure, s: &LogicalStructure) -> bool {
    let (n, m) = (c.len(), s.len());
    if m > n || (n > 0 && m == 0) {
        return false;
    }
    let mut symbols: BTreeSet<(Temporal, String, usize)> = BTreeSet::new();
    for st in [c, s] {
        for (f, _) in st.entries() {
            symbols.insert((f.temporal, f.predicate.clone(), f.args.len()));
        }
    }
    let mut f = vec![0usize; n];
    loop {
        if qualifies(c, s, &f, &symbols) {
            return true;
        }
        // next map in odometer order
        let mut k = 0;
        loop {
            if k == n {
                return false;
            }
            f[k] += 1;
            if f[k] < m {
                break;
            }
            f[k] = 0;
            k += 1;
        }
    }
}

fn qualifies(c: &LogicalStructure, s: &LogicalStructure, f: &[usize], symbols: &BTreeSet<(Temporal, String, usize)>) -> bool {
    let mut hit = vec![false; s.len()];
    for &t in f {
        hit[t] = true;
    }
    if hit.iter().any(|h| !h) {
        return false;
    }
    if (0..c.len()).any(|u| c.node(u).task_arg != s.node(f[u]).task_arg) {
        return false;
    }
    for (t, p, k) in symbols {
        let mut tuple = vec![0usize; *k];
        loop {
            let image: Vec<usize> = tuple.iter().map(|&u| f[u]).collect();
            let sv = s.get(&Fact::new(*t, p.clone(), image));
            if sv != TruthValue::Half && c.get(&Fact::new(*t, p.clone(), tuple.clone())) != sv {
                return false;
            }
            let mut i = 0;
            loop {
                if i == *k {
                    break;
                }
                tuple[i] += 1;
                if tuple[i] < c.len() {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if i == *k {
                break;
            }
        }
    }
    true
}

/// Random key-properties over `objects` objects and `predicates` predicate
/// symbols of arity 0 to 2, plus up to two task arguments.
pub fn random_keys(rng: &mut impl Rng, objects: usize, predicates: usize) -> (Vec<KeyProperty>, Vec<Term>) {
    let names: Vec<String> = (0..objects).map(|i| format!("o{}", i)).collect();
    let arity: Vec<usize> = (0..predicates).map(|_| rng.gen_range(0..=2)).collect();
    let temporals = [Temporal::Static, Temporal::Init, Temporal::End];
    let mut keys = BTreeSet::new();
    let count = rng.gen_range(0..=objects * predicates + 2);
    for _ in 0..count {
        let p = rng.gen_range(0..predicates);
        let args: Vec<&str> = (0..arity[p]).map(|_| names[rng.gen_range(0..objects)].as_str()).collect();
        let t = temporals[rng.gen_range(0..3)];
        keys.insert(KeyProperty::new(t, Atom::from_tokens(&format!("p{}", p), &args)));
    }
    let mut task: Vec<Term> = Vec::new();
    for _ in 0..rng.gen_range(0..=2usize.min(objects)) {
        let t = Term::constant(names[rng.gen_range(0..objects)].clone());
        if !task.contains(&t) {
            task.push(t);
        }
    }
    (keys.into_iter().collect(), task)
}

/// A variant of a key-property set: the same set, a copy of one object
/// added, one key dropped, or the set with one object renamed away.
pub fn mutate_keys(rng: &mut impl Rng, keys: &[KeyProperty], objects: usize) -> Vec<KeyProperty> {
    let mut out = keys.to_vec();
    match rng.gen_range(0..4) {
        0 => {}
        1 => {
            let src = Term::constant(format!("o{}", rng.gen_range(0..objects)));
            let dup = Term::constant(format!("o{}", objects));
            let sub: Substitution = HashMap::from([(src.clone(), dup)]);
            out.extend(keys.iter().filter(|k| k.atom.mentions(&src)).map(|k| k.apply(&sub)));
        }
        2 => {
            if !out.is_empty() {
                let i = rng.gen_range(0..out.len());
                out.remove(i);
            }
        }
        _ => {
            let src = Term::constant(format!("o{}", rng.gen_range(0..objects)));
            out.retain(|k| !k.atom.mentions(&src) || rng.gen_bool(0.5));
        }
    }
    out
}

// ------------------------------------------------------------ tandem repeats

/// Loop runs computed without a suffix array. A square `s[i..j] = s[j..j+L]`
/// with `L = j - i` is admitted when no third suffix sorts strictly between
/// the suffixes at `i` and `j`; both starts are recorded under the pattern.
/// Starts of one pattern split into runs spaced by `L`; runs lying inside a
/// run of a different pattern of the same length are rotations and go.
pub fn cnlcp_oracle(s: &[char]) -> Vec<(String, Vec<usize>)> {
    let n = s.len();
    let mut positions: BTreeMap<Vec<char>, BTreeSet<usize>> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let l = j - i;
            if j + l > n || s[i..j] != s[j..j + l] {
                continue;
            }
            let (lo, hi) = if s[i..] < s[j..] { (&s[i..], &s[j..]) } else { (&s[j..], &s[i..]) };
            let between = (0..n).any(|k| k != i && k != j && lo < &s[k..] && &s[k..] < hi);
            if !between {
                let e = positions.entry(s[i..j].to_vec()).or_default();
                e.insert(i);
                e.insert(j);
            }
        }
    }
    let mut runs: Vec<(Vec<char>, Vec<usize>)> = Vec::new();
    for (p, starts) in positions {
        let mut cur: Vec<usize> = Vec::new();
        for st in starts {
            if cur.last().is_some_and(|&last| st != last + p.len()) {
                runs.push((p.clone(), std::mem::take(&mut cur)));
            }
            cur.push(st);
        }
        runs.push((p, cur));
    }
    let span = |(p, st): &(Vec<char>, Vec<usize>)| (st[0], st[st.len() - 1] + p.len());
    let mut out: Vec<(String, Vec<usize>)> = runs
        .iter()
        .filter(|r| {
            let (a, b) = span(r);
            r.1.len() >= 2
                && !runs.iter().any(|o| {
                    let (c, d) = span(o);
                    o.0.len() == r.0.len() && o.0 != r.0 && c <= a && b <= d && (c, d) != (a, b)
                })
        })
        .map(|(p, st)| (p.iter().collect(), st.clone()))
        .collect();
    out.sort_by_key(|(_, st)| st[0]);
    out
}

// ------------------------------------------------------------ stack suite

pub const SUITE_PAIRS: [usize; 15] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 20];

pub struct SuiteProblem {
    pub class: u8,
    pub pairs: usize,
    pub problem: TaskProblem,
}

/// 15 problems per class with seeds 0..60.
pub fn stack_suite() -> Vec<SuiteProblem> {
    let mut out = Vec::new();
    for class in 1..=4u8 {
        for &n in &SUITE_PAIRS {
            let seed = out.len() as u64;
            out.push(SuiteProblem { class, pairs: n, problem: gen_stack(class, n, n, seed).unwrap() });
        }
    }
    out
}

/// One schema per class, index `class - 1`.
pub fn class_library(pairs: usize) -> Vec<ActivitySchema> {
    let b = stacking_blocks();
    (1..=4).map(|c| learn_schema(&gen_experience(c, pairs, pairs).unwrap(), &b.hierarchy).unwrap()).collect()
}

/// The problem with every object renamed through a random permutation of
/// fresh names.
pub fn rename_objects(p: &TaskProblem, rng: &mut impl Rng) -> TaskProblem {
    let mut fresh: Vec<String> = (0..p.objects.len()).map(|i| format!("x{}", i)).collect();
    fresh.shuffle(rng);
    let sub: Substitution =
        p.objects.iter().zip(fresh.iter()).map(|(o, f)| (Term::constant(o), Term::constant(f))).collect();
    let map = |v: &[Atom]| v.iter().map(|a| a.apply(&sub)).collect::<Vec<_>>();
    TaskProblem {
        name: format!("{}-renamed", p.name),
        domain: p.domain.clone(),
        task: p.task.apply(&sub),
        objects: fresh,
        static_facts: map(&p.static_facts),
        init: map(&p.init),
        goal: map(&p.goal),
    }
}

// ------------------------------------------------------------ fuzzed documents

fn pick<'a, T>(rng: &mut impl Rng, v: &'a [T]) -> &'a T {
    &v[rng.gen_range(0..v.len())]
}

fn temporal(rng: &mut impl Rng) -> Temporal {
    *pick(rng, &[Temporal::Static, Temporal::Init, Temporal::End])
}

/// Predicate names with a fixed arity each.
fn signature(rng: &mut impl Rng, prefix: &str, count: usize, max_arity: usize) -> Vec<(String, usize)> {
    (0..count).map(|i| (format!("{}{}", prefix, i), rng.gen_range(0..=max_arity))).collect()
}

fn atom_over(rng: &mut impl Rng, sig: &[(String, usize)], terms: &[Term]) -> Atom {
    let (name, k) = pick(rng, sig);
    Atom::new(name.clone(), (0..*k).map(|_| pick(rng, terms).clone()).collect())
}

pub fn fuzz_domain<R: Rng>(rng: &mut R) -> PlanningDomain {
    let k = rng.gen_range(1..=5);
    let preds = signature(rng, "p", k, 3);
    let mut operators = Vec::new();
    for i in 0..rng.gen_range(0..=4) {
        let params: Vec<Term> = (0..rng.gen_range(0..=3)).map(|k| Term::var(format!("x{}", k))).collect();
        let usable: Vec<(String, usize)> =
            if params.is_empty() { preds.iter().filter(|(_, k)| *k == 0).cloned().collect() } else { preds.clone() };
        let lits = |rng: &mut R, neg: bool| -> Vec<Literal> {
            if usable.is_empty() {
                return vec![];
            }
            (0..rng.gen_range(0..=3))
                .map(|_| {
                    let a = atom_over(rng, &usable, &params);
                    if neg && rng.gen_bool(0.3) {
                        Literal::neg(a)
                    } else {
                        Literal::pos(a)
                    }
                })
                .collect()
        };
        let static_pre = lits(rng, false).into_iter().map(|l| l.atom).collect();
        let pre = lits(rng, true);
        let eff = lits(rng, true);
        operators.push(Operator { head: Atom::new(format!("op{}", i), params), static_pre, pre, eff });
    }
    PlanningDomain {
        name: format!("d{}", rng.gen_range(0..1000)),
        level: *pick(rng, &[Level::Concrete, Level::Abstract]),
        predicates: preds
            .iter()
            .map(|(n, k)| Atom::new(n.clone(), (0..*k).map(|j| Term::var(format!("a{}", j))).collect()))
            .collect(),
        operators,
    }
}

pub fn fuzz_hierarchy<R: Rng>(rng: &mut R) -> AbstractionHierarchy {
    let entries = |rng: &mut R, prefix: &str| -> Vec<MapEntry> {
        (0..rng.gen_range(0..=5))
            .map(|i| {
                let vars: Vec<Term> = (0..rng.gen_range(0..=4)).map(|k| Term::var(format!("y{}", k))).collect();
                let source = Atom::new(format!("{}{}", prefix, i), vars.clone());
                let target = if rng.gen_bool(0.25) {
                    None
                } else {
                    let kept: Vec<Term> = vars.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
                    Some(Atom::new(format!("a{}{}", prefix, rng.gen_range(0..3)), kept))
                };
                MapEntry::new(source, target).unwrap()
            })
            .collect()
    };
    AbstractionHierarchy {
        name: format!("h{}", rng.gen_range(0..1000)),
        concrete_domain: rng.gen_bool(0.5).then(|| "c".to_string()),
        abstract_domain: rng.gen_bool(0.5).then(|| "a".to_string()),
        predicates: entries(rng, "p"),
        operators: entries(rng, "o"),
    }
}

fn ground_objects(rng: &mut impl Rng) -> Vec<String> {
    (0..rng.gen_range(1..=6)).map(|i| format!("obj{}", i)).collect()
}

pub fn fuzz_experience<R: Rng>(rng: &mut R) -> Experience {
    let objects = ground_objects(rng);
    let terms: Vec<Term> = objects.iter().map(Term::constant).collect();
    let k = rng.gen_range(1..=4);
    let preds = signature(rng, "p", k, 3);
    let k = rng.gen_range(1..=3);
    let ops = signature(rng, "op", k, 3);
    let task_arity = rng.gen_range(0..=2);
    Experience {
        name: format!("e{}", rng.gen_range(0..1000)),
        domain: rng.gen_bool(0.5).then(|| "d".to_string()),
        task: atom_over(rng, &[("task".to_string(), task_arity)], &terms),
        key_properties: (0..rng.gen_range(0..=8))
            .map(|_| KeyProperty::new(temporal(rng), atom_over(rng, &preds, &terms)))
            .collect(),
        plan: (0..rng.gen_range(0..=8)).map(|_| atom_over(rng, &ops, &terms)).collect(),
        objects: rng.gen_bool(0.7).then_some(objects),
    }
}

pub fn fuzz_problem<R: Rng>(rng: &mut R) -> TaskProblem {
    let objects = ground_objects(rng);
    let terms: Vec<Term> = objects.iter().map(Term::constant).collect();
    let k = rng.gen_range(1..=4);
    let preds = signature(rng, "p", k, 3);
    let task_arity = rng.gen_range(0..=2);
    let facts = |rng: &mut R| (0..rng.gen_range(0..=6)).map(|_| atom_over(rng, &preds, &terms)).collect();
    TaskProblem {
        name: format!("p{}", rng.gen_range(0..1000)),
        domain: rng.gen_bool(0.5).then(|| "d".to_string()),
        task: atom_over(rng, &[("task".to_string(), task_arity)], &terms),
        static_facts: facts(rng),
        init: facts(rng),
        goal: facts(rng),
        objects,
    }
}

fn fuzz_class(rng: &mut impl Rng) -> NodeClass {
    let mut c = NodeClass::default();
    for _ in 0..rng.gen_range(0..=2) {
        c.canon.insert((temporal(rng), format!("u{}", rng.gen_range(0..3))));
    }
    if rng.gen_bool(0.2) {
        c.task_arg = Some(rng.gen_range(0..2));
    }
    c
}

fn fuzz_enriched<R: Rng>(rng: &mut R, vars: &[Term]) -> EnrichedAbstractOperator {
    let head = atom_over(rng, &[("act".to_string(), 2), ("go".to_string(), 1), ("wait".to_string(), 0)], vars);
    let preds = [("q0".to_string(), 1), ("q1".to_string(), 2)];
    let keys = |rng: &mut R| -> Vec<KeyProperty> {
        (0..rng.gen_range(0..=2)).map(|_| KeyProperty::new(temporal(rng), atom_over(rng, &preds, vars))).collect()
    };
    let features = keys(rng);
    let outcomes = keys(rng);
    EnrichedAbstractOperator { types: head.args.iter().map(|_| fuzz_class(rng)).collect(), head, features, outcomes }
}

pub fn fuzz_schema<R: Rng>(rng: &mut R) -> ActivitySchema {
    let (objects, preds) = (rng.gen_range(1..=6), rng.gen_range(1..=4));
    let (keys, task_args) = random_keys(rng, objects, preds);
    // variables instead of constants, as in learned schemata
    let sub: Substitution =
        (0..7).map(|i| (Term::constant(format!("o{}", i)), Term::var(format!("v{}", i)))).collect();
    let keys: Vec<KeyProperty> = keys.iter().map(|k| k.apply(&sub)).collect();
    let task = Atom::new("task", task_args.iter().map(|t| sub[t].clone()).collect());
    let scope = ebpd::scope::canonical_abstraction(&ebpd::scope::struct_of_keyprops(&keys, &task.args));
    let vars: Vec<Term> = (0..5).map(|i| Term::var(format!("v{}", i))).chain([Term::var("l1")]).collect();
    let plan = (0..rng.gen_range(0..=5))
        .map(|_| {
            if rng.gen_bool(0.3) {
                PlanElement::Loop((0..rng.gen_range(1..=3)).map(|_| fuzz_enriched(rng, &vars)).collect())
            } else {
                PlanElement::Single(fuzz_enriched(rng, &vars))
            }
        })
        .collect();
    ActivitySchema {
        name: format!("m{}", rng.gen_range(0..1000)),
        domain: rng.gen_bool(0.5).then(|| "a".to_string()),
        task,
        scope,
        plan,
    }
}

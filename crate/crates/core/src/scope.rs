//! Scopes of applicability: two-valued structures built from key-properties,
//! their canonical abstraction, and the embedding test.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::logic::{Fact, LogicalStructure, Node, NodeClass, StructureBuilder, TruthValue, Valence};
use crate::model::{AbstractionHierarchy, KeyProperty, ModelError, TaskProblem, Temporal, Term};

/// `Struct(K)`: one node per term, value 1 for every key-property in `K`.
/// Task arguments (`protected`) are always part of the universe and are
/// flagged with their position so that abstraction keeps them apart.
pub fn struct_of_keyprops(keys: &[KeyProperty], protected: &[Term]) -> LogicalStructure {
    let mut b = StructureBuilder::new(Valence::Two);
    for (i, t) in protected.iter().enumerate() {
        b.node(&t.to_string(), false, Some(i));
    }
    for k in keys {
        let names: Vec<String> = k.atom.args.iter().map(|t| t.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        b.fact(k.temporal, &k.atom.predicate, &refs, TruthValue::One);
    }
    b.build()
}

pub fn canonical_name(s: &LogicalStructure, node: usize) -> BTreeSet<(Temporal, String)> {
    s.canonical_name(node)
}

pub fn kleene_join(a: TruthValue, b: TruthValue) -> TruthValue {
    a.join(b)
}

/// Maps every concrete node to its abstract node under `beta`.
#[derive(Clone, Debug)]
pub struct Abstraction {
    pub structure: LogicalStructure,
    /// Abstract node index of each concrete node.
    pub node_map: Vec<usize>,
}

/// Canonical abstraction: nodes with equal classes merge into one node,
/// a summary node when it absorbs two or more; each abstract entry is the
/// join of the concrete entries mapped onto it.
pub fn canonical_abstraction(c: &LogicalStructure) -> LogicalStructure {
    canonical_abstraction_with_map(c).structure
}

pub fn canonical_abstraction_with_map(c: &LogicalStructure) -> Abstraction {
    let classes = c.classes();
    let mut groups: BTreeMap<String, (NodeClass, Vec<usize>)> = BTreeMap::new();
    for (i, class) in classes.iter().enumerate() {
        let name = match class.task_arg {
            Some(_) => c.node(i).name.clone(),
            None => class.node_name(),
        };
        groups.entry(name).or_insert_with(|| (class.clone(), Vec::new())).1.push(i);
    }
    let mut node_map = vec![0; c.len()];
    let mut nodes = Vec::with_capacity(groups.len());
    let mut sizes = Vec::with_capacity(groups.len());
    for (k, (name, (class, members))) in groups.iter().enumerate() {
        for &m in members {
            node_map[m] = k;
        }
        nodes.push(Node { name: name.clone(), summary: members.len() >= 2, task_arg: class.task_arg });
        sizes.push(members.len());
    }
    // Sum of concrete values per abstract tuple: ones count 2, halves 1.
    let mut weight: BTreeMap<Fact, (usize, usize)> = BTreeMap::new();
    for (f, v) in c.entries() {
        let key = Fact::new(f.temporal, f.predicate.clone(), f.args.iter().map(|&a| node_map[a]).collect());
        let e = weight.entry(key).or_insert((0, 0));
        match v {
            TruthValue::One => e.0 += 1,
            TruthValue::Half => e.1 += 1,
            TruthValue::Zero => {}
        }
    }
    let interp = weight
        .into_iter()
        .map(|(f, (ones, halves))| {
            let tuples: usize = f.args.iter().map(|&a| sizes[a]).product();
            let v = if halves == 0 && ones == tuples { TruthValue::One } else { TruthValue::Half };
            (f, v)
        })
        .collect();
    Abstraction { structure: LogicalStructure::from_parts(Valence::Three, nodes, interp), node_map }
}

/// `Struct(Abs(P))`: the abstracted static facts, initial state and goal
/// wrapped as `static`, `init` and `end` key-properties.
pub fn problem_keyprops(p: &TaskProblem, h: &AbstractionHierarchy) -> Result<Vec<KeyProperty>, ModelError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (t, atoms) in [(Temporal::Static, &p.static_facts), (Temporal::Init, &p.init), (Temporal::End, &p.goal)] {
        for a in atoms {
            if let Some(pa) = h.parent_predicate(a)? {
                let k = KeyProperty::new(t, pa);
                if seen.insert(k.clone()) {
                    out.push(k);
                }
            }
        }
    }
    Ok(out)
}

pub fn problem_to_struct(p: &TaskProblem, h: &AbstractionHierarchy) -> Result<LogicalStructure, ModelError> {
    Ok(struct_of_keyprops(&problem_keyprops(p, h)?, &p.task.args))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A concrete node whose class has no abstract counterpart.
    UnmatchedClass { node: String, class: NodeClass },
    /// An abstract node receiving no concrete node.
    EmptyClass { node: String },
    /// Two abstract nodes share a class; the structure is not a canonical abstraction.
    AmbiguousScope { node: String },
    /// An entry where the concrete and definite abstract values differ.
    Entry { temporal: Temporal, predicate: String, args: Vec<String>, concrete: TruthValue, abstract_value: TruthValue },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnmatchedClass { node, class } => {
                write!(f, "object {} has canonical name {} which the scope lacks", node, class)
            }
            Violation::EmptyClass { node } => write!(f, "scope node {} has no counterpart", node),
            Violation::AmbiguousScope { node } => write!(f, "scope node {} shares its canonical name", node),
            Violation::Entry { temporal, predicate, args, concrete, abstract_value } => write!(
                f,
                "{}({} {}) is {} but the scope requires {}",
                temporal,
                predicate,
                args.join(" "),
                concrete,
                abstract_value
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Embedding {
    /// `mapping[u]` is the abstract node of concrete node `u`.
    Embedded(Vec<usize>),
    NotEmbedded(Violation),
}

impl Embedding {
    pub fn holds(&self) -> bool {
        matches!(self, Embedding::Embedded(_))
    }
}

/// Decides `C ⊑ S` using the only candidate map for a canonical
/// abstraction: every node goes to the abstract node of the same class.
pub fn embeds(c: &LogicalStructure, s: &LogicalStructure) -> Embedding {
    let s_classes = s.classes();
    let mut by_class: HashMap<&NodeClass, usize> = HashMap::with_capacity(s_classes.len());
    for (i, k) in s_classes.iter().enumerate() {
        if by_class.insert(k, i).is_some() {
            return Embedding::NotEmbedded(Violation::AmbiguousScope { node: s.node(i).name.clone() });
        }
    }
    let c_classes = c.classes();
    let mut f = Vec::with_capacity(c.len());
    let mut hits = vec![0usize; s.len()];
    for (u, class) in c_classes.into_iter().enumerate() {
        match by_class.get(&class) {
            Some(&t) => {
                f.push(t);
                hits[t] += 1;
            }
            None => {
                return Embedding::NotEmbedded(Violation::UnmatchedClass { node: c.node(u).name.clone(), class })
            }
        }
    }
    if let Some(t) = hits.iter().position(|&h| h == 0) {
        return Embedding::NotEmbedded(Violation::EmptyClass { node: s.node(t).name.clone() });
    }
    // Concrete entries against their images.
    let mut ones: HashMap<Fact, usize> = HashMap::new();
    let mut halves: HashMap<Fact, usize> = HashMap::new();
    for (fact, v) in c.entries() {
        let image = Fact::new(fact.temporal, fact.predicate.clone(), fact.args.iter().map(|&a| f[a]).collect());
        let sv = s.get(&image);
        if !v.refines(sv) {
            return Embedding::NotEmbedded(entry_violation(c, fact, v, sv));
        }
        match v {
            TruthValue::One => *ones.entry(image).or_insert(0) += 1,
            TruthValue::Half => *halves.entry(image).or_insert(0) += 1,
            TruthValue::Zero => {}
        }
    }
    // A definite 1 in the scope needs its whole preimage at 1.
    for (fact, sv) in s.entries() {
        if sv != TruthValue::One {
            continue;
        }
        let tuples: usize = fact.args.iter().map(|&a| hits[a]).product();
        let n = ones.get(fact).copied().unwrap_or(0);
        if n != tuples {
            let missing = first_missing_preimage(c, &f, fact);
            let value = if halves.contains_key(fact) { TruthValue::Half } else { TruthValue::Zero };
            return Embedding::NotEmbedded(match missing {
                Some(args) => Violation::Entry {
                    temporal: fact.temporal,
                    predicate: fact.predicate.clone(),
                    args,
                    concrete: value,
                    abstract_value: TruthValue::One,
                },
                None => Violation::Entry {
                    temporal: fact.temporal,
                    predicate: fact.predicate.clone(),
                    args: fact.args.iter().map(|&a| s.node(a).name.clone()).collect(),
                    concrete: value,
                    abstract_value: TruthValue::One,
                },
            });
        }
    }
    Embedding::Embedded(f)
}

fn entry_violation(c: &LogicalStructure, fact: &Fact, v: TruthValue, sv: TruthValue) -> Violation {
    Violation::Entry {
        temporal: fact.temporal,
        predicate: fact.predicate.clone(),
        args: fact.args.iter().map(|&a| c.node(a).name.clone()).collect(),
        concrete: v,
        abstract_value: sv,
    }
}

/// Some concrete tuple mapped onto `fact` that is not 1 in `c`.
fn first_missing_preimage(c: &LogicalStructure, f: &[usize], fact: &Fact) -> Option<Vec<String>> {
    let pre: Vec<Vec<usize>> =
        fact.args.iter().map(|&t| (0..c.len()).filter(|&u| f[u] == t).collect()).collect();
    let mut idx = vec![0usize; pre.len()];
    loop {
        let args: Vec<usize> = idx.iter().zip(pre.iter()).map(|(&i, p)| p[i]).collect();
        let cf = Fact::new(fact.temporal, fact.predicate.clone(), args.clone());
        if c.get(&cf) != TruthValue::One {
            return Some(args.iter().map(|&a| c.node(a).name.clone()).collect());
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] < pre[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;

    fn kp(t: Temporal, s: &str) -> KeyProperty {
        let parts: Vec<&str> = s.split_whitespace().collect();
        KeyProperty::new(t, Atom::from_tokens(parts[0], &parts[1..]))
    }

    #[test]
    fn empty_and_single() {
        let s = struct_of_keyprops(&[], &[]);
        assert!(s.is_empty());
        assert_eq!(s.entry_count(), 0);
        let s = struct_of_keyprops(&[kp(Temporal::Init, "on a b")], &[]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.entry_count(), 1);
    }

    #[test]
    fn distinct_names_no_summary() {
        let k = vec![kp(Temporal::Static, "red a"), kp(Temporal::Static, "blue b"), kp(Temporal::Init, "on a b")];
        let c = struct_of_keyprops(&k, &[]);
        let b = canonical_abstraction(&c);
        assert_eq!(b.len(), 2);
        assert_eq!(b.summary_count(), 0);
        assert!(b.entries().all(|(_, v)| v == TruthValue::One));
    }

    #[test]
    fn partial_unary_becomes_half() {
        let k = vec![
            kp(Temporal::Static, "blue b1"),
            kp(Temporal::Static, "blue b2"),
            kp(Temporal::Init, "ontable b1 t"),
            kp(Temporal::Static, "table t"),
        ];
        let c = struct_of_keyprops(&k, &[]);
        let b = canonical_abstraction(&c);
        assert_eq!(b.len(), 2);
        assert_eq!(b.summary_count(), 1);
        let blue = b.index_of("?c.blue").unwrap();
        let table = b.index_of("?c.table").unwrap();
        assert_eq!(b.get(&Fact::new(Temporal::Init, "ontable", vec![blue, table])), TruthValue::Half);
        assert!(embeds(&c, &b).holds());
    }

    #[test]
    fn protected_nodes_stay_apart() {
        let k = vec![kp(Temporal::Static, "pile p1"), kp(Temporal::Static, "pile p2")];
        let c = struct_of_keyprops(&k, &[Term::constant("p2")]);
        let b = canonical_abstraction(&c);
        assert_eq!(b.len(), 2);
        assert_eq!(b.summary_count(), 0);
        assert!(b.index_of("p2").is_some());
    }

    #[test]
    fn definite_one_needs_full_preimage() {
        let scope = canonical_abstraction(&struct_of_keyprops(
            &[kp(Temporal::Static, "blue a"), kp(Temporal::Static, "blue b"), kp(Temporal::Init, "x a"), kp(Temporal::Init, "x b")],
            &[],
        ));
        let c = struct_of_keyprops(
            &[kp(Temporal::Static, "blue a"), kp(Temporal::Static, "blue b"), kp(Temporal::Init, "x a")],
            &[],
        );
        // x is not part of the canonical name of b, so classes differ
        assert!(!embeds(&c, &scope).holds());
        let c2 = struct_of_keyprops(&[kp(Temporal::Static, "blue a")], &[]);
        // x(a) is unary 1 in the scope's class name, so a plain blue object has no class
        assert!(matches!(embeds(&c2, &scope), Embedding::NotEmbedded(Violation::UnmatchedClass { .. })));
    }

    #[test]
    fn surjectivity_required() {
        let scope = canonical_abstraction(&struct_of_keyprops(
            &[kp(Temporal::Static, "blue a"), kp(Temporal::Static, "red b")],
            &[],
        ));
        let c = struct_of_keyprops(&[kp(Temporal::Static, "blue a")], &[]);
        assert!(matches!(embeds(&c, &scope), Embedding::NotEmbedded(Violation::EmptyClass { .. })));
    }
}

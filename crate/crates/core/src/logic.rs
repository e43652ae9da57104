//! Two- and three-valued logical structures over temporal predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::Temporal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthValue {
    Zero,
    Half,
    One,
}

impl TruthValue {
    /// Least upper bound in the information order: equal values persist,
    /// disagreement gives `Half`.
    pub fn join(self, other: TruthValue) -> TruthValue {
        if self == other {
            self
        } else {
            TruthValue::Half
        }
    }

    /// `self ⊑ other`: `other` is either the same value or indefinite.
    pub fn refines(self, other: TruthValue) -> bool {
        self == other || other == TruthValue::Half
    }

    pub fn is_definite(self) -> bool {
        self != TruthValue::Half
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::Zero => "0",
            TruthValue::Half => "1/2",
            TruthValue::One => "1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valence {
    Two,
    Three,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub name: String,
    pub summary: bool,
    /// Position in the task head when this node is a task argument. Such
    /// nodes are never merged with others.
    pub task_arg: Option<usize>,
}

/// An interpretation key: a temporal predicate applied to node indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub temporal: Temporal,
    pub predicate: String,
    pub args: Vec<usize>,
}

impl Fact {
    pub fn new(temporal: Temporal, predicate: impl Into<String>, args: Vec<usize>) -> Self {
        Fact { temporal, predicate: predicate.into(), args }
    }
}

/// The class a node falls into under canonical abstraction: the unary
/// temporal predicates that definitely hold for it, plus its task position.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeClass {
    pub canon: BTreeSet<(Temporal, String)>,
    pub task_arg: Option<usize>,
}

impl NodeClass {
    /// Name used for the abstract node standing for this class when it is
    /// not a task argument, e.g. `?c.block.blue` or `?c.block.init:clear`.
    pub fn node_name(&self) -> String {
        let mut s = String::from("?c");
        for (t, p) in &self.canon {
            s.push('.');
            if *t != Temporal::Static {
                s.push_str(t.as_str());
                s.push(':');
            }
            s.push_str(p);
        }
        s
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (t, p)) in self.canon.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}({})", t, p)?;
        }
        write!(f, "}}")?;
        if let Some(i) = self.task_arg {
            write!(f, "@task{}", i)?;
        }
        Ok(())
    }
}

/// A universe of named nodes with a sparse interpretation: absent facts are 0.
/// Nodes are kept sorted by name so that equal structures compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalStructure {
    pub valence: Valence,
    nodes: Vec<Node>,
    interp: BTreeMap<Fact, TruthValue>,
}

impl LogicalStructure {
    pub fn empty(valence: Valence) -> Self {
        LogicalStructure { valence, nodes: Vec::new(), interp: BTreeMap::new() }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.name.as_str().cmp(name)).ok()
    }

    pub fn get(&self, fact: &Fact) -> TruthValue {
        self.interp.get(fact).copied().unwrap_or(TruthValue::Zero)
    }

    /// Stored (non-zero) entries in fact order.
    pub fn entries(&self) -> impl Iterator<Item = (&Fact, TruthValue)> {
        self.interp.iter().map(|(f, v)| (f, *v))
    }

    pub fn entry_count(&self) -> usize {
        self.interp.len()
    }

    pub fn summary_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.summary).count()
    }

    /// The `(temporal, predicate)` pairs of unary facts that hold (value 1) for node `i`.
    pub fn canonical_name(&self, i: usize) -> BTreeSet<(Temporal, String)> {
        self.interp
            .iter()
            .filter(|(f, v)| f.args.len() == 1 && f.args[0] == i && **v == TruthValue::One)
            .map(|(f, _)| (f.temporal, f.predicate.clone()))
            .collect()
    }

    pub fn class_of(&self, i: usize) -> NodeClass {
        NodeClass { canon: self.canonical_name(i), task_arg: self.nodes[i].task_arg }
    }

    pub fn classes(&self) -> Vec<NodeClass> {
        let mut canon: Vec<BTreeSet<(Temporal, String)>> = vec![BTreeSet::new(); self.nodes.len()];
        for (f, v) in &self.interp {
            if f.args.len() == 1 && *v == TruthValue::One {
                canon[f.args[0]].insert((f.temporal, f.predicate.clone()));
            }
        }
        canon
            .into_iter()
            .zip(self.nodes.iter())
            .map(|(canon, n)| NodeClass { canon, task_arg: n.task_arg })
            .collect()
    }

    /// Checks the valence and arity invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.valence == Valence::Two {
            if let Some(n) = self.nodes.iter().find(|n| n.summary) {
                return Err(format!("two-valued structure has summary node {}", n.name));
            }
            if self.interp.values().any(|v| *v == TruthValue::Half) {
                return Err("two-valued structure has an indefinite entry".into());
            }
        }
        let mut arity: BTreeMap<(Temporal, &str), usize> = BTreeMap::new();
        for f in self.interp.keys() {
            if f.args.iter().any(|&a| a >= self.nodes.len()) {
                return Err(format!("fact {} refers to a missing node", f.predicate));
            }
            let k = (f.temporal, f.predicate.as_str());
            if *arity.entry(k).or_insert(f.args.len()) != f.args.len() {
                return Err(format!("predicate {} used with two arities", f.predicate));
            }
        }
        Ok(())
    }

    /// Renders the structure for graphviz: unary facts are node labels,
    /// other facts are edges, indefinite entries dashed, summaries doubled.
    pub fn to_dot(&self, title: &str) -> String {
        let mut out = format!("digraph \"{}\" {{\n", title.replace('"', "'"));
        for (i, n) in self.nodes.iter().enumerate() {
            let mut label = n.name.clone();
            for (f, v) in self.entries().filter(|(f, _)| f.args.len() == 1 && f.args[0] == i) {
                let mark = if v == TruthValue::Half { "?" } else { "" };
                label.push_str(&format!("\\n{}({}){}", f.temporal, f.predicate, mark));
            }
            let shape = if n.summary { "doublecircle" } else { "circle" };
            out.push_str(&format!("  n{} [label=\"{}\", shape={}];\n", i, label.replace('"', "'"), shape));
        }
        for (f, v) in self.entries().filter(|(f, _)| f.args.len() != 1) {
            let style = if v == TruthValue::Half { "dashed" } else { "solid" };
            match f.args.as_slice() {
                [] => out.push_str(&format!("  // {}({}) = {}\n", f.temporal, f.predicate, v)),
                [a, rest @ ..] => {
                    let b = rest.last().copied().unwrap_or(*a);
                    let mid: Vec<String> = rest[..rest.len().saturating_sub(1)].iter().map(|x| self.nodes[*x].name.clone()).collect();
                    let extra = if mid.is_empty() { String::new() } else { format!(" [{}]", mid.join(",")) };
                    out.push_str(&format!(
                        "  n{} -> n{} [label=\"{}({}){}\", style={}];\n",
                        a, b, f.temporal, f.predicate, extra, style
                    ));
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// A name-independent form: task-argument nodes are renamed by position
    /// and every other node by its class. Only meaningful when classes are
    /// unique, as they are in canonical abstractions.
    pub fn canonical_form(&self) -> CanonicalForm {
        let classes = self.classes();
        let label = |i: usize| -> String {
            match self.nodes[i].task_arg {
                Some(k) => format!("?task.{}", k),
                None => classes[i].node_name(),
            }
        };
        let nodes = (0..self.nodes.len()).map(|i| (label(i), self.nodes[i].summary)).collect();
        let facts = self
            .interp
            .iter()
            .map(|(f, v)| (f.temporal, f.predicate.clone(), f.args.iter().map(|&a| label(a)).collect(), *v))
            .collect();
        CanonicalForm { nodes, facts }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    pub nodes: BTreeSet<(String, bool)>,
    pub facts: BTreeSet<(Temporal, String, Vec<String>, TruthValue)>,
}

/// Collects nodes and facts by name, then freezes them into a structure.
#[derive(Clone, Debug)]
pub struct StructureBuilder {
    valence: Valence,
    nodes: BTreeMap<String, Node>,
    facts: Vec<(Temporal, String, Vec<String>, TruthValue)>,
}

impl StructureBuilder {
    pub fn new(valence: Valence) -> Self {
        StructureBuilder { valence, nodes: BTreeMap::new(), facts: Vec::new() }
    }

    /// Adds a node, or updates flags of an existing one (summary is sticky,
    /// the first task position wins).
    pub fn node(&mut self, name: &str, summary: bool, task_arg: Option<usize>) -> &mut Self {
        let n = self
            .nodes
            .entry(name.to_string())
            .or_insert_with(|| Node { name: name.to_string(), summary: false, task_arg: None });
        n.summary |= summary;
        if n.task_arg.is_none() {
            n.task_arg = task_arg;
        }
        self
    }

    /// Adds a fact, creating plain nodes for unseen arguments. Repeated
    /// facts are joined.
    pub fn fact(&mut self, temporal: Temporal, predicate: &str, args: &[&str], value: TruthValue) -> &mut Self {
        for a in args {
            self.node(a, false, None);
        }
        self.facts.push((temporal, predicate.to_string(), args.iter().map(|s| s.to_string()).collect(), value));
        self
    }

    pub fn build(&self) -> LogicalStructure {
        let nodes: Vec<Node> = self.nodes.values().cloned().collect();
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        let mut interp: BTreeMap<Fact, TruthValue> = BTreeMap::new();
        for (t, p, args, v) in &self.facts {
            let fact = Fact::new(*t, p.clone(), args.iter().map(|a| index[a.as_str()]).collect());
            let joined = match interp.get(&fact) {
                Some(old) => old.join(*v),
                None => *v,
            };
            interp.insert(fact, joined);
        }
        interp.retain(|_, v| *v != TruthValue::Zero);
        LogicalStructure { valence: self.valence, nodes, interp }
    }
}

impl LogicalStructure {
    /// Assembles a structure from nodes already in name order and an
    /// interpretation over their indices.
    pub(crate) fn from_parts(valence: Valence, nodes: Vec<Node>, interp: BTreeMap<Fact, TruthValue>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0].name < w[1].name));
        let mut interp = interp;
        interp.retain(|_, v| *v != TruthValue::Zero);
        LogicalStructure { valence, nodes, interp }
    }
}

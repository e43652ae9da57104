//! Domain types shared by every stage: terms, atoms, operators, domains,
//! abstraction hierarchies, experiences, activity schemata and problems.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::logic::{LogicalStructure, NodeClass};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("no abstraction entry for {kind} `{name}/{arity}`")]
    MissingEntry { kind: &'static str, name: String, arity: usize },
    #[error("constant `{0}` is not a declared object")]
    UndeclaredObject(String),
    #[error("atom `{0}` is not ground")]
    NotGround(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// A constant or a variable. Variables print with a leading `?`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl AsRef<str>) -> Self {
        let name = name.as_ref();
        Term::Var(name.strip_prefix('?').unwrap_or(name).to_string())
    }

    /// Reads a lexical token: `?x` is a variable, anything else a constant.
    pub fn from_token(token: &str) -> Self {
        match token.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::Const(token.to_string()),
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(s) | Term::Var(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) => write!(f, "{}", s),
            Term::Var(s) => write!(f, "?{}", s),
        }
    }
}

pub type Substitution = HashMap<Term, Term>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    /// Builds an atom from tokens, e.g. `Atom::parse_tokens("on", &["a", "?b"])`.
    pub fn from_tokens(predicate: &str, args: &[&str]) -> Self {
        Atom::new(predicate, args.iter().map(|a| Term::from_token(a)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn signature(&self) -> (&str, usize) {
        (&self.predicate, self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = &Term> {
        self.args.iter().filter(|t| t.is_var())
    }

    pub fn apply(&self, sub: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| sub.get(t).cloned().unwrap_or_else(|| t.clone())).collect(),
        }
    }

    pub fn mentions(&self, term: &Term) -> bool {
        self.args.contains(term)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {}", a)?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Temporal {
    Static,
    Init,
    End,
}

impl Temporal {
    pub const ALL: [Temporal; 3] = [Temporal::Static, Temporal::Init, Temporal::End];

    pub fn as_str(self) -> &'static str {
        match self {
            Temporal::Static => "static",
            Temporal::Init => "init",
            Temporal::End => "end",
        }
    }
}

impl FromStr for Temporal {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Temporal::Static),
            "init" => Ok(Temporal::Init),
            "end" => Ok(Temporal::End),
            other => Err(ModelError::Invalid(format!("unknown temporal symbol `{}`", other))),
        }
    }
}

impl fmt::Display for Temporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A predicate wrapped in a temporal symbol, e.g. `(init (ontable b1 t1))`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyProperty {
    pub temporal: Temporal,
    pub atom: Atom,
}

impl KeyProperty {
    pub fn new(temporal: Temporal, atom: Atom) -> Self {
        KeyProperty { temporal, atom }
    }

    pub fn apply(&self, sub: &Substitution) -> KeyProperty {
        KeyProperty { temporal: self.temporal, atom: self.atom.apply(sub) }
    }
}

impl fmt::Display for KeyProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.temporal, self.atom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { positive: false, atom }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

/// A planning operator `(h, S, P, E)`. All body variables occur in the head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operator {
    pub head: Atom,
    pub static_pre: Vec<Atom>,
    pub pre: Vec<Literal>,
    pub eff: Vec<Literal>,
}

impl Operator {
    pub fn name(&self) -> &str {
        &self.head.predicate
    }

    pub fn arity(&self) -> usize {
        self.head.arity()
    }

    /// Variables of the body that do not occur in the head.
    pub fn open_variables(&self) -> Vec<Term> {
        let head: BTreeSet<&Term> = self.head.args.iter().collect();
        let mut out = BTreeSet::new();
        let body = self
            .static_pre
            .iter()
            .chain(self.pre.iter().map(|l| &l.atom))
            .chain(self.eff.iter().map(|l| &l.atom));
        for atom in body {
            for v in atom.vars() {
                if !head.contains(v) {
                    out.insert(v.clone());
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Concrete,
    Abstract,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Concrete => "concrete",
            Level::Abstract => "abstract",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningDomain {
    pub name: String,
    pub level: Level,
    pub predicates: Vec<Atom>,
    pub operators: Vec<Operator>,
}

impl PlanningDomain {
    pub fn operator(&self, name: &str, arity: usize) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name() == name && o.arity() == arity)
    }

    pub fn predicate(&self, name: &str) -> Option<&Atom> {
        self.predicates.iter().find(|p| p.predicate == name)
    }
}

/// One abstraction relation: concrete schema to an abstract schema (with an
/// argument projection) or to nil.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapEntry {
    pub source: Atom,
    pub target: Option<Atom>,
    /// Concrete argument positions kept by the abstract schema, in order.
    pub projection: Vec<usize>,
}

impl MapEntry {
    /// Builds an entry, computing the projection. Fails when the target
    /// arguments are not a positional subsequence of the source arguments.
    pub fn new(source: Atom, target: Option<Atom>) -> Result<Self, ModelError> {
        let projection = match &target {
            None => Vec::new(),
            Some(t) => projection_of(&source, t)?,
        };
        Ok(MapEntry { source, target, projection })
    }

    pub fn is_nil(&self) -> bool {
        self.target.is_none()
    }

    /// `parent(atom)` for an atom matching this entry's source signature.
    pub fn project(&self, atom: &Atom) -> Option<Atom> {
        self.target.as_ref().map(|t| Atom {
            predicate: t.predicate.clone(),
            args: self.projection.iter().map(|&i| atom.args[i].clone()).collect(),
        })
    }
}

fn projection_of(source: &Atom, target: &Atom) -> Result<Vec<usize>, ModelError> {
    if target.arity() > source.arity() {
        return Err(ModelError::Invalid(format!(
            "{} -> {}: abstract arity exceeds concrete arity",
            source, target
        )));
    }
    let mut out = Vec::with_capacity(target.arity());
    let mut from = 0;
    for arg in &target.args {
        match source.args[from..].iter().position(|a| a == arg) {
            Some(off) => {
                out.push(from + off);
                from += off + 1;
            }
            None => {
                return Err(ModelError::Invalid(format!(
                    "{} -> {}: `{}` is not a positional subsequence of the concrete arguments",
                    source, target, arg
                )))
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractionHierarchy {
    pub name: String,
    pub concrete_domain: Option<String>,
    pub abstract_domain: Option<String>,
    pub predicates: Vec<MapEntry>,
    pub operators: Vec<MapEntry>,
}

impl AbstractionHierarchy {
    /// Maps every predicate and operator of `domain` onto itself.
    pub fn identity(domain: &PlanningDomain) -> Self {
        let ident = |a: &Atom| MapEntry { source: a.clone(), target: Some(a.clone()), projection: (0..a.arity()).collect() };
        AbstractionHierarchy {
            name: format!("{}-identity", domain.name),
            concrete_domain: Some(domain.name.clone()),
            abstract_domain: Some(domain.name.clone()),
            predicates: domain.predicates.iter().map(ident).collect(),
            operators: domain.operators.iter().map(|o| ident(&o.head)).collect(),
        }
    }

    pub fn predicate_entry(&self, name: &str, arity: usize) -> Option<&MapEntry> {
        self.predicates.iter().find(|e| e.source.signature() == (name, arity))
    }

    pub fn operator_entry(&self, name: &str, arity: usize) -> Option<&MapEntry> {
        self.operators.iter().find(|e| e.source.signature() == (name, arity))
    }

    /// `parent(p)` for a predicate instance; `Ok(None)` for the nil class.
    pub fn parent_predicate(&self, atom: &Atom) -> Result<Option<Atom>, ModelError> {
        self.predicate_entry(&atom.predicate, atom.arity())
            .map(|e| e.project(atom))
            .ok_or_else(|| ModelError::MissingEntry { kind: "predicate", name: atom.predicate.clone(), arity: atom.arity() })
    }

    /// `parent(o)` for an action instance; `Ok(None)` for the nil class.
    pub fn parent_operator(&self, action: &Atom) -> Result<Option<Atom>, ModelError> {
        self.operator_entry(&action.predicate, action.arity())
            .map(|e| e.project(action))
            .ok_or_else(|| ModelError::MissingEntry { kind: "operator", name: action.predicate.clone(), arity: action.arity() })
    }

    /// Concrete operator entries whose parent is the abstract operator `name/arity`.
    pub fn refinements(&self, name: &str, arity: usize) -> impl Iterator<Item = &MapEntry> + '_ {
        let name = name.to_string();
        self.operators
            .iter()
            .filter(move |e| e.target.as_ref().map(|t| t.predicate == name && t.arity() == arity).unwrap_or(false))
    }

    pub fn nil_operators(&self) -> impl Iterator<Item = &MapEntry> {
        self.operators.iter().filter(|e| e.is_nil())
    }
}

/// A solved problem `(t, K, pi)`. Ground when `objects` is present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Experience {
    pub name: String,
    pub domain: Option<String>,
    pub task: Atom,
    pub key_properties: Vec<KeyProperty>,
    pub plan: Vec<Atom>,
    pub objects: Option<Vec<String>>,
}

impl Experience {
    fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.task)
            .chain(self.key_properties.iter().map(|k| &k.atom))
            .chain(self.plan.iter())
    }

    /// Checks the ground form: no variables, every constant declared.
    pub fn validate(&self) -> Result<(), ModelError> {
        let Some(objects) = &self.objects else { return Ok(()) };
        let declared: BTreeSet<&str> = objects.iter().map(String::as_str).collect();
        check_ground(self.atoms(), &declared)
    }

    /// All constants in order of first occurrence over task, keys and plan.
    pub fn constants(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for atom in self.atoms() {
            for t in &atom.args {
                if let Term::Const(c) = t {
                    if seen.insert(c.clone()) {
                        out.push(c.clone());
                    }
                }
            }
        }
        out
    }
}

fn check_ground<'a>(atoms: impl Iterator<Item = &'a Atom>, declared: &BTreeSet<&str>) -> Result<(), ModelError> {
    for atom in atoms {
        for t in &atom.args {
            match t {
                Term::Var(_) => return Err(ModelError::NotGround(atom.to_string())),
                Term::Const(c) if !declared.contains(c.as_str()) => {
                    return Err(ModelError::UndeclaredObject(c.clone()))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// An abstract operator head with the knowledge extracted for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnrichedAbstractOperator {
    pub head: Atom,
    /// Canonical class of each head argument in the experience's structure.
    pub types: Vec<NodeClass>,
    /// Key-properties linking the operator's arguments to the task arguments.
    pub features: Vec<KeyProperty>,
    /// `end` key-properties over the operator's own arguments.
    pub outcomes: Vec<KeyProperty>,
}

impl EnrichedAbstractOperator {
    pub fn new(head: Atom) -> Self {
        let types = vec![NodeClass::default(); head.arity()];
        EnrichedAbstractOperator { head, types, features: Vec::new(), outcomes: Vec::new() }
    }

    pub fn vars(&self) -> BTreeSet<Term> {
        self.head
            .vars()
            .chain(self.features.iter().flat_map(|k| k.atom.vars()))
            .chain(self.outcomes.iter().flat_map(|k| k.atom.vars()))
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanElement {
    Single(EnrichedAbstractOperator),
    Loop(Vec<EnrichedAbstractOperator>),
}

impl PlanElement {
    pub fn operators(&self) -> &[EnrichedAbstractOperator] {
        match self {
            PlanElement::Single(op) => std::slice::from_ref(op),
            PlanElement::Loop(body) => body,
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self, PlanElement::Loop(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivitySchema {
    pub name: String,
    pub domain: Option<String>,
    pub task: Atom,
    pub scope: LogicalStructure,
    pub plan: Vec<PlanElement>,
}

impl ActivitySchema {
    pub fn loop_count(&self) -> usize {
        self.plan.iter().filter(|e| e.is_loop()).count()
    }
}

/// A task planning problem `(t, sigma, s0, g)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskProblem {
    pub name: String,
    pub domain: Option<String>,
    pub task: Atom,
    pub objects: Vec<String>,
    pub static_facts: Vec<Atom>,
    pub init: Vec<Atom>,
    pub goal: Vec<Atom>,
}

impl TaskProblem {
    pub fn validate(&self) -> Result<(), ModelError> {
        let declared: BTreeSet<&str> = self.objects.iter().map(String::as_str).collect();
        let atoms = std::iter::once(&self.task)
            .chain(self.static_facts.iter())
            .chain(self.init.iter())
            .chain(self.goal.iter());
        check_ground(atoms, &declared)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn error(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}: {}", sev, self.subject, self.message)
    }
}

/// Cross-checks a concrete domain, its abstract domain and the hierarchy
/// linking them.
pub fn validate_domain(
    domain: &PlanningDomain,
    hierarchy: &AbstractionHierarchy,
    abstract_domain: &PlanningDomain,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let check_entries = |kind: &str,
                         entries: &[MapEntry],
                         sources: &mut dyn Iterator<Item = (&str, usize)>,
                         target_arity: &dyn Fn(&str) -> Option<usize>,
                         out: &mut Vec<Diagnostic>| {
        for (name, arity) in sources {
            let matching: Vec<&MapEntry> = entries.iter().filter(|e| e.source.predicate == name).collect();
            match matching.as_slice() {
                [] => out.push(Diagnostic::error(name, format!("{} `{}` has no abstraction entry", kind, name))),
                [e] if e.source.arity() != arity => out.push(Diagnostic::error(
                    name,
                    format!("{} `{}` has arity {} but its hierarchy entry has arity {}", kind, name, arity, e.source.arity()),
                )),
                [_] => {}
                _ => out.push(Diagnostic::error(name, format!("{} `{}` has more than one abstraction entry", kind, name))),
            }
        }
        for e in entries {
            let Some(t) = &e.target else { continue };
            if projection_of(&e.source, t).is_err() {
                out.push(Diagnostic::error(
                    &e.source.predicate,
                    format!("{} -> {} is not a projection (m <= n, subsequence of arguments)", e.source, t),
                ));
            }
            match target_arity(&t.predicate) {
                None => out.push(Diagnostic::error(
                    &t.predicate,
                    format!("abstract {} `{}` is not declared in domain `{}`", kind, t.predicate, abstract_domain.name),
                )),
                Some(a) if a != t.arity() => out.push(Diagnostic::error(
                    &t.predicate,
                    format!("abstract {} `{}` has arity {} but the hierarchy uses arity {}", kind, t.predicate, a, t.arity()),
                )),
                Some(_) => {}
            }
        }
    };

    let mut preds = domain.predicates.iter().map(|p| (p.predicate.as_str(), p.arity()));
    check_entries(
        "predicate",
        &hierarchy.predicates,
        &mut preds,
        &|n| abstract_domain.predicate(n).map(Atom::arity),
        &mut out,
    );
    let mut ops = domain.operators.iter().map(|o| (o.name(), o.arity()));
    check_entries(
        "operator",
        &hierarchy.operators,
        &mut ops,
        &|n| abstract_domain.operators.iter().find(|o| o.name() == n).map(Operator::arity),
        &mut out,
    );

    for e in hierarchy.predicates.iter().chain(hierarchy.operators.iter()) {
        let known = domain.predicate(&e.source.predicate).is_some()
            || domain.operators.iter().any(|o| o.name() == e.source.predicate);
        if !known {
            out.push(Diagnostic {
                severity: Severity::Warning,
                subject: e.source.predicate.clone(),
                message: format!("hierarchy entry `{}` does not name anything in domain `{}`", e.source, domain.name),
            });
        }
    }
    out
}

/// Orders strings with embedded digit runs compared numerically, so that
/// `block9 < block10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ai, mut bi) = (a.as_bytes(), b.as_bytes());
    loop {
        match (ai.first(), bi.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let an = ai.iter().take_while(|c| c.is_ascii_digit()).count();
                let bn = bi.iter().take_while(|c| c.is_ascii_digit()).count();
                let (da, db) = (trim_zeros(&ai[..an]), trim_zeros(&bi[..bn]));
                let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db)).then_with(|| an.cmp(&bn));
                if ord != Ordering::Equal {
                    return ord;
                }
                ai = &ai[an..];
                bi = &bi[bn..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                ai = &ai[1..];
                bi = &bi[1..];
            }
        }
    }
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let n = d.iter().take_while(|&&c| c == b'0').count();
    &d[n..]
}

/// Natural ordering over argument lists.
pub fn natural_cmp_terms(a: &[Term], b: &[Term]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = natural_cmp(x.name(), y.name());
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

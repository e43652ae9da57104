//! Reading and writing the `.ebpd` file family. Every file holds one
//! `(define (<kind> <name>) ...)` form; the kind is one of `domain`,
//! `hierarchy`, `experience`, `problem` or `activity-schema`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::logic::{LogicalStructure, NodeClass, StructureBuilder, TruthValue, Valence};
use crate::model::*;
use crate::sexpr::{read_all, Sexpr, SourceSpan};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownSection,
    UnknownTemporal,
    Arity,
    Duplicate,
    Undeclared,
    Projection,
    NotGround,
    OpenOperator,
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

fn err<T>(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { kind, span, message: message.into() })
}

type Result<T, E = ParseError> = std::result::Result<T, E>;

/// Any parsed top-level document.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Domain(PlanningDomain),
    Hierarchy(AbstractionHierarchy),
    Experience(Experience),
    Problem(TaskProblem),
    Schema(ActivitySchema),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Domain(_) => "domain",
            Document::Hierarchy(_) => "hierarchy",
            Document::Experience(_) => "experience",
            Document::Problem(_) => "problem",
            Document::Schema(_) => "activity-schema",
        }
    }

    pub fn serialize(&self) -> String {
        match self {
            Document::Domain(d) => serialize_domain(d),
            Document::Hierarchy(h) => serialize_hierarchy(h),
            Document::Experience(e) => serialize_experience(e),
            Document::Problem(p) => serialize_problem(p),
            Document::Schema(s) => serialize_schema(s),
        }
    }
}

/// Parses a file of any kind, dispatching on its top-level form.
pub fn parse_any(text: &str) -> Result<Document> {
    let form = single_form(text)?;
    let (kind, _, _) = define_header(&form, None)?;
    match kind.as_str() {
        "domain" => parse_domain(text).map(Document::Domain),
        "hierarchy" => parse_hierarchy(text).map(Document::Hierarchy),
        "experience" => parse_experience(text).map(Document::Experience),
        "problem" => parse_problem(text).map(Document::Problem),
        "activity-schema" => parse_schema(text).map(Document::Schema),
        other => err(ParseErrorKind::UnknownSection, form.span(), format!("unknown document kind `{}`", other)),
    }
}

fn single_form(text: &str) -> Result<Sexpr> {
    let forms = read_all(text).map_err(|e| ParseError { kind: ParseErrorKind::Syntax, span: e.span, message: e.message })?;
    let mut it = forms.into_iter();
    let first = match it.next() {
        Some(f) => f,
        None => {
            let end = SourceSpan { line: 1, col_start: 1, col_end: 1, start: text.len(), end: text.len() };
            return err(ParseErrorKind::Syntax, end, "empty document");
        }
    };
    if let Some(extra) = it.next() {
        return err(ParseErrorKind::Syntax, extra.span(), "more than one top-level form");
    }
    Ok(first)
}

/// Splits `(define (kind name) sections...)`.
fn define_header<'a>(form: &'a Sexpr, expect: Option<&str>) -> Result<(String, String, &'a [Sexpr])> {
    let items = match form.as_list() {
        Some(items) if form.head() == Some("define") && items.len() >= 2 => items,
        _ => return err(ParseErrorKind::Syntax, form.span(), "expected `(define (<kind> <name>) ...)`"),
    };
    let header = items[1].as_list().unwrap_or(&[]);
    match header {
        [Sexpr::Sym(kind, _), Sexpr::Sym(name, _)] => {
            if let Some(e) = expect {
                if kind != e {
                    return err(
                        ParseErrorKind::Syntax,
                        items[1].span(),
                        format!("expected a {} document, found `{}`", e, kind),
                    );
                }
            }
            Ok((kind.clone(), name.clone(), &items[2..]))
        }
        _ => err(ParseErrorKind::Syntax, items[1].span(), "expected `(<kind> <name>)`"),
    }
}

/// Splits a section `(:key items...)`.
fn section(s: &Sexpr) -> Result<(&str, &[Sexpr])> {
    match s.as_list() {
        Some([Sexpr::Sym(k, _), rest @ ..]) if k.starts_with(':') => Ok((k.as_str(), rest)),
        _ => err(ParseErrorKind::Syntax, s.span(), "expected a `(:section ...)` form"),
    }
}

fn symbol(s: &Sexpr, what: &str) -> Result<String> {
    match s.as_sym() {
        Some(v) => Ok(v.to_string()),
        None => err(ParseErrorKind::Syntax, s.span(), format!("expected {}", what)),
    }
}

fn only_symbol(s: &Sexpr, items: &[Sexpr], what: &str) -> Result<String> {
    match items {
        [x] => symbol(x, what),
        _ => err(ParseErrorKind::Syntax, s.span(), format!("expected exactly one {}", what)),
    }
}

fn term(s: &Sexpr) -> Result<Term> {
    let sym = symbol(s, "a term")?;
    if sym == "?" || sym.starts_with(':') {
        return err(ParseErrorKind::Syntax, s.span(), format!("`{}` is not a valid term", sym));
    }
    Ok(Term::from_token(&sym))
}

fn atom(s: &Sexpr) -> Result<Atom> {
    match s.as_list() {
        Some([Sexpr::Sym(p, _), args @ ..]) if !p.starts_with('?') && !p.starts_with(':') => {
            Ok(Atom::new(p.clone(), args.iter().map(term).collect::<Result<_>>()?))
        }
        _ => err(ParseErrorKind::Syntax, s.span(), "expected an atom `(predicate args...)`"),
    }
}

/// A conjunction written as `(and a b)`, `((a) (b))`, `()` or a single atom.
fn conjunction(s: &Sexpr) -> Result<Vec<&Sexpr>> {
    match s.as_list() {
        Some([]) => Ok(vec![]),
        Some([Sexpr::Sym(h, _), rest @ ..]) if h == "and" => Ok(rest.iter().collect()),
        Some([Sexpr::List(..), ..]) => Ok(s.as_list().unwrap().iter().collect()),
        Some(_) => Ok(vec![s]),
        None => err(ParseErrorKind::Syntax, s.span(), "expected a list of atoms"),
    }
}

fn literal(s: &Sexpr) -> Result<Literal> {
    match s.as_list() {
        Some([Sexpr::Sym(h, _), inner]) if h == "not" => Ok(Literal::neg(atom(inner)?)),
        _ => Ok(Literal::pos(atom(s)?)),
    }
}

fn temporal(s: &Sexpr) -> Result<Temporal> {
    let sym = symbol(s, "a temporal symbol")?;
    sym.parse::<Temporal>().or_else(|_| {
        err(
            ParseErrorKind::UnknownTemporal,
            s.span(),
            format!("unknown temporal symbol `{}` (expected static, init or end)", sym),
        )
    })
}

fn key_property(s: &Sexpr) -> Result<KeyProperty> {
    match s.as_list() {
        Some([t, a]) => Ok(KeyProperty::new(temporal(t)?, atom(a)?)),
        _ => err(ParseErrorKind::Syntax, s.span(), "expected `(<static|init|end> (predicate args...))`"),
    }
}

/// Records predicate arities and reports conflicting uses.
struct ArityTable {
    declared: BTreeMap<String, usize>,
    strict: bool,
}

impl ArityTable {
    fn check(&mut self, a: &Atom, span: SourceSpan) -> Result<()> {
        match self.declared.get(&a.predicate) {
            Some(&n) if n != a.arity() => err(
                ParseErrorKind::Arity,
                span,
                format!("`{}` used with arity {} but has arity {}", a.predicate, a.arity(), n),
            ),
            Some(_) => Ok(()),
            None if self.strict => {
                err(ParseErrorKind::Undeclared, span, format!("predicate `{}` is not declared", a.predicate))
            }
            None => {
                self.declared.insert(a.predicate.clone(), a.arity());
                Ok(())
            }
        }
    }
}

pub fn parse_domain(text: &str) -> Result<PlanningDomain> {
    let form = single_form(text)?;
    let (_, name, sections) = define_header(&form, Some("domain"))?;
    let mut dom = PlanningDomain { name, level: Level::Concrete, predicates: vec![], operators: vec![] };
    let mut table = ArityTable { declared: BTreeMap::new(), strict: true };
    let mut actions = Vec::new();
    for s in sections {
        let (key, items) = section(s)?;
        match key {
            ":level" => {
                dom.level = match only_symbol(s, items, "a level")?.as_str() {
                    "concrete" => Level::Concrete,
                    "abstract" => Level::Abstract,
                    other => return err(ParseErrorKind::Syntax, s.span(), format!("unknown level `{}`", other)),
                }
            }
            ":predicates" => {
                for p in items {
                    let a = atom(p)?;
                    if table.declared.contains_key(&a.predicate) {
                        return err(ParseErrorKind::Duplicate, p.span(), format!("predicate `{}` declared twice", a.predicate));
                    }
                    table.declared.insert(a.predicate.clone(), a.arity());
                    dom.predicates.push(a);
                }
            }
            ":action" => actions.push(s),
            other => return err(ParseErrorKind::UnknownSection, s.span(), format!("unknown domain section `{}`", other)),
        }
    }
    for s in actions {
        let op = operator(s, &mut table)?;
        if dom.operator(op.name(), op.arity()).is_some() {
            return err(ParseErrorKind::Duplicate, s.span(), format!("operator `{}/{}` defined twice", op.name(), op.arity()));
        }
        dom.operators.push(op);
    }
    Ok(dom)
}

fn operator(s: &Sexpr, table: &mut ArityTable) -> Result<Operator> {
    let items = s.as_list().unwrap();
    let name = match items.get(1) {
        Some(x) => symbol(x, "an operator name")?,
        None => return err(ParseErrorKind::Syntax, s.span(), "operator without a name"),
    };
    let mut params = None;
    let mut static_pre = Vec::new();
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    let mut rest = &items[2..];
    while !rest.is_empty() {
        let [k, v, tail @ ..] = rest else {
            return err(ParseErrorKind::Syntax, rest[0].span(), "operator keyword without a value");
        };
        let key = symbol(k, "an operator keyword")?;
        match key.as_str() {
            ":parameters" => {
                let list = match v.as_list() {
                    Some(l) => l,
                    None => return err(ParseErrorKind::Syntax, v.span(), "expected a parameter list"),
                };
                let mut ts = Vec::new();
                for p in list {
                    let t = term(p)?;
                    if !t.is_var() {
                        return err(ParseErrorKind::Syntax, p.span(), "operator parameters must be variables");
                    }
                    ts.push(t);
                }
                params = Some(ts);
            }
            ":static" => {
                for x in conjunction(v)? {
                    if x.head() == Some("not") {
                        return err(ParseErrorKind::Syntax, x.span(), "negation is not allowed in a static precondition");
                    }
                    let a = atom(x)?;
                    table.check(&a, x.span())?;
                    static_pre.push(a);
                }
            }
            ":precondition" | ":effect" => {
                for x in conjunction(v)? {
                    let l = literal(x)?;
                    table.check(&l.atom, x.span())?;
                    if key == ":precondition" {
                        pre.push(l);
                    } else {
                        eff.push(l);
                    }
                }
            }
            other => return err(ParseErrorKind::UnknownSection, k.span(), format!("unknown operator keyword `{}`", other)),
        }
        rest = tail;
    }
    let head = Atom::new(name, params.unwrap_or_default());
    let op = Operator { head, static_pre, pre, eff };
    let open = op.open_variables();
    if !open.is_empty() {
        let names: Vec<String> = open.iter().map(|t| t.to_string()).collect();
        return err(
            ParseErrorKind::OpenOperator,
            s.span(),
            format!("operator `{}` uses variables not among its parameters: {}", op.name(), names.join(" ")),
        );
    }
    Ok(op)
}

pub fn parse_hierarchy(text: &str) -> Result<AbstractionHierarchy> {
    let form = single_form(text)?;
    let (_, name, sections) = define_header(&form, Some("hierarchy"))?;
    let mut h = AbstractionHierarchy { name, concrete_domain: None, abstract_domain: None, predicates: vec![], operators: vec![] };
    for s in sections {
        let (key, items) = section(s)?;
        match key {
            ":concrete" => h.concrete_domain = Some(only_symbol(s, items, "a domain name")?),
            ":abstract" => h.abstract_domain = Some(only_symbol(s, items, "a domain name")?),
            ":predicates" | ":operators" => {
                for m in items {
                    let entry = map_entry(m)?;
                    let list = if key == ":predicates" { &mut h.predicates } else { &mut h.operators };
                    if list.iter().any(|e| e.source.predicate == entry.source.predicate) {
                        return err(
                            ParseErrorKind::Duplicate,
                            m.span(),
                            format!("`{}` has more than one abstraction entry", entry.source.predicate),
                        );
                    }
                    list.push(entry);
                }
            }
            other => return err(ParseErrorKind::UnknownSection, s.span(), format!("unknown hierarchy section `{}`", other)),
        }
    }
    Ok(h)
}

fn map_entry(s: &Sexpr) -> Result<MapEntry> {
    match s.as_list() {
        Some([Sexpr::Sym(m, _), src, Sexpr::Sym(arrow, _), tgt]) if m == ":map" && arrow == "->" => {
            let source = atom(src)?;
            if let Some(v) = source.args.iter().find(|t| !t.is_var()) {
                return err(ParseErrorKind::Syntax, src.span(), format!("mapping source argument `{}` must be a variable", v));
            }
            let target = match tgt.as_sym() {
                Some("nil") => None,
                Some(_) => return err(ParseErrorKind::Syntax, tgt.span(), "expected an atom or `nil`"),
                None => Some(atom(tgt)?),
            };
            MapEntry::new(source, target)
                .or_else(|e| err(ParseErrorKind::Projection, s.span(), e.to_string()))
        }
        _ => err(ParseErrorKind::Syntax, s.span(), "expected `(:map (source ...) -> (target ...))` or `-> nil`"),
    }
}

fn objects(items: &[Sexpr]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for x in items {
        let t = term(x)?;
        if t.is_var() {
            return err(ParseErrorKind::Syntax, x.span(), "objects must be constants");
        }
        if !seen.insert(t.name().to_string()) {
            return err(ParseErrorKind::Duplicate, x.span(), format!("object `{}` declared twice", t));
        }
        out.push(t.name().to_string());
    }
    Ok(out)
}

fn single_atom(s: &Sexpr, items: &[Sexpr]) -> Result<Atom> {
    match items {
        [x] => atom(x),
        _ => err(ParseErrorKind::Syntax, s.span(), "expected exactly one atom"),
    }
}

fn atom_items(items: &[Sexpr]) -> Result<Vec<(Atom, SourceSpan)>> {
    let flat: Vec<&Sexpr> = match items {
        [x] if x.head() == Some("and") => conjunction(x)?,
        _ => items.iter().collect(),
    };
    flat.into_iter().map(|x| Ok((atom(x)?, x.span()))).collect()
}

/// Checks that every constant is declared and nothing is a variable.
fn check_ground(atoms: &[(Atom, SourceSpan)], declared: &BTreeSet<&str>) -> Result<()> {
    for (a, span) in atoms {
        for t in &a.args {
            match t {
                Term::Var(_) => return err(ParseErrorKind::NotGround, *span, format!("`{}` is not ground", a)),
                Term::Const(c) if !declared.contains(c.as_str()) => {
                    return err(ParseErrorKind::Undeclared, *span, format!("object `{}` is not declared", c))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn check_arities(atoms: &[(Atom, SourceSpan)]) -> Result<()> {
    let mut table = ArityTable { declared: BTreeMap::new(), strict: false };
    for (a, span) in atoms {
        table.check(a, *span)?;
    }
    Ok(())
}

pub fn parse_experience(text: &str) -> Result<Experience> {
    let form = single_form(text)?;
    let (_, name, sections) = define_header(&form, Some("experience"))?;
    let mut domain = None;
    let mut objs = None;
    let mut task = None;
    let mut keys = Vec::new();
    let mut plan = Vec::new();
    let mut spanned: Vec<(Atom, SourceSpan)> = Vec::new();
    let mut plan_spanned: Vec<(Atom, SourceSpan)> = Vec::new();
    for s in sections {
        let (key, items) = section(s)?;
        match key {
            ":domain" => domain = Some(only_symbol(s, items, "a domain name")?),
            ":objects" => objs = Some(objects(items)?),
            ":task" => {
                task = Some((single_atom(s, items)?, s.span()));
            }
            ":key-properties" => {
                for k in items {
                    let kp = key_property(k)?;
                    spanned.push((kp.atom.clone(), k.span()));
                    keys.push(kp);
                }
            }
            ":plan" => {
                for a in items {
                    let act = atom(a)?;
                    plan_spanned.push((act.clone(), a.span()));
                    plan.push(act);
                }
            }
            other => {
                return err(ParseErrorKind::UnknownSection, s.span(), format!("unknown experience section `{}`", other))
            }
        }
    }
    let Some((task, task_span)) = task else {
        return err(ParseErrorKind::Malformed, form.span(), "experience has no :task");
    };
    if let Some(o) = &objs {
        let declared: BTreeSet<&str> = o.iter().map(String::as_str).collect();
        check_ground(&[(task.clone(), task_span)], &declared)?;
        check_ground(&spanned, &declared)?;
        check_ground(&plan_spanned, &declared)?;
    }
    // Plan actions and predicates live in different namespaces.
    check_arities(&spanned)?;
    check_arities(&plan_spanned)?;
    Ok(Experience { name, domain, task, key_properties: keys, plan, objects: objs })
}

pub fn parse_problem(text: &str) -> Result<TaskProblem> {
    let form = single_form(text)?;
    let (_, name, sections) = define_header(&form, Some("problem"))?;
    let mut p = TaskProblem {
        name,
        domain: None,
        task: Atom::new("", vec![]),
        objects: vec![],
        static_facts: vec![],
        init: vec![],
        goal: vec![],
    };
    let mut has_task = false;
    let mut spanned = Vec::new();
    for s in sections {
        let (key, items) = section(s)?;
        match key {
            ":domain" => p.domain = Some(only_symbol(s, items, "a domain name")?),
            ":objects" => p.objects = objects(items)?,
            ":task" => {
                p.task = single_atom(s, items)?;
                has_task = true;
            }
            ":static" | ":init" | ":goal" => {
                let atoms = atom_items(items)?;
                let target = match key {
                    ":static" => &mut p.static_facts,
                    ":init" => &mut p.init,
                    _ => &mut p.goal,
                };
                target.extend(atoms.iter().map(|(a, _)| a.clone()));
                spanned.extend(atoms);
            }
            other => return err(ParseErrorKind::UnknownSection, s.span(), format!("unknown problem section `{}`", other)),
        }
    }
    if !has_task {
        return err(ParseErrorKind::Malformed, form.span(), "problem has no :task");
    }
    let declared: BTreeSet<&str> = p.objects.iter().map(String::as_str).collect();
    check_ground(&[(p.task.clone(), form.span())], &declared)?;
    check_ground(&spanned, &declared)?;
    check_arities(&spanned)?;
    Ok(p)
}

pub fn parse_schema(text: &str) -> Result<ActivitySchema> {
    let form = single_form(text)?;
    let (_, name, sections) = define_header(&form, Some("activity-schema"))?;
    let mut domain = None;
    let mut task = None;
    let mut scope_items: &[Sexpr] = &[];
    let mut plan = Vec::new();
    for s in sections {
        let (key, items) = section(s)?;
        match key {
            ":domain" => domain = Some(only_symbol(s, items, "a domain name")?),
            ":task" => task = Some(single_atom(s, items)?),
            ":scope" => scope_items = items,
            ":plan" => {
                for e in items {
                    plan.push(plan_element(e)?);
                }
            }
            other => return err(ParseErrorKind::UnknownSection, s.span(), format!("unknown schema section `{}`", other)),
        }
    }
    let Some(task) = task else { return err(ParseErrorKind::Malformed, form.span(), "schema has no :task") };
    let scope = scope(scope_items, &task)?;
    Ok(ActivitySchema { name, domain, task, scope, plan })
}

fn scope(items: &[Sexpr], task: &Atom) -> Result<LogicalStructure> {
    let mut b = StructureBuilder::new(Valence::Three);
    let mut facts: BTreeSet<(Temporal, String, Vec<String>)> = BTreeSet::new();
    for it in items {
        let list = it.as_list().unwrap_or(&[]);
        match (it.head(), list) {
            (Some("summary"), [_, n]) => {
                b.node(&symbol(n, "a node name")?, true, None);
            }
            (Some("node"), [_, n]) => {
                b.node(&symbol(n, "a node name")?, false, None);
            }
            (Some("maybe"), [_, inner]) => {
                let kp = scope_fact(inner)?;
                if !facts.insert(kp.clone()) {
                    return err(ParseErrorKind::Duplicate, it.span(), "scope entry listed twice");
                }
                let args: Vec<&str> = kp.2.iter().map(String::as_str).collect();
                b.fact(kp.0, &kp.1, &args, TruthValue::Half);
            }
            (Some("summary" | "node" | "maybe"), _) => {
                return err(ParseErrorKind::Malformed, it.span(), "malformed scope wrapper")
            }
            _ => {
                let kp = scope_fact(it)?;
                if !facts.insert(kp.clone()) {
                    return err(ParseErrorKind::Duplicate, it.span(), "scope entry listed twice");
                }
                let args: Vec<&str> = kp.2.iter().map(String::as_str).collect();
                b.fact(kp.0, &kp.1, &args, TruthValue::One);
            }
        }
    }
    for (i, t) in task.args.iter().enumerate() {
        b.node(&t.to_string(), false, Some(i));
    }
    let s = b.build();
    if let Some(n) = s.nodes().iter().find(|n| n.summary && n.task_arg.is_some()) {
        return err(
            ParseErrorKind::Malformed,
            SourceSpan::default(),
            format!("task argument {} cannot be a summary node", n.name),
        );
    }
    Ok(s)
}

fn scope_fact(s: &Sexpr) -> Result<(Temporal, String, Vec<String>)> {
    match s.as_list() {
        Some([t, a]) => {
            let t = temporal(t)?;
            match a.as_list() {
                Some([Sexpr::Sym(p, _), args @ ..]) => {
                    let args = args.iter().map(|x| symbol(x, "a node name")).collect::<Result<_>>()?;
                    Ok((t, p.clone(), args))
                }
                _ => err(ParseErrorKind::Syntax, a.span(), "expected `(predicate nodes...)`"),
            }
        }
        _ => err(ParseErrorKind::Malformed, s.span(), "expected a scope entry"),
    }
}

fn plan_element(s: &Sexpr) -> Result<PlanElement> {
    match s.head() {
        Some(":action") => Ok(PlanElement::Single(enriched_operator(s)?)),
        Some(":loop") => {
            let body = s.as_list().unwrap()[1..].iter().map(enriched_operator).collect::<Result<Vec<_>>>()?;
            if body.is_empty() {
                return err(ParseErrorKind::Malformed, s.span(), "empty loop body");
            }
            Ok(PlanElement::Loop(body))
        }
        _ => err(ParseErrorKind::Syntax, s.span(), "expected `(:action ...)` or `(:loop ...)`"),
    }
}

fn enriched_operator(s: &Sexpr) -> Result<EnrichedAbstractOperator> {
    let items = match s.as_list() {
        Some([Sexpr::Sym(k, _), rest @ ..]) if k == ":action" => rest,
        _ => return err(ParseErrorKind::Syntax, s.span(), "expected `(:action (head ...) ...)`"),
    };
    let Some((h, mut rest)) = items.split_first() else {
        return err(ParseErrorKind::Syntax, s.span(), "action without a head");
    };
    let mut op = EnrichedAbstractOperator::new(atom(h)?);
    while !rest.is_empty() {
        let [k, v, tail @ ..] = rest else {
            return err(ParseErrorKind::Syntax, rest[0].span(), "keyword without a value");
        };
        let list = match v.as_list() {
            Some(l) => l,
            None => return err(ParseErrorKind::Syntax, v.span(), "expected a list"),
        };
        match k.as_sym() {
            Some(":types") => {
                if list.len() != op.head.arity() {
                    return err(ParseErrorKind::Arity, v.span(), "one type per operator argument expected");
                }
                op.types = list.iter().map(node_class).collect::<Result<_>>()?;
            }
            Some(":features") => op.features = list.iter().map(key_property).collect::<Result<_>>()?,
            Some(":outcomes") => op.outcomes = list.iter().map(key_property).collect::<Result<_>>()?,
            _ => return err(ParseErrorKind::UnknownSection, k.span(), "unknown action keyword"),
        }
        rest = tail;
    }
    Ok(op)
}

fn node_class(s: &Sexpr) -> Result<NodeClass> {
    let mut c = NodeClass::default();
    for x in s.as_list().unwrap_or(&[]) {
        match x.as_list() {
            Some([Sexpr::Sym(k, _), Sexpr::Sym(i, _)]) if k == "task" => match i.parse() {
                Ok(n) => c.task_arg = Some(n),
                Err(_) => return err(ParseErrorKind::Syntax, x.span(), "task position must be a number"),
            },
            Some([t, p]) => {
                c.canon.insert((temporal(t)?, symbol(p, "a unary predicate")?));
            }
            _ => return err(ParseErrorKind::Syntax, x.span(), "expected `(<temporal> predicate)` or `(task N)`"),
        }
    }
    if s.as_list().is_none() {
        return err(ParseErrorKind::Syntax, s.span(), "expected a type list");
    }
    Ok(c)
}

/// A plan file: one ground action per form, `;` comments allowed.
pub fn parse_plan(text: &str) -> Result<Vec<Atom>> {
    let forms = read_all(text).map_err(|e| ParseError { kind: ParseErrorKind::Syntax, span: e.span, message: e.message })?;
    forms
        .iter()
        .map(|f| {
            let a = atom(f)?;
            if !a.is_ground() {
                return err(ParseErrorKind::NotGround, f.span(), format!("plan action {} is not ground", a));
            }
            Ok(a)
        })
        .collect()
}

// ---------------------------------------------------------------- writing

fn atoms_line(atoms: impl IntoIterator<Item = impl fmt::Display>) -> String {
    atoms.into_iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

fn conj(lits: &[impl fmt::Display]) -> String {
    format!("(and {})", atoms_line(lits)).replace("(and )", "(and)")
}

pub fn serialize_plan(plan: &[Atom]) -> String {
    plan.iter().map(|a| format!("{}\n", a)).collect()
}

pub fn serialize_domain(d: &PlanningDomain) -> String {
    let mut s = format!("(define (domain {})\n  (:level {})\n  (:predicates", d.name, d.level.as_str());
    for p in &d.predicates {
        write!(s, "\n    {}", p).unwrap();
    }
    s.push(')');
    for o in &d.operators {
        write!(
            s,
            "\n  (:action {}\n    :parameters ({})\n    :static {}\n    :precondition {}\n    :effect {})",
            o.name(),
            atoms_line(&o.head.args),
            conj(&o.static_pre),
            conj(&o.pre),
            conj(&o.eff)
        )
        .unwrap();
    }
    s.push_str(")\n");
    s
}

pub fn serialize_hierarchy(h: &AbstractionHierarchy) -> String {
    let mut s = format!("(define (hierarchy {})", h.name);
    if let Some(c) = &h.concrete_domain {
        write!(s, "\n  (:concrete {})", c).unwrap();
    }
    if let Some(a) = &h.abstract_domain {
        write!(s, "\n  (:abstract {})", a).unwrap();
    }
    for (key, list) in [(":predicates", &h.predicates), (":operators", &h.operators)] {
        write!(s, "\n  ({}", key).unwrap();
        for e in list {
            let tgt = e.target.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "nil".into());
            write!(s, "\n    (:map {} -> {})", e.source, tgt).unwrap();
        }
        s.push(')');
    }
    s.push_str(")\n");
    s
}

pub fn serialize_experience(e: &Experience) -> String {
    let mut s = format!("(define (experience {})", e.name);
    if let Some(d) = &e.domain {
        write!(s, "\n  (:domain {})", d).unwrap();
    }
    if let Some(o) = &e.objects {
        write!(s, "\n  (:objects {})", o.join(" ")).unwrap();
    }
    write!(s, "\n  (:task {})\n  (:key-properties", e.task).unwrap();
    for k in &e.key_properties {
        write!(s, "\n    {}", k).unwrap();
    }
    s.push_str(")\n  (:plan");
    for a in &e.plan {
        write!(s, "\n    {}", a).unwrap();
    }
    s.push_str("))\n");
    s
}

pub fn serialize_problem(p: &TaskProblem) -> String {
    let mut s = format!("(define (problem {})", p.name);
    if let Some(d) = &p.domain {
        write!(s, "\n  (:domain {})", d).unwrap();
    }
    write!(s, "\n  (:objects {})\n  (:task {})", p.objects.join(" "), p.task).unwrap();
    for (key, list) in [(":static", &p.static_facts), (":init", &p.init), (":goal", &p.goal)] {
        write!(s, "\n  ({}", key).unwrap();
        for a in list {
            write!(s, "\n    {}", a).unwrap();
        }
        s.push(')');
    }
    s.push_str(")\n");
    s
}

fn write_class(c: &NodeClass) -> String {
    let mut parts: Vec<String> = c.canon.iter().map(|(t, p)| format!("({} {})", t, p)).collect();
    if let Some(i) = c.task_arg {
        parts.push(format!("(task {})", i));
    }
    format!("({})", parts.join(" "))
}

fn write_enriched(s: &mut String, op: &EnrichedAbstractOperator, indent: &str) {
    write!(s, "\n{}(:action {}", indent, op.head).unwrap();
    write!(s, "\n{}   :types ({})", indent, atoms_line(op.types.iter().map(write_class))).unwrap();
    write!(s, "\n{}   :features ({})", indent, atoms_line(&op.features)).unwrap();
    write!(s, "\n{}   :outcomes ({}))", indent, atoms_line(&op.outcomes)).unwrap();
}

/// Writes the scope entries: summary declarations, isolated nodes, then
/// facts (indefinite ones wrapped in `maybe`).
pub fn scope_lines(scope: &LogicalStructure) -> Vec<String> {
    let mut out = Vec::new();
    let mut used = vec![false; scope.len()];
    for (f, _) in scope.entries() {
        for &a in &f.args {
            used[a] = true;
        }
    }
    for (i, n) in scope.nodes().iter().enumerate() {
        if n.summary {
            out.push(format!("(summary {})", n.name));
        } else if !used[i] && n.task_arg.is_none() {
            out.push(format!("(node {})", n.name));
        }
    }
    for (f, v) in scope.entries() {
        let mut atom = format!("({}", f.predicate);
        for &a in &f.args {
            atom.push(' ');
            atom.push_str(&scope.node(a).name);
        }
        atom.push(')');
        let kp = format!("({} {})", f.temporal, atom);
        out.push(if v == TruthValue::Half { format!("(maybe {})", kp) } else { kp });
    }
    out
}

pub fn serialize_schema(m: &ActivitySchema) -> String {
    let mut s = format!("(define (activity-schema {})", m.name);
    if let Some(d) = &m.domain {
        write!(s, "\n  (:domain {})", d).unwrap();
    }
    write!(s, "\n  (:task {})\n  (:scope", m.task).unwrap();
    for line in scope_lines(&m.scope) {
        write!(s, "\n    {}", line).unwrap();
    }
    s.push_str(")\n  (:plan");
    for e in &m.plan {
        match e {
            PlanElement::Single(op) => write_enriched(&mut s, op, "    "),
            PlanElement::Loop(body) => {
                s.push_str("\n    (:loop");
                for op in body {
                    write_enriched(&mut s, op, "      ");
                }
                s.push(')');
            }
        }
    }
    s.push_str("))\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING_STYLE: &str = r#"
(define (domain d)
  (:predicates (at ?h ?p) (empty ?h) (ontable ?x ?t) (holding ?h ?x) (belong ?h ?l) (attached ?t ?l) (table ?t) (block ?x))
  (:action pickup
    :static (and (belong ?h ?l) (attached ?t ?l) (table ?t) (block ?x))
    :parameters (?h ?x ?t ?l)
    :precondition (and (at ?h ?t) (empty ?h) (ontable ?x ?t))
    :effect (and (not (empty ?h)) (not (ontable ?x ?t)) (holding ?h ?x))))
"#;

    #[test]
    fn operator_sections() {
        let d = parse_domain(LISTING_STYLE).unwrap();
        let o = &d.operators[0];
        assert_eq!(o.head.to_string(), "(pickup ?h ?x ?t ?l)");
        assert_eq!(o.static_pre.len(), 4);
        assert_eq!(o.pre.len(), 3);
        assert_eq!(o.eff.len(), 3);
        assert!(!o.eff[0].positive);
        assert_eq!(parse_domain(&serialize_domain(&d)).unwrap(), d);
    }

    #[test]
    fn empty_domain() {
        let d = parse_domain("(define (domain d))").unwrap();
        assert!(d.operators.is_empty());
    }

    #[test]
    fn undeclared_predicate() {
        let e = parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (q ?x)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared);
    }

    #[test]
    fn open_operator_rejected() {
        let e = parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :parameters () :precondition (p ?x)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::OpenOperator);
    }

    #[test]
    fn duplicate_operator() {
        let e = parse_domain("(define (domain d) (:action a :parameters (?x)) (:action a :parameters (?y)))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Duplicate);
    }

    #[test]
    fn unknown_section() {
        let e = parse_domain("(define (domain d) (:requirements :strips))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSection);
    }

    #[test]
    fn hierarchy_entries() {
        let h = parse_hierarchy(
            "(define (hierarchy h) (:predicates (:map (holding ?hoist ?block) -> (holding ?block))) \
             (:operators (:map (move ?hoist ?from ?to ?loc) -> nil)))",
        )
        .unwrap();
        assert_eq!(h.predicates[0].projection, vec![1]);
        assert!(h.operators[0].is_nil());
        let e = parse_hierarchy("(define (hierarchy h) (:predicates (:map (on ?a ?b) -> (on ?b ?a ?c))))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Projection);
        let e = parse_hierarchy("(define (hierarchy h) (:predicates (:map (on ?a ?b) -> nil) (:map (on ?a ?b) -> nil)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Duplicate);
    }

    #[test]
    fn experience_temporal_symbols() {
        let e = parse_experience(
            "(define (experience e) (:objects a b) (:task (t a)) (:key-properties (during (on a b))) (:plan))",
        )
        .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownTemporal);
        let ok = parse_experience("(define (experience e) (:objects a) (:task (t a)) (:key-properties) (:plan))").unwrap();
        assert!(ok.plan.is_empty());
    }

    #[test]
    fn ground_experience_rejects_undeclared() {
        let e = parse_experience(
            "(define (experience e) (:objects a) (:task (t a)) (:key-properties (init (on a b))) (:plan))",
        )
        .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared);
    }

    #[test]
    fn problem_goal_forms() {
        let p = parse_problem(
            "(define (problem p) (:objects a b) (:task (t a)) (:static) (:init (on a b)) (:goal (and (on b a))))",
        )
        .unwrap();
        assert_eq!(p.goal.len(), 1);
        let p2 = parse_problem(&serialize_problem(&p)).unwrap();
        assert_eq!(p, p2);
        let e = parse_problem("(define (problem p) (:objects a) (:task (t a)) (:goal (on a z)))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared);
        let empty = parse_problem("(define (problem p) (:objects a) (:task (t a)) (:goal))").unwrap();
        assert!(empty.goal.is_empty());
    }

    #[test]
    fn schema_maybe_and_summary() {
        let text = "(define (activity-schema s) (:task (stack ?t ?p)) \
            (:scope (summary ?c.block.red) (static (table ?t)) (maybe (end (on ?c.block.red ?c.block.red)))) \
            (:plan (:loop (:action (pick ?b ?t) :types (() ((static table) (task 0))) :features ((init (ontable ?b ?t))) :outcomes ()))))";
        let s = parse_schema(text).unwrap();
        assert_eq!(s.scope.summary_count(), 1);
        assert_eq!(s.scope.nodes().iter().filter(|n| n.task_arg.is_some()).count(), 2);
        let out = serialize_schema(&s);
        assert!(out.contains("(maybe (end (on ?c.block.red ?c.block.red)))"));
        assert!(out.contains("(:loop"));
        assert_eq!(parse_schema(&out).unwrap(), s);
        let bad = parse_schema("(define (activity-schema s) (:task (t)) (:scope (maybe)))").unwrap_err();
        assert_eq!(bad.kind, ParseErrorKind::Malformed);
    }

    #[test]
    fn spans_within_input() {
        for text in ["(define (domain d) (:x))", "(define", "(define (domain d)) (extra)", "", "(define (problem p) (:goal (a ?x)))"] {
            let e = parse_any(text).unwrap_err();
            assert!(e.span.end <= text.len(), "{:?} for {:?}", e, text);
        }
    }

    #[test]
    fn plan_files() {
        let plan = parse_plan("; two steps\n(pick b1 t1)\n(put b1 p1) ; done\n").unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(parse_plan(&serialize_plan(&plan)).unwrap(), plan);
        assert!(parse_plan("").unwrap().is_empty());
        assert_eq!(parse_plan("(pick ?b t1)").unwrap_err().kind, ParseErrorKind::NotGround);
    }
}

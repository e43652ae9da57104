//! Loop detection over abstract plans with a suffix array and
//! non-overlapping longest common prefixes, and rolling of the detected
//! repeats into loop blocks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::logic::NodeClass;
use crate::model::{Atom, EnrichedAbstractOperator, KeyProperty, PlanElement, Temporal, Term};

/// Suffix start positions in lexicographic order of the suffixes.
pub fn suffix_array<T: Ord>(s: &[T]) -> Vec<usize> {
    let mut sa: Vec<usize> = (0..s.len()).collect();
    sa.sort_by(|&a, &b| s[a..].cmp(&s[b..]));
    sa
}

/// Longest common prefix of `a` and `b`, capped so that the two copies
/// cannot overlap when both are suffixes of one string.
pub fn nlcp_pair<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let cap = a.len().min(b.len()).min(a.len().abs_diff(b.len()));
    a.iter().zip(b.iter()).take(cap).take_while(|(x, y)| x == y).count()
}

/// `NLCP[0] = 0`, `NLCP[i] = nlcp(s[sa[i-1]..], s[sa[i]..])`.
pub fn nlcp_array<T: PartialEq>(s: &[T], sa: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sa.len()];
    for i in 1..sa.len() {
        out[i] = nlcp_pair(&s[sa[i - 1]..], &s[sa[i]..]);
    }
    out
}

/// Pattern table built exactly as the textbook algorithm does: an index
/// `i` is admitted when `NLCP[i] = |SA[i] - SA[i-1]|`, and `SA[i-1]` is
/// recorded under the pattern starting at `SA[i]`.
pub fn cnlcp_raw<T: Ord + Clone>(s: &[T]) -> BTreeMap<Vec<T>, BTreeSet<usize>> {
    let sa = suffix_array(s);
    let nlcp = nlcp_array(s, &sa);
    let mut out: BTreeMap<Vec<T>, BTreeSet<usize>> = BTreeMap::new();
    for i in 1..sa.len() {
        let len = nlcp[i];
        if len > 0 && sa[i].abs_diff(sa[i - 1]) == len {
            out.entry(s[sa[i]..sa[i] + len].to_vec()).or_default().insert(sa[i - 1]);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnlcpEntry<T> {
    pub pattern: Vec<T>,
    /// Start of every occurrence in the run, ascending, spaced by the
    /// pattern length.
    pub starts: Vec<usize>,
}

impl<T> CnlcpEntry<T> {
    pub fn iterations(&self) -> usize {
        self.starts.len()
    }

    pub fn span(&self) -> (usize, usize) {
        let len = self.pattern.len();
        (self.starts[0], self.starts[self.starts.len() - 1] + len)
    }
}

/// Runs of consecutive occurrences. Each admitted suffix pair contributes
/// both of its start positions; the positions of one pattern are split into
/// runs spaced exactly by the pattern length. A run lying inside a run of
/// another pattern of the same length is a rotation of it and is dropped.
/// Entries are ordered by their first start.
pub fn cnlcp<T: Ord + Clone>(s: &[T]) -> Vec<CnlcpEntry<T>> {
    let sa = suffix_array(s);
    let nlcp = nlcp_array(s, &sa);
    let mut positions: BTreeMap<Vec<T>, BTreeSet<usize>> = BTreeMap::new();
    for i in 1..sa.len() {
        let len = nlcp[i];
        if len > 0 && sa[i].abs_diff(sa[i - 1]) == len {
            let e = positions.entry(s[sa[i]..sa[i] + len].to_vec()).or_default();
            e.insert(sa[i - 1]);
            e.insert(sa[i]);
        }
    }
    let mut runs = Vec::new();
    for (pattern, starts) in positions {
        let len = pattern.len();
        let mut current: Vec<usize> = Vec::new();
        for p in starts {
            if let Some(&last) = current.last() {
                if p != last + len {
                    runs.push(CnlcpEntry { pattern: pattern.clone(), starts: std::mem::take(&mut current) });
                }
            }
            current.push(p);
        }
        if !current.is_empty() {
            runs.push(CnlcpEntry { pattern, starts: current });
        }
    }
    let keep: Vec<bool> = runs
        .iter()
        .map(|r| {
            let (a, b) = r.span();
            !runs.iter().any(|o| {
                let (c, d) = o.span();
                o.pattern.len() == r.pattern.len() && o.pattern != r.pattern && c <= a && b <= d && (c, d) != (a, b)
            })
        })
        .collect();
    let mut out: Vec<CnlcpEntry<T>> =
        runs.into_iter().zip(keep).filter(|(r, k)| *k && r.starts.len() >= 2).map(|(r, _)| r).collect();
    out.sort_by_key(|e| e.starts[0]);
    out
}

/// A span of the input after rolling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Span {
    Single(usize),
    Loop { start: usize, body_len: usize, iterations: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key<'a, T> {
    Token(&'a T),
    Block(usize),
}

/// Rolls repeated runs into loop spans: the longest pattern goes first
/// (leftmost on ties), the rolled block becomes an opaque token and the
/// detection is repeated until nothing repeats.
pub fn roll_spans<T: Ord + Clone>(tokens: &[T]) -> Vec<Span> {
    let mut work: Vec<Span> = (0..tokens.len()).map(Span::Single).collect();
    let mut blocks = 0usize;
    let mut block_ids: HashMap<usize, usize> = HashMap::new();
    loop {
        let keys: Vec<Key<T>> = work
            .iter()
            .map(|s| match s {
                Span::Single(i) => Key::Token(&tokens[*i]),
                Span::Loop { start, .. } => Key::Block(block_ids[start]),
            })
            .collect();
        let entries = cnlcp(&keys);
        let best = entries
            .iter()
            .filter(|e| e.pattern.iter().all(|k| matches!(k, Key::Token(_))))
            .max_by(|a, b| a.pattern.len().cmp(&b.pattern.len()).then(b.starts[0].cmp(&a.starts[0])));
        let Some(best) = best else { break };
        let len = best.pattern.len();
        let first = best.starts[0];
        let iterations = best.starts.len();
        let start = match work[first] {
            Span::Single(i) => i,
            Span::Loop { .. } => unreachable!("loop blocks never repeat"),
        };
        let block = Span::Loop { start, body_len: len, iterations };
        block_ids.insert(start, blocks);
        blocks += 1;
        work.splice(first..first + len * iterations, std::iter::once(block));
    }
    work
}

/// Expands rolled spans back into the token indices they cover.
pub fn unroll(spans: &[Span]) -> Vec<usize> {
    let mut out = Vec::new();
    for s in spans {
        match *s {
            Span::Single(i) => out.push(i),
            Span::Loop { start, body_len, iterations } => out.extend(start..start + body_len * iterations),
        }
    }
    out
}

/// How an argument of a key-property relates to the operator carrying it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Role {
    Operator(usize),
    Task(usize),
    Other,
}

/// Identity of an enriched operator for repeat detection: name, argument
/// classes, and the shape of its features and outcomes with variables
/// replaced by their role. Two operators differing only in which objects
/// they touch share a token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorToken {
    name: String,
    types: Vec<NodeClass>,
    features: BTreeSet<(Temporal, String, Vec<Role>)>,
    outcomes: BTreeSet<(Temporal, String, Vec<Role>)>,
}

pub fn operator_token(op: &EnrichedAbstractOperator, task: &Atom) -> OperatorToken {
    let role = |t: &Term| -> Role {
        if let Some(k) = op.head.args.iter().position(|a| a == t) {
            Role::Operator(k)
        } else if let Some(j) = task.args.iter().position(|a| a == t) {
            Role::Task(j)
        } else {
            Role::Other
        }
    };
    let shape = |ks: &[KeyProperty]| -> BTreeSet<(Temporal, String, Vec<Role>)> {
        ks.iter().map(|k| (k.temporal, k.atom.predicate.clone(), k.atom.args.iter().map(role).collect())).collect()
    };
    OperatorToken {
        name: op.head.predicate.clone(),
        types: op.types.clone(),
        features: shape(&op.features),
        outcomes: shape(&op.outcomes),
    }
}

/// Result of rolling an enriched abstract plan.
#[derive(Clone, Debug)]
pub struct RolledPlan {
    pub plan: Vec<PlanElement>,
    /// Iteration count observed for each element (`None` for singles).
    pub iterations: Vec<Option<usize>>,
    pub spans: Vec<Span>,
}

/// Detects repeats in `plan` and merges each run into a loop block whose
/// variables are unified per argument position and whose features and
/// outcomes are the intersection over the iterations.
pub fn detect_and_roll(plan: &[EnrichedAbstractOperator], task: &Atom) -> RolledPlan {
    let tokens: Vec<OperatorToken> = plan.iter().map(|op| operator_token(op, task)).collect();
    let spans = roll_spans(&tokens);
    let mut fresh = 0usize;
    let mut out = Vec::new();
    let mut iterations = Vec::new();
    for s in &spans {
        match *s {
            Span::Single(i) => {
                out.push(PlanElement::Single(plan[i].clone()));
                iterations.push(None);
            }
            Span::Loop { start, body_len, iterations: n } => {
                let iters: Vec<&[EnrichedAbstractOperator]> =
                    (0..n).map(|k| &plan[start + k * body_len..start + (k + 1) * body_len]).collect();
                out.push(PlanElement::Loop(merge_iterations(&iters, &mut fresh)));
                iterations.push(Some(n));
            }
        }
    }
    RolledPlan { plan: out, iterations, spans }
}

/// Replaces variables that play the same argument role but differ between
/// iterations by one fresh variable, then intersects features/outcomes.
fn merge_iterations(iters: &[&[EnrichedAbstractOperator]], fresh: &mut usize) -> Vec<EnrichedAbstractOperator> {
    let body_len = iters[0].len();
    // role (element, argument) -> the variable each iteration uses there
    let mut roles: Vec<(usize, usize)> = Vec::new();
    for j in 0..body_len {
        for k in 0..iters[0][j].head.arity() {
            roles.push((j, k));
        }
    }
    let mut renames: Vec<HashMap<Term, Term>> = vec![HashMap::new(); iters.len()];
    for &(j, k) in &roles {
        let terms: Vec<&Term> = iters.iter().map(|it| &it[j].head.args[k]).collect();
        if terms.iter().all(|t| *t == terms[0]) {
            continue;
        }
        if iters.iter().zip(renames.iter()).all(|(it, r)| r.contains_key(&it[j].head.args[k])) {
            continue;
        }
        *fresh += 1;
        let var = Term::Var(format!("l{}", fresh));
        for (it, r) in iters.iter().zip(renames.iter_mut()) {
            r.entry(it[j].head.args[k].clone()).or_insert_with(|| var.clone());
        }
    }
    let renamed: Vec<Vec<EnrichedAbstractOperator>> = iters
        .iter()
        .zip(renames.iter())
        .map(|(it, r)| {
            it.iter()
                .map(|op| EnrichedAbstractOperator {
                    head: op.head.apply(r),
                    types: op.types.clone(),
                    features: op.features.iter().map(|f| f.apply(r)).collect(),
                    outcomes: op.outcomes.iter().map(|f| f.apply(r)).collect(),
                })
                .collect()
        })
        .collect();
    (0..body_len)
        .map(|j| {
            let mut op = renamed[0][j].clone();
            for other in &renamed[1..] {
                op.features.retain(|f| other[j].features.contains(f));
                op.outcomes.retain(|f| other[j].outcomes.contains(f));
            }
            op
        })
        .collect()
}

/// Text rendering of the suffix array, NLCP and CNLCP tables.
pub fn format_tables(tokens: &[String]) -> String {
    let sa = suffix_array(tokens);
    let nlcp = nlcp_array(tokens, &sa);
    let sep = if tokens.iter().all(|t| t.chars().count() == 1) { "" } else { " " };
    let suffixes: Vec<String> = sa.iter().map(|&p| tokens[p..].join(sep)).collect();
    let width = suffixes.iter().map(|s| s.chars().count()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    writeln!(out, "{:>3}  {:<width$}  {:>5}  {:>7}", "i", "suffix", "SA[i]", "NLCP[i]", width = width).unwrap();
    for (i, suf) in suffixes.iter().enumerate() {
        writeln!(out, "{:>3}  {:<width$}  {:>5}  {:>7}", i, suf, sa[i], nlcp[i], width = width).unwrap();
    }
    out.push('\n');
    let entries = cnlcp(tokens);
    let kw = entries.iter().map(|e| e.pattern.join(sep).chars().count()).max().unwrap_or(1).max(1);
    writeln!(out, "{:<kw$}  CNLCP[k]", "k", kw = kw).unwrap();
    for e in &entries {
        let starts: Vec<String> = e.starts.iter().map(|s| s.to_string()).collect();
        writeln!(out, "{:<kw$}  {}", e.pattern.join(sep), starts.join(", "), kw = kw).unwrap();
    }
    let spans = roll_spans(tokens);
    let mut rolled = String::new();
    for s in &spans {
        match *s {
            Span::Single(i) => {
                rolled.push_str(&tokens[i]);
                rolled.push_str(sep);
            }
            Span::Loop { start, body_len, .. } => {
                rolled.push('(');
                rolled.push_str(&tokens[start..start + body_len].join(sep));
                rolled.push_str(")*");
                rolled.push_str(sep);
            }
        }
    }
    writeln!(out, "\nrolled: {}", rolled.trim_end()).unwrap();
    out
}

/// Renders a token string with its loops, e.g. `ab(ac)*de(df)*gh`.
pub fn rolled_string(tokens: &[char]) -> String {
    let mut out = String::new();
    for s in roll_spans(tokens) {
        match s {
            Span::Single(i) => out.push(tokens[i]),
            Span::Loop { start, body_len, .. } => {
                out.push('(');
                out.extend(&tokens[start..start + body_len]);
                out.push_str(")*");
            }
        }
    }
    out
}

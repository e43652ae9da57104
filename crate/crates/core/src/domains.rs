//! Bundled domains, the stack problem and experience generators, and the
//! problem classifier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::CanonicalForm;
use crate::model::{natural_cmp, AbstractionHierarchy, Atom, Experience, KeyProperty, PlanningDomain, TaskProblem, Temporal, Term};
use crate::parser::{parse_domain, parse_experience, parse_hierarchy, parse_problem, ParseError};
use crate::planner::simulate;
use crate::scope::{canonical_abstraction, problem_to_struct};

pub const STACK_DOMAIN: &str = include_str!("../data/stacking-blocks/domain.ebpd");
pub const STACK_ABSTRACT: &str = include_str!("../data/stacking-blocks/abstract.ebpd");
pub const STACK_HIERARCHY: &str = include_str!("../data/stacking-blocks/hierarchy.ebpd");
pub const STACK_EXPERIENCE: &str = include_str!("../data/stacking-blocks/experience-stack.ebpd");
pub const CAFE_DOMAIN: &str = include_str!("../data/cafe/domain.ebpd");
pub const CAFE_ABSTRACT: &str = include_str!("../data/cafe/abstract.ebpd");
pub const CAFE_HIERARCHY: &str = include_str!("../data/cafe/hierarchy.ebpd");
pub const CAFE_PROBLEM: &str = include_str!("../data/cafe/problem.ebpd");

/// A concrete domain, its abstraction and the hierarchy between them.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub concrete: PlanningDomain,
    pub abstract_domain: PlanningDomain,
    pub hierarchy: AbstractionHierarchy,
}

fn bundle(c: &str, a: &str, h: &str) -> Result<Bundle, ParseError> {
    Ok(Bundle { concrete: parse_domain(c)?, abstract_domain: parse_domain(a)?, hierarchy: parse_hierarchy(h)? })
}

pub fn stacking_blocks() -> Bundle {
    bundle(STACK_DOMAIN, STACK_ABSTRACT, STACK_HIERARCHY).expect("bundled stacking-blocks files parse")
}

pub fn cafe() -> Bundle {
    bundle(CAFE_DOMAIN, CAFE_ABSTRACT, CAFE_HIERARCHY).expect("bundled cafe files parse")
}

pub fn stack_experience() -> Experience {
    parse_experience(STACK_EXPERIENCE).expect("bundled experience parses")
}

pub fn cafe_problem() -> TaskProblem {
    parse_problem(CAFE_PROBLEM).expect("bundled cafe problem parses")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("stack class must be 1 to 4, got {0}")]
    Class(u8),
    #[error("blue and red counts must be equal and at least 1, got {blues}+{reds}")]
    Counts { blues: usize, reds: usize },
    #[error("class script failed: {0}")]
    Script(String),
}

/// The four initial configurations of the stack problems. The goal is
/// always blue blocks at the bottom and red blocks on top of a fresh pile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackClass {
    /// All blocks on the table.
    Table = 1,
    /// One pile, reds at the bottom and blues on top.
    RedsUnderBlues = 2,
    /// One pile alternating colors, a blue at the bottom.
    AlternatingBlueBottom = 3,
    /// One pile alternating colors, a red at the bottom.
    AlternatingRedBottom = 4,
}

impl StackClass {
    pub const ALL: [StackClass; 4] =
        [StackClass::Table, StackClass::RedsUnderBlues, StackClass::AlternatingBlueBottom, StackClass::AlternatingRedBottom];

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for StackClass {
    type Error = GenError;
    fn try_from(n: u8) -> Result<Self, GenError> {
        StackClass::ALL.get((n as usize).wrapping_sub(1)).copied().ok_or(GenError::Class(n))
    }
}

impl FromStr for StackClass {
    type Err = GenError;
    fn from_str(s: &str) -> Result<Self, GenError> {
        s.parse::<u8>().map_err(|_| GenError::Class(0)).and_then(StackClass::try_from)
    }
}

impl fmt::Display for StackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

const HOIST: &str = "hoist1";
const LOC: &str = "loc1";
const TABLE: &str = "table1";
const GOAL_PILE: &str = "pile1";
const GOAL_PALLET: &str = "pallet1";
const SOURCE_PILE: &str = "pile2";
const SOURCE_PALLET: &str = "pallet2";

fn atom(p: &str, args: &[&str]) -> Atom {
    Atom::from_tokens(p, args)
}

/// Block layout: colors and, for pile classes, the order from the bottom up.
struct Layout {
    class: StackClass,
    blues: Vec<String>,
    reds: Vec<String>,
    /// Bottom to top; empty for the table class.
    pile: Vec<String>,
}

fn layout(class: StackClass, n: usize, names: &[String]) -> Layout {
    let (blues, reds) = (names[..n].to_vec(), names[n..].to_vec());
    let pile = match class {
        StackClass::Table => Vec::new(),
        StackClass::RedsUnderBlues => reds.iter().chain(blues.iter()).cloned().collect(),
        StackClass::AlternatingBlueBottom => blues.iter().zip(reds.iter()).flat_map(|(b, r)| [b.clone(), r.clone()]).collect(),
        StackClass::AlternatingRedBottom => reds.iter().zip(blues.iter()).flat_map(|(r, b)| [r.clone(), b.clone()]).collect(),
    };
    Layout { class, blues, reds, pile }
}

fn base_problem(name: &str, l: &Layout) -> TaskProblem {
    let table_class = l.class == StackClass::Table;
    let mut objects: Vec<String> = [HOIST, LOC, TABLE, GOAL_PILE, GOAL_PALLET].iter().map(|s| s.to_string()).collect();
    if !table_class {
        objects.push(SOURCE_PILE.into());
        objects.push(SOURCE_PALLET.into());
    }
    let mut blocks: Vec<String> = l.blues.iter().chain(l.reds.iter()).cloned().collect();
    blocks.sort_by(|a, b| natural_cmp(a, b));
    objects.extend(blocks.iter().cloned());

    let mut st = vec![
        atom("location", &[LOC]),
        atom("hoist", &[HOIST]),
        atom("belong", &[HOIST, LOC]),
        atom("table", &[TABLE]),
        atom("attached", &[TABLE, LOC]),
    ];
    let piles: &[(&str, &str)] =
        if table_class { &[(GOAL_PILE, GOAL_PALLET)] } else { &[(GOAL_PILE, GOAL_PALLET), (SOURCE_PILE, SOURCE_PALLET)] };
    for (p, pal) in piles {
        st.push(atom("pile", &[p]));
        st.push(atom("attached", &[p, LOC]));
        st.push(atom("pallet", &[pal]));
    }
    for b in &blocks {
        st.push(atom("block", &[b]));
        st.push(atom(if l.blues.contains(b) { "blue" } else { "red" }, &[b]));
    }

    let start = if table_class { TABLE } else { SOURCE_PILE };
    let mut init = vec![atom("at", &[HOIST, start]), atom("empty", &[HOIST]), atom("top", &[GOAL_PALLET, GOAL_PILE])];
    if table_class {
        for b in &blocks {
            init.push(atom("ontable", &[b, TABLE]));
        }
    } else {
        let mut below = SOURCE_PALLET.to_string();
        for b in &l.pile {
            init.push(atom("on", &[b, &below]));
            below = b.clone();
        }
        init.push(atom("top", &[&below, SOURCE_PILE]));
    }
    TaskProblem {
        name: name.to_string(),
        domain: Some("stacking-blocks".into()),
        task: atom("stack", &[TABLE, GOAL_PILE]),
        objects,
        static_facts: st,
        init,
        goal: Vec::new(),
    }
}

/// The hand-written solution of each class. On the table class blocks are
/// stacked in natural name order.
fn script(l: &Layout) -> Vec<Atom> {
    let mut plan = Vec::new();
    let mut at = if l.class == StackClass::Table { TABLE.to_string() } else { SOURCE_PILE.to_string() };
    let mut goal_top = GOAL_PALLET.to_string();
    let mut move_to = |plan: &mut Vec<Atom>, to: &str| {
        if at != to {
            plan.push(atom("move", &[HOIST, &at, to, LOC]));
            at = to.to_string();
        }
    };
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| natural_cmp(a, b));
        v
    };
    let mut on_table = Vec::new();
    if l.class == StackClass::Table {
        on_table = sorted(&l.blues);
        on_table.extend(sorted(&l.reds));
    } else {
        let mut placed_blues = 0;
        for (k, x) in l.pile.iter().enumerate().rev() {
            let below = if k == 0 { SOURCE_PALLET.to_string() } else { l.pile[k - 1].clone() };
            move_to(&mut plan, SOURCE_PILE);
            plan.push(atom("unstack", &[HOIST, x, &below, SOURCE_PILE, LOC]));
            let blue = l.blues.contains(x);
            if blue || placed_blues == l.blues.len() {
                move_to(&mut plan, GOAL_PILE);
                plan.push(atom("stack", &[HOIST, x, &goal_top, GOAL_PILE, LOC]));
                goal_top = x.clone();
                placed_blues += blue as usize;
            } else {
                move_to(&mut plan, TABLE);
                plan.push(atom("putdown", &[HOIST, x, TABLE, LOC]));
                on_table.push(x.clone());
            }
        }
        // Last down, first back up: the reds return in their pile order.
        on_table.reverse();
    }
    for x in on_table {
        move_to(&mut plan, TABLE);
        plan.push(atom("pickup", &[HOIST, &x, TABLE, LOC]));
        move_to(&mut plan, GOAL_PILE);
        plan.push(atom("stack", &[HOIST, &x, &goal_top, GOAL_PILE, LOC]));
        goal_top = x;
    }
    plan
}

fn check_counts(blues: usize, reds: usize) -> Result<usize, GenError> {
    if blues != reds || blues == 0 {
        return Err(GenError::Counts { blues, reds });
    }
    Ok(blues)
}

/// Runs the class script on `p` and returns the plan and final state.
fn solve_by_script(p: &TaskProblem, l: &Layout) -> Result<(Vec<Atom>, Vec<Atom>), GenError> {
    let plan = script(l);
    let domain = &stacking_blocks().concrete;
    let state = simulate(p, &plan, domain).map_err(|f| GenError::Script(f.to_string()))?;
    Ok((plan, state.into_iter().collect()))
}

/// The goal: the finished stack on the goal pile.
fn stack_goal(final_state: &[Atom]) -> Vec<Atom> {
    final_state
        .iter()
        .filter(|a| a.predicate == "on" || a.predicate == "top" && a.args[1] == Term::constant(GOAL_PILE))
        .cloned()
        .collect()
}

/// A random stack problem of the given class; block names are shuffled
/// deterministically from `seed`.
pub fn gen_stack(class: u8, blues: usize, reds: usize, seed: u64) -> Result<TaskProblem, GenError> {
    let class = StackClass::try_from(class)?;
    let n = check_counts(blues, reds)?;
    let mut names: Vec<String> = (1..=2 * n).map(|i| format!("block{}", i)).collect();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let l = layout(class, n, &names);
    let mut p = base_problem(&format!("stack-c{}-{}-{}-s{}", class, blues, reds, seed), &l);
    let (_, final_state) = solve_by_script(&p, &l)?;
    p.goal = stack_goal(&final_state);
    Ok(p)
}

/// A solved stack problem as an experience: blues are `block1..blockN`,
/// reds follow. Key-properties are the static facts, the whole initial
/// state and the whole final state.
pub fn gen_experience(class: u8, blues: usize, reds: usize) -> Result<Experience, GenError> {
    let class = StackClass::try_from(class)?;
    let n = check_counts(blues, reds)?;
    let names: Vec<String> = (1..=2 * n).map(|i| format!("block{}", i)).collect();
    let l = layout(class, n, &names);
    let p = base_problem(&format!("stack-c{}-{}-{}", class, blues, reds), &l);
    let (plan, final_state) = solve_by_script(&p, &l)?;
    let mut keys: Vec<KeyProperty> = p.static_facts.iter().map(|a| KeyProperty::new(Temporal::Static, a.clone())).collect();
    keys.extend(p.init.iter().map(|a| KeyProperty::new(Temporal::Init, a.clone())));
    keys.extend(final_state.into_iter().map(|a| KeyProperty::new(Temporal::End, a)));
    Ok(Experience {
        name: p.name,
        domain: p.domain,
        task: p.task,
        key_properties: keys,
        plan,
        objects: Some(p.objects),
    })
}

/// Groups problems whose abstracted structures converge to the same
/// three-valued structure. Cells are in order of first member.
pub fn classify_problems(problems: &[TaskProblem], h: &AbstractionHierarchy) -> Result<Vec<Vec<usize>>, crate::model::ModelError> {
    let mut cells: BTreeMap<CanonicalForm, usize> = BTreeMap::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let form = canonical_abstraction(&problem_to_struct(p, h)?).canonical_form();
        let k = *cells.entry(form).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[k].push(i);
    }
    Ok(out)
}

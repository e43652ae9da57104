//! Suite runner. A manifest lists generated problem groups and problem
//! files; schemata come from a directory or are learned from one generated
//! experience per stack class.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ebpd::domains::{self, StackClass};
use ebpd::learner::learn_schema;
use ebpd::parser;
use ebpd::planner::{self, Domains, PlanError, PlanMetrics};
use ebpd::{ActivitySchema, TaskProblem};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{block_count, class_of_name, config};
use crate::input::{load_schemas, parse_file, read, write};
use crate::{Format, SearchArgs};

pub const COLUMNS: [&str; 10] = [
    "problem",
    "class",
    "blocks",
    "status",
    "schema",
    "retrieval_ms",
    "search_ms",
    "evaluated_states",
    "plan_length",
    "error",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Schema directory, relative to the manifest. Learned when absent.
    pub schemas: Option<PathBuf>,
    /// Blue (= red) blocks in each learning experience.
    #[serde(default = "default_experience_pairs")]
    pub experience_pairs: usize,
    /// Problem `i` of the suite is generated with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub group: Vec<Group>,
    #[serde(default)]
    pub problem: Vec<ProblemFile>,
}

fn default_experience_pairs() -> usize {
    4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub class: u8,
    /// One problem per entry, with that many blue and red blocks.
    pub pairs: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub path: PathBuf,
    pub class: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub problem: String,
    pub class: Option<u8>,
    pub blocks: usize,
    pub status: String,
    pub schema: Option<String>,
    pub retrieval_ms: Option<f64>,
    pub search_ms: Option<f64>,
    pub evaluated_states: Option<usize>,
    pub plan_length: Option<usize>,
    pub error: Option<String>,
}

fn ms(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

impl Row {
    pub fn solved(p: &TaskProblem, class: Option<u8>, schema: Option<&str>, m: &PlanMetrics) -> Row {
        Row {
            problem: p.name.clone(),
            class: class.or_else(|| class_of_name(&p.name)),
            blocks: block_count(p),
            status: "solved".into(),
            schema: schema.map(str::to_string),
            retrieval_ms: Some(ms(m.retrieval_time)),
            search_ms: Some(ms(m.search_time)),
            evaluated_states: Some(m.evaluated_states),
            plan_length: Some(m.plan_length),
            error: None,
        }
    }

    pub fn failed(p: &TaskProblem, class: Option<u8>, e: &PlanError) -> Row {
        let status = match e {
            PlanError::NoSchema => "no-schema",
            PlanError::Model(_) | PlanError::Grounding(_) | PlanError::UnknownOperator(_) => "error",
            _ => "unsolved",
        };
        Row {
            problem: p.name.clone(),
            class: class.or_else(|| class_of_name(&p.name)),
            blocks: block_count(p),
            status: status.into(),
            schema: None,
            retrieval_ms: None,
            search_ms: None,
            evaluated_states: None,
            plan_length: None,
            error: Some(e.to_string()),
        }
    }

    /// The metrics record appended to plan files.
    pub fn comment(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "; problem={} blocks={} schema={} retrieval_ms={} search_ms={} evaluated_states={} plan_length={}",
            self.problem,
            self.blocks,
            opt(self.schema.clone()),
            opt(self.retrieval_ms.map(|x| x.to_string())),
            opt(self.search_ms.map(|x| x.to_string())),
            opt(self.evaluated_states.map(|x| x.to_string())),
            opt(self.plan_length.map(|x| x.to_string())),
        )
    }
}

pub fn write_rows(rows: &[Row], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for r in rows {
                w.serialize(r)?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

/// One problem of the suite with its declared class.
pub struct Job {
    pub problem: TaskProblem,
    pub class: Option<u8>,
}

pub fn jobs(m: &Manifest, base: &Path, seed: u64) -> Result<Vec<Job>> {
    let mut out = Vec::new();
    for g in &m.group {
        for &n in &g.pairs {
            let s = seed + out.len() as u64;
            let problem = domains::gen_stack(g.class, n, n, s)?;
            out.push(Job { problem, class: Some(g.class) });
        }
    }
    for f in &m.problem {
        let problem = parse_file(&base.join(&f.path), parser::parse_problem)?;
        out.push(Job { problem, class: f.class });
    }
    Ok(out)
}

pub fn library(m: &Manifest, base: &Path, h: &ebpd::AbstractionHierarchy) -> Result<Vec<ActivitySchema>> {
    if let Some(dir) = &m.schemas {
        return Ok(load_schemas(&base.join(dir))?.into_iter().map(|(_, s)| s).collect());
    }
    StackClass::ALL
        .iter()
        .map(|c| {
            let e = domains::gen_experience(c.number(), m.experience_pairs, m.experience_pairs)?;
            learn_schema(&e, h).with_context(|| format!("learning the class {} schema", c.number()))
        })
        .collect()
}

/// Plans every job on a pool of `threads` workers; rows keep job order.
pub fn run_jobs(jobs: &[Job], library: &[ActivitySchema], d: Domains, search: &SearchArgs, threads: usize) -> Result<Vec<Row>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let cfg = config(search);
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|j| match planner::solve(&j.problem, library, d, &cfg) {
                Ok(sol) => {
                    info!("{}: {} actions", j.problem.name, sol.plan.len());
                    Row::solved(&j.problem, j.class, sol.schema.map(|i| library[i].name.as_str()), &sol.metrics)
                }
                Err(e) => {
                    info!("{}: {}", j.problem.name, e);
                    Row::failed(&j.problem, j.class, &e)
                }
            })
            .collect()
    }))
}

/// Per-class counts and means over solved rows.
pub fn summary(rows: &[Row]) -> String {
    let mut by_class: BTreeMap<Option<u8>, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by_class.entry(r.class).or_default().push(r);
    }
    let mut out = String::new();
    for (class, rs) in by_class {
        let solved: Vec<&&Row> = rs.iter().filter(|r| r.status == "solved").collect();
        let mean = |f: &dyn Fn(&Row) -> f64| -> f64 {
            if solved.is_empty() {
                0.0
            } else {
                solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64
            }
        };
        let label = class.map(|c| format!("class {}", c)).unwrap_or_else(|| "unclassified".into());
        out.push_str(&format!(
            "{}: {}/{} solved, mean plan_length {:.1}, mean evaluated_states {:.1}, mean retrieval_ms {:.3}, mean search_ms {:.3}\n",
            label,
            solved.len(),
            rs.len(),
            mean(&|r| r.plan_length.unwrap_or(0) as f64),
            mean(&|r| r.evaluated_states.unwrap_or(0) as f64),
            mean(&|r| r.retrieval_ms.unwrap_or(0.0)),
            mean(&|r| r.search_ms.unwrap_or(0.0)),
        ));
    }
    out
}

pub fn run(manifest: &Path, search: &SearchArgs, out: Option<&Path>, threads: usize, seed: Option<u64>, format: Format) -> Result<()> {
    let m: Manifest =
        toml::from_str(&read(manifest)?).with_context(|| format!("invalid manifest {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let b = domains::stacking_blocks();
    let d = Domains { concrete: &b.concrete, abstract_domain: &b.abstract_domain, hierarchy: &b.hierarchy };
    let jobs = jobs(&m, base, seed.unwrap_or(m.seed))?;
    let library = if jobs.is_empty() { Vec::new() } else { library(&m, base, &b.hierarchy)? };
    let rows = run_jobs(&jobs, &library, d, search, threads)?;
    let text = write_rows(&rows, format)?;
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{}", text),
    }
    eprint!("{}", summary(&rows));
    Ok(())
}

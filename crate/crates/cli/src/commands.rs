use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ebpd::domains::{self, StackClass};
use ebpd::learner::learn_schema_traced;
use ebpd::loops::{format_tables, operator_token};
use ebpd::parser::{self, serialize_plan};
use ebpd::planner::{self, retrieve::retrieve_struct, Domains, PlanError, PlannerConfig};
use ebpd::scope::{problem_to_struct, Embedding};
use ebpd::TaskProblem;
use log::info;

use crate::bench::{write_rows, Row};
use crate::input::{load_domains, load_schemas, parse_file, write};
use crate::{DomainArgs, Format, SearchArgs, Unsolved};

pub fn learn(d: &DomainArgs, experience: &Path, out: &Path, dot: Option<&Path>) -> Result<()> {
    let b = load_domains(d)?;
    let e = parse_file(experience, parser::parse_experience)?;
    let (schema, trace) = learn_schema_traced(&e, &b.hierarchy).with_context(|| format!("learning from {}", experience.display()))?;
    write(out, &parser::serialize_schema(&schema))?;
    let dot_path = dot.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("dot"));
    write(&dot_path, &schema.scope.to_dot(&schema.name))?;
    println!(
        "{}: {} abstract actions, {} loops {:?}, scope {} nodes ({} summary)",
        schema.name,
        trace.enriched.len(),
        schema.loop_count(),
        trace.rolled.iterations.iter().flatten().collect::<Vec<_>>(),
        schema.scope.len(),
        schema.scope.summary_count()
    );
    println!("wrote {} and {}", out.display(), dot_path.display());
    Ok(())
}

pub fn retrieve(d: &DomainArgs, problem: &Path, dir: &Path) -> Result<()> {
    let b = load_domains(d)?;
    let p = parse_file(problem, parser::parse_problem)?;
    p.validate().with_context(|| format!("in {}", problem.display()))?;
    let library = load_schemas(dir)?;
    let schemas: Vec<_> = library.iter().map(|(_, s)| s.clone()).collect();
    let t0 = Instant::now();
    let c = problem_to_struct(&p, &b.hierarchy)?;
    let verdicts = retrieve_struct(&p, &c, &schemas);
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut matched = 0;
    for (i, v) in &verdicts {
        let path = library[*i].0.display();
        match v {
            Embedding::Embedded(_) => {
                matched += 1;
                println!("match {} ({})", schemas[*i].name, path);
            }
            Embedding::NotEmbedded(why) => info!("{} rejected: {}", path, why),
        }
    }
    println!("retrieval_ms {:.3}", ms);
    if matched == 0 {
        return Err(Unsolved(format!("no applicable schema for {}", p.name)).into());
    }
    Ok(())
}

/// Number of blocks in a stack problem, or of objects elsewhere.
pub fn block_count(p: &TaskProblem) -> usize {
    let n = p.static_facts.iter().filter(|a| a.predicate == "block").count();
    if n > 0 {
        n
    } else {
        p.objects.len()
    }
}

pub fn config(s: &SearchArgs) -> PlannerConfig {
    PlannerConfig { depth_bound: s.depth_bound, tie_break: s.tie_break, max_expansions: s.max_expansions }
}

pub fn plan(
    d: &DomainArgs,
    search: &SearchArgs,
    problem: &Path,
    dir: &Path,
    out: Option<&Path>,
    metrics: Option<&Path>,
    format: Format,
) -> Result<()> {
    let b = load_domains(d)?;
    let p = parse_file(problem, parser::parse_problem)?;
    p.validate().with_context(|| format!("in {}", problem.display()))?;
    let library: Vec<_> = load_schemas(dir)?.into_iter().map(|(_, s)| s).collect();
    let domains = Domains { concrete: &b.concrete, abstract_domain: &b.abstract_domain, hierarchy: &b.hierarchy };
    let sol = match planner::solve(&p, &library, domains, &config(search)) {
        Ok(sol) => sol,
        Err(e @ (PlanError::Model(_) | PlanError::Grounding(_) | PlanError::UnknownOperator(_))) => {
            return Err(e).with_context(|| format!("planning {}", p.name))
        }
        Err(e) => return Err(Unsolved(format!("{}: {}", p.name, e)).into()),
    };
    let row = Row::solved(&p, None, sol.schema.map(|i| library[i].name.as_str()), &sol.metrics);
    let text = format!("{}{}\n", serialize_plan(&sol.plan), row.comment());
    let record = write_rows(std::slice::from_ref(&row), format)?;
    match (out, metrics) {
        (Some(o), Some(m)) => {
            write(o, &text)?;
            write(m, &record)?;
        }
        (Some(o), None) => {
            write(o, &text)?;
            print!("{}", record);
        }
        (None, Some(m)) => {
            print!("{}", text);
            write(m, &record)?;
        }
        (None, None) => print!("{}", text),
    }
    Ok(())
}

fn pairs(blocks: usize) -> Result<usize> {
    if blocks == 0 || blocks % 2 != 0 {
        bail!("--blocks must be a positive even number (half blue, half red), got {}", blocks);
    }
    Ok(blocks / 2)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

pub fn gen_stack(class: u8, blocks: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let n = pairs(blocks)?;
    let p = domains::gen_stack(class, n, n, seed)?;
    emit(out, &parser::serialize_problem(&p))
}

pub fn gen_experience(class: u8, blocks: usize, out: Option<&Path>) -> Result<()> {
    let n = pairs(blocks)?;
    let e = domains::gen_experience(class, n, n)?;
    emit(out, &parser::serialize_experience(&e))
}

pub fn loops(string: Option<&str>, experience: Option<&Path>, d: &DomainArgs) -> Result<()> {
    match (string, experience) {
        (Some(s), _) => {
            let tokens: Vec<String> = s.chars().map(|c| c.to_string()).collect();
            print!("{}", format_tables(&tokens));
        }
        (None, Some(path)) => {
            let b = load_domains(d)?;
            let e = parse_file(path, parser::parse_experience)?;
            let (_, trace) = learn_schema_traced(&e, &b.hierarchy)?;
            // one letter per distinct token, in order of first occurrence
            let mut letters = BTreeMap::new();
            let mut legend = Vec::new();
            let mut tokens = Vec::new();
            for op in &trace.enriched {
                let t = operator_token(op, &trace.abstracted.task);
                let next = letters.len();
                let id = *letters.entry(t).or_insert(next);
                if id == legend.len() {
                    legend.push(op.head.to_string());
                }
                tokens.push(letter(id));
            }
            for (i, head) in legend.iter().enumerate() {
                println!("{} = {}", letter(i), head);
            }
            println!("\ntokens: {}\n", tokens.concat());
            print!("{}", format_tables(&tokens));
        }
        (None, None) => bail!("give --string or --experience"),
    }
    Ok(())
}

fn letter(i: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    if i < ALPHABET.len() {
        (ALPHABET[i] as char).to_string()
    } else {
        format!("t{}", i)
    }
}

pub fn validate(d: &DomainArgs, problem: &Path, plan: &Path) -> Result<()> {
    let b = load_domains(d)?;
    let p = parse_file(problem, parser::parse_problem)?;
    let actions = parse_file(plan, parser::parse_plan)?;
    match planner::validate_plan(&p, &actions, &b.concrete) {
        Ok(()) => {
            println!("valid: {} actions reach the goal of {}", actions.len(), p.name);
            Ok(())
        }
        Err(f) => Err(Unsolved(format!("invalid plan: {}", f)).into()),
    }
}

pub fn classify(d: &DomainArgs, files: &[std::path::PathBuf]) -> Result<()> {
    let b = load_domains(d)?;
    let problems: Vec<TaskProblem> = files.iter().map(|f| parse_file(f, parser::parse_problem)).collect::<Result<_>>()?;
    let cells = domains::classify_problems(&problems, &b.hierarchy)?;
    for (k, cell) in cells.iter().enumerate() {
        let names: Vec<&str> = cell.iter().map(|&i| problems[i].name.as_str()).collect();
        println!("cell {} ({}): {}", k + 1, cell.len(), names.join(" "));
    }
    Ok(())
}

/// Class number parsed from a generated problem name `stack-c<k>-...`.
pub fn class_of_name(name: &str) -> Option<u8> {
    let rest = name.strip_prefix("stack-c")?;
    let k: u8 = rest.split('-').next()?.parse().ok()?;
    StackClass::try_from(k).ok().map(|c| c.number())
}

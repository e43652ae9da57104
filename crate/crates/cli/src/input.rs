use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ebpd::domains::{self, Bundle};
use ebpd::parser::{self, ParseError};
use ebpd::{validate_domain, ActivitySchema, Severity};
use log::warn;

use crate::{Bundled, DomainArgs};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Parses `path` with `f`, reporting errors as `file:line:col: message`.
pub fn parse_file<T>(path: &Path, f: impl Fn(&str) -> Result<T, ParseError>) -> Result<T> {
    let text = read(path)?;
    f(&text).map_err(|e| anyhow::anyhow!("{}:{}", path.display(), e))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_domains(args: &DomainArgs) -> Result<Bundle> {
    let mut b = match args.bundle {
        Bundled::Stack => domains::stacking_blocks(),
        Bundled::Cafe => domains::cafe(),
    };
    if let Some(p) = &args.domain {
        b.concrete = parse_file(p, parser::parse_domain)?;
    }
    if let Some(p) = &args.abstract_domain {
        b.abstract_domain = parse_file(p, parser::parse_domain)?;
    }
    if let Some(p) = &args.hierarchy {
        b.hierarchy = parse_file(p, parser::parse_hierarchy)?;
    }
    let diags = validate_domain(&b.concrete, &b.hierarchy, &b.abstract_domain);
    let mut errors = Vec::new();
    for d in diags {
        match d.severity {
            Severity::Error => errors.push(d.to_string()),
            Severity::Warning => warn!("{}", d),
        }
    }
    if !errors.is_empty() {
        bail!("inconsistent domain inputs:\n  {}", errors.join("\n  "));
    }
    Ok(b)
}

/// Every `.ebpd` file in `dir` parsed as a schema, in file-name order.
pub fn load_schemas(dir: &Path) -> Result<Vec<(PathBuf, ActivitySchema)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read schema directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ebpd"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| parse_file(&p, parser::parse_schema).map(|s| (p, s))).collect()
}

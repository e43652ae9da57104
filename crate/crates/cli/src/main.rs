//! `ebpd`: learn activity schemata, retrieve them for new problems, plan,
//! and benchmark the whole pipeline on generated stack problems.

mod bench;
mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ebpd::planner::{TieBreak, DEFAULT_DEPTH_BOUND};

/// Marks a run that completed but found no schema or no plan (exit 1).
#[derive(Debug)]
pub struct Unsolved(pub String);

impl std::fmt::Display for Unsolved {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Unsolved {}

#[derive(Parser)]
#[command(name = "ebpd", version, about = "Experience-based planning with activity schemata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Bundled {
    #[default]
    Stack,
    Cafe,
}

/// Domain inputs. Anything not given falls back to the bundled domain.
#[derive(Args, Clone, Debug)]
pub struct DomainArgs {
    /// Bundled domain used for inputs not given explicitly
    #[arg(long, value_enum, default_value_t = Bundled::Stack)]
    pub bundle: Bundled,
    /// Concrete planning domain
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Abstract planning domain
    #[arg(long = "abstract")]
    pub abstract_domain: Option<PathBuf>,
    /// Abstraction hierarchy
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct SearchArgs {
    /// Depth bound of the nil-action search between two abstract steps
    #[arg(long, default_value_t = DEFAULT_DEPTH_BOUND)]
    pub depth_bound: usize,
    /// Order of equally good groundings: lex or rev
    #[arg(long, default_value = "lex")]
    pub tie_break: TieBreak,
    /// Expansion budget of the abstract search
    #[arg(long, default_value_t = 200_000)]
    pub max_expansions: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Learn an activity schema from an experience
    Learn {
        #[command(flatten)]
        domains: DomainArgs,
        #[arg(long)]
        experience: PathBuf,
        /// Schema output file
        #[arg(short, long)]
        out: PathBuf,
        /// Graphviz export of the scope; defaults to the output path with a .dot extension
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the schemata whose scope a problem embeds into
    Retrieve {
        #[command(flatten)]
        domains: DomainArgs,
        #[arg(long)]
        problem: PathBuf,
        /// Directory of schema files
        #[arg(long)]
        schemas: PathBuf,
    },
    /// Retrieve a schema and produce a validated concrete plan
    Plan {
        #[command(flatten)]
        domains: DomainArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        schemas: PathBuf,
        /// Plan output file; the plan goes to stdout otherwise
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Write the metrics record here instead of stdout
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run a suite manifest and emit one metrics row per problem
    Bench {
        #[command(flatten)]
        search: SearchArgs,
        manifest: PathBuf,
        /// Result file; stdout otherwise
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the manifest seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Generate a stack problem
    GenStack {
        /// Problem class, 1 to 4
        #[arg(long)]
        class: u8,
        /// Total number of blocks, half blue and half red
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a solved stack experience
    GenExperience {
        #[arg(long)]
        class: u8,
        #[arg(long)]
        blocks: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Show suffix array, NLCP and CNLCP tables and the rolled form
    Loops {
        /// A token string, one character per token
        #[arg(long, conflicts_with = "experience")]
        string: Option<String>,
        /// An experience whose abstract plan is tokenized
        #[arg(long)]
        experience: Option<PathBuf>,
        #[command(flatten)]
        domains: DomainArgs,
    },
    /// Check a plan file against a problem
    Validate {
        #[command(flatten)]
        domains: DomainArgs,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Partition problems by the structure their abstraction converges to
    Classify {
        #[command(flatten)]
        domains: DomainArgs,
        #[arg(required = true)]
        problems: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Learn { domains, experience, out, dot } => commands::learn(&domains, &experience, &out, dot.as_deref()),
        Command::Retrieve { domains, problem, schemas } => commands::retrieve(&domains, &problem, &schemas),
        Command::Plan { domains, search, problem, schemas, out, metrics, format } => {
            commands::plan(&domains, &search, &problem, &schemas, out.as_deref(), metrics.as_deref(), format)
        }
        Command::Bench { search, manifest, out, jobs, seed, format } => {
            bench::run(&manifest, &search, out.as_deref(), jobs, seed, format)
        }
        Command::GenStack { class, blocks, seed, out } => commands::gen_stack(class, blocks, seed, out.as_deref()),
        Command::GenExperience { class, blocks, out } => commands::gen_experience(class, blocks, out.as_deref()),
        Command::Loops { string, experience, domains } => commands::loops(string.as_deref(), experience.as_deref(), &domains),
        Command::Validate { domains, problem, plan } => commands::validate(&domains, &problem, &plan),
        Command::Classify { domains, problems } => commands::classify(&domains, &problems),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("EBPD_LOG")).format_timestamp_millis().init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Unsolved>().is_some() => {
            eprintln!("{:#}", e);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}

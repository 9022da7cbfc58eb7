//! Command-line surface over natl-core: validate TRL files, unify terms,
//! inspect embeddings, run solve and explain derivations, and replay the
//! bundled corpus against golden traces.
//!
//! Exit codes: 0 when the command succeeds (answered, explained, valid,
//! unified, corpus all green); 1 when reasoning or matching comes up empty
//! (exhausted, no unifier, corpus mismatch); 2 for usage, config, and parse
//! errors. Diagnostics go to stderr; structured output stays pure JSON.

mod corpus;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use natl_core::config::{Config, ConfigError};
use natl_core::embed::EmbeddingProvider;
use natl_core::kb::KnowledgeBase;
use natl_core::reason::{Outcome, Reasoner, Trace, TRACE_VERSION};
use natl_core::syntax::{self, SourceJudgment, SyntaxError};
use natl_core::term::CopulaRegistry;
use natl_core::unify::{UnifyOutcome, Unifier};

#[derive(Parser)]
#[command(name = "natl", version, about = "Non-axiomatic term logic reasoner")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Globals {
    /// Config file of `section.key = value` lines.
    #[arg(long, global = true, env = "NATL_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Soft-unification threshold in [0, 1].
    #[arg(long, global = true, value_name = "NUM")]
    theta: Option<f64>,
    /// Step budget for derivations.
    #[arg(long, global = true, value_name = "N")]
    max_steps: Option<usize>,
    /// Depth budget for derivations.
    #[arg(long, global = true, value_name = "N")]
    max_depth: Option<usize>,
    /// Embedding seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatchMode {
    Hard,
    Soft,
}

#[derive(Subcommand)]
enum Command {
    /// Validate TRL files and report their judgments.
    Parse {
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
    },
    /// Unify two terms and print the resulting substitution.
    Unify {
        /// Leaf matching: hard wants equal symbols, soft merges near ones.
        #[arg(long, value_enum, default_value_t = MatchMode::Soft)]
        mode: MatchMode,
        #[arg(value_name = "TERM")]
        a: String,
        #[arg(value_name = "TERM")]
        b: String,
    },
    /// Print a term's vector, or the similarity of two terms.
    Embed {
        #[arg(value_name = "TERM")]
        term: String,
        #[arg(value_name = "TERM")]
        other: Option<String>,
    },
    /// Derive a judgment matching a goal pattern.
    Solve {
        /// KB file; repeat to load several.
        #[arg(long, required = true, value_name = "PATH")]
        kb: Vec<PathBuf>,
        #[arg(long, value_name = "TERM")]
        goal: String,
    },
    /// Find the step chain supporting a goal conclusion.
    Explain {
        /// KB file; repeat to load several.
        #[arg(long, required = true, value_name = "PATH")]
        kb: Vec<PathBuf>,
        #[arg(long, value_name = "TERM")]
        goal: String,
    },
    /// Run corpus examples against their golden outputs.
    Corpus {
        /// Example directory; defaults to the bundled corpus.
        #[arg(value_name = "DIR")]
        dir: Option<PathBuf>,
        /// Rewrite the goldens from the current engine output.
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}:{rest}", path = .path.display(), rest = .source)]
    Kb { path: PathBuf, source: SyntaxError },
    #[error("goal: {0}")]
    Goal(SyntaxError),
    #[error("term: {0}")]
    Term(SyntaxError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("--{flag} wants {want}, got {value}")]
    Flag { flag: &'static str, want: &'static str, value: String },
    #[error("{0}")]
    Corpus(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.globals, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("natl: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(globals: &Globals, command: Command) -> Result<u8, CliError> {
    match command {
        Command::Parse { files } => cmd_parse(globals, &files),
        Command::Unify { mode, a, b } => cmd_unify(globals, mode, &a, &b),
        Command::Embed { term, other } => cmd_embed(globals, &term, other.as_deref()),
        Command::Solve { kb, goal } => cmd_reason(globals, &kb, &goal, ReasonMode::Solve),
        Command::Explain { kb, goal } => cmd_reason(globals, &kb, &goal, ReasonMode::Explain),
        Command::Corpus { dir, bless } => corpus::run(globals, dir.as_deref(), bless),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ReasonMode {
    Solve,
    Explain,
}

/// Config file (or defaults) without flag overrides; the corpus runner layers
/// per-example directives between the two.
fn file_config(globals: &Globals) -> Result<Config, CliError> {
    Ok(match &globals.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    })
}

fn apply_overrides(config: &mut Config, globals: &Globals) -> Result<(), CliError> {
    if let Some(theta) = globals.theta {
        if !(0.0..=1.0).contains(&theta) {
            return Err(CliError::Flag {
                flag: "theta",
                want: "a number in [0, 1]",
                value: theta.to_string(),
            });
        }
        config.settings.theta = theta;
    }
    if let Some(n) = globals.max_steps {
        if n == 0 {
            return Err(CliError::Flag {
                flag: "max-steps",
                want: "an integer of at least 1",
                value: n.to_string(),
            });
        }
        config.settings.max_steps = n;
    }
    if let Some(n) = globals.max_depth {
        if n == 0 {
            return Err(CliError::Flag {
                flag: "max-depth",
                want: "an integer of at least 1",
                value: n.to_string(),
            });
        }
        config.settings.max_depth = n;
    }
    if let Some(seed) = globals.seed {
        config.seed = seed;
    }
    Ok(())
}

fn configured(globals: &Globals) -> Result<Config, CliError> {
    let mut config = file_config(globals)?;
    apply_overrides(&mut config, globals)?;
    Ok(config)
}

fn read_sources(
    path: &PathBuf,
    registry: &CopulaRegistry,
) -> Result<Vec<SourceJudgment>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.clone(), source })?;
    syntax::parse_kb(&text, registry)
        .map_err(|source| CliError::Kb { path: path.clone(), source })
}

fn cmd_parse(globals: &Globals, files: &[PathBuf]) -> Result<u8, CliError> {
    let config = configured(globals)?;
    let registry = config.registry()?;
    let mut report = Vec::new();
    for path in files {
        report.push((path.clone(), read_sources(path, &registry)?));
    }
    match globals.format {
        Format::Human => {
            for (path, sources) in &report {
                println!("{}: {} judgments", path.display(), sources.len());
                for j in sources {
                    println!(
                        "  {}",
                        syntax::print_judgment(j.label.as_deref(), &j.term, j.confidence)
                    );
                }
            }
        }
        Format::Structured => {
            let files: Vec<serde_json::Value> = report
                .iter()
                .map(|(path, sources)| {
                    serde_json::json!({
                        "path": path.display().to_string(),
                        "judgments": sources.iter().map(render::judgment_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            print_json(&serde_json::json!({ "version": TRACE_VERSION, "files": files }));
        }
    }
    Ok(0)
}

fn cmd_unify(globals: &Globals, mode: MatchMode, a: &str, b: &str) -> Result<u8, CliError> {
    let config = configured(globals)?;
    let registry = config.registry()?;
    let provider = config.provider()?;
    let ta = syntax::parse_term(a, &registry).map_err(CliError::Term)?;
    let tb = syntax::parse_term(b, &registry).map_err(CliError::Term)?;
    let unifier = match mode {
        MatchMode::Hard => Unifier::hard(&provider),
        MatchMode::Soft => Unifier::soft(&provider, config.settings.theta),
    };
    match unifier.unify(&ta, &tb) {
        Ok(outcome) => {
            match globals.format {
                Format::Human => print_unified_human(&outcome),
                Format::Structured => print_json(&serde_json::json!({
                    "version": TRACE_VERSION,
                    "status": "unified",
                    "theta": config.settings.theta,
                    "similarity": outcome.similarity,
                    "substitution": outcome.substitution.rendered(),
                    "merges": render::merges_json(&outcome.merges),
                })),
            }
            Ok(0)
        }
        Err(e) => {
            match globals.format {
                Format::Human => println!("no unifier: {e}"),
                Format::Structured => print_json(&serde_json::json!({
                    "version": TRACE_VERSION,
                    "status": "failed",
                    "reason": e.to_string(),
                })),
            }
            Ok(1)
        }
    }
}

fn print_unified_human(outcome: &UnifyOutcome) {
    println!("unified (similarity {})", outcome.similarity);
    for (name, value) in outcome.substitution.iter() {
        println!("  ${name} := {value}");
    }
    for merge in &outcome.merges {
        println!("  merge: {} ~ {} ({})", merge.left, merge.right, merge.similarity);
    }
}

fn cmd_embed(globals: &Globals, term: &str, other: Option<&str>) -> Result<u8, CliError> {
    let config = configured(globals)?;
    let registry = config.registry()?;
    let provider = config.provider()?;
    let ta = syntax::parse_term(term, &registry).map_err(CliError::Term)?;
    let tb = other
        .map(|t| syntax::parse_term(t, &registry).map_err(CliError::Term))
        .transpose()?;
    match globals.format {
        Format::Human => match &tb {
            Some(tb) => println!("similarity {}", provider.similarity(&ta, tb)),
            None => {
                println!("dim {}", provider.dim());
                let parts: Vec<String> =
                    provider.embed(&ta).iter().map(|x| format!("{x:.6}")).collect();
                println!("{}", parts.join(" "));
            }
        },
        Format::Structured => {
            let mut doc = serde_json::json!({
                "version": TRACE_VERSION,
                "dim": provider.dim(),
                "seed": config.seed,
                "terms": [{ "term": ta.to_string(), "vector": provider.embed(&ta) }],
            });
            if let Some(tb) = &tb {
                doc["terms"]
                    .as_array_mut()
                    .expect("terms is an array")
                    .push(serde_json::json!({ "term": tb.to_string(), "vector": provider.embed(tb) }));
                doc["similarity"] = serde_json::json!(provider.similarity(&ta, tb));
            }
            print_json(&doc);
        }
    }
    Ok(0)
}

fn cmd_reason(
    globals: &Globals,
    kb_paths: &[PathBuf],
    goal: &str,
    mode: ReasonMode,
) -> Result<u8, CliError> {
    let config = configured(globals)?;
    let run = reason(&config, kb_paths, goal, mode)?;
    match globals.format {
        Format::Human => {
            print!("{}", render::trace_human(&run.trace));
            print!("{}", run.notes);
        }
        Format::Structured => print!("{}", run.trace.to_json()),
    }
    Ok(exit_for(&run.outcome))
}

struct ReasonRun {
    outcome: Outcome,
    trace: Trace,
    /// Human-only remarks: contradictions left in the final KB.
    notes: String,
}

/// Shared by the direct commands and the corpus runner.
fn reason(
    config: &Config,
    kb_paths: &[PathBuf],
    goal: &str,
    mode: ReasonMode,
) -> Result<ReasonRun, CliError> {
    let registry = config.registry()?;
    let provider = config.provider()?;
    let mut kb = KnowledgeBase::new();
    for path in kb_paths {
        for source in read_sources(path, &registry)? {
            kb.assert_source(&source);
        }
    }
    let goal = syntax::parse_term(goal, &registry).map_err(CliError::Goal)?;
    let mut reasoner = Reasoner::new(
        kb,
        registry.clone(),
        Box::new(provider),
        config.policy.clone(),
        config.settings.clone(),
    );
    let outcome = match mode {
        ReasonMode::Solve => reasoner.solve(&goal),
        ReasonMode::Explain => reasoner.explain(&goal),
    };
    let trace = reasoner.trace();
    let notes = render::contradictions_human(reasoner.kb(), &registry);
    Ok(ReasonRun { outcome, trace, notes })
}

fn exit_for(outcome: &Outcome) -> u8 {
    match outcome {
        Outcome::Answered { .. } | Outcome::Explained { .. } => 0,
        Outcome::Exhausted { .. } => 1,
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON output serializes"));
}

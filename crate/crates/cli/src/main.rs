//! `dtlab`: batch prescription matrices, problem validation and GL queries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dtlab::problems::{builtin, parse_problem, BuiltinId};
use dtlab::provability::{enumerate_proofs, is_provable, modal_depth, parse_definitions, parse_formula, ModalSystem, ProofSearch};
use dtlab::report::{evaluate_matrix, render_report, Format};
use dtlab::theories::{Settings, TheoryId};
use dtlab::worldmodel::DecisionProblem;

#[derive(Parser)]
#[command(name = "dtlab", version, about = "Decision-theory laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every (problem, theory) pair and write a report.
    Run {
        /// Comma-separated builtin names and `.dtp` paths, or `all`.
        #[arg(long, default_value = "all")]
        problems: String,
        /// Comma-separated theory names, or `all`.
        #[arg(long, default_value = "all")]
        theories: String,
        #[arg(long, default_value = "json")]
        format: String,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest policy space to enumerate.
        #[arg(long, default_value_t = dtlab::worldmodel::DEFAULT_POLICY_CAP)]
        cap: usize,
        /// Re-check each provability verdict one world further up the chain.
        #[arg(long)]
        debug_stability: bool,
    },
    /// Decide a GL sentence against a file of `atom := formula` definitions.
    Prove {
        #[arg(long)]
        defs: Option<PathBuf>,
        #[arg(long)]
        formula: String,
        /// Also search for a Hilbert-style proof for this many rounds.
        #[arg(long)]
        enumerate: Option<usize>,
    },
    /// Parse and validate a `.dtp` file.
    Parse { file: PathBuf },
    /// List the builtin problems.
    List,
}

#[derive(Debug)]
struct ConfigError(String);

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn load_problem(sel: &str) -> Result<DecisionProblem, ConfigError> {
    if let Ok(id) = sel.parse::<BuiltinId>() {
        return Ok(builtin(id));
    }
    let path = Path::new(sel);
    if path.extension().is_some_and(|e| e == "dtp") || path.exists() {
        let src = fs::read_to_string(path).map_err(|e| ConfigError(format!("{sel}: {e}")))?;
        return parse_problem(&src).map_err(|e| ConfigError(format!("{sel}: {e}")));
    }
    Err(ConfigError(format!("unknown problem `{sel}` (not a builtin or a .dtp file)")))
}

fn select_problems(spec: &str) -> Result<Vec<DecisionProblem>, ConfigError> {
    if spec == "all" {
        return Ok(BuiltinId::ALL.into_iter().map(builtin).collect());
    }
    let items = split_list(spec);
    if items.is_empty() {
        return Err(ConfigError("no problems selected".into()));
    }
    items.into_iter().map(load_problem).collect()
}

fn select_theories(spec: &str) -> Result<Vec<TheoryId>, ConfigError> {
    if spec == "all" {
        return Ok(TheoryId::ALL.to_vec());
    }
    let items = split_list(spec);
    if items.is_empty() {
        return Err(ConfigError("no theories selected".into()));
    }
    items
        .into_iter()
        .map(|t| t.parse::<TheoryId>().map_err(|e| ConfigError(e.to_string())))
        .collect()
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), ConfigError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| ConfigError(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| ConfigError(e.to_string()))
        }
    }
}

fn run(cmd: Command) -> Result<(), ConfigError> {
    match cmd {
        Command::Run { problems, theories, format, out, cap, debug_stability } => {
            let format: Format = format.parse().map_err(|e: dtlab::report::ReportError| ConfigError(e.to_string()))?;
            if cap == 0 {
                return Err(ConfigError("--cap must be at least 1".into()));
            }
            let theories = select_theories(&theories)?;
            let problems = select_problems(&problems)?;
            let settings = Settings { policy_cap: cap, check_stability: debug_stability };
            let report = evaluate_matrix(&problems, &theories, &settings);
            let bytes = render_report(&report, format).map_err(|e| ConfigError(e.to_string()))?;
            write_output(out.as_deref(), &bytes)
        }
        Command::Prove { defs, formula, enumerate } => {
            let system = match defs {
                Some(p) => {
                    let src = fs::read_to_string(&p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?;
                    parse_definitions(&src).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
                }
                None => ModalSystem::new(),
            };
            let f = parse_formula(&formula).map_err(|e| ConfigError(format!("formula: {e}")))?;
            let depth = modal_depth(&f, &system).map_err(|e| ConfigError(e.to_string()))?;
            let verdict = is_provable(&f, &system).map_err(|e| ConfigError(e.to_string()))?;
            let mut text = format!("formula: {f}\ndepth: {depth}\nprovable: {verdict}\n");
            if let Some(bound) = enumerate {
                match enumerate_proofs(&f, &system, bound) {
                    Ok(ProofSearch::Found(proof)) => text.push_str(&format!("proof:\n{proof}")),
                    Ok(ProofSearch::NotFound { rounds }) => {
                        text.push_str(&format!("proof: none in the search space after {rounds} rounds\n"))
                    }
                    Err(e) => text.push_str(&format!("proof: {e}\n")),
                }
            }
            write_output(None, text.as_bytes())
        }
        Command::Parse { file } => {
            let p = load_problem(&file.to_string_lossy())?;
            let text = format!(
                "ok: {} ({} nodes, {} actions, {} observations)\n",
                p.name,
                p.graph.nodes().len(),
                p.actions.len(),
                p.observations.len()
            );
            write_output(None, text.as_bytes())
        }
        Command::List => {
            let mut text = String::new();
            for id in BuiltinId::ALL {
                let p = builtin(id);
                text.push_str(&format!("{}\t{}\n", id, p.note.unwrap_or_default()));
            }
            write_output(None, text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

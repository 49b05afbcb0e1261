mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use kbqa_core::logic::DEFAULT_EXACT_THRESHOLD;
use kbqa_core::pipeline::{Count, OutputFormat};
use kbqa_core::{Strategy, ValidityMask};

const CACHE_DIR_VAR: &str = "KBQA_CACHE_DIR";
const CACHE_FILE: &str = "kb.bin";

fn long_version() -> String {
    format!(
        "{} (kb cache format {})",
        env!("CARGO_PKG_VERSION"),
        kbqa_core::kb::CACHE_FORMAT_VERSION
    )
}

#[derive(Parser)]
#[command(
    name = "kbqa",
    version = long_version(),
    about = "Build logical multiple-choice questions from a commonsense knowledge base"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a ConceptNet assertion dump (plain or gzip) into a binary cache
    Ingest {
        input: PathBuf,
        /// Keep only rows whose two concepts are English
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        english_only: bool,
        /// Fail on the first malformed row instead of skipping it
        #[arg(long)]
        strict: bool,
        /// Cache file to write [default: $KBQA_CACHE_DIR/kb.bin, or .kbqa/kb.bin]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print knowledge base and subgraph counts as JSON
    Stats {
        /// Cache file [default: $KBQA_CACHE_DIR/kb.bin, or .kbqa/kb.bin]
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Relation pairs to list in the histogram
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// List the 14 logical forms: index, cell mask (S1 S2 S3 S4), formula
    ShowForms,
    /// Print the relation lexicon as JSON
    DumpLexicon {
        /// Lexicon file merged over the built-in entries
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Generate a question dataset
    Generate(GenerateArgs),
    /// Check every question of a JSONL dataset against the knowledge base
    Validate {
        dataset: PathBuf,
        /// Cache file [default: $KBQA_CACHE_DIR/kb.bin, or .kbqa/kb.bin]
        #[arg(long)]
        kb: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
pub struct GenerateArgs {
    /// Cache file [default: $KBQA_CACHE_DIR/kb.bin, or .kbqa/kb.bin]
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Number of questions, or "all" for one draw per subgraph
    #[arg(long, default_value = "1000")]
    count: Count,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// random, nearest or uniform-cell
    #[arg(long, default_value = "uniform-cell")]
    strategy: Strategy,
    /// Options per question, the answer included
    #[arg(long, default_value_t = 3)]
    choices: usize,
    /// "all", or indices and ranges such as 1,2,5 or 0-6
    #[arg(long, default_value = "all", value_parser = parse_forms)]
    forms: ValidityMask,
    /// exact, approximate, or auto (exact up to --exact-threshold entities)
    #[arg(long, default_value = "auto")]
    s4_mode: String,
    #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
    exact_threshold: usize,
    /// Worker threads; output does not depend on it
    #[arg(long, default_value_t = 1)]
    shards: usize,
    /// jsonl or tsv
    #[arg(long, default_value = "jsonl")]
    format: OutputFormat,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gzip the output
    #[arg(long)]
    gzip: bool,
    /// Drop questions whose text and answer repeat an earlier one
    #[arg(long)]
    dedup: bool,
    /// Lexicon file merged over the built-in entries
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

fn parse_forms(text: &str) -> Result<ValidityMask, String> {
    kbqa_core::pipeline::parse_form_list(text).map_err(|e| e.to_string())
}

fn default_cache() -> PathBuf {
    std::env::var_os(CACHE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".kbqa"))
        .join(CACHE_FILE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let kb_path = |p: Option<PathBuf>| p.unwrap_or_else(default_cache);
    let outcome = match cli.command {
        Command::Ingest {
            input,
            english_only,
            strict,
            out,
        } => commands::ingest(&input, english_only, strict, &kb_path(out)),
        Command::Stats { kb, top } => commands::stats(&kb_path(kb), top),
        Command::ShowForms => commands::show_forms(),
        Command::DumpLexicon { lexicon } => commands::dump_lexicon(lexicon.as_deref()),
        Command::Generate(mut args) => {
            let kb = kb_path(args.kb.take());
            commands::generate(&kb, args)
        }
        Command::Validate { dataset, kb } => commands::validate(&dataset, &kb_path(kb)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

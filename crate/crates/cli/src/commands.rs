use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use flate2::write::GzEncoder;
use flate2::Compression;
use kbqa_core::kb::{load_kb, parse_kb_file, save_kb, LanguageFilter, ParseOptions};
use kbqa_core::logic::{enumerate_forms, mask_bits, render_form};
use kbqa_core::pipeline::{dataset_stats, generate_to_writer};
use kbqa_core::templater::load_lexicon;
use kbqa_core::validate::validate_dataset;
use kbqa_core::{Error, GenerationConfig, KnowledgeBase, RelationLexicon, S4Mode};
use serde_json::json;

use crate::GenerateArgs;

const REPORTED_VIOLATIONS: usize = 10;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn user(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. }
            | Error::InvalidConfig(_)
            | Error::LexiconParse { .. }
            | Error::InvalidLexiconEntry { .. }
            | Error::MissingLexiconEntry(_) => Failure::user(e.to_string()),
            other => Failure::data(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn print_json(value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn open_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    if !path.exists() {
        return Err(Failure::user(format!(
            "kb cache {} not found (run `kbqa ingest` first)",
            path.display()
        )));
    }
    Ok(load_kb(path)?)
}

fn lexicon(path: Option<&Path>) -> Result<RelationLexicon, Failure> {
    match path {
        Some(p) => Ok(load_lexicon(p)?),
        None => Ok(RelationLexicon::builtin()),
    }
}

pub fn ingest(input: &Path, english_only: bool, strict: bool, out: &Path) -> Outcome {
    let options = ParseOptions {
        filter: if english_only {
            LanguageFilter::default()
        } else {
            LanguageFilter::Any
        },
        strict,
    };
    let (kb, report) = parse_kb_file(input, &options)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::user(format!("cannot create {}: {e}", dir.display())))?;
    }
    save_kb(&kb, out)?;
    log::info!("wrote {}", out.display());
    print_json(&json!({
        "cache": out,
        "fingerprint": kb.fingerprint(),
        "report": report,
    }))
}

pub fn stats(kb: &Path, top: usize) -> Outcome {
    let kb = open_kb(kb)?;
    let mut stats = dataset_stats(&kb);
    stats.pair_histogram.truncate(top);
    print_json(&stats)
}

pub fn show_forms() -> Outcome {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for form in enumerate_forms() {
        writeln!(
            out,
            "{:>2}  {}  {}",
            form.index(),
            mask_bits(form),
            render_form(form)
        )
        .map_err(|e| Failure::data(e.to_string()))?;
    }
    Ok(())
}

pub fn dump_lexicon(path: Option<&Path>) -> Outcome {
    println!("{}", lexicon(path)?.to_json());
    Ok(())
}

pub fn generate(kb_path: &Path, args: GenerateArgs) -> Outcome {
    let s4_mode = match args.s4_mode.as_str() {
        "auto" => None,
        other => Some(other.parse::<S4Mode>().map_err(Failure::user)?),
    };
    let cfg = GenerationConfig {
        seed: args.seed,
        count: args.count,
        strategy: args.strategy,
        choices: args.choices,
        forms: args.forms,
        s4_mode,
        exact_threshold: args.exact_threshold,
        shards: args.shards,
        dedup: args.dedup,
    };
    cfg.validate()?;
    let lexicon = lexicon(args.lexicon.as_deref())?;
    let kb = open_kb(kb_path)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| Failure::user(format!("cannot create {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let sink = BufWriter::new(sink);
    let summary = if args.gzip {
        let mut gz = GzEncoder::new(sink, Compression::default());
        let summary = generate_to_writer(&kb, lexicon, cfg, args.format, &mut gz)?;
        gz.finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Failure::data(format!("finishing gzip stream: {e}")))?;
        summary
    } else {
        let mut sink = sink;
        let summary = generate_to_writer(&kb, lexicon, cfg, args.format, &mut sink)?;
        sink.flush().map_err(|e| Failure::data(e.to_string()))?;
        summary
    };
    let text = serde_json::to_string(&summary).map_err(|e| Failure::data(e.to_string()))?;
    if args.out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    Ok(())
}

pub fn validate(dataset: &Path, kb: &Path) -> Outcome {
    let kb = open_kb(kb)?;
    let file = File::open(dataset)
        .map_err(|e| Failure::user(format!("cannot open {}: {e}", dataset.display())))?;
    let report = validate_dataset(&kb, file, REPORTED_VIOLATIONS)?;
    print_json(&report)?;
    if report.is_clean() {
        return Ok(());
    }
    let listed: Vec<String> = report
        .violations
        .iter()
        .map(|v| match &v.id {
            Some(id) => format!("line {} ({id}): {}", v.line, v.reason),
            None => format!("line {}: {}", v.line, v.reason),
        })
        .collect();
    Err(Failure::data(format!(
        "{} of {} questions failed validation\n  {}",
        report.violation_count,
        report.checked,
        listed.join("\n  ")
    )))
}

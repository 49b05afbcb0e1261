//! Reader for ConceptNet 5.x assertion dumps.
//!
//! Each line has five tab-separated columns: assertion uri, relation uri,
//! start concept uri, end concept uri, and a JSON metadata blob. Only the
//! middle three are used; weights and sources are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::time::Instant;

use flate2::read::MultiGzDecoder;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{KbBuilder, KnowledgeBase};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LanguageFilter {
    /// Keep rows whose start and end concepts both carry `/c/<lang>/`.
    Only(String),
    /// Keep every concept-to-concept row.
    Any,
}

impl Default for LanguageFilter {
    fn default() -> Self {
        LanguageFilter::Only("en".to_owned())
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub filter: LanguageFilter,
    /// Abort on the first malformed row instead of counting it.
    pub strict: bool,
}

/// Counts gathered while ingesting a dump.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines: u64,
    /// Distinct triples in the resulting knowledge base.
    pub kept: u64,
    pub duplicates: u64,
    pub rejected: u64,
    pub non_english: u64,
    pub entities: u64,
    pub relations: u64,
    /// Hex SHA-256 of the raw input bytes (before decompression).
    pub input_sha256: String,
    pub elapsed_ms: u64,
}

enum Row {
    Keep(String, String, String),
    Filtered,
}

/// Normalizes a concept uri such as `/c/en/sit_up/v` to `sit up`.
///
/// Returns `Ok(None)` when the concept is outside the language filter or is
/// not a concept uri at all (ConceptNet's `ExternalURL` rows end in plain
/// URLs).
pub fn normalize_concept(uri: &str, filter: &LanguageFilter) -> Result<Option<String>, String> {
    let Some(rest) = uri.strip_prefix("/c/") else {
        return Ok(None);
    };
    let mut segments = rest.split('/');
    let lang = segments.next().unwrap_or_default();
    if let LanguageFilter::Only(want) = filter {
        if lang != want {
            return Ok(None);
        }
    }
    let term = segments.next().unwrap_or_default();
    let surface = term
        .split('_')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if surface.trim().is_empty() {
        return Err(format!("concept uri {uri:?} has no term"));
    }
    Ok(Some(surface))
}

fn relation_name(uri: &str) -> Result<&str, String> {
    let name = uri
        .strip_prefix("/r/")
        .ok_or_else(|| format!("relation uri {uri:?} lacks the /r/ prefix"))?
        .trim_end_matches('/');
    if name.is_empty() {
        return Err(format!("relation uri {uri:?} is empty"));
    }
    Ok(name)
}

fn parse_row(line: &str, filter: &LanguageFilter) -> Result<Row, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 4 {
        return Err(format!(
            "expected 5 tab-separated fields, found {}",
            fields.len()
        ));
    }
    let relation = relation_name(fields[1])?;
    let head = normalize_concept(fields[2], filter)?;
    let tail = normalize_concept(fields[3], filter)?;
    match (head, tail) {
        (Some(h), Some(t)) => Ok(Row::Keep(h, relation.to_owned(), t)),
        _ => Ok(Row::Filtered),
    }
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Parses a plain or gzip-compressed dump from any reader.
pub fn parse_kb<R: Read>(
    reader: R,
    options: &ParseOptions,
) -> Result<(KnowledgeBase, IngestReport)> {
    let started = Instant::now();
    let mut hashing = HashingReader {
        inner: reader,
        hasher: Sha256::new(),
    };
    let (kb, mut report) = {
        let mut buffered = BufReader::with_capacity(1 << 16, &mut hashing);
        let gzipped = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
        if gzipped {
            parse_lines(
                BufReader::with_capacity(1 << 16, MultiGzDecoder::new(buffered)),
                options,
            )?
        } else {
            parse_lines(buffered, options)?
        }
    };
    // drain anything the decoder left behind so the checksum covers the whole input
    std::io::copy(&mut hashing, &mut std::io::sink())?;
    report.input_sha256 = hex::encode(hashing.hasher.finalize());
    report.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok((kb, report))
}

pub fn parse_kb_file(path: &Path, options: &ParseOptions) -> Result<(KnowledgeBase, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_kb(file, options)
}

fn parse_lines<R: BufRead>(
    mut reader: R,
    options: &ParseOptions,
) -> Result<(KnowledgeBase, IngestReport)> {
    let mut report = IngestReport::default();
    let mut builder = KbBuilder::default();
    let mut raw = Vec::new();
    loop {
        raw.clear();
        if reader.read_until(b'\n', &mut raw)? == 0 {
            break;
        }
        report.lines += 1;
        let outcome = match std::str::from_utf8(&raw) {
            Ok(line) => {
                let line = line.trim_end_matches(['\n', '\r']);
                if line.is_empty() {
                    continue;
                }
                parse_row(line, &options.filter)
            }
            Err(e) => Err(format!("invalid utf-8: {e}")),
        };
        match outcome {
            Ok(Row::Keep(h, r, t)) => builder.insert(&h, &r, &t),
            Ok(Row::Filtered) => report.non_english += 1,
            Err(reason) if options.strict => {
                return Err(Error::MalformedLine {
                    line: report.lines,
                    reason,
                })
            }
            Err(reason) => {
                log::debug!("skipping line {}: {reason}", report.lines);
                report.rejected += 1;
            }
        }
    }
    let accepted = builder.triples.len() as u64;
    let kb = builder.build();
    if kb.is_empty() {
        return Err(Error::EmptyKb {
            lines: report.lines,
        });
    }
    report.kept = kb.triple_count() as u64;
    report.duplicates = accepted - report.kept;
    report.entities = kb.entity_count() as u64;
    report.relations = kb.relation_count() as u64;
    Ok((kb, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn row(rel: &str, start: &str, end: &str) -> String {
        format!("/a/[{rel}/,{start}/,{end}/]\t{rel}\t{start}\t{end}\t{{\"weight\": 1.0}}\n")
    }

    fn english() -> ParseOptions {
        ParseOptions::default()
    }

    #[test]
    fn antonym_row_becomes_a_triple() {
        let dump = row("/r/Antonym", "/c/en/arise", "/c/en/sit");
        let (kb, report) = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(report.kept, 1);
        let arise = kb.entity_id("arise").unwrap();
        let sit = kb.entity_id("sit").unwrap();
        let antonym = kb.relation_id("Antonym").unwrap();
        assert_eq!(kb.tails_of(arise, antonym).unwrap(), &[sit]);
    }

    #[test]
    fn french_rows_are_filtered() {
        let dump = row("/r/RelatedTo", "/c/fr/chien", "/c/en/dog")
            + &row("/r/IsA", "/c/en/dog", "/c/en/animal");
        let (kb, report) = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(report.non_english, 1);
        assert_eq!(report.kept, 1);
        assert!(kb.entity_id("chien").is_none());
    }

    #[test]
    fn any_language_keeps_both() {
        let dump = row("/r/RelatedTo", "/c/fr/chien", "/c/en/dog");
        let opts = ParseOptions {
            filter: LanguageFilter::Any,
            strict: false,
        };
        let (kb, _) = parse_kb(dump.as_bytes(), &opts).unwrap();
        assert!(kb.entity_id("chien").is_some());
    }

    #[test]
    fn concepts_are_normalized() {
        let f = LanguageFilter::default();
        assert_eq!(
            normalize_concept("/c/en/sit_up/v", &f).unwrap().as_deref(),
            Some("sit up")
        );
        assert_eq!(
            normalize_concept("/c/en/Sing_in__Church/v/wn/verb", &f)
                .unwrap()
                .as_deref(),
            Some("sing in church")
        );
        assert_eq!(normalize_concept("http://dbpedia.org/x", &f).unwrap(), None);
        assert!(normalize_concept("/c/en/", &f).is_err());
    }

    #[test]
    fn relation_paths_are_stripped() {
        let dump = row("/r/dbpedia/genre", "/c/en/a", "/c/en/b");
        let (kb, _) = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(kb.relation_names(), ["dbpedia/genre"]);
    }

    #[test]
    fn malformed_rows_are_counted_or_fatal() {
        let dump = row("/r/IsA", "/c/en/dog", "/c/en/animal")
            + "garbage line\n"
            + &row("/r/IsA", "/c/en/cat", "/c/en/animal");
        let (kb, report) = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(report.rejected, 1);
        assert_eq!(report.lines, 3);
        assert_eq!(kb.triple_count(), 2);

        let strict = ParseOptions {
            strict: true,
            ..english()
        };
        match parse_kb(dump.as_bytes(), &strict) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed line error, got {other:?}"),
        }
    }

    #[test]
    fn empty_result_is_an_error() {
        let dump = row("/r/IsA", "/c/de/hund", "/c/de/tier");
        assert!(matches!(
            parse_kb(dump.as_bytes(), &english()),
            Err(Error::EmptyKb { lines: 1 })
        ));
        assert!(matches!(
            parse_kb(&b""[..], &english()),
            Err(Error::EmptyKb { lines: 0 })
        ));
    }

    #[test]
    fn duplicates_are_counted() {
        let dump = row("/r/IsA", "/c/en/dog", "/c/en/animal")
            + &row("/r/IsA", "/c/en/dog/n", "/c/en/animal/n");
        let (_, report) = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(report.kept, 1);
        assert_eq!(report.duplicates, 1);
    }

    #[test]
    fn gzip_input_matches_plain_input() {
        let dump = row("/r/Antonym", "/c/en/arise", "/c/en/sit")
            + &row("/r/RelatedTo", "/c/en/sit", "/c/en/sit_up");
        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        gz.write_all(dump.as_bytes()).unwrap();
        let compressed = gz.finish().unwrap();
        let (plain, _) = parse_kb(dump.as_bytes(), &english()).unwrap();
        let (unzipped, report) = parse_kb(&compressed[..], &english()).unwrap();
        assert_eq!(plain, unzipped);
        assert_eq!(
            report.input_sha256,
            hex::encode(Sha256::digest(&compressed))
        );
    }

    #[test]
    fn reparsing_is_idempotent() {
        let dump = row("/r/IsA", "/c/en/b", "/c/en/a") + &row("/r/HasA", "/c/en/a", "/c/en/c");
        let first = parse_kb(dump.as_bytes(), &english()).unwrap();
        let second = parse_kb(dump.as_bytes(), &english()).unwrap();
        assert_eq!(first.0, second.0);
        assert_eq!(first.1.kept, second.1.kept);
        assert_eq!(first.1.input_sha256, second.1.input_sha256);
    }
}

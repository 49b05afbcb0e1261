//! Independent re-check of a generated dataset against a knowledge base.

use std::io::{BufRead, BufReader, Read};

use flate2::read::MultiGzDecoder;
use serde::Serialize;

use crate::error::Result;
use crate::kb::{KnowledgeBase, SubgraphPair};
use crate::logic::{eval_form_membership, LogicalForm};
use crate::pipeline::MultipleChoiceQuestion;
use crate::sampler::Strategy;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub line: u64,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checked: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks one parsed record. Returns the first problem found.
pub fn check_question(kb: &KnowledgeBase, q: &MultipleChoiceQuestion) -> Result<(), String> {
    if q.choices.len() < 2 {
        return Err(format!("only {} choices", q.choices.len()));
    }
    if q.answer >= q.choices.len() {
        return Err(format!(
            "answer index {} out of range for {} choices",
            q.answer,
            q.choices.len()
        ));
    }
    for (i, c) in q.choices.iter().enumerate() {
        if q.choices[..i].contains(c) {
            return Err(format!("choice {c:?} appears twice"));
        }
    }
    if !q.question.starts_with("which of the following") || !q.question.ends_with('?') {
        return Err("question text is not a which-of-the-following question".into());
    }
    q.meta
        .strategy
        .parse::<Strategy>()
        .map_err(|e| format!("meta.strategy: {e}"))?;
    let form = LogicalForm::from_index(q.meta.form)
        .ok_or_else(|| format!("form {} outside 0..=13", q.meta.form))?;
    let entity = |name: &str| {
        kb.entity_id(name)
            .ok_or_else(|| format!("unknown entity {name:?}"))
    };
    let relation = |name: &str| {
        kb.relation_id(name)
            .ok_or_else(|| format!("unknown relation {name:?}"))
    };
    let sg = SubgraphPair {
        a: entity(&q.meta.head)?,
        r1: relation(&q.meta.rel1)?,
        b: entity(&q.meta.bridge)?,
        r2: relation(&q.meta.rel2)?,
        c: entity(&q.meta.tail)?,
    };
    if !sg.is_well_formed() || !kb.contains(sg.first()) || !kb.contains(sg.second()) {
        return Err(format!(
            "{} is not a two-hop subgraph of the kb",
            sg.describe(kb)
        ));
    }
    for (i, c) in q.choices.iter().enumerate() {
        let x = entity(c)?;
        let correct = eval_form_membership(kb, &sg, form, x);
        if i == q.answer && !correct {
            return Err(format!(
                "keyed answer {c:?} is not in the answer set of form #{}",
                form.index()
            ));
        }
        if i != q.answer && correct {
            return Err(format!(
                "distractor {c:?} is in the answer set of form #{}",
                form.index()
            ));
        }
    }
    Ok(())
}

/// Validates a JSONL dataset (plain or gzip). Stops collecting details
/// after `max_details` violations but keeps counting.
pub fn validate_dataset<R: Read>(
    kb: &KnowledgeBase,
    input: R,
    max_details: usize,
) -> Result<ValidationReport> {
    let mut reader = BufReader::new(input);
    if reader.fill_buf()?.starts_with(&[0x1f, 0x8b]) {
        return validate_lines(kb, BufReader::new(MultiGzDecoder::new(reader)), max_details);
    }
    validate_lines(kb, reader, max_details)
}

fn validate_lines<R: BufRead>(
    kb: &KnowledgeBase,
    reader: R,
    max_details: usize,
) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.checked += 1;
        let outcome = match serde_json::from_str::<MultipleChoiceQuestion>(&line) {
            Ok(q) => check_question(kb, &q).map_err(|reason| (Some(q.id), reason)),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_str()).map(str::to_owned));
                Err((id, format!("schema: {e}")))
            }
        };
        if let Err((id, reason)) = outcome {
            report.violation_count += 1;
            if report.violations.len() < max_details {
                report.violations.push(Violation {
                    line: lineno,
                    id,
                    reason,
                });
            }
        }
    }
    Ok(report)
}

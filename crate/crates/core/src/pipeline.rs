//! On-the-fly dataset generation.
//!
//! Each draw id gets its own ChaCha stream derived from `(seed, draw id)`,
//! so the outcome of a draw does not depend on which worker computed it.
//! Workers compute batches of consecutive draw ids and the merge step
//! consumes them strictly in draw-id order; the output is therefore
//! byte-identical for any shard count.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, RelationId, SubgraphIndex, SubgraphPair};
use crate::logic::{
    compute_partition, compute_validity_mask, enumerate_forms, LogicalForm, S4Mode, ValidityMask,
    DEFAULT_EXACT_THRESHOLD,
};
use crate::sampler::{sample_distractors, select_correct_answer, Strategy};
use crate::templater::{realize_question, RelationLexicon};

/// ConceptNet 5 English-only triple count used as the scale reference.
pub const REFERENCE_ENGLISH_TRIPLES: u64 = 3_098_816;
/// Two-hop subgraph count over that triple set.
pub const REFERENCE_SUBGRAPHS: u64 = 167_395_947;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Count {
    Limit(u64),
    /// One draw per subgraph, in enumeration order.
    All,
}

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(Count::All);
        }
        match s.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(Count::Limit(n)),
            _ => Err(format!(
                "count must be a positive integer or \"all\", got {s:?}"
            )),
        }
    }
}

/// Parses `all`, a comma list (`1,2,5`) or ranges (`0-6,9`).
pub fn parse_form_list(text: &str) -> Result<ValidityMask> {
    let text = text.trim();
    if text == "all" {
        return Ok(ValidityMask::ALL);
    }
    let bad = |part: &str| {
        Error::InvalidConfig(format!("bad form list entry {part:?} (forms are 0..=13)"))
    };
    let parse_one = |s: &str| {
        s.trim()
            .parse::<u8>()
            .ok()
            .and_then(LogicalForm::from_index)
            .ok_or_else(|| bad(s))
    };
    let mut forms = Vec::new();
    for part in text.split(',') {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (parse_one(lo)?, parse_one(hi)?);
                if lo > hi {
                    return Err(bad(part));
                }
                forms.extend((lo.index()..=hi.index()).filter_map(LogicalForm::from_index));
            }
            None => forms.push(parse_one(part)?),
        }
    }
    Ok(forms.into_iter().collect())
}

#[derive(Clone, Debug)]
pub struct GenerationConfig {
    pub seed: u64,
    pub count: Count,
    pub strategy: Strategy,
    /// Options per question, the keyed answer included.
    pub choices: usize,
    pub forms: ValidityMask,
    /// `None` picks exact or approximate from `exact_threshold`.
    pub s4_mode: Option<S4Mode>,
    pub exact_threshold: usize,
    pub shards: usize,
    /// Drop questions whose text and keyed answer were already emitted.
    pub dedup: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            seed: 0,
            count: Count::Limit(1000),
            strategy: Strategy::UniformCell,
            choices: 3,
            forms: ValidityMask::ALL,
            s4_mode: None,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            shards: 1,
            dedup: false,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.forms.count() == 0 {
            return Err(Error::InvalidConfig("form filter is empty".into()));
        }
        if self.choices < 2 {
            return Err(Error::InvalidConfig(format!(
                "choices must be at least 2, got {}",
                self.choices
            )));
        }
        if self.count == Count::Limit(0) {
            return Err(Error::InvalidConfig("count must be at least 1".into()));
        }
        if self.shards == 0 {
            return Err(Error::InvalidConfig("shards must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_s4_mode(&self, kb: &KnowledgeBase) -> S4Mode {
        self.s4_mode
            .unwrap_or_else(|| S4Mode::auto(kb.entity_count(), self.exact_threshold))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionMeta {
    pub head: String,
    pub rel1: String,
    pub bridge: String,
    pub rel2: String,
    pub tail: String,
    pub form: u8,
    pub strategy: String,
    #[serde(skip)]
    pub draw: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipleChoiceQuestion {
    pub id: String,
    pub question: String,
    pub choices: Vec<String>,
    pub answer: usize,
    pub meta: QuestionMeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    /// No form is both valid for the subgraph and allowed by the filter.
    NoEligibleForm,
    /// The drawn form has fewer wrong answers than the question needs.
    NoDistractorPool,
    Duplicate,
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DrawOutcome {
    Question(MultipleChoiceQuestion),
    Skipped(SkipReason),
}

/// Stable id: hex prefix of SHA-256 over the chain, form and draw id.
pub fn question_id(kb: &KnowledgeBase, sg: &SubgraphPair, form: LogicalForm, draw: u64) -> String {
    let key = format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        kb.entity(sg.a),
        kb.relation(sg.r1),
        kb.entity(sg.b),
        kb.relation(sg.r2),
        kb.entity(sg.c),
        form.index(),
        draw
    );
    hex::encode(&Sha256::digest(key.as_bytes())[..16])
}

/// Subgraph selection, form choice, realization and answer sampling for
/// one knowledge base and configuration.
pub struct Generator<'kb> {
    kb: &'kb KnowledgeBase,
    index: SubgraphIndex<'kb>,
    lexicon: RelationLexicon,
    cfg: GenerationConfig,
    mode: S4Mode,
}

impl<'kb> Generator<'kb> {
    pub fn new(
        kb: &'kb KnowledgeBase,
        lexicon: RelationLexicon,
        cfg: GenerationConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let index = SubgraphIndex::build(kb);
        if index.total() == 0 {
            return Err(Error::EmptyDataset(
                "the knowledge base has no two-hop subgraphs".into(),
            ));
        }
        let mode = cfg.resolved_s4_mode(kb);
        Ok(Generator {
            kb,
            index,
            lexicon,
            cfg,
            mode,
        })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.cfg
    }

    pub fn s4_mode(&self) -> S4Mode {
        self.mode
    }

    pub fn subgraph_total(&self) -> u64 {
        self.index.total()
    }

    fn rng_for(&self, draw: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(draw);
        rng
    }

    /// Runs draw `draw` to completion. Pure in `(kb, cfg, draw)`.
    pub fn draw(&self, draw: u64) -> Result<DrawOutcome> {
        let mut rng = self.rng_for(draw);
        let rank = match self.cfg.count {
            Count::All => draw,
            Count::Limit(_) => rng.gen_range(0..self.index.total()),
        };
        let sg = self.index.get(rank).ok_or_else(|| {
            Error::InvalidConfig(format!("draw {draw} is past the last subgraph"))
        })?;
        let kb = self.kb;
        let partition = compute_partition(kb, &sg, self.mode)?;
        let eligible = compute_validity_mask(&partition).intersect(self.cfg.forms);
        if eligible.count() == 0 {
            return Ok(DrawOutcome::Skipped(SkipReason::NoEligibleForm));
        }
        let pick = rng.gen_range(0..eligible.count() as usize);
        let form = eligible.forms().nth(pick).expect("pick < count");

        let question =
            realize_question(&sg, form, &self.lexicon, kb).map_err(|e| Error::Generation {
                context: sg.describe(kb),
                source: Box::new(e),
            })?;
        let correct = select_correct_answer(&partition, form, &mut rng)?;
        let distractors = match sample_distractors(
            kb,
            &partition,
            &sg,
            form,
            self.cfg.choices - 1,
            self.cfg.strategy,
            &mut rng,
        ) {
            Ok(d) => d,
            Err(Error::NoDistractor(_) | Error::InsufficientPool { .. }) => {
                return Ok(DrawOutcome::Skipped(SkipReason::NoDistractorPool))
            }
            Err(e) => return Err(e),
        };
        let mut options = Vec::with_capacity(self.cfg.choices);
        options.push(correct);
        options.extend(distractors);
        options.shuffle(&mut rng);
        let answer = options
            .iter()
            .position(|&x| x == correct)
            .expect("correct answer is an option");

        Ok(DrawOutcome::Question(MultipleChoiceQuestion {
            id: question_id(kb, &sg, form, draw),
            question,
            choices: options.iter().map(|&x| kb.entity(x).to_owned()).collect(),
            answer,
            meta: QuestionMeta {
                head: kb.entity(sg.a).to_owned(),
                rel1: kb.relation(sg.r1).to_owned(),
                bridge: kb.entity(sg.b).to_owned(),
                rel2: kb.relation(sg.r2).to_owned(),
                tail: kb.entity(sg.c).to_owned(),
                form: form.index(),
                strategy: self.cfg.strategy.name().to_owned(),
                draw,
            },
        }))
    }

    /// The question stream. Errors end the stream after being yielded once.
    pub fn questions(&self) -> Result<Questions<'_, 'kb>> {
        let pool = if self.cfg.shards > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.cfg.shards)
                    .build()
                    .map_err(|e| {
                        Error::InvalidConfig(format!(
                            "cannot start {} workers: {e}",
                            self.cfg.shards
                        ))
                    })?,
            )
        } else {
            None
        };
        Ok(Questions {
            gen: self,
            pool,
            next_draw: 0,
            buffer: VecDeque::new(),
            seen: HashSet::new(),
            stats: GenerationStats::default(),
            finished: false,
        })
    }
}

/// Counters kept while streaming. `emitted + skipped == attempted`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GenerationStats {
    pub attempted: u64,
    pub emitted: u64,
    pub skipped: u64,
    pub skipped_no_eligible_form: u64,
    pub skipped_no_distractor_pool: u64,
    pub skipped_duplicate: u64,
}

impl GenerationStats {
    fn skip(&mut self, reason: SkipReason) {
        self.skipped += 1;
        match reason {
            SkipReason::NoEligibleForm => self.skipped_no_eligible_form += 1,
            SkipReason::NoDistractorPool => self.skipped_no_distractor_pool += 1,
            SkipReason::Duplicate => self.skipped_duplicate += 1,
        }
    }
}

pub struct Questions<'g, 'kb> {
    gen: &'g Generator<'kb>,
    pool: Option<rayon::ThreadPool>,
    next_draw: u64,
    buffer: VecDeque<Result<DrawOutcome>>,
    seen: HashSet<[u8; 32]>,
    stats: GenerationStats,
    finished: bool,
}

impl Questions<'_, '_> {
    pub fn stats(&self) -> &GenerationStats {
        &self.stats
    }

    /// Draws allowed before giving up on a `Limit` run.
    fn attempt_budget(limit: u64) -> u64 {
        limit.saturating_mul(100).saturating_add(10_000)
    }

    fn refill(&mut self) {
        let gen = self.gen;
        let end = match gen.cfg.count {
            Count::All => gen.index.total(),
            Count::Limit(limit) => {
                let wanted = limit - self.stats.emitted;
                let batch = wanted.clamp(64, 4096) * gen.cfg.shards as u64;
                self.next_draw.saturating_add(batch)
            }
        };
        let end = end.min(self.next_draw.saturating_add(65_536));
        let draws = self.next_draw..end;
        self.next_draw = end;
        let outcomes: Vec<Result<DrawOutcome>> = match &self.pool {
            Some(pool) => pool.install(|| draws.into_par_iter().map(|d| gen.draw(d)).collect()),
            None => draws.map(|d| gen.draw(d)).collect(),
        };
        self.buffer.extend(outcomes);
    }

    fn finish_with(&mut self, err: Error) -> Option<Result<MultipleChoiceQuestion>> {
        self.finished = true;
        Some(Err(err))
    }
}

impl Iterator for Questions<'_, '_> {
    type Item = Result<MultipleChoiceQuestion>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            if let Count::Limit(limit) = self.gen.cfg.count {
                if self.stats.emitted >= limit {
                    self.finished = true;
                    return None;
                }
                if self.stats.attempted >= Self::attempt_budget(limit) {
                    let err = if self.stats.emitted == 0 {
                        Error::EmptyDataset(format!(
                            "{} draws produced no question",
                            self.stats.attempted
                        ))
                    } else {
                        Error::SkipBudgetExhausted {
                            attempted: self.stats.attempted,
                            emitted: self.stats.emitted,
                        }
                    };
                    return self.finish_with(err);
                }
            }
            if self.buffer.is_empty() {
                if self.gen.cfg.count == Count::All && self.next_draw >= self.gen.index.total() {
                    self.finished = true;
                    if self.stats.emitted == 0 {
                        return Some(Err(Error::EmptyDataset(
                            "no subgraph yielded a valid question".into(),
                        )));
                    }
                    return None;
                }
                self.refill();
            }
            let outcome = self.buffer.pop_front().expect("refilled");
            self.stats.attempted += 1;
            match outcome {
                Err(e) => return self.finish_with(e),
                Ok(DrawOutcome::Skipped(reason)) => self.stats.skip(reason),
                Ok(DrawOutcome::Question(q)) => {
                    if self.gen.cfg.dedup {
                        let mut h = Sha256::new();
                        h.update(q.question.as_bytes());
                        h.update([0]);
                        h.update(q.choices[q.answer].as_bytes());
                        if !self.seen.insert(h.finalize().into()) {
                            self.stats.skip(SkipReason::Duplicate);
                            continue;
                        }
                    }
                    self.stats.emitted += 1;
                    return Some(Ok(q));
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Tsv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(OutputFormat::Jsonl),
            "tsv" => Ok(OutputFormat::Tsv),
            other => Err(format!("unknown format {other:?} (expected jsonl or tsv)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Jsonl => "jsonl",
            OutputFormat::Tsv => "tsv",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EmitSummary {
    pub written: u64,
    /// Question counts indexed by form.
    pub per_form: [u64; LogicalForm::COUNT],
    pub per_strategy: BTreeMap<String, u64>,
    pub wall_ms: u64,
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Writes every question to `out`; the first stream error stops the write
/// and is returned.
pub fn emit<W, I>(stream: I, format: OutputFormat, out: W) -> Result<EmitSummary>
where
    W: Write,
    I: IntoIterator<Item = Result<MultipleChoiceQuestion>>,
{
    let started = Instant::now();
    let mut out = std::io::BufWriter::new(out);
    let mut summary = EmitSummary::default();
    let mut header_done = false;
    for item in stream {
        let q = item?;
        let io = |source| Error::PartialWrite {
            written: summary.written,
            source,
        };
        match format {
            OutputFormat::Jsonl => {
                serde_json::to_writer(&mut out, &q)?;
                out.write_all(b"\n").map_err(io)?;
            }
            OutputFormat::Tsv => {
                if !header_done {
                    let mut cols = vec!["id".to_owned(), "question".to_owned()];
                    cols.extend((0..q.choices.len()).map(|i| format!("choice_{i}")));
                    cols.extend(
                        [
                            "answer", "head", "rel1", "bridge", "rel2", "tail", "form", "strategy",
                        ]
                        .map(String::from),
                    );
                    writeln!(out, "{}", cols.join("\t")).map_err(io)?;
                    header_done = true;
                }
                let mut row = vec![tsv_field(&q.id), tsv_field(&q.question)];
                row.extend(q.choices.iter().map(|c| tsv_field(c)));
                row.push(q.answer.to_string());
                let m = &q.meta;
                row.extend([&m.head, &m.rel1, &m.bridge, &m.rel2, &m.tail].map(|s| tsv_field(s)));
                row.push(m.form.to_string());
                row.push(tsv_field(&m.strategy));
                writeln!(out, "{}", row.join("\t")).map_err(io)?;
            }
        }
        summary.written += 1;
        summary.per_form[q.meta.form as usize] += 1;
        *summary
            .per_strategy
            .entry(q.meta.strategy.clone())
            .or_insert(0) += 1;
    }
    out.flush().map_err(|source| Error::PartialWrite {
        written: summary.written,
        source,
    })?;
    summary.wall_ms = started.elapsed().as_millis() as u64;
    Ok(summary)
}

/// Everything the `generate` command reports after a run.
#[derive(Clone, Debug, Serialize)]
pub struct DatasetSummary {
    pub kb_fingerprint: String,
    pub seed: u64,
    pub strategy: String,
    pub choices: usize,
    pub forms: Vec<u8>,
    pub s4_mode: S4Mode,
    pub shards: usize,
    pub format: OutputFormat,
    pub subgraphs: u64,
    #[serde(flatten)]
    pub generation: GenerationStats,
    pub per_form: [u64; LogicalForm::COUNT],
    pub per_strategy: BTreeMap<String, u64>,
    pub wall_ms: u64,
}

/// Generates and writes a dataset in one pass.
pub fn generate_to_writer<W: Write>(
    kb: &KnowledgeBase,
    lexicon: RelationLexicon,
    cfg: GenerationConfig,
    format: OutputFormat,
    out: W,
) -> Result<DatasetSummary> {
    let started = Instant::now();
    let gen = Generator::new(kb, lexicon, cfg)?;
    let mut stream = gen.questions()?;
    let emitted = emit(&mut stream, format, out)?;
    let cfg = gen.config();
    Ok(DatasetSummary {
        kb_fingerprint: kb.fingerprint(),
        seed: cfg.seed,
        strategy: cfg.strategy.name().to_owned(),
        choices: cfg.choices,
        forms: cfg.forms.forms().map(|f| f.index()).collect(),
        s4_mode: gen.s4_mode(),
        shards: cfg.shards,
        format,
        subgraphs: gen.subgraph_total(),
        generation: stream.stats().clone(),
        per_form: emitted.per_form,
        per_strategy: emitted.per_strategy,
        wall_ms: started.elapsed().as_millis() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationPairCount {
    pub rel1: String,
    pub rel2: String,
    pub count: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KbStats {
    pub entities: u64,
    pub relations: u64,
    pub triples: u64,
    pub subgraphs: u64,
    pub reference_triples: u64,
    pub reference_subgraphs: u64,
    /// `triples / reference_triples`
    pub triple_ratio: f64,
    pub subgraph_ratio: f64,
    /// Sorted by descending count, then relation names.
    pub pair_histogram: Vec<RelationPairCount>,
}

pub fn dataset_stats(kb: &KnowledgeBase) -> KbStats {
    let hist = kb.subgraph_histogram();
    let subgraphs: u64 = hist.values().sum();
    let name = |r: RelationId| kb.relation(r).to_owned();
    let mut pair_histogram: Vec<RelationPairCount> = hist
        .into_iter()
        .map(|((r1, r2), count)| RelationPairCount {
            rel1: name(r1),
            rel2: name(r2),
            count,
        })
        .collect();
    pair_histogram.sort_by(|x, y| {
        y.count
            .cmp(&x.count)
            .then_with(|| x.rel1.cmp(&y.rel1))
            .then_with(|| x.rel2.cmp(&y.rel2))
    });
    let triples = kb.triple_count() as u64;
    KbStats {
        entities: kb.entity_count() as u64,
        relations: kb.relation_count() as u64,
        triples,
        subgraphs,
        reference_triples: REFERENCE_ENGLISH_TRIPLES,
        reference_subgraphs: REFERENCE_SUBGRAPHS,
        triple_ratio: triples as f64 / REFERENCE_ENGLISH_TRIPLES as f64,
        subgraph_ratio: subgraphs as f64 / REFERENCE_SUBGRAPHS as f64,
        pair_histogram,
    }
}

/// Form indices in a mask, for reporting.
pub fn form_indices(mask: ValidityMask) -> Vec<u8> {
    enumerate_forms()
        .into_iter()
        .filter(|f| mask.is_valid(*f))
        .map(|f| f.index())
        .collect()
}

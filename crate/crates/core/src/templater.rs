//! Surface realization of a (subgraph, logical form) pair as a question.
//!
//! Every relation maps to an affirmative and a negative predicate phrase.
//! The first predicate of a form asks for the tail of `a -r1-> ?`, the second
//! for the head of `? -r2-> c`. Asymmetric relations can carry separate
//! `inverse_*` phrases for the tail-asking slot; symmetric ones (Antonym,
//! RelatedTo) read the same in both directions.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, RelationId, SubgraphPair};
use crate::logic::LogicalForm;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationPhrase {
    /// Phrase for `? -rel-> c`, e.g. "is capable of".
    pub affirmative: String,
    pub negative: String,
    /// Phrase for `a -rel-> ?` when it differs from `affirmative`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_affirmative: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_negative: Option<String>,
}

impl RelationPhrase {
    pub fn new(affirmative: &str, negative: &str) -> Self {
        RelationPhrase {
            affirmative: affirmative.to_owned(),
            negative: negative.to_owned(),
            inverse_affirmative: None,
            inverse_negative: None,
        }
    }

    fn with_inverse(mut self, affirmative: &str, negative: &str) -> Self {
        self.inverse_affirmative = Some(affirmative.to_owned());
        self.inverse_negative = Some(negative.to_owned());
        self
    }

    fn validate(&self, relation: &str) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidLexiconEntry {
            relation: relation.to_owned(),
            reason: reason.to_owned(),
        };
        if self.affirmative.trim().is_empty() {
            return Err(invalid("empty affirmative phrase"));
        }
        if !has_negation(&self.negative) {
            return Err(invalid("negative phrase lacks \"not\""));
        }
        match (&self.inverse_affirmative, &self.inverse_negative) {
            (None, None) => Ok(()),
            (Some(aff), Some(neg)) => {
                if aff.trim().is_empty() {
                    Err(invalid("empty inverse_affirmative phrase"))
                } else if !has_negation(neg) {
                    Err(invalid("inverse_negative phrase lacks \"not\""))
                } else {
                    Ok(())
                }
            }
            _ => Err(invalid(
                "inverse_affirmative and inverse_negative must be given together",
            )),
        }
    }
}

fn has_negation(phrase: &str) -> bool {
    phrase.split_whitespace().any(|w| w == "not")
}

/// Which end of a triple the question asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// `a -rel-> ?`
    Tail,
    /// `? -rel-> c`
    Head,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationLexicon {
    entries: BTreeMap<String, RelationPhrase>,
    fallback: bool,
}

impl Default for RelationLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RelationLexicon {
    pub fn builtin() -> Self {
        let entries = [
            (
                "Antonym",
                RelationPhrase::new("is an antonym of", "is not an antonym of"),
            ),
            (
                "AtLocation",
                RelationPhrase::new("is located at", "is not located at")
                    .with_inverse("is a location of", "is not a location of"),
            ),
            (
                "CapableOf",
                RelationPhrase::new("is capable of", "is not capable of")
                    .with_inverse("is an ability of", "is not an ability of"),
            ),
            (
                "Causes",
                RelationPhrase::new("causes", "does not cause")
                    .with_inverse("is caused by", "is not caused by"),
            ),
            (
                "Desires",
                RelationPhrase::new("desires", "does not desire")
                    .with_inverse("is desired by", "is not desired by"),
            ),
            (
                "HasA",
                RelationPhrase::new("has", "does not have")
                    .with_inverse("belongs to", "does not belong to"),
            ),
            (
                "HasProperty",
                RelationPhrase::new("has the property", "does not have the property")
                    .with_inverse("is a property of", "is not a property of"),
            ),
            (
                "HasSubevent",
                RelationPhrase::new("has the subevent", "does not have the subevent")
                    .with_inverse("is a subevent of", "is not a subevent of"),
            ),
            (
                "IsA",
                RelationPhrase::new("is a", "is not a")
                    .with_inverse("is a generalization of", "is not a generalization of"),
            ),
            (
                "MadeOf",
                RelationPhrase::new("is made of", "is not made of")
                    .with_inverse("is a material of", "is not a material of"),
            ),
            (
                "PartOf",
                RelationPhrase::new("is part of", "is not part of")
                    .with_inverse("has as a part", "does not have as a part"),
            ),
            (
                "RelatedTo",
                RelationPhrase::new("is related to", "is not related to"),
            ),
            (
                "Synonym",
                RelationPhrase::new("is a synonym of", "is not a synonym of"),
            ),
            (
                "UsedFor",
                RelationPhrase::new("is used for", "is not used for")
                    .with_inverse("is a use of", "is not a use of"),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        RelationLexicon {
            entries,
            fallback: true,
        }
    }

    pub fn empty() -> Self {
        RelationLexicon {
            entries: BTreeMap::new(),
            fallback: true,
        }
    }

    pub fn with_fallback(mut self, enabled: bool) -> Self {
        self.fallback = enabled;
        self
    }

    pub fn insert(&mut self, relation: &str, phrase: RelationPhrase) -> Option<RelationPhrase> {
        self.entries.insert(relation.to_owned(), phrase)
    }

    pub fn entries(&self) -> &BTreeMap<String, RelationPhrase> {
        &self.entries
    }

    pub fn resolve(&self, relation: &str) -> Result<Cow<'_, RelationPhrase>> {
        if let Some(p) = self.entries.get(relation) {
            return Ok(Cow::Borrowed(p));
        }
        if !self.fallback {
            return Err(Error::MissingLexiconEntry(relation.to_owned()));
        }
        let words = decamelize(relation);
        Ok(Cow::Owned(RelationPhrase::new(
            &format!("is {words} of"),
            &format!("is not {words} of"),
        )))
    }

    /// Predicate phrase for `relation` in `slot`, negated or not.
    pub fn phrase(&self, relation: &str, slot: Slot, negated: bool) -> Result<String> {
        let entry = self.resolve(relation)?;
        let text = match (slot, negated) {
            (Slot::Tail, false) => entry
                .inverse_affirmative
                .as_ref()
                .unwrap_or(&entry.affirmative),
            (Slot::Tail, true) => entry.inverse_negative.as_ref().unwrap_or(&entry.negative),
            (Slot::Head, false) => &entry.affirmative,
            (Slot::Head, true) => &entry.negative,
        };
        Ok(text.clone())
    }

    /// Pretty JSON with every entry, in the format [`parse_lexicon`] reads.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("lexicon serializes")
    }
}

/// `"HasSubevent"` → `"has subevent"`, `"dbpedia/genre"` → `"dbpedia genre"`.
pub fn decamelize(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    let mut prev_lower = false;
    for ch in name.chars() {
        if ch == '_' || ch == '/' || ch == '-' || ch.is_whitespace() {
            if !out.ends_with(' ') && !out.is_empty() {
                out.push(' ');
            }
            prev_lower = false;
            continue;
        }
        if ch.is_uppercase() && prev_lower && !out.ends_with(' ') {
            out.push(' ');
        }
        prev_lower = ch.is_lowercase() || ch.is_ascii_digit();
        out.extend(ch.to_lowercase());
    }
    out.trim_end().to_owned()
}

/// A problem in a lexicon file that did not stop loading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconWarning(pub String);

impl fmt::Display for LexiconWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// JSON object entries in document order, duplicates preserved.
struct OrderedEntries(Vec<(String, RelationPhrase)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = OrderedEntries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping relation names to phrase entries")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<OrderedEntries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RelationPhrase>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }

        de.deserialize_map(EntriesVisitor)
    }
}

/// Parses a lexicon document and merges it over the built-in defaults.
/// Duplicate keys keep the last entry and produce a warning.
pub fn parse_lexicon(text: &str) -> Result<(RelationLexicon, Vec<LexiconWarning>)> {
    let OrderedEntries(entries) = serde_json::from_str(text).map_err(|e| Error::LexiconParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut lexicon = RelationLexicon::builtin();
    let mut warnings = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (relation, phrase) in entries {
        phrase.validate(&relation)?;
        if !seen.insert(relation.clone()) {
            warnings.push(LexiconWarning(format!(
                "duplicate lexicon entry for {relation:?}; the last one wins"
            )));
        }
        lexicon.insert(&relation, phrase);
    }
    Ok((lexicon, warnings))
}

/// Reads a lexicon file, logging any warnings.
pub fn load_lexicon(path: &Path) -> Result<RelationLexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (lexicon, warnings) = parse_lexicon(&text)?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(lexicon)
}

/// Collapses runs of whitespace and drops spaces before `?` and `,`.
pub fn normalize_whitespace(text: &str) -> String {
    let joined = text.split_whitespace().collect::<Vec<_>>().join(" ");
    joined.replace(" ?", "?").replace(" ,", ",")
}

/// Builds the question text for `form` over `sg`.
pub fn realize_question(
    sg: &SubgraphPair,
    form: LogicalForm,
    lexicon: &RelationLexicon,
    kb: &KnowledgeBase,
) -> Result<String> {
    let first = |negated: bool| predicate(kb, lexicon, sg.r1, Slot::Tail, kb.entity(sg.a), negated);
    let second =
        |negated: bool| predicate(kb, lexicon, sg.r2, Slot::Head, kb.entity(sg.c), negated);
    let body = match form.index() {
        0 => format!("{} and meanwhile {}", first(false)?, second(true)?),
        1 => format!("{} and meanwhile {}", first(false)?, second(false)?),
        2 => first(false)?,
        3 => format!("{} and meanwhile {}", first(true)?, second(false)?),
        4 => format!(
            "{} or {}, but not both of them",
            first(false)?,
            second(false)?
        ),
        5 => second(false)?,
        6 => format!("{} or {}", first(false)?, second(false)?),
        7 => format!("{} and {}", first(true)?, second(true)?),
        8 => second(true)?,
        9 => format!(
            "{} and {}, or neither of them",
            first(false)?,
            second(false)?
        ),
        10 => format!("{} or {}", first(false)?, second(true)?),
        11 => first(true)?,
        12 => format!("{} or {}", first(true)?, second(true)?),
        13 => format!("{} or {}", first(true)?, second(false)?),
        _ => unreachable!("LogicalForm index is always below 14"),
    };
    Ok(normalize_whitespace(&format!(
        "which of the following {body}?"
    )))
}

fn predicate(
    kb: &KnowledgeBase,
    lexicon: &RelationLexicon,
    relation: RelationId,
    slot: Slot,
    entity: &str,
    negated: bool,
) -> Result<String> {
    let phrase = lexicon.phrase(kb.relation(relation), slot, negated)?;
    Ok(format!("{phrase} {entity}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arise_kb() -> (KnowledgeBase, SubgraphPair) {
        let kb = KnowledgeBase::from_named_triples([
            ("arise", "Antonym", "sit"),
            ("sit", "RelatedTo", "sit up"),
        ]);
        let sg = SubgraphPair {
            a: kb.entity_id("arise").unwrap(),
            r1: kb.relation_id("Antonym").unwrap(),
            b: kb.entity_id("sit").unwrap(),
            r2: kb.relation_id("RelatedTo").unwrap(),
            c: kb.entity_id("sit up").unwrap(),
        };
        (kb, sg)
    }

    fn form(i: u8) -> LogicalForm {
        LogicalForm::from_index(i).unwrap()
    }

    #[test]
    fn builtin_phrases() {
        let lex = RelationLexicon::builtin();
        assert_eq!(
            lex.phrase("CapableOf", Slot::Head, false).unwrap(),
            "is capable of"
        );
        assert_eq!(
            lex.phrase("CapableOf", Slot::Head, true).unwrap(),
            "is not capable of"
        );
        assert_eq!(
            lex.phrase("RelatedTo", Slot::Head, false).unwrap(),
            "is related to"
        );
        assert_eq!(
            lex.phrase("RelatedTo", Slot::Tail, true).unwrap(),
            "is not related to"
        );
        for (name, entry) in lex.entries() {
            entry.validate(name).unwrap();
        }
        for required in [
            "Antonym",
            "RelatedTo",
            "CapableOf",
            "IsA",
            "HasA",
            "PartOf",
            "AtLocation",
            "Causes",
            "UsedFor",
            "Desires",
            "HasProperty",
            "Synonym",
            "MadeOf",
            "HasSubevent",
        ] {
            assert!(lex.entries().contains_key(required), "{required}");
        }
    }

    #[test]
    fn fallback_decamelizes() {
        let lex = RelationLexicon::builtin();
        assert_eq!(
            lex.phrase("MotivatedByGoal", Slot::Head, false).unwrap(),
            "is motivated by goal of"
        );
        assert_eq!(
            lex.phrase("MotivatedByGoal", Slot::Tail, true).unwrap(),
            "is not motivated by goal of"
        );
        assert_eq!(decamelize("dbpedia/genre"), "dbpedia genre");
        assert_eq!(decamelize("HasFirstSubevent"), "has first subevent");
        let strict = RelationLexicon::builtin().with_fallback(false);
        assert!(matches!(
            strict.resolve("MotivatedByGoal"),
            Err(Error::MissingLexiconEntry(_))
        ));
    }

    #[test]
    fn arise_examples() {
        let (kb, sg) = arise_kb();
        let lex = RelationLexicon::builtin();
        assert_eq!(
            realize_question(&sg, form(0), &lex, &kb).unwrap(),
            "which of the following is an antonym of arise and meanwhile is not related to sit up?"
        );
        assert_eq!(
            realize_question(&sg, form(4), &lex, &kb).unwrap(),
            "which of the following is an antonym of arise or is related to sit up, but not both of them?"
        );
    }

    #[test]
    fn override_changes_output() {
        let (kb, sg) = arise_kb();
        let (lex, warnings) = parse_lexicon(
            r#"{"Antonym": {"affirmative": "is the opposite of", "negative": "is not the opposite of"}}"#,
        )
        .unwrap();
        assert!(warnings.is_empty());
        assert_eq!(
            realize_question(&sg, form(2), &lex, &kb).unwrap(),
            "which of the following is the opposite of arise?"
        );
        // defaults survive the merge
        assert_eq!(
            lex.phrase("CapableOf", Slot::Head, false).unwrap(),
            "is capable of"
        );
    }

    #[test]
    fn duplicate_keys_warn_and_last_wins() {
        let (lex, warnings) = parse_lexicon(
            r#"{"Foo": {"affirmative": "is a", "negative": "is not a"},
                "Foo": {"affirmative": "is b", "negative": "is not b"}}"#,
        )
        .unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(lex.phrase("Foo", Slot::Head, false).unwrap(), "is b");
    }

    #[test]
    fn malformed_lexicon_reports_location() {
        let err = parse_lexicon("{\n  \"Foo\": {\"affirmative\": 3}\n}").unwrap_err();
        match err {
            Error::LexiconParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_without_not_is_rejected() {
        let err = parse_lexicon(r#"{"Foo": {"affirmative": "is a", "negative": "isn't a"}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidLexiconEntry { .. }));
    }

    #[test]
    fn dump_round_trips() {
        let lex = RelationLexicon::builtin();
        let (reloaded, warnings) = parse_lexicon(&lex.to_json()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(reloaded, lex);
    }

    #[test]
    fn asymmetric_relation_uses_inverse_in_first_slot() {
        let kb = KnowledgeBase::from_named_triples([
            ("dog", "HasA", "tail"),
            ("tail", "PartOf", "animal"),
        ]);
        let sg = SubgraphPair {
            a: kb.entity_id("dog").unwrap(),
            r1: kb.relation_id("HasA").unwrap(),
            b: kb.entity_id("tail").unwrap(),
            r2: kb.relation_id("PartOf").unwrap(),
            c: kb.entity_id("animal").unwrap(),
        };
        assert_eq!(
            realize_question(&sg, form(1), &RelationLexicon::builtin(), &kb).unwrap(),
            "which of the following belongs to dog and meanwhile is part of animal?"
        );
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(
            normalize_whitespace("which of the following  is related to sit up ?"),
            "which of the following is related to sit up?"
        );
    }
}

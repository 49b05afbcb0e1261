//! Seeded random knowledge bases for tests, demos and benchmarks.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kb::KnowledgeBase;

const RELATION_NAMES: [&str; 8] = [
    "Antonym",
    "RelatedTo",
    "CapableOf",
    "IsA",
    "AtLocation",
    "UsedFor",
    "HasA",
    "Causes",
];

/// Name of relation `i`: ConceptNet names first, then `Relation<i>`.
pub fn relation_name(i: usize) -> String {
    RELATION_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Relation{i}"))
}

/// Draws `triples` edges uniformly over `entities` × `relations` × `entities`
/// (duplicates collapse, so the result may hold fewer).
pub fn random_kb(seed: u64, entities: usize, relations: usize, triples: usize) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(String, String, String)> = (0..triples)
        .map(|_| {
            let h = rng.gen_range(0..entities);
            let r = rng.gen_range(0..relations);
            let t = rng.gen_range(0..entities);
            (
                format!("concept {h}"),
                relation_name(r),
                format!("concept {t}"),
            )
        })
        .collect();
    KnowledgeBase::from_named_triples(rows)
}

/// Renders a knowledge base as a ConceptNet-style assertion dump.
pub fn assertion_dump(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for t in kb.triples() {
        let rel = format!("/r/{}", kb.relation(t.relation));
        let start = format!("/c/en/{}", kb.entity(t.head).replace(' ', "_"));
        let end = format!("/c/en/{}", kb.entity(t.tail).replace(' ', "_"));
        writeln!(
            out,
            "/a/[{rel}/,{start}/,{end}/]\t{rel}\t{start}\t{end}\t{{\"weight\": 1.0}}"
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{parse_kb, ParseOptions};

    #[test]
    fn dump_round_trips_through_the_parser() {
        let kb = random_kb(7, 30, 4, 120);
        let (parsed, report) =
            parse_kb(assertion_dump(&kb).as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(parsed, kb);
        assert_eq!(report.duplicates, 0);
    }

    #[test]
    fn seeded() {
        assert_eq!(random_kb(1, 20, 3, 50), random_kb(1, 20, 3, 50));
        assert_ne!(random_kb(1, 20, 3, 50), random_kb(2, 20, 3, 50));
    }
}

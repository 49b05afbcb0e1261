//! Brute-force oracles that work from the raw triple list only, never from
//! the knowledge base's indexes.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use kbqa_core::{EntityId, KnowledgeBase, RelationId, SubgraphPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type NamedTriple = (String, String, String);

/// Random named triples: at most `entities` entities, `relations`
/// relations, `triples` rows (duplicates possible).
pub fn random_triples(
    seed: u64,
    entities: usize,
    relations: usize,
    triples: usize,
) -> Vec<NamedTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..triples)
        .map(|_| {
            (
                format!("n{}", rng.gen_range(0..entities)),
                format!("R{}", rng.gen_range(0..relations)),
                format!("n{}", rng.gen_range(0..entities)),
            )
        })
        .collect()
}

/// The triple list resolved to ids, deduplicated.
#[derive(Debug)]
pub struct Brute {
    pub triples: BTreeSet<(EntityId, RelationId, EntityId)>,
    lookup: HashSet<(EntityId, RelationId, EntityId)>,
    pub universe: usize,
}

impl Brute {
    pub fn new(kb: &KnowledgeBase, raw: &[NamedTriple]) -> Self {
        let triples: BTreeSet<_> = raw
            .iter()
            .map(|(h, r, t)| {
                (
                    kb.entity_id(h).unwrap(),
                    kb.relation_id(r).unwrap(),
                    kb.entity_id(t).unwrap(),
                )
            })
            .collect();
        Brute {
            lookup: triples.iter().copied().collect(),
            triples,
            universe: kb.entity_count(),
        }
    }

    pub fn has(&self, h: EntityId, r: RelationId, t: EntityId) -> bool {
        self.lookup.contains(&(h, r, t))
    }

    /// Nested loop over all ordered pairs of triples.
    pub fn subgraphs(&self) -> Vec<SubgraphPair> {
        let mut out = Vec::new();
        for &(a, r1, b) in &self.triples {
            for &(b2, r2, c) in &self.triples {
                if b2 == b && a != b && b != c && a != c && r1 != r2 {
                    out.push(SubgraphPair { a, r1, b, r2, c });
                }
            }
        }
        out.sort();
        out
    }

    /// Cell index 0..4 of every entity, by scanning the triple list.
    pub fn cells(&self, sg: &SubgraphPair) -> Vec<usize> {
        (0..self.universe as u32)
            .map(|x| {
                let x = EntityId(x);
                let p1 = self.has(sg.a, sg.r1, x);
                let p2 = self.has(x, sg.r2, sg.c);
                match (p1, p2) {
                    (true, false) => 0,
                    (true, true) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }
            })
            .collect()
    }

    /// `{x : mask selects cell(x)}` with mask bit i ↔ cell i.
    pub fn answer_set(&self, sg: &SubgraphPair, mask: u8) -> Vec<EntityId> {
        select(&self.cells(sg), mask)
    }
}

/// Entities whose brute-forced cell is selected by `mask`.
pub fn select(cells: &[usize], mask: u8) -> Vec<EntityId> {
    cells
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, c)| mask & (1 << c) != 0)
        .map(|(x, _)| EntityId(x as u32))
        .collect()
}

/// Critical value of a chi-square statistic with 2 degrees of freedom at
/// the two-sided 3-sigma level: `-2 ln(1 - erf(3 / sqrt 2))`.
pub fn chi_square_3sigma_df2() -> f64 {
    const TAIL_3SIGMA: f64 = 0.002_699_796_063_260_186_6;
    -2.0 * TAIL_3SIGMA.ln()
}

pub fn chi_square(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum()
}

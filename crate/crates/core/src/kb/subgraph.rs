//! Two-hop chains `a -r1-> b -r2-> c` with distinct entities and relations.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use super::{EntityId, KnowledgeBase, RelationId, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubgraphPair {
    pub a: EntityId,
    pub r1: RelationId,
    pub b: EntityId,
    pub r2: RelationId,
    pub c: EntityId,
}

impl SubgraphPair {
    pub fn first(&self) -> Triple {
        Triple {
            head: self.a,
            relation: self.r1,
            tail: self.b,
        }
    }

    pub fn second(&self) -> Triple {
        Triple {
            head: self.b,
            relation: self.r2,
            tail: self.c,
        }
    }

    /// Entities pairwise distinct and relations distinct.
    pub fn is_well_formed(&self) -> bool {
        self.a != self.b && self.b != self.c && self.a != self.c && self.r1 != self.r2
    }

    pub fn describe(&self, kb: &KnowledgeBase) -> String {
        format!(
            "({} -{}-> {} -{}-> {})",
            kb.entity(self.a),
            kb.relation(self.r1),
            kb.entity(self.b),
            kb.relation(self.r2),
            kb.entity(self.c)
        )
    }
}

impl fmt::Display for SubgraphPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} -{}-> {} -{}-> {})",
            self.a, self.r1, self.b, self.r2, self.c
        )
    }
}

#[inline]
fn continues(a: EntityId, r1: RelationId, b: EntityId, r2: RelationId, c: EntityId) -> bool {
    r2 != r1 && c != a && c != b
}

impl KnowledgeBase {
    /// Streams every two-hop subgraph in `(a, r1, b, r2, c)` id order.
    pub fn subgraphs(&self) -> Subgraphs<'_> {
        Subgraphs {
            kb: self,
            head: 0,
            edge: 0,
            cont: 0,
        }
    }

    /// Number of valid continuations of the triple `(a, r1, b)`.
    fn continuation_count(&self, a: EntityId, r1: RelationId, b: EntityId) -> u64 {
        if a == b {
            return 0;
        }
        self.out_edges(b)
            .filter(|&(r2, c)| continues(a, r1, b, r2, c))
            .count() as u64
    }

    /// Total subgraph count without materializing any chain.
    pub fn count_subgraphs(&self) -> u64 {
        (0..self.entity_count() as u32)
            .into_par_iter()
            .map(|h| {
                let a = EntityId(h);
                self.out_edges(a)
                    .map(|(r1, b)| self.continuation_count(a, r1, b))
                    .sum::<u64>()
            })
            .sum()
    }

    /// Subgraph counts keyed by `(r1, r2)`.
    pub fn subgraph_histogram(&self) -> HashMap<(RelationId, RelationId), u64> {
        (0..self.entity_count() as u32)
            .into_par_iter()
            .fold(HashMap::new, |mut acc, h| {
                let a = EntityId(h);
                for (r1, b) in self.out_edges(a) {
                    if a == b {
                        continue;
                    }
                    for (r2, c) in self.out_edges(b) {
                        if continues(a, r1, b, r2, c) {
                            *acc.entry((r1, r2)).or_insert(0) += 1;
                        }
                    }
                }
                acc
            })
            .reduce(HashMap::new, |mut left, right| {
                for (k, v) in right {
                    *left.entry(k).or_insert(0) += v;
                }
                left
            })
    }
}

/// Iterator returned by [`KnowledgeBase::subgraphs`].
pub struct Subgraphs<'kb> {
    kb: &'kb KnowledgeBase,
    head: usize,
    /// global index into the forward edge arrays
    edge: usize,
    /// offset within the bridge entity's row
    cont: usize,
}

impl Iterator for Subgraphs<'_> {
    type Item = SubgraphPair;

    fn next(&mut self) -> Option<SubgraphPair> {
        let fwd = self.kb.forward();
        while self.edge < fwd.neighbors.len() {
            while fwd.offsets[self.head + 1] as usize <= self.edge {
                self.head += 1;
            }
            let a = EntityId(self.head as u32);
            let r1 = fwd.relations[self.edge];
            let b = fwd.neighbors[self.edge];
            let row = fwd.row(b);
            if a != b {
                while row.start + self.cont < row.end {
                    let i = row.start + self.cont;
                    self.cont += 1;
                    let (r2, c) = (fwd.relations[i], fwd.neighbors[i]);
                    if continues(a, r1, b, r2, c) {
                        return Some(SubgraphPair { a, r1, b, r2, c });
                    }
                }
            }
            self.edge += 1;
            self.cont = 0;
        }
        None
    }
}

/// Rank/select structure over the subgraph enumeration order.
///
/// `prefix[i]` is the number of subgraphs whose first triple precedes forward
/// edge `i`, so a rank in `0..total()` maps to exactly one subgraph and a
/// uniform rank is a uniform draw over all subgraphs.
pub struct SubgraphIndex<'kb> {
    kb: &'kb KnowledgeBase,
    prefix: Vec<u64>,
}

impl<'kb> SubgraphIndex<'kb> {
    pub fn build(kb: &'kb KnowledgeBase) -> Self {
        let fwd = kb.forward();
        let per_head: Vec<Vec<u64>> = (0..kb.entity_count() as u32)
            .into_par_iter()
            .map(|h| {
                let a = EntityId(h);
                kb.out_edges(a)
                    .map(|(r1, b)| kb.continuation_count(a, r1, b))
                    .collect()
            })
            .collect();
        let mut prefix = Vec::with_capacity(fwd.neighbors.len() + 1);
        let mut acc = 0u64;
        prefix.push(0);
        for counts in per_head {
            for c in counts {
                acc += c;
                prefix.push(acc);
            }
        }
        SubgraphIndex { kb, prefix }
    }

    pub fn total(&self) -> u64 {
        *self.prefix.last().unwrap_or(&0)
    }

    pub fn kb(&self) -> &'kb KnowledgeBase {
        self.kb
    }

    /// The subgraph at `rank` in enumeration order, or `None` past the end.
    pub fn get(&self, rank: u64) -> Option<SubgraphPair> {
        if rank >= self.total() {
            return None;
        }
        let fwd = self.kb.forward();
        // first edge whose cumulative end exceeds rank
        let edge = self.prefix[1..].partition_point(|&end| end <= rank);
        let mut skip = rank - self.prefix[edge];
        let head = fwd.offsets.partition_point(|&off| off <= edge as u64) - 1;
        let a = EntityId(head as u32);
        let r1 = fwd.relations[edge];
        let b = fwd.neighbors[edge];
        for (r2, c) in self.kb.out_edges(b) {
            if continues(a, r1, b, r2, c) {
                if skip == 0 {
                    return Some(SubgraphPair { a, r1, b, r2, c });
                }
                skip -= 1;
            }
        }
        unreachable!("prefix sums disagree with adjacency")
    }
}

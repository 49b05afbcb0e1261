//! Interned triple store with forward and backward adjacency indexes.
//!
//! Both indexes are compressed-sparse-row arrays: for every entity the
//! outgoing (resp. incoming) edges are stored contiguously, sorted by
//! relation and then by neighbor id. A `(entity, relation)` lookup is a
//! binary search inside one entity's row and yields a sorted slice.

mod cache;
mod parse;
mod subgraph;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use cache::{load_kb, save_kb, CACHE_FORMAT_VERSION, CACHE_MAGIC};
pub use parse::{
    normalize_concept, parse_kb, parse_kb_file, IngestReport, LanguageFilter, ParseOptions,
};
pub use subgraph::{SubgraphIndex, SubgraphPair, Subgraphs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

/// One CSR adjacency: `offsets[e]..offsets[e + 1]` indexes the edges of `e`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub(crate) struct Adjacency {
    pub(crate) offsets: Vec<u64>,
    pub(crate) relations: Vec<RelationId>,
    pub(crate) neighbors: Vec<EntityId>,
}

impl Adjacency {
    /// `edges` must be sorted by (source, relation, neighbor) and deduplicated.
    fn from_sorted(entity_count: usize, edges: &[(EntityId, RelationId, EntityId)]) -> Self {
        let mut offsets = vec![0u64; entity_count + 1];
        for &(src, _, _) in edges {
            offsets[src.index() + 1] += 1;
        }
        for i in 0..entity_count {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            relations: edges.iter().map(|e| e.1).collect(),
            neighbors: edges.iter().map(|e| e.2).collect(),
        }
    }

    #[inline]
    fn row(&self, source: EntityId) -> Range<usize> {
        self.offsets[source.index()] as usize..self.offsets[source.index() + 1] as usize
    }

    #[inline]
    fn lookup(&self, source: EntityId, relation: RelationId) -> &[EntityId] {
        let row = self.row(source);
        let rels = &self.relations[row.clone()];
        let lo = rels.partition_point(|r| *r < relation);
        let hi = rels.partition_point(|r| *r <= relation);
        &self.neighbors[row.start + lo..row.start + hi]
    }

    fn edges(
        &self,
        source: EntityId,
    ) -> impl ExactSizeIterator<Item = (RelationId, EntityId)> + '_ {
        let row = self.row(source);
        self.relations[row.clone()]
            .iter()
            .copied()
            .zip(self.neighbors[row].iter().copied())
    }
}

/// An immutable, interned knowledge base.
///
/// Entity and relation ids are dense and assigned in lexicographic order of
/// their names, so the same set of triples always yields the same ids
/// regardless of input order.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_lookup: HashMap<String, EntityId>,
    relation_lookup: HashMap<String, RelationId>,
    fwd: Adjacency,
    bwd: Adjacency,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relations == other.relations
            && self.fwd == other.fwd
            && self.bwd == other.bwd
    }
}

impl Eq for KnowledgeBase {}

impl KnowledgeBase {
    /// Builds a knowledge base from already-normalized `(head, relation, tail)`
    /// names. Duplicates are dropped.
    pub fn from_named_triples<I, S>(triples: I) -> Self
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let mut builder = KbBuilder::default();
        for (h, r, t) in triples {
            builder.insert(h.as_ref(), r.as_ref(), t.as_ref());
        }
        builder.build()
    }

    pub(crate) fn from_parts(
        entities: Vec<String>,
        relations: Vec<String>,
        mut triples: Vec<(EntityId, RelationId, EntityId)>,
    ) -> Self {
        triples.sort_unstable();
        triples.dedup();
        let fwd = Adjacency::from_sorted(entities.len(), &triples);
        let mut transposed: Vec<_> = triples.iter().map(|&(h, r, t)| (t, r, h)).collect();
        transposed.sort_unstable();
        let bwd = Adjacency::from_sorted(entities.len(), &transposed);
        Self::from_indexes(entities, relations, fwd, bwd)
    }

    pub(crate) fn from_indexes(
        entities: Vec<String>,
        relations: Vec<String>,
        fwd: Adjacency,
        bwd: Adjacency,
    ) -> Self {
        let entity_lookup = entities
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), EntityId(i as u32)))
            .collect();
        let relation_lookup = relations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), RelationId(i as u32)))
            .collect();
        KnowledgeBase {
            entities,
            relations,
            entity_lookup,
            relation_lookup,
            fwd,
            bwd,
        }
    }

    pub(crate) fn forward(&self) -> &Adjacency {
        &self.fwd
    }

    pub(crate) fn backward(&self) -> &Adjacency {
        &self.bwd
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.fwd.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triple_count() == 0
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    pub fn check_entity(&self, id: EntityId) -> Result<()> {
        if id.index() < self.entities.len() {
            Ok(())
        } else {
            Err(Error::InvalidHandle {
                kind: "entity",
                id: id.0,
                len: self.entities.len(),
            })
        }
    }

    pub fn check_relation(&self, id: RelationId) -> Result<()> {
        if id.index() < self.relations.len() {
            Ok(())
        } else {
            Err(Error::InvalidHandle {
                kind: "relation",
                id: id.0,
                len: self.relations.len(),
            })
        }
    }

    /// Surface string of an entity. Panics on an out-of-range id.
    pub fn entity(&self, id: EntityId) -> &str {
        &self.entities[id.index()]
    }

    /// Canonical relation name. Panics on an out-of-range id.
    pub fn relation(&self, id: RelationId) -> &str {
        &self.relations[id.index()]
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_lookup.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_lookup.get(name).copied()
    }

    /// `{x : (a, r, x) in kb}`, sorted ascending.
    pub fn tails_of(&self, a: EntityId, r: RelationId) -> Result<&[EntityId]> {
        self.check_entity(a)?;
        self.check_relation(r)?;
        Ok(self.fwd.lookup(a, r))
    }

    /// `{x : (x, r, c) in kb}`, sorted ascending.
    pub fn heads_of(&self, r: RelationId, c: EntityId) -> Result<&[EntityId]> {
        self.check_relation(r)?;
        self.check_entity(c)?;
        Ok(self.bwd.lookup(c, r))
    }

    /// Unchecked variant of [`tails_of`](Self::tails_of) for ids already validated.
    #[inline]
    pub(crate) fn tails(&self, a: EntityId, r: RelationId) -> &[EntityId] {
        self.fwd.lookup(a, r)
    }

    #[inline]
    pub(crate) fn heads(&self, r: RelationId, c: EntityId) -> &[EntityId] {
        self.bwd.lookup(c, r)
    }

    pub fn contains(&self, t: Triple) -> bool {
        if t.head.index() >= self.entities.len() || t.relation.index() >= self.relations.len() {
            return false;
        }
        self.fwd
            .lookup(t.head, t.relation)
            .binary_search(&t.tail)
            .is_ok()
    }

    /// Outgoing `(relation, tail)` edges of `a`, sorted.
    pub fn out_edges(
        &self,
        a: EntityId,
    ) -> impl ExactSizeIterator<Item = (RelationId, EntityId)> + '_ {
        self.fwd.edges(a)
    }

    /// Incoming `(relation, head)` edges of `c`, sorted.
    pub fn in_edges(
        &self,
        c: EntityId,
    ) -> impl ExactSizeIterator<Item = (RelationId, EntityId)> + '_ {
        self.bwd.edges(c)
    }

    /// All triples in `(head, relation, tail)` order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.entities.len() as u32).flat_map(move |h| {
            let head = EntityId(h);
            self.fwd.edges(head).map(move |(relation, tail)| Triple {
                head,
                relation,
                tail,
            })
        })
    }

    /// Hex SHA-256 over the canonical cache encoding. Equal knowledge bases
    /// have equal fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        cache::encode_payload(self, &mut HashWriter(&mut hasher)).expect("hashing cannot fail");
        hex::encode(hasher.finalize())
    }
}

struct HashWriter<'a>(&'a mut Sha256);

impl std::io::Write for HashWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Interns names in first-seen order, then renumbers lexicographically.
#[derive(Default)]
pub(crate) struct KbBuilder {
    entities: HashMap<String, u32>,
    relations: HashMap<String, u32>,
    triples: Vec<(u32, u32, u32)>,
}

impl KbBuilder {
    pub(crate) fn insert(&mut self, head: &str, relation: &str, tail: &str) {
        let h = intern(&mut self.entities, head);
        let r = intern(&mut self.relations, relation);
        let t = intern(&mut self.entities, tail);
        self.triples.push((h, r, t));
    }

    pub(crate) fn build(self) -> KnowledgeBase {
        let (entities, entity_map) = renumber(self.entities);
        let (relations, relation_map) = renumber(self.relations);
        let triples = self
            .triples
            .into_iter()
            .map(|(h, r, t)| {
                (
                    EntityId(entity_map[h as usize]),
                    RelationId(relation_map[r as usize]),
                    EntityId(entity_map[t as usize]),
                )
            })
            .collect();
        KnowledgeBase::from_parts(entities, relations, triples)
    }
}

fn intern(table: &mut HashMap<String, u32>, name: &str) -> u32 {
    if let Some(&id) = table.get(name) {
        return id;
    }
    let id = table.len() as u32;
    table.insert(name.to_owned(), id);
    id
}

/// Returns names sorted and a map from provisional id to final id.
fn renumber(table: HashMap<String, u32>) -> (Vec<String>, Vec<u32>) {
    let mut named: Vec<(String, u32)> = table.into_iter().collect();
    named.sort_unstable();
    let mut remap = vec![0u32; named.len()];
    for (new_id, (_, old_id)) in named.iter().enumerate() {
        remap[*old_id as usize] = new_id as u32;
    }
    (named.into_iter().map(|(s, _)| s).collect(), remap)
}

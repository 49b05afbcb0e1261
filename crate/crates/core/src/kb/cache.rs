//! Binary cache for a parsed knowledge base.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes  "KBQACACH"
//! version   u32
//! payload   entity table, relation table, forward index, backward index
//! digest    32 bytes SHA-256 of payload
//! ```
//!
//! String tables are a `u64` count followed by `u32`-length-prefixed UTF-8.
//! Each index is `offsets` (`entities + 1` × u64), an edge count (u64), then
//! the relation column and neighbor column (u32 each).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Adjacency, EntityId, KnowledgeBase, RelationId};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"KBQACACH";
pub const CACHE_FORMAT_VERSION: u32 = 1;

const DIGEST_LEN: usize = 32;

pub(crate) fn encode_payload<W: Write>(kb: &KnowledgeBase, out: &mut W) -> std::io::Result<()> {
    write_strings(out, kb.entity_names())?;
    write_strings(out, kb.relation_names())?;
    write_adjacency(out, kb.forward())?;
    write_adjacency(out, kb.backward())?;
    Ok(())
}

fn write_strings<W: Write>(out: &mut W, table: &[String]) -> std::io::Result<()> {
    out.write_all(&(table.len() as u64).to_le_bytes())?;
    for s in table {
        out.write_all(&(s.len() as u32).to_le_bytes())?;
        out.write_all(s.as_bytes())?;
    }
    Ok(())
}

fn write_adjacency<W: Write>(out: &mut W, adj: &Adjacency) -> std::io::Result<()> {
    for off in &adj.offsets {
        out.write_all(&off.to_le_bytes())?;
    }
    out.write_all(&(adj.neighbors.len() as u64).to_le_bytes())?;
    for r in &adj.relations {
        out.write_all(&r.0.to_le_bytes())?;
    }
    for n in &adj.neighbors {
        out.write_all(&n.0.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_kb(kb: &KnowledgeBase, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    encode_payload(kb, &mut payload)?;
    let digest = Sha256::digest(&payload);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&payload)?;
        out.write_all(&digest)?;
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCache(msg.into())
}

pub(crate) fn decode(bytes: &[u8]) -> Result<KnowledgeBase> {
    if bytes.len() < CACHE_MAGIC.len() || &bytes[..CACHE_MAGIC.len()] != CACHE_MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let mut cursor = Cursor {
        bytes,
        pos: CACHE_MAGIC.len(),
    };
    let version = cursor.u32().map_err(|_| corrupt("truncated header"))?;
    if version != CACHE_FORMAT_VERSION {
        return Err(Error::IncompatibleCache {
            found: version,
            expected: CACHE_FORMAT_VERSION,
        });
    }
    if bytes.len() < cursor.pos + DIGEST_LEN {
        return Err(corrupt("truncated file"));
    }
    let payload_end = bytes.len() - DIGEST_LEN;
    let payload = &bytes[cursor.pos..payload_end];
    if Sha256::digest(payload).as_slice() != &bytes[payload_end..] {
        return Err(corrupt(
            "payload checksum mismatch (truncated or modified file)",
        ));
    }
    let mut cursor = Cursor {
        bytes: payload,
        pos: 0,
    };
    let entities = cursor.strings()?;
    let relations = cursor.strings()?;
    let fwd = cursor.adjacency(entities.len(), relations.len())?;
    let bwd = cursor.adjacency(entities.len(), relations.len())?;
    if cursor.pos != payload.len() {
        return Err(corrupt("trailing bytes after indexes"));
    }
    if fwd.neighbors.len() != bwd.neighbors.len() {
        return Err(corrupt("forward and backward indexes differ in size"));
    }
    Ok(KnowledgeBase::from_indexes(entities, relations, fwd, bwd))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(elem_size as u64) > remaining {
            return Err(corrupt(format!(
                "length {n} exceeds remaining {remaining} bytes"
            )));
        }
        Ok(n as usize)
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.len(4)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let len = self.u32()? as usize;
            let raw = self.take(len)?;
            let s = std::str::from_utf8(raw)
                .map_err(|_| corrupt("string table holds invalid utf-8"))?;
            out.push(s.to_owned());
        }
        Ok(out)
    }

    fn adjacency(&mut self, entity_count: usize, relation_count: usize) -> Result<Adjacency> {
        let mut offsets = Vec::with_capacity(entity_count + 1);
        for _ in 0..=entity_count {
            offsets.push(self.u64()?);
        }
        let m = self.len(8)?;
        let mut relations = Vec::with_capacity(m);
        for _ in 0..m {
            let r = self.u32()?;
            if r as usize >= relation_count {
                return Err(corrupt(format!("relation id {r} out of range")));
            }
            relations.push(RelationId(r));
        }
        let mut neighbors = Vec::with_capacity(m);
        for _ in 0..m {
            let e = self.u32()?;
            if e as usize >= entity_count {
                return Err(corrupt(format!("entity id {e} out of range")));
            }
            neighbors.push(EntityId(e));
        }
        if offsets.first() != Some(&0)
            || offsets.last() != Some(&(m as u64))
            || offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(corrupt("index offsets are not monotone"));
        }
        for w in offsets.windows(2) {
            let (lo, hi) = (w[0] as usize, w[1] as usize);
            let sorted = (lo + 1..hi)
                .all(|i| (relations[i - 1], neighbors[i - 1]) < (relations[i], neighbors[i]));
            if !sorted {
                return Err(corrupt("index row is not strictly sorted"));
            }
        }
        Ok(Adjacency {
            offsets,
            relations,
            neighbors,
        })
    }
}

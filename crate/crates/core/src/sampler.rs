//! Correct-answer selection and wrong-answer (distractor) sampling.
//!
//! Every distractor is checked with [`eval_form_membership`] before it is
//! accepted, whatever the strategy or S4 mode.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, KnowledgeBase, SubgraphPair};
use crate::logic::{eval_form_membership, Cell, ComplementCell, LogicalForm, Partition};

/// Rejection-sampling budget per draw before falling back to enumeration.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Strategy {
    /// Uniform over every entity outside the answer set.
    #[serde(rename = "random")]
    Random,
    /// Neighbors of `a` through relations other than `r1`, topped up at random.
    #[serde(rename = "nearest")]
    Nearest,
    /// A wrong cell chosen uniformly, then an entity uniformly within it.
    #[default]
    #[serde(rename = "uniform-cell")]
    UniformCell,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Nearest, Strategy::UniformCell];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Nearest => "nearest",
            Strategy::UniformCell => "uniform-cell",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Strategy::Random),
            "nearest" => Ok(Strategy::Nearest),
            "uniform-cell" | "uniform" => Ok(Strategy::UniformCell),
            other => Err(format!(
                "unknown strategy {other:?} (expected random, nearest or uniform-cell)"
            )),
        }
    }
}

/// Uniform draw from the answer set of `form`.
///
/// An implicit S4 is sampled by drawing from the universe and rejecting
/// members of S1..S3, which keeps the draw uniform.
pub fn select_correct_answer<R: Rng + ?Sized>(
    p: &Partition,
    form: LogicalForm,
    rng: &mut R,
) -> Result<EntityId> {
    let total = p.answer_len(form);
    if total == 0 {
        return Err(Error::InvalidForm(form.index()));
    }
    let mut k = rng.gen_range(0..total);
    for cell in form.cells() {
        let len = p.cell_len(cell);
        if k < len {
            return Ok(match p.cell(cell) {
                Some(members) => members[k as usize],
                None => draw_implicit_s4(p, &[], rng).expect("S4 has members"),
            });
        }
        k -= len;
    }
    unreachable!("k < total")
}

/// Draws `n` distinct entities outside the answer set of `form`.
pub fn sample_distractors<R: Rng + ?Sized>(
    kb: &KnowledgeBase,
    p: &Partition,
    sg: &SubgraphPair,
    form: LogicalForm,
    n: usize,
    strategy: Strategy,
    rng: &mut R,
) -> Result<Vec<EntityId>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "distractor count must be at least 1".into(),
        ));
    }
    let available = p.universe() as u64 - p.answer_len(form);
    if available == 0 {
        return Err(Error::NoDistractor(form.index()));
    }
    if available < n as u64 {
        return Err(Error::InsufficientPool {
            needed: n,
            available,
        });
    }
    let sampler = Sampler { kb, p, sg, form };
    let mut chosen = Vec::with_capacity(n);
    match strategy {
        Strategy::Random => {
            while chosen.len() < n {
                let x = sampler.random_wrong(&chosen, rng)?;
                chosen.push(x);
            }
        }
        Strategy::Nearest => {
            let mut pool: Vec<EntityId> = kb
                .out_edges(sg.a)
                .filter(|&(r, _)| r != sg.r1)
                .map(|(_, x)| x)
                .collect();
            pool.sort_unstable();
            pool.dedup();
            pool.retain(|&x| sampler.is_wrong(x));
            let take = n.min(pool.len());
            for i in rand::seq::index::sample(rng, pool.len(), take) {
                chosen.push(pool[i]);
            }
            while chosen.len() < n {
                let x = sampler.random_wrong(&chosen, rng)?;
                chosen.push(x);
            }
        }
        Strategy::UniformCell => {
            let wrong_cells: Vec<Cell> = Cell::ALL
                .into_iter()
                .filter(|&c| !form.selects(c))
                .collect();
            while chosen.len() < n {
                let eligible: Vec<Cell> = wrong_cells
                    .iter()
                    .copied()
                    .filter(|&c| {
                        p.cell_len(c)
                            > chosen.iter().filter(|&&x| p.classify(x) == c).count() as u64
                    })
                    .collect();
                let cell = eligible[rng.gen_range(0..eligible.len())];
                let x = sampler.draw_from_cell(cell, &chosen, rng)?;
                chosen.push(x);
            }
        }
    }
    Ok(chosen)
}

struct Sampler<'a> {
    kb: &'a KnowledgeBase,
    p: &'a Partition,
    sg: &'a SubgraphPair,
    form: LogicalForm,
}

impl Sampler<'_> {
    #[inline]
    fn is_wrong(&self, x: EntityId) -> bool {
        !eval_form_membership(self.kb, self.sg, self.form, x)
    }

    fn accept(&self, x: EntityId, chosen: &[EntityId]) -> bool {
        self.is_wrong(x) && !chosen.contains(&x)
    }

    fn random_wrong<R: Rng + ?Sized>(&self, chosen: &[EntityId], rng: &mut R) -> Result<EntityId> {
        let universe = self.p.universe() as u32;
        for _ in 0..MAX_ATTEMPTS {
            let x = EntityId(rng.gen_range(0..universe));
            if self.accept(x, chosen) {
                return Ok(x);
            }
        }
        let pool: Vec<EntityId> = (0..universe)
            .map(EntityId)
            .filter(|&x| self.accept(x, chosen))
            .collect();
        if pool.is_empty() {
            return Err(Error::InsufficientPool {
                needed: chosen.len() + 1,
                available: chosen.len() as u64,
            });
        }
        Ok(pool[rng.gen_range(0..pool.len())])
    }

    fn draw_from_cell<R: Rng + ?Sized>(
        &self,
        cell: Cell,
        chosen: &[EntityId],
        rng: &mut R,
    ) -> Result<EntityId> {
        let x = match self.p.cell(cell) {
            Some(members) => {
                let mut pick = None;
                for _ in 0..MAX_ATTEMPTS {
                    let x = members[rng.gen_range(0..members.len())];
                    if !chosen.contains(&x) {
                        pick = Some(x);
                        break;
                    }
                }
                match pick {
                    Some(x) => x,
                    None => {
                        let rest: Vec<EntityId> = members
                            .iter()
                            .copied()
                            .filter(|x| !chosen.contains(x))
                            .collect();
                        rest[rng.gen_range(0..rest.len())]
                    }
                }
            }
            None => draw_implicit_s4(self.p, chosen, rng).ok_or(Error::InsufficientPool {
                needed: chosen.len() + 1,
                available: chosen.len() as u64,
            })?,
        };
        // cells are exact, so a failure here means the partition and the kb disagree
        if !self.accept(x, chosen) {
            return Err(Error::InconsistentSubgraph(self.sg.describe(self.kb)));
        }
        Ok(x)
    }
}

/// Uniform draw from S4 minus `exclude`, without materializing S4.
fn draw_implicit_s4<R: Rng + ?Sized>(
    p: &Partition,
    exclude: &[EntityId],
    rng: &mut R,
) -> Option<EntityId> {
    debug_assert!(matches!(p.s4, ComplementCell::Implicit));
    let universe = p.universe() as u32;
    for _ in 0..MAX_ATTEMPTS {
        let x = EntityId(rng.gen_range(0..universe));
        if p.classify(x) == Cell::S4 && !exclude.contains(&x) {
            return Some(x);
        }
    }
    let rest: Vec<EntityId> = (0..universe)
        .map(EntityId)
        .filter(|&x| p.classify(x) == Cell::S4 && !exclude.contains(&x))
        .collect();
    if rest.is_empty() {
        None
    } else {
        Some(rest[rng.gen_range(0..rest.len())])
    }
}

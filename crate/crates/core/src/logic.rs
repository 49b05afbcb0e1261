//! Venn partition of the entity universe for a two-hop subgraph, and the
//! fourteen logical forms built from it.
//!
//! For a chain `a -r1-> b -r2-> c` let `R1 = {x : a -r1-> x}` and
//! `R2 = {x : x -r2-> c}`. The cells are
//!
//! | cell | in R1 | in R2 |
//! |------|-------|-------|
//! | S1   | yes   | no    |
//! | S2   | yes   | yes   |
//! | S3   | no    | yes   |
//! | S4   | no    | no    |
//!
//! A logical form picks a nonempty, non-full subset of the cells. Bit `i` of
//! its mask selects cell `S(i+1)`, and the form index is `mask - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, KnowledgeBase, SubgraphPair};

/// Entity count above which `S4Mode::Auto` resolves to approximate.
pub const DEFAULT_EXACT_THRESHOLD: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    S1,
    S2,
    S3,
    S4,
}

impl Cell {
    pub const ALL: [Cell; 4] = [Cell::S1, Cell::S2, Cell::S3, Cell::S4];

    #[inline]
    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Cell of an entity given its two membership predicates.
    #[inline]
    pub fn from_membership(in_r1: bool, in_r2: bool) -> Cell {
        match (in_r1, in_r2) {
            (true, false) => Cell::S1,
            (true, true) => Cell::S2,
            (false, true) => Cell::S3,
            (false, false) => Cell::S4,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", *self as u8 + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct LogicalForm(u8);

impl LogicalForm {
    pub const COUNT: usize = 14;

    pub fn from_index(index: u8) -> Option<Self> {
        (index < Self::COUNT as u8).then_some(LogicalForm(index))
    }

    pub fn from_mask(mask: u8) -> Option<Self> {
        (1..=14).contains(&mask).then(|| LogicalForm(mask - 1))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn mask(self) -> u8 {
        self.0 + 1
    }

    pub fn selects(self, cell: Cell) -> bool {
        self.mask() & cell.bit() != 0
    }

    pub fn cells(self) -> impl Iterator<Item = Cell> {
        Cell::ALL.into_iter().filter(move |c| self.selects(*c))
    }

    /// The form whose answer set is the complement of this one's.
    pub fn complement(self) -> Self {
        LogicalForm(15 - self.mask() - 1)
    }

    /// Whether the form is decided by the first predicate alone (`a -r1-> ?`
    /// or its negation).
    pub fn ignores_second(self) -> bool {
        matches!(self.mask(), 0b0011 | 0b1100)
    }

    pub fn ignores_first(self) -> bool {
        matches!(self.mask(), 0b0110 | 0b1001)
    }

    /// Truth value of the form given the two membership predicates.
    #[inline]
    pub fn eval(self, in_r1: bool, in_r2: bool) -> bool {
        self.selects(Cell::from_membership(in_r1, in_r2))
    }
}

impl TryFrom<u8> for LogicalForm {
    type Error = String;

    fn try_from(index: u8) -> Result<Self, String> {
        LogicalForm::from_index(index)
            .ok_or_else(|| format!("logical form index {index} is outside 0..=13"))
    }
}

impl From<LogicalForm> for u8 {
    fn from(f: LogicalForm) -> u8 {
        f.0
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// All fourteen forms in index order.
pub fn enumerate_forms() -> [LogicalForm; LogicalForm::COUNT] {
    std::array::from_fn(|i| LogicalForm(i as u8))
}

/// ASCII rendering of the Boolean formula behind a form.
pub fn render_form(form: LogicalForm) -> &'static str {
    match form.index() {
        0 => "(A R1 ?) AND NOT(? R2 C)",
        1 => "(A R1 ?) AND (? R2 C)",
        2 => "(A R1 ?)",
        3 => "NOT(A R1 ?) AND (? R2 C)",
        4 => "((A R1 ?) OR (? R2 C)) AND NOT((A R1 ?) AND (? R2 C))",
        5 => "(? R2 C)",
        6 => "(A R1 ?) OR (? R2 C)",
        7 => "NOT(A R1 ?) AND NOT(? R2 C)",
        8 => "NOT(? R2 C)",
        9 => "((A R1 ?) AND (? R2 C)) OR (NOT(A R1 ?) AND NOT(? R2 C))",
        10 => "(A R1 ?) OR NOT(? R2 C)",
        11 => "NOT(A R1 ?)",
        12 => "NOT(A R1 ?) OR NOT(? R2 C)",
        13 => "NOT(A R1 ?) OR (? R2 C)",
        _ => unreachable!(),
    }
}

/// Four-character cell selection string, `S1` first, e.g. `1100` for form #2.
pub fn mask_bits(form: LogicalForm) -> String {
    Cell::ALL
        .iter()
        .map(|&c| if form.selects(c) { '1' } else { '0' })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum S4Mode {
    /// Materialize the complement cell.
    #[default]
    Exact,
    /// Keep S4 implicit; draws from it are draws from the universe, checked
    /// against the membership predicates.
    Approximate,
}

impl S4Mode {
    /// Exact for universes up to `threshold` entities, approximate beyond.
    pub fn auto(entity_count: usize, threshold: usize) -> S4Mode {
        if entity_count > threshold {
            S4Mode::Approximate
        } else {
            S4Mode::Exact
        }
    }
}

impl std::str::FromStr for S4Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(S4Mode::Exact),
            "approximate" | "approx" => Ok(S4Mode::Approximate),
            other => Err(format!(
                "unknown s4 mode {other:?} (expected exact or approximate)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplementCell {
    Explicit(Vec<EntityId>),
    Implicit,
}

/// The four cells for one subgraph. All explicit sets are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub r1_set: Vec<EntityId>,
    pub r2_set: Vec<EntityId>,
    pub s1: Vec<EntityId>,
    pub s2: Vec<EntityId>,
    pub s3: Vec<EntityId>,
    pub s4: ComplementCell,
    universe: usize,
}

impl Partition {
    /// Builds the partition directly from the two defining sets.
    pub fn from_sets(
        r1_set: &[EntityId],
        r2_set: &[EntityId],
        universe: usize,
        mode: S4Mode,
    ) -> Partition {
        let (mut s1, mut s2, mut s3) = (Vec::new(), Vec::new(), Vec::new());
        let (mut i, mut j) = (0, 0);
        while i < r1_set.len() && j < r2_set.len() {
            match r1_set[i].cmp(&r2_set[j]) {
                std::cmp::Ordering::Less => {
                    s1.push(r1_set[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    s3.push(r2_set[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    s2.push(r1_set[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        s1.extend_from_slice(&r1_set[i..]);
        s3.extend_from_slice(&r2_set[j..]);

        let s4 = match mode {
            S4Mode::Approximate => ComplementCell::Implicit,
            S4Mode::Exact => {
                let mut covered = r1_set.to_vec();
                covered.extend_from_slice(&s3);
                covered.sort_unstable();
                let mut rest = Vec::with_capacity(universe.saturating_sub(covered.len()));
                let mut k = 0;
                for id in 0..universe as u32 {
                    let e = EntityId(id);
                    if k < covered.len() && covered[k] == e {
                        k += 1;
                    } else {
                        rest.push(e);
                    }
                }
                ComplementCell::Explicit(rest)
            }
        };
        Partition {
            r1_set: r1_set.to_vec(),
            r2_set: r2_set.to_vec(),
            s1,
            s2,
            s3,
            s4,
            universe,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn mode(&self) -> S4Mode {
        match self.s4 {
            ComplementCell::Explicit(_) => S4Mode::Exact,
            ComplementCell::Implicit => S4Mode::Approximate,
        }
    }

    /// Explicit members of a cell; `None` for an implicit S4.
    pub fn cell(&self, cell: Cell) -> Option<&[EntityId]> {
        match cell {
            Cell::S1 => Some(&self.s1),
            Cell::S2 => Some(&self.s2),
            Cell::S3 => Some(&self.s3),
            Cell::S4 => match &self.s4 {
                ComplementCell::Explicit(v) => Some(v),
                ComplementCell::Implicit => None,
            },
        }
    }

    /// Exact cell size. S4's size is known even when it is implicit.
    pub fn cell_len(&self, cell: Cell) -> u64 {
        match cell {
            Cell::S1 => self.s1.len() as u64,
            Cell::S2 => self.s2.len() as u64,
            Cell::S3 => self.s3.len() as u64,
            Cell::S4 => (self.universe - self.s1.len() - self.s2.len() - self.s3.len()) as u64,
        }
    }

    #[inline]
    pub fn classify(&self, x: EntityId) -> Cell {
        Cell::from_membership(
            self.r1_set.binary_search(&x).is_ok(),
            self.r2_set.binary_search(&x).is_ok(),
        )
    }

    /// Number of entities in the form's answer set.
    pub fn answer_len(&self, form: LogicalForm) -> u64 {
        form.cells().map(|c| self.cell_len(c)).sum()
    }
}

/// Computes the partition for `sg`, checking that it is a chain of `kb`.
pub fn compute_partition(kb: &KnowledgeBase, sg: &SubgraphPair, mode: S4Mode) -> Result<Partition> {
    let consistent = sg.is_well_formed() && kb.contains(sg.first()) && kb.contains(sg.second());
    if !consistent {
        let text = if kb.check_entity(sg.a).is_ok()
            && kb.check_entity(sg.b).is_ok()
            && kb.check_entity(sg.c).is_ok()
            && kb.check_relation(sg.r1).is_ok()
            && kb.check_relation(sg.r2).is_ok()
        {
            sg.describe(kb)
        } else {
            sg.to_string()
        };
        return Err(Error::InconsistentSubgraph(text));
    }
    let r1_set = kb.tails(sg.a, sg.r1);
    let r2_set = kb.heads(sg.r2, sg.c);
    Ok(Partition::from_sets(
        r1_set,
        r2_set,
        kb.entity_count(),
        mode,
    ))
}

/// Union of the cells the form selects, sorted.
pub fn answer_set(p: &Partition, form: LogicalForm) -> Result<Vec<EntityId>> {
    let mut out = Vec::new();
    for cell in form.cells() {
        let members = p.cell(cell).ok_or(Error::RequiresExactMode(form.index()))?;
        out.extend_from_slice(members);
    }
    out.sort_unstable();
    Ok(out)
}

/// Evaluates the form's formula for `x` from two direct index lookups.
///
/// Independent of any [`Partition`]; used to check answer sets and every
/// emitted answer choice.
pub fn eval_form_membership(
    kb: &KnowledgeBase,
    sg: &SubgraphPair,
    form: LogicalForm,
    x: EntityId,
) -> bool {
    let in_r1 = kb.tails(sg.a, sg.r1).binary_search(&x).is_ok();
    let in_r2 = kb.heads(sg.r2, sg.c).binary_search(&x).is_ok();
    form.eval(in_r1, in_r2)
}

/// Bit `i` set iff form `i` has a nonempty answer set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ValidityMask(u16);

impl ValidityMask {
    pub const NONE: ValidityMask = ValidityMask(0);
    pub const ALL: ValidityMask = ValidityMask((1 << 14) - 1);

    pub fn from_bits(bits: u16) -> Self {
        ValidityMask(bits & Self::ALL.0)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_valid(self, form: LogicalForm) -> bool {
        self.0 & (1 << form.index()) != 0
    }

    pub fn intersect(self, other: ValidityMask) -> ValidityMask {
        ValidityMask(self.0 & other.0)
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn forms(self) -> impl Iterator<Item = LogicalForm> {
        enumerate_forms()
            .into_iter()
            .filter(move |f| self.is_valid(*f))
    }

    pub fn to_bools(self) -> [bool; 14] {
        std::array::from_fn(|i| self.0 & (1 << i) != 0)
    }
}

impl FromIterator<LogicalForm> for ValidityMask {
    fn from_iter<I: IntoIterator<Item = LogicalForm>>(iter: I) -> Self {
        ValidityMask(iter.into_iter().fold(0, |acc, f| acc | (1 << f.index())))
    }
}

/// Validity from cell nonemptiness. For an implicit S4 the cell counts as
/// nonempty whenever S1..S3 do not cover the universe.
pub fn compute_validity_mask(p: &Partition) -> ValidityMask {
    let nonempty = Cell::ALL
        .iter()
        .filter(|&&c| p.cell_len(c) > 0)
        .fold(0u8, |acc, c| acc | c.bit());
    enumerate_forms()
        .into_iter()
        .filter(|f| f.mask() & nonempty != 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> KnowledgeBase {
        KnowledgeBase::from_named_triples([
            ("a", "r1", "b"),
            ("a", "r1", "f"),
            ("b", "r2", "c"),
            ("d", "r2", "c"),
            ("e", "r2", "c"),
            ("a", "r1", "d"),
        ])
    }

    fn toy_sg(kb: &KnowledgeBase) -> SubgraphPair {
        SubgraphPair {
            a: kb.entity_id("a").unwrap(),
            r1: kb.relation_id("r1").unwrap(),
            b: kb.entity_id("b").unwrap(),
            r2: kb.relation_id("r2").unwrap(),
            c: kb.entity_id("c").unwrap(),
        }
    }

    fn names(kb: &KnowledgeBase, ids: &[EntityId]) -> Vec<String> {
        let mut v: Vec<String> = ids.iter().map(|&id| kb.entity(id).to_owned()).collect();
        v.sort();
        v
    }

    fn form(i: u8) -> LogicalForm {
        LogicalForm::from_index(i).unwrap()
    }

    #[test]
    fn toy_partition_cells() {
        let kb = toy();
        let p = compute_partition(&kb, &toy_sg(&kb), S4Mode::Exact).unwrap();
        assert_eq!(names(&kb, &p.s1), ["f"]);
        assert_eq!(names(&kb, &p.s2), ["b", "d"]);
        assert_eq!(names(&kb, &p.s3), ["e"]);
        assert_eq!(names(&kb, p.cell(Cell::S4).unwrap()), ["a", "c"]);
    }

    #[test]
    fn bridge_is_always_in_s2() {
        let kb = toy();
        let sg = toy_sg(&kb);
        let p = compute_partition(&kb, &sg, S4Mode::Approximate).unwrap();
        assert_eq!(p.classify(sg.b), Cell::S2);
    }

    #[test]
    fn identical_defining_sets_leave_s1_and_s3_empty() {
        let set = [EntityId(1), EntityId(3)];
        let p = Partition::from_sets(&set, &set, 5, S4Mode::Exact);
        assert!(p.s1.is_empty() && p.s3.is_empty());
        assert_eq!(p.s2, set);
    }

    #[test]
    fn answer_sets_on_toy_partition() {
        let kb = toy();
        let p = compute_partition(&kb, &toy_sg(&kb), S4Mode::Exact).unwrap();
        assert_eq!(names(&kb, &answer_set(&p, form(1)).unwrap()), ["b", "d"]);
        assert_eq!(names(&kb, &answer_set(&p, form(4)).unwrap()), ["e", "f"]);
        assert_eq!(
            names(&kb, &answer_set(&p, form(6)).unwrap()),
            ["b", "d", "e", "f"]
        );
    }

    #[test]
    fn s4_forms_need_exact_mode() {
        let kb = toy();
        let p = compute_partition(&kb, &toy_sg(&kb), S4Mode::Approximate).unwrap();
        assert!(matches!(
            answer_set(&p, form(7)),
            Err(Error::RequiresExactMode(7))
        ));
        assert!(answer_set(&p, form(6)).is_ok());
        assert_eq!(p.cell_len(Cell::S4), 2);
    }

    #[test]
    fn membership_oracle_on_toy() {
        let kb = toy();
        let sg = toy_sg(&kb);
        let b = kb.entity_id("b").unwrap();
        let f = kb.entity_id("f").unwrap();
        assert!(eval_form_membership(&kb, &sg, form(1), b));
        assert!(!eval_form_membership(&kb, &sg, form(1), f));
        // form #7 is "neither"
        for id in 0..kb.entity_count() as u32 {
            let x = EntityId(id);
            let p1 = kb.tails_of(sg.a, sg.r1).unwrap().contains(&x);
            let p2 = kb.heads_of(sg.r2, sg.c).unwrap().contains(&x);
            assert_eq!(eval_form_membership(&kb, &sg, form(7), x), !p1 && !p2);
            for f in enumerate_forms() {
                assert!(
                    eval_form_membership(&kb, &sg, f, x)
                        ^ eval_form_membership(&kb, &sg, f.complement(), x)
                );
            }
        }
    }

    #[test]
    fn inconsistent_subgraph_is_rejected() {
        let kb = toy();
        let mut sg = toy_sg(&kb);
        sg.c = kb.entity_id("e").unwrap();
        assert!(matches!(
            compute_partition(&kb, &sg, S4Mode::Exact),
            Err(Error::InconsistentSubgraph(_))
        ));
        sg.c = EntityId(42);
        assert!(matches!(
            compute_partition(&kb, &sg, S4Mode::Exact),
            Err(Error::InconsistentSubgraph(_))
        ));
    }

    #[test]
    fn forms_table() {
        let forms = enumerate_forms();
        assert_eq!(forms.len(), 14);
        for (i, f) in forms.iter().enumerate() {
            assert_eq!(f.index() as usize, i);
            assert_eq!(f.mask() as usize, i + 1);
        }
        assert_eq!(forms[2].cells().collect::<Vec<_>>(), [Cell::S1, Cell::S2]);
        assert_eq!(forms[5].cells().collect::<Vec<_>>(), [Cell::S2, Cell::S3]);
        assert!(LogicalForm::from_index(14).is_none());
        assert!(LogicalForm::from_mask(0).is_none() && LogicalForm::from_mask(15).is_none());
    }

    #[test]
    fn rendering() {
        assert_eq!(render_form(form(2)), "(A R1 ?)");
        assert_eq!(render_form(form(7)), "NOT(A R1 ?) AND NOT(? R2 C)");
        assert_eq!(
            render_form(form(4)),
            "((A R1 ?) OR (? R2 C)) AND NOT((A R1 ?) AND (? R2 C))"
        );
        let distinct: std::collections::HashSet<_> =
            enumerate_forms().into_iter().map(render_form).collect();
        assert_eq!(distinct.len(), 14);
        assert_eq!(mask_bits(form(2)), "1100");
        assert_eq!(mask_bits(form(13)), "0111");
    }

    #[test]
    fn validity_with_empty_s1() {
        let p = Partition::from_sets(
            &[EntityId(0)],
            &[EntityId(0), EntityId(1)],
            4,
            S4Mode::Exact,
        );
        let mask = compute_validity_mask(&p);
        assert!(!mask.is_valid(form(0)));
        assert!(mask.is_valid(form(2)));
        assert_eq!(mask.count(), 13);
    }

    #[test]
    fn validity_with_only_s2() {
        let set = [EntityId(0), EntityId(1)];
        let p = Partition::from_sets(&set, &set, 2, S4Mode::Exact);
        let mask = compute_validity_mask(&p);
        let expected: ValidityMask = enumerate_forms()
            .into_iter()
            .filter(|f| f.selects(Cell::S2))
            .collect();
        assert_eq!(mask, expected);
        assert_eq!(mask.count(), 7);
        let implicit = Partition::from_sets(&set, &set, 2, S4Mode::Approximate);
        assert_eq!(compute_validity_mask(&implicit), mask);
    }

    #[test]
    fn all_cells_nonempty_means_all_valid() {
        let kb = toy();
        let p = compute_partition(&kb, &toy_sg(&kb), S4Mode::Exact).unwrap();
        assert_eq!(compute_validity_mask(&p), ValidityMask::ALL);
    }

    #[test]
    fn form_index_serde() {
        assert_eq!(serde_json::to_string(&form(9)).unwrap(), "9");
        assert!(serde_json::from_str::<LogicalForm>("14").is_err());
    }
}

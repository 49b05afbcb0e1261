//! Logical multiple-choice question generation from a commonsense
//! knowledge base of `(head, relation, tail)` triples.
//!
//! The flow is: parse and index the triples ([`kb`]), pick a two-hop chain
//! `a -r1-> b -r2-> c`, split the entity universe into four cells by
//! membership in `{x : a -r1-> x}` and `{x : x -r2-> c}` ([`logic`]), choose
//! one of the fourteen nontrivial unions of cells as the logical form, phrase
//! it as a question ([`templater`]), and draw the keyed answer plus wrong
//! answers ([`sampler`]). [`pipeline`] runs that loop at scale and
//! [`validate`] re-checks a finished dataset.

pub mod error;
pub mod kb;
pub mod logic;
pub mod pipeline;
pub mod sampler;
pub mod synthetic;
pub mod templater;
pub mod validate;

pub use error::{Error, Result};
pub use kb::{EntityId, KnowledgeBase, RelationId, SubgraphPair, Triple};
pub use logic::{LogicalForm, Partition, S4Mode, ValidityMask};
pub use pipeline::{GenerationConfig, MultipleChoiceQuestion};
pub use sampler::Strategy;
pub use templater::RelationLexicon;

//! Defeasible deontic inference over behavior taxonomies.
//!
//! This crate implements a calculus for resolving conflicts between norms
//! ("testimony") issued at different times, about behaviors related by an
//! entailment taxonomy, in propositional contexts. Stated norms close
//! deductively at the testimony layer, then default inheritance rules
//! (R1–R4) propagate obligations upward and prohibitions downward, each
//! application defeasible by contrary testimony that is more specific or
//! more recent. Surviving conclusions close again at the belief layer and
//! are summarized as per-behavior deontic status labels.
//!
//! Module map:
//!
//! * [`context`] — propositional context formulas and their truth-table
//!   decision procedure.
//! * [`ontology`] — the behavior entailment DAG with precomputed
//!   reachability, betweenness, and pairwise relation classification.
//! * [`model`] — the shared vocabulary: testimony and belief atoms, rule
//!   identifiers, status labels, traces, defeat records, norm stores.
//! * [`engine`] — testimony closure, the four inheritance rules, belief
//!   derivation, and status queries.
//! * [`conflict`] — pairwise conflict detection and the genuine-vs-spurious
//!   taxonomy.
//! * [`dsl`] — the `.ddic` script language: parser, formatter, and script
//!   values.
//! * [`oracle`] — a deliberately naive reference implementation used by the
//!   test suites to cross-check the engine.

pub mod conflict;
pub mod context;
pub mod dsl;
pub mod engine;
pub mod model;
pub mod ontology;
pub mod oracle;

pub use conflict::{classify_pair, scan_conflicts, ConflictError, ConflictKind, ConflictReport};
pub use context::{ContextError, ContextFormula, ContextVocab, CtxAtomId};
pub use dsl::{
    format_script, parse_context, parse_script, Expectation, ParseError, QueryLine, Script,
    TestimonyLine,
};
pub use engine::{
    close_testimony, derive_beliefs, query_status, store_diagnostics, try_inherit_imp,
    try_inherit_nonimp, try_inherit_nonobl, try_inherit_obl, ClosedTestimony, EngineError,
    RuleEnv, RuleOutcome, TestimonySource,
};
pub use model::{
    label_of, BeliefAtom, Conclusion, DefeatRecord, DerivationTrace, Modal, ModelError, NormStore,
    Polarity, Premise, RuleApplication, RuleId, SideCondition, StatusLabel, StatusReport,
    TestimonyAtom, Time, TimeWindow,
};
pub use ontology::{ActionId, BehaviorRelation, Ontology, OntologyError};
pub use oracle::{
    assert_engine_equivalence, naive_extension, ExtAtom, Extension, GroundInstance, OracleError,
};

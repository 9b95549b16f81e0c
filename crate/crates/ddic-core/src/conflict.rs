//! Conflict detection over stated testimony.
//!
//! Two positive statements conflict when their modals disagree, their
//! contexts can hold together, and their behaviors are related in the
//! taxonomy. The *kind* of conflict follows the behavior relation —
//! `Direct` for the same behavior, `Indirect` when one specializes the
//! other, `Intersecting` when they only share a common specialization —
//! and the `genuine` flag records whether the inheritance rules actually
//! let the two statements collide, or whether the apparent conflict
//! dissolves because the opposed inheritances propagate in directions
//! that never meet.
//!
//! Detection works on stated atoms only; what the engine ultimately
//! *believes* at the shared grounds is the engine's business, and the
//! suites cross-check the `genuine` flag against it: genuine conflicts
//! resolve by recency at the shared grounds, spurious ones are invariant
//! under reordering the two statements in time.

use thiserror::Error;

use crate::context::{conjoin, ContextError, ContextFormula, ContextVocab};
use crate::model::{Modal, NormStore, Polarity, TestimonyAtom};
use crate::ontology::{ActionId, BehaviorRelation, Ontology, OntologyError};

/// How the two conflicting statements' behaviors relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    /// Same behavior.
    Direct,
    /// One behavior specializes the other.
    Indirect,
    /// Incomparable behaviors with a common specialization.
    Intersecting,
}

impl ConflictKind {
    /// Stable text form.
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictKind::Direct => "Direct",
            ConflictKind::Indirect => "Indirect",
            ConflictKind::Intersecting => "Intersecting",
        }
    }
}

impl std::fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One detected conflict between two stated atoms.
///
/// `first`/`second` are ordered by (time, behavior name, modal) so that a
/// pair classifies identically regardless of argument order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictReport {
    pub kind: ConflictKind,
    pub first: TestimonyAtom,
    pub second: TestimonyAtom,
    /// The behavior where both statements' grounds meet: the common
    /// behavior (direct), the more specific one (indirect), or the least
    /// common specialization (intersecting).
    pub shared_behavior: ActionId,
    /// Conjunction of both statements' contexts (always satisfiable —
    /// otherwise there is no conflict to report).
    pub shared_context: ContextFormula,
    /// Whether the opposed inheritances actually meet, making the
    /// resolution order-sensitive.
    pub genuine: bool,
    /// Short explanation of the classification.
    pub note: String,
}

impl ConflictReport {
    /// Human rendering, e.g.
    /// `Indirect (not genuine) at HC: Öbl(C, Monday, 1) vs Öpt(HC, Morning, 2) — no actual conflict: …`.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        format!(
            "{} ({}) at {}: {} vs {} — {}",
            self.kind,
            if self.genuine { "genuine" } else { "not genuine" },
            ont.name(self.shared_behavior),
            self.first.render(ont, vocab),
            self.second.render(ont, vocab),
            self.note
        )
    }
}

/// Errors from conflict classification.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConflictError {
    /// Classification is defined over stated atoms, which are positive.
    #[error("conflict classification requires positive (stated) atoms")]
    NegativeAtom,
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// Do two modals make opposing claims? Same-modal pairs never conflict;
/// any two distinct modals do (`Obl`/`Imp` directly, and `Opt` denies
/// both).
fn modals_oppose(a: Modal, b: Modal) -> bool {
    a != b
}

/// Explains a spurious indirect conflict, given which modal sits at the
/// more specific behavior.
fn spurious_indirect_note(specific: Modal, general: Modal) -> &'static str {
    match (specific, general) {
        (Modal::Opt, Modal::Obl) => "no actual conflict: obligations do not inherit downward",
        (Modal::Imp, Modal::Opt) => {
            "no actual conflict: non-impermissibility inherits upward only, away from the prohibition"
        }
        (Modal::Imp, Modal::Obl) => {
            "no actual conflict: obligations inherit upward and prohibitions downward, so the opposed regions never meet"
        }
        _ => unreachable!("genuine patterns handled separately"),
    }
}

/// Classifies one pair of stated atoms. Returns `None` when the pair
/// cannot conflict: same modal, jointly unsatisfiable contexts, or
/// unrelated behaviors.
pub fn classify_pair(
    ont: &Ontology,
    vocab: &ContextVocab,
    n1: &TestimonyAtom,
    n2: &TestimonyAtom,
) -> Result<Option<ConflictReport>, ConflictError> {
    if n1.polarity != Polarity::Positive || n2.polarity != Polarity::Positive {
        return Err(ConflictError::NegativeAtom);
    }
    ont.check_id(n1.behavior)?;
    ont.check_id(n2.behavior)?;
    if !modals_oppose(n1.modal, n2.modal) {
        return Ok(None);
    }
    if !vocab.consistent(&n1.context, &n2.context)? {
        return Ok(None);
    }

    // Normalize the pair so classification is symmetric in its arguments.
    let (first, second) = {
        let key = |x: &TestimonyAtom| (x.time, ont.name(x.behavior).to_string(), x.modal);
        if key(n1) <= key(n2) {
            (n1.clone(), n2.clone())
        } else {
            (n2.clone(), n1.clone())
        }
    };

    let (kind, shared_behavior, genuine, note): (ConflictKind, ActionId, bool, String) =
        match ont.relate(first.behavior, second.behavior) {
            BehaviorRelation::Disjoint => return Ok(None),
            BehaviorRelation::Equal => (
                ConflictKind::Direct,
                first.behavior,
                true,
                "direct conflict: the most recent testimony prevails at the shared behavior"
                    .to_string(),
            ),
            BehaviorRelation::Specializes | BehaviorRelation::Generalizes => {
                let (specific, general) =
                    if ont.entails(first.behavior, second.behavior) {
                        (&first, &second)
                    } else {
                        (&second, &first)
                    };
                // The opposed inheritances meet on the path between the two
                // behaviors exactly when the specific statement's claim
                // propagates upward into the general one's territory:
                // obligations always inherit upward, and a specific
                // discretionary claim sends its non-impermissibility upward
                // into a general prohibition.
                let genuine = matches!(
                    (specific.modal, general.modal),
                    (Modal::Obl, _) | (Modal::Opt, Modal::Imp)
                );
                let note = if genuine {
                    "genuine conflict along the shared entailment path: the most recent testimony prevails"
                        .to_string()
                } else {
                    spurious_indirect_note(specific.modal, general.modal).to_string()
                };
                (ConflictKind::Indirect, specific.behavior, genuine, note)
            }
            BehaviorRelation::Intersects(witness) => (
                ConflictKind::Intersecting,
                witness,
                false,
                "no actual conflict: the opposed inheritances never reach the intersection together"
                    .to_string(),
            ),
        };

    let shared_context = conjoin(&first.context, &second.context);
    Ok(Some(ConflictReport {
        kind,
        first,
        second,
        shared_behavior,
        shared_context,
        genuine,
        note,
    }))
}

/// Scans every unordered pair of stated atoms and reports the conflicts,
/// ordered by (earlier time, later time, shared behavior name) and then
/// by the atoms themselves for full determinism.
pub fn scan_conflicts(store: &NormStore) -> Result<Vec<ConflictReport>, ConflictError> {
    let ont = store.ontology();
    let vocab = store.contexts();
    let stated = store.stated();
    let mut reports = Vec::new();
    for i in 0..stated.len() {
        for j in (i + 1)..stated.len() {
            if let Some(report) = classify_pair(ont, vocab, &stated[i], &stated[j])? {
                reports.push(report);
            }
        }
    }
    reports.sort_by(|a, b| {
        (
            a.first.time,
            a.second.time,
            ont.name(a.shared_behavior),
            &a.first,
            &a.second,
        )
            .cmp(&(
                b.first.time,
                b.second.time,
                ont.name(b.shared_behavior),
                &b.first,
                &b.second,
            ))
    });
    Ok(reports)
}

//! Shared vocabulary of the inference engine.
//!
//! Two layers of normative statements share one shape and differ in force:
//!
//! * **Testimony atoms** record what sources *said* — marked modals
//!   (`Öbl`/`Ïmp`/`Öpt`). Stated testimony is always positive; negative
//!   testimony atoms exist only as deductive consequences.
//! * **Belief atoms** record what the agent *concludes* — plain modals
//!   (`Obl`/`Imp`/`Opt`) produced by the defeasible inheritance rules and
//!   their deductive closure.
//!
//! Negation is a polarity bit on the atom, not a formula connective: the
//! complement of an atom flips that bit and nothing else. Every atom names
//! a behavior from the [`ontology`](crate::ontology), carries a
//! [`context`](crate::context) formula scoping its applicability, and a
//! natural-number timestamp.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::context::{ContextError, ContextFormula, ContextVocab};
use crate::ontology::{ActionId, Ontology, OntologyError};

/// Discrete time: statement timestamps and query horizons.
pub type Time = u64;

/// The three deontic modals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modal {
    /// Obligatory.
    Obl,
    /// Impermissible.
    Imp,
    /// Optional (neither obligatory nor impermissible).
    Opt,
}

impl Modal {
    /// Rendering at the testimony layer (marked form).
    pub fn testimony_name(self) -> &'static str {
        match self {
            Modal::Obl => "Öbl",
            Modal::Imp => "Ïmp",
            Modal::Opt => "Öpt",
        }
    }

    /// Rendering at the belief layer (plain form).
    pub fn belief_name(self) -> &'static str {
        match self {
            Modal::Obl => "Obl",
            Modal::Imp => "Imp",
            Modal::Opt => "Opt",
        }
    }
}

/// Whether an atom asserts or denies its modal. Not a nested negation:
/// complementing twice restores the original atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    /// The modal holds.
    Positive,
    /// The modal is denied.
    Negative,
}

impl Polarity {
    /// The opposite polarity.
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// `"¬"` for negative atoms, `""` for positive ones.
    pub fn sign(self) -> &'static str {
        match self {
            Polarity::Positive => "",
            Polarity::Negative => "¬",
        }
    }
}

/// A statement at the testimony layer: `{¬}M̈(behavior, context, time)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TestimonyAtom {
    pub polarity: Polarity,
    pub modal: Modal,
    pub behavior: ActionId,
    pub context: ContextFormula,
    pub time: Time,
}

/// A conclusion at the belief layer: `{¬}M(behavior, context, time)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefAtom {
    pub polarity: Polarity,
    pub modal: Modal,
    pub behavior: ActionId,
    pub context: ContextFormula,
    pub time: Time,
}

impl TestimonyAtom {
    /// Positive testimony — the only polarity sources may state.
    pub fn positive(modal: Modal, behavior: ActionId, context: ContextFormula, time: Time) -> Self {
        TestimonyAtom { polarity: Polarity::Positive, modal, behavior, context, time }
    }

    /// Negative testimony — arises only through deductive closure.
    pub fn negative(modal: Modal, behavior: ActionId, context: ContextFormula, time: Time) -> Self {
        TestimonyAtom { polarity: Polarity::Negative, modal, behavior, context, time }
    }

    /// The same statement with polarity flipped.
    pub fn complement(&self) -> Self {
        TestimonyAtom { polarity: self.polarity.flipped(), ..self.clone() }
    }

    /// Human rendering, e.g. `¬Ïmp(HCV, Morning, 2)`.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        format!(
            "{}{}({}, {}, {})",
            self.polarity.sign(),
            self.modal.testimony_name(),
            ont.name(self.behavior),
            self.context.render(vocab),
            self.time
        )
    }
}

impl BeliefAtom {
    /// Positive belief.
    pub fn positive(modal: Modal, behavior: ActionId, context: ContextFormula, time: Time) -> Self {
        BeliefAtom { polarity: Polarity::Positive, modal, behavior, context, time }
    }

    /// Negative belief.
    pub fn negative(modal: Modal, behavior: ActionId, context: ContextFormula, time: Time) -> Self {
        BeliefAtom { polarity: Polarity::Negative, modal, behavior, context, time }
    }

    /// The same conclusion with polarity flipped.
    pub fn complement(&self) -> Self {
        BeliefAtom { polarity: self.polarity.flipped(), ..self.clone() }
    }

    /// Human rendering, e.g. `Obl(HCV, Monday & Morning, 3)`.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        format!(
            "{}{}({}, {}, {})",
            self.polarity.sign(),
            self.modal.belief_name(),
            ont.name(self.behavior),
            self.context.render(vocab),
            self.time
        )
    }
}

/// The deontic status of one behavior under one context and horizon.
///
/// Precedence when summarizing a belief set: `Inconsistent` dominates,
/// then the positive modals, then `Optional`, then the single negatives,
/// then `Unknown` for silence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatusLabel {
    Obligatory,
    Impermissible,
    Optional,
    NonObligatory,
    NonImpermissible,
    Unknown,
    Inconsistent,
}

impl StatusLabel {
    /// Stable text form (also used for JSON output).
    pub fn as_str(self) -> &'static str {
        match self {
            StatusLabel::Obligatory => "Obligatory",
            StatusLabel::Impermissible => "Impermissible",
            StatusLabel::Optional => "Optional",
            StatusLabel::NonObligatory => "NonObligatory",
            StatusLabel::NonImpermissible => "NonImpermissible",
            StatusLabel::Unknown => "Unknown",
            StatusLabel::Inconsistent => "Inconsistent",
        }
    }
}

impl std::fmt::Display for StatusLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Errors raised by the shared-vocabulary operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// `label_of` requires all beliefs to describe one
    /// (behavior, context, time) triple.
    #[error("belief set mixes distinct (behavior, context, time) triples")]
    MixedTriples,
    /// A behavior reference the ontology never issued.
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    /// A context formula referencing undeclared atoms.
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// Summarizes the belief set of one triple as a status label.
///
/// The set must be homogeneous in (behavior, context, time); the empty set
/// labels `Unknown`. A complementary pair anywhere labels `Inconsistent`.
/// `Optional` requires both the negative-`Obl` and negative-`Imp` beliefs
/// — in closed belief sets that is exactly when the positive `Opt` belief
/// is present.
pub fn label_of(beliefs: &BTreeSet<BeliefAtom>) -> Result<StatusLabel, ModelError> {
    let mut triples = beliefs
        .iter()
        .map(|b| (b.behavior, &b.context, b.time));
    if let Some(first) = triples.next() {
        if triples.any(|t| t != first) {
            return Err(ModelError::MixedTriples);
        }
    } else {
        return Ok(StatusLabel::Unknown);
    }

    let has = |polarity: Polarity, modal: Modal| {
        beliefs
            .iter()
            .any(|b| b.polarity == polarity && b.modal == modal)
    };
    if beliefs.iter().any(|b| beliefs.contains(&b.complement())) {
        return Ok(StatusLabel::Inconsistent);
    }
    if has(Polarity::Positive, Modal::Obl) {
        return Ok(StatusLabel::Obligatory);
    }
    if has(Polarity::Positive, Modal::Imp) {
        return Ok(StatusLabel::Impermissible);
    }
    let non_obl = has(Polarity::Negative, Modal::Obl);
    let non_imp = has(Polarity::Negative, Modal::Imp);
    match (non_obl, non_imp) {
        (true, true) => Ok(StatusLabel::Optional),
        (true, false) => Ok(StatusLabel::NonObligatory),
        (false, true) => Ok(StatusLabel::NonImpermissible),
        (false, false) => Ok(StatusLabel::Unknown),
    }
}

/// Identifiers of the calculus rules, used in traces and logs.
///
/// `D1a`/`D1b` close the testimony layer, `R1`–`R4` are the defeasible
/// inheritance rules, `D1c`/`D1d` close the belief layer. The
/// `*Contra` variants are the contrapositive (modus tollens) directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    D1a,
    D1b,
    D1bContra,
    R1,
    R2,
    R3,
    R4,
    D1c,
    D1d,
    D1dContra,
}

impl RuleId {
    /// Stable text form.
    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::D1a => "D1a",
            RuleId::D1b => "D1b",
            RuleId::D1bContra => "D1b-contrapositive",
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
            RuleId::R4 => "R4",
            RuleId::D1c => "D1c",
            RuleId::D1d => "D1d",
            RuleId::D1dContra => "D1d-contrapositive",
        }
    }
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The inclusive window a defeater must fall in: the defeater's timestamp
/// lies between the stated atom's timestamp and the query horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeWindow {
    /// Timestamp of the testimony the rule fired from.
    pub stated: Time,
    /// Timestamp of the defeating testimony.
    pub defeater: Time,
    /// Query horizon.
    pub query: Time,
}

impl TimeWindow {
    /// Renders as `1 ≤ 2 ≤ 3`.
    pub fn render(&self) -> String {
        format!("{} ≤ {} ≤ {}", self.stated, self.defeater, self.query)
    }
}

/// One successful defeat of an inheritance-rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefeatRecord {
    /// The rule whose application was blocked (`R1`–`R4`).
    pub rule: RuleId,
    /// The testimony the blocked application fired from.
    pub stated: TestimonyAtom,
    /// The contrary testimony that blocked it.
    pub defeater: TestimonyAtom,
    /// The behaviors realizing the rule's entailment side condition, in
    /// entailment order (e.g. defeater → target → stated for a downward
    /// rule's first justification).
    pub path_witness: Vec<ActionId>,
    /// The satisfied inclusive time window.
    pub window: TimeWindow,
}

impl DefeatRecord {
    /// Renders the entailment path, e.g. `HCV → HCV → CV`.
    pub fn render_path(&self, ont: &Ontology) -> String {
        self.path_witness
            .iter()
            .map(|&id| ont.name(id))
            .collect::<Vec<_>>()
            .join(" → ")
    }

    /// Full human rendering of the defeat.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        format!(
            "{} from {} defeated by {} via {} within {}",
            self.rule,
            self.stated.render(ont, vocab),
            self.defeater.render(ont, vocab),
            self.render_path(ont),
            self.window.render()
        )
    }
}

/// A premise of a recorded rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    Testimony(TestimonyAtom),
    Belief(BeliefAtom),
}

impl Premise {
    /// Human rendering at the appropriate layer.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        match self {
            Premise::Testimony(t) => t.render(ont, vocab),
            Premise::Belief(b) => b.render(ont, vocab),
        }
    }
}

/// A side condition matched while applying a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SideCondition {
    /// Behavior entailment realized by the listed nodes, in order.
    Entailment { path: Vec<ActionId> },
    /// `from` entails `to` at the context layer.
    ContextEntailment { from: ContextFormula, to: ContextFormula },
    /// The stated timestamp does not exceed the query horizon.
    TimeBound { stated: Time, query: Time },
}

impl SideCondition {
    /// Human rendering.
    pub fn render(&self, ont: &Ontology, vocab: &ContextVocab) -> String {
        match self {
            SideCondition::Entailment { path } => path
                .iter()
                .map(|&id| ont.name(id))
                .collect::<Vec<_>>()
                .join(" → "),
            SideCondition::ContextEntailment { from, to } => {
                format!("{} ⊨ {}", from.render(vocab), to.render(vocab))
            }
            SideCondition::TimeBound { stated, query } => format!("{stated} ≤ {query}"),
        }
    }
}

/// One recorded rule application: which rule, from which premises, under
/// which side conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: RuleId,
    pub premises: Vec<Premise>,
    pub side_conditions: Vec<SideCondition>,
}

/// What a trace concluded: a belief that entered the belief set, or the
/// belief that *would* have, had the application not been defeated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conclusion {
    Derived(BeliefAtom),
    Blocked(BeliefAtom),
}

impl Conclusion {
    /// The belief the trace is about, derived or not.
    pub fn belief(&self) -> &BeliefAtom {
        match self {
            Conclusion::Derived(b) | Conclusion::Blocked(b) => b,
        }
    }

    /// True for derived conclusions.
    pub fn is_derived(&self) -> bool {
        matches!(self, Conclusion::Derived(_))
    }
}

/// Full record of one attempted derivation.
///
/// A blocked conclusion carries at least one [`DefeatRecord`]; a derived
/// conclusion carries none (though `candidates_checked` reports how many
/// potential defeaters were scanned either way).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub conclusion: Conclusion,
    pub rule_applications: Vec<RuleApplication>,
    pub defeats: Vec<DefeatRecord>,
    /// Number of defeater candidates examined during the consistency check.
    pub candidates_checked: usize,
}

/// The answer to a status query: one behavior, one context, one horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusReport {
    /// Summary of `beliefs` per the label precedence.
    pub label: StatusLabel,
    /// Every belief derived for the queried triple.
    pub beliefs: BTreeSet<BeliefAtom>,
    /// Traces for derived and blocked conclusions at this behavior.
    pub traces: Vec<DerivationTrace>,
    /// Warnings, e.g. simultaneous contradictory testimony affecting this
    /// behavior.
    pub diagnostics: Vec<String>,
}

/// A store of stated norms over one taxonomy and context vocabulary.
///
/// Stated testimony is positive by construction and kept ordered by
/// (time, insertion order). Stores are snapshots: asserting testimony
/// returns a new store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormStore {
    ontology: Ontology,
    contexts: ContextVocab,
    testimony: Vec<TestimonyAtom>,
}

impl NormStore {
    /// A store with no testimony.
    pub fn new(ontology: Ontology, contexts: ContextVocab) -> Self {
        NormStore { ontology, contexts, testimony: Vec::new() }
    }

    /// The behavior taxonomy.
    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    /// The context vocabulary.
    pub fn contexts(&self) -> &ContextVocab {
        &self.contexts
    }

    /// Stated testimony, ordered by (time, insertion order).
    pub fn stated(&self) -> &[TestimonyAtom] {
        &self.testimony
    }

    /// The latest stated timestamp; the default query horizon.
    pub fn max_time(&self) -> Option<Time> {
        self.testimony.iter().map(|t| t.time).max()
    }

    /// Asserts one positive testimony atom, returning the extended store.
    /// Validates that the behavior and every context atom are declared.
    pub fn with_testimony(
        &self,
        modal: Modal,
        behavior: ActionId,
        context: ContextFormula,
        time: Time,
    ) -> Result<NormStore, ModelError> {
        self.ontology.check_id(behavior)?;
        // Surface undeclared context atoms now rather than at query time.
        self.contexts.satisfiable(&context)?;
        let atom = TestimonyAtom::positive(modal, behavior, context, time);
        let mut next = self.clone();
        // Stable position: after everything stated at or before `time`.
        let pos = next
            .testimony
            .iter()
            .position(|t| t.time > atom.time)
            .unwrap_or(next.testimony.len());
        next.testimony.insert(pos, atom);
        Ok(next)
    }
}

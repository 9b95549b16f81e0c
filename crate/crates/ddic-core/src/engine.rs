//! The inference pipeline: testimony closure, defeasible inheritance, and
//! belief closure.
//!
//! Deriving the beliefs of a store at query context `δ` and horizon `t_n`
//! runs three stages:
//!
//! 1. **Testimony closure** — stated atoms with `time ≤ t_n` are closed
//!    under the deductive rules of the testimony layer: a discretionary
//!    statement denies both obligation and prohibition (and conversely,
//!    denying both yields discretion), and obligation and prohibition
//!    exclude each other.
//! 2. **Defeasible inheritance** — each closed testimony atom projects
//!    along the behavior taxonomy: obligations and denied prohibitions
//!    inherit *upward* (from specific to general), prohibitions and denied
//!    obligations inherit *downward*. An application is defeated when the
//!    closed testimony contains contrary testimony on the relevant path
//!    whose timestamp falls in the inclusive window from the premise's
//!    time to the horizon — so later statements override earlier ones
//!    (recency) and statements about more specific behaviors override
//!    general ones (specificity), both falling out of the same check.
//! 3. **Belief closure** — per behavior, derived beliefs are closed
//!    deductively (an obligation denies prohibition and vice versa; both
//!    denials amount to discretion).
//!
//! Defeaters are checked against the closed *testimony* only — never
//! against the defeasibly derived beliefs — so the derivation never feeds
//! back into its own justifications and a single, order-independent
//! extension exists.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::conflict::{classify_pair, ConflictError};
use crate::context::{ContextError, ContextFormula, ContextVocab};
use crate::model::{
    label_of, BeliefAtom, Conclusion, DefeatRecord, DerivationTrace, Modal, NormStore, Polarity,
    Premise, RuleApplication, RuleId, SideCondition, StatusReport, TestimonyAtom, Time,
    TimeWindow,
};
use crate::ontology::{ActionId, Ontology, OntologyError};

/// Where a closed-testimony atom came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestimonySource {
    /// Asserted into the store.
    Stated,
    /// Deduced during closure.
    Derived {
        rule: RuleId,
        /// The closed atoms the rule fired from.
        from: Vec<TestimonyAtom>,
    },
}

/// The deductive closure of (a time slice of) the stated testimony.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedTestimony {
    atoms: BTreeSet<TestimonyAtom>,
    sources: BTreeMap<TestimonyAtom, TestimonySource>,
    contradictions: Vec<(TestimonyAtom, TestimonyAtom)>,
}

impl ClosedTestimony {
    /// Every atom in the closure, in sorted order.
    pub fn atoms(&self) -> impl Iterator<Item = &TestimonyAtom> {
        self.atoms.iter()
    }

    /// Number of atoms in the closure.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// True when the closure holds no atoms.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Membership test.
    pub fn contains(&self, atom: &TestimonyAtom) -> bool {
        self.atoms.contains(atom)
    }

    /// How `atom` entered the closure, if it did.
    pub fn source(&self, atom: &TestimonyAtom) -> Option<&TestimonySource> {
        self.sources.get(atom)
    }

    /// Complementary pairs present in the closure, as (positive, negative).
    pub fn contradictions(&self) -> &[(TestimonyAtom, TestimonyAtom)] {
        &self.contradictions
    }

    /// True when the closure contains any complementary pair.
    pub fn is_contradictory(&self) -> bool {
        !self.contradictions.is_empty()
    }
}

/// Closes a set of testimony atoms under the testimony-layer rules.
fn close_atoms(initial: impl IntoIterator<Item = TestimonyAtom>) -> ClosedTestimony {
    let mut atoms: BTreeSet<TestimonyAtom> = BTreeSet::new();
    let mut sources: BTreeMap<TestimonyAtom, TestimonySource> = BTreeMap::new();
    for atom in initial {
        if atoms.insert(atom.clone()) {
            sources.insert(atom, TestimonySource::Stated);
        }
    }

    loop {
        let mut additions: Vec<(TestimonyAtom, RuleId, Vec<TestimonyAtom>)> = Vec::new();
        for atom in &atoms {
            let same_triple = |polarity: Polarity, modal: Modal| TestimonyAtom {
                polarity,
                modal,
                behavior: atom.behavior,
                context: atom.context.clone(),
                time: atom.time,
            };
            match (atom.polarity, atom.modal) {
                // Discretion denies both obligation and prohibition.
                (Polarity::Positive, Modal::Opt) => {
                    for modal in [Modal::Obl, Modal::Imp] {
                        additions.push((
                            same_triple(Polarity::Negative, modal),
                            RuleId::D1a,
                            vec![atom.clone()],
                        ));
                    }
                }
                // Obligation excludes prohibition.
                (Polarity::Positive, Modal::Obl) => additions.push((
                    same_triple(Polarity::Negative, Modal::Imp),
                    RuleId::D1b,
                    vec![atom.clone()],
                )),
                // Prohibition excludes obligation (modus tollens).
                (Polarity::Positive, Modal::Imp) => additions.push((
                    same_triple(Polarity::Negative, Modal::Obl),
                    RuleId::D1bContra,
                    vec![atom.clone()],
                )),
                // Denying both obligation and prohibition is discretion.
                (Polarity::Negative, Modal::Obl) => {
                    let partner = same_triple(Polarity::Negative, Modal::Imp);
                    if atoms.contains(&partner) {
                        additions.push((
                            same_triple(Polarity::Positive, Modal::Opt),
                            RuleId::D1a,
                            vec![atom.clone(), partner],
                        ));
                    }
                }
                _ => {}
            }
        }
        let mut grew = false;
        for (atom, rule, from) in additions {
            if atoms.insert(atom.clone()) {
                sources.insert(atom, TestimonySource::Derived { rule, from });
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let contradictions = atoms
        .iter()
        .filter(|a| a.polarity == Polarity::Positive)
        .filter_map(|a| {
            let complement = a.complement();
            atoms
                .contains(&complement)
                .then(|| (a.clone(), complement))
        })
        .collect();

    ClosedTestimony { atoms, sources, contradictions }
}

/// Closes the store's full stated testimony (all timestamps).
///
/// Derivation closes the slice `time ≤ t_n` instead; since closure never
/// changes timestamps, that equals this closure restricted to the slice.
pub fn close_testimony(store: &NormStore) -> ClosedTestimony {
    close_atoms(store.stated().iter().cloned())
}

/// Everything an inheritance rule consults: the taxonomy, the context
/// vocabulary, and the closed testimony it fires from and is defeated by.
#[derive(Debug, Clone, Copy)]
pub struct RuleEnv<'a> {
    pub ontology: &'a Ontology,
    pub contexts: &'a ContextVocab,
    pub testimony: &'a ClosedTestimony,
}

/// Result of attempting one inheritance-rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleOutcome {
    /// Preconditions held and no defeater was found.
    Derived { belief: BeliefAtom, trace: DerivationTrace },
    /// Preconditions held but contrary testimony blocked the conclusion.
    Defeated { trace: DerivationTrace },
    /// A precondition failed; nothing to record.
    NotApplicable { reason: String },
}

impl RuleOutcome {
    /// The trace, when the application got far enough to produce one.
    pub fn trace(&self) -> Option<&DerivationTrace> {
        match self {
            RuleOutcome::Derived { trace, .. } | RuleOutcome::Defeated { trace } => Some(trace),
            RuleOutcome::NotApplicable { .. } => None,
        }
    }

    /// True when a belief was derived.
    pub fn is_derived(&self) -> bool {
        matches!(self, RuleOutcome::Derived { .. })
    }
}

/// Which way a rule projects along the behavior taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// Premise behavior entails the target (specific → general).
    Upward,
    /// Target entails the premise behavior (general → specific).
    Downward,
}

/// Static shape of one inheritance rule.
struct RuleShape {
    rule: RuleId,
    premise: (Polarity, Modal),
    direction: Direction,
    conclusion: (Polarity, Modal),
    defeater: (Polarity, Modal),
}

/// Obligations inherit upward; defeated by denied obligation above.
const INHERIT_OBL: RuleShape = RuleShape {
    rule: RuleId::R1,
    premise: (Polarity::Positive, Modal::Obl),
    direction: Direction::Upward,
    conclusion: (Polarity::Positive, Modal::Obl),
    defeater: (Polarity::Negative, Modal::Obl),
};

/// Denied prohibitions inherit upward; defeated by prohibition above.
const INHERIT_NONIMP: RuleShape = RuleShape {
    rule: RuleId::R2,
    premise: (Polarity::Negative, Modal::Imp),
    direction: Direction::Upward,
    conclusion: (Polarity::Negative, Modal::Imp),
    defeater: (Polarity::Positive, Modal::Imp),
};

/// Prohibitions inherit downward; defeated by denied prohibition on the
/// path.
const INHERIT_IMP: RuleShape = RuleShape {
    rule: RuleId::R3,
    premise: (Polarity::Positive, Modal::Imp),
    direction: Direction::Downward,
    conclusion: (Polarity::Positive, Modal::Imp),
    defeater: (Polarity::Negative, Modal::Imp),
};

/// Denied obligations inherit downward; defeated by obligation on the
/// path.
const INHERIT_NONOBL: RuleShape = RuleShape {
    rule: RuleId::R4,
    premise: (Polarity::Negative, Modal::Obl),
    direction: Direction::Downward,
    conclusion: (Polarity::Negative, Modal::Obl),
    defeater: (Polarity::Positive, Modal::Obl),
};

/// Shared body of the four inheritance rules.
fn apply_rule(
    env: &RuleEnv<'_>,
    shape: &RuleShape,
    stated: &TestimonyAtom,
    target: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> RuleOutcome {
    let not_applicable = |reason: String| RuleOutcome::NotApplicable { reason };

    if (stated.polarity, stated.modal) != shape.premise {
        return not_applicable(format!(
            "{} fires from {}{} testimony",
            shape.rule,
            shape.premise.0.sign(),
            shape.premise.1.testimony_name()
        ));
    }
    if !env.testimony.contains(stated) {
        return not_applicable("premise is not in the closed testimony".to_string());
    }
    if env.ontology.check_id(target).is_err() {
        return not_applicable("target behavior is not in the ontology".to_string());
    }
    // The entailment the rule projects along, as (specific, general).
    let (specific, general) = match shape.direction {
        Direction::Upward => (stated.behavior, target),
        Direction::Downward => (target, stated.behavior),
    };
    if !env.ontology.entails(specific, general) {
        return not_applicable(format!(
            "no entailment {} → {}",
            env.ontology.name(specific),
            env.ontology.name(general)
        ));
    }
    match env.contexts.entails(delta, &stated.context) {
        Ok(true) => {}
        Ok(false) => {
            return not_applicable("query context does not entail the stated context".to_string())
        }
        Err(e) => return not_applicable(format!("context error: {e}")),
    }
    if stated.time > t_n {
        return not_applicable(format!(
            "stated at {} after the query horizon {}",
            stated.time, t_n
        ));
    }

    // Consistency check: scan the closed testimony for contrary statements
    // on the relevant path inside the inclusive window.
    let mut defeats: Vec<DefeatRecord> = Vec::new();
    let mut candidates_checked = 0usize;
    for z in env.testimony.atoms() {
        if (z.polarity, z.modal) != shape.defeater {
            continue;
        }
        candidates_checked += 1;
        if !(stated.time <= z.time && z.time <= t_n) {
            continue;
        }
        if !matches!(env.contexts.entails(delta, &z.context), Ok(true)) {
            continue;
        }
        let path_witness = match shape.direction {
            // Contrary testimony anywhere above the premise blocks an
            // upward projection.
            Direction::Upward => env
                .ontology
                .entails(stated.behavior, z.behavior)
                .then(|| vec![stated.behavior, z.behavior]),
            // A downward projection is blocked from below the target or
            // from between the target and the premise.
            Direction::Downward => {
                if env.ontology.entails(z.behavior, target) {
                    Some(vec![z.behavior, target, stated.behavior])
                } else if env.ontology.entails(target, z.behavior)
                    && env.ontology.entails(z.behavior, stated.behavior)
                {
                    Some(vec![target, z.behavior, stated.behavior])
                } else {
                    None
                }
            }
        };
        if let Some(path_witness) = path_witness {
            defeats.push(DefeatRecord {
                rule: shape.rule,
                stated: stated.clone(),
                defeater: z.clone(),
                path_witness,
                window: TimeWindow { stated: stated.time, defeater: z.time, query: t_n },
            });
        }
    }

    let belief = BeliefAtom {
        polarity: shape.conclusion.0,
        modal: shape.conclusion.1,
        behavior: target,
        context: delta.clone(),
        time: t_n,
    };
    let application = RuleApplication {
        rule: shape.rule,
        premises: vec![Premise::Testimony(stated.clone())],
        side_conditions: vec![
            SideCondition::Entailment { path: vec![specific, general] },
            SideCondition::ContextEntailment { from: delta.clone(), to: stated.context.clone() },
            SideCondition::TimeBound { stated: stated.time, query: t_n },
        ],
    };
    if defeats.is_empty() {
        RuleOutcome::Derived {
            belief: belief.clone(),
            trace: DerivationTrace {
                conclusion: Conclusion::Derived(belief),
                rule_applications: vec![application],
                defeats,
                candidates_checked,
            },
        }
    } else {
        RuleOutcome::Defeated {
            trace: DerivationTrace {
                conclusion: Conclusion::Blocked(belief),
                rule_applications: vec![application],
                defeats,
                candidates_checked,
            },
        }
    }
}

/// Projects an obligation upward from `stated` to `target`.
pub fn try_inherit_obl(
    env: &RuleEnv<'_>,
    stated: &TestimonyAtom,
    target: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> RuleOutcome {
    apply_rule(env, &INHERIT_OBL, stated, target, delta, t_n)
}

/// Projects a denied prohibition upward from `stated` to `target`.
pub fn try_inherit_nonimp(
    env: &RuleEnv<'_>,
    stated: &TestimonyAtom,
    target: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> RuleOutcome {
    apply_rule(env, &INHERIT_NONIMP, stated, target, delta, t_n)
}

/// Projects a prohibition downward from `stated` to `target`.
pub fn try_inherit_imp(
    env: &RuleEnv<'_>,
    stated: &TestimonyAtom,
    target: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> RuleOutcome {
    apply_rule(env, &INHERIT_IMP, stated, target, delta, t_n)
}

/// Projects a denied obligation downward from `stated` to `target`.
pub fn try_inherit_nonobl(
    env: &RuleEnv<'_>,
    stated: &TestimonyAtom,
    target: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> RuleOutcome {
    apply_rule(env, &INHERIT_NONOBL, stated, target, delta, t_n)
}

/// Errors raised by the derivation pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Conflict(#[from] ConflictError),
}

/// Runs the full pipeline and reports the status of every behavior under
/// query context `delta` at horizon `t_n`.
pub fn derive_beliefs(
    store: &NormStore,
    delta: &ContextFormula,
    t_n: Time,
) -> Result<BTreeMap<ActionId, StatusReport>, EngineError> {
    let ont = store.ontology();
    let vocab = store.contexts();
    // Surface undeclared atoms in the query context up front.
    vocab.satisfiable(delta)?;

    let ct = close_atoms(
        store
            .stated()
            .iter()
            .filter(|t| t.time <= t_n)
            .cloned(),
    );
    let env = RuleEnv { ontology: ont, contexts: vocab, testimony: &ct };

    let mut beliefs: BTreeMap<ActionId, BTreeSet<BeliefAtom>> =
        ont.nodes().map(|n| (n, BTreeSet::new())).collect();
    let mut traces: BTreeMap<ActionId, Vec<DerivationTrace>> =
        ont.nodes().map(|n| (n, Vec::new())).collect();

    // Stage 2: defeasible inheritance from every closed atom to every
    // behavior. Closed atoms iterate in sorted order, so the trace order
    // is deterministic.
    for stated in ct.atoms() {
        let shape = match (stated.polarity, stated.modal) {
            (Polarity::Positive, Modal::Obl) => &INHERIT_OBL,
            (Polarity::Negative, Modal::Imp) => &INHERIT_NONIMP,
            (Polarity::Positive, Modal::Imp) => &INHERIT_IMP,
            (Polarity::Negative, Modal::Obl) => &INHERIT_NONOBL,
            _ => continue,
        };
        for target in ont.nodes() {
            match apply_rule(&env, shape, stated, target, delta, t_n) {
                RuleOutcome::Derived { belief, trace } => {
                    beliefs.get_mut(&target).expect("all nodes mapped").insert(belief);
                    traces.get_mut(&target).expect("all nodes mapped").push(trace);
                }
                RuleOutcome::Defeated { trace } => {
                    traces.get_mut(&target).expect("all nodes mapped").push(trace);
                }
                RuleOutcome::NotApplicable { .. } => {}
            }
        }
    }

    // Stage 3: per-behavior deductive closure of the derived beliefs.
    for target in ont.nodes() {
        let set = beliefs.get_mut(&target).expect("all nodes mapped");
        let node_traces = traces.get_mut(&target).expect("all nodes mapped");
        let atom = |polarity: Polarity, modal: Modal| BeliefAtom {
            polarity,
            modal,
            behavior: target,
            context: delta.clone(),
            time: t_n,
        };
        loop {
            let mut grew = false;
            let deduce = |set: &mut BTreeSet<BeliefAtom>,
                              node_traces: &mut Vec<DerivationTrace>,
                              rule: RuleId,
                              from: Vec<BeliefAtom>,
                              conclusion: BeliefAtom| {
                if set.contains(&conclusion) {
                    return false;
                }
                set.insert(conclusion.clone());
                node_traces.push(DerivationTrace {
                    conclusion: Conclusion::Derived(conclusion),
                    rule_applications: vec![RuleApplication {
                        rule,
                        premises: from.into_iter().map(Premise::Belief).collect(),
                        side_conditions: vec![],
                    }],
                    defeats: vec![],
                    candidates_checked: 0,
                });
                true
            };
            // Obligation excludes prohibition.
            let obl = atom(Polarity::Positive, Modal::Obl);
            if set.contains(&obl) {
                grew |= deduce(
                    set,
                    node_traces,
                    RuleId::D1d,
                    vec![obl.clone()],
                    atom(Polarity::Negative, Modal::Imp),
                );
            }
            // Prohibition excludes obligation.
            let imp = atom(Polarity::Positive, Modal::Imp);
            if set.contains(&imp) {
                grew |= deduce(
                    set,
                    node_traces,
                    RuleId::D1dContra,
                    vec![imp.clone()],
                    atom(Polarity::Negative, Modal::Obl),
                );
            }
            // Denying both obligation and prohibition is discretion.
            let non_obl = atom(Polarity::Negative, Modal::Obl);
            let non_imp = atom(Polarity::Negative, Modal::Imp);
            if set.contains(&non_obl) && set.contains(&non_imp) {
                grew |= deduce(
                    set,
                    node_traces,
                    RuleId::D1c,
                    vec![non_obl, non_imp],
                    atom(Polarity::Positive, Modal::Opt),
                );
            }
            if !grew {
                break;
            }
        }
    }

    // Diagnostics: contradictory closed testimony, and simultaneous
    // genuine conflicts that this query's context actually activates.
    let mut diagnostics: BTreeMap<ActionId, Vec<String>> =
        ont.nodes().map(|n| (n, Vec::new())).collect();
    for (positive, negative) in ct.contradictions() {
        diagnostics
            .get_mut(&positive.behavior)
            .expect("all nodes mapped")
            .push(format!(
                "contradictory testimony: {} and {} both follow from the statements",
                positive.render(ont, vocab),
                negative.render(ont, vocab)
            ));
    }
    let stated_in_window: Vec<&TestimonyAtom> = store
        .stated()
        .iter()
        .filter(|t| t.time <= t_n)
        .collect();
    // Equal-time statements keep assertion order in the store, so collect
    // and sort the warnings to keep reports order-independent.
    let mut ties: BTreeMap<ActionId, Vec<String>> = BTreeMap::new();
    for i in 0..stated_in_window.len() {
        for j in (i + 1)..stated_in_window.len() {
            let (a, b) = (stated_in_window[i], stated_in_window[j]);
            if a.time != b.time {
                continue;
            }
            let Some(report) = classify_pair(ont, vocab, a, b)? else { continue };
            if !report.genuine {
                continue;
            }
            // Only warn when the query context activates both statements
            // — otherwise at most one side's defeater fires.
            if vocab.entails(delta, &report.first.context)?
                && vocab.entails(delta, &report.second.context)?
            {
                ties.entry(report.shared_behavior).or_default().push(format!(
                    "simultaneous conflict, unresolvable by recency: {}",
                    report.render(ont, vocab)
                ));
            }
        }
    }
    for (node, mut lines) in ties {
        lines.sort();
        diagnostics.get_mut(&node).expect("all nodes mapped").extend(lines);
    }

    let mut reports = BTreeMap::new();
    for node in ont.nodes() {
        let set = beliefs.remove(&node).expect("all nodes mapped");
        let label =
            label_of(&set).expect("per-node belief sets share one (behavior, context, time)");
        reports.insert(
            node,
            StatusReport {
                label,
                beliefs: set,
                traces: traces.remove(&node).expect("all nodes mapped"),
                diagnostics: diagnostics.remove(&node).expect("all nodes mapped"),
            },
        );
    }
    Ok(reports)
}

/// Derives and returns the status of one behavior.
pub fn query_status(
    store: &NormStore,
    behavior: ActionId,
    delta: &ContextFormula,
    t_n: Time,
) -> Result<StatusReport, EngineError> {
    store.ontology().check_id(behavior)?;
    let mut reports = derive_beliefs(store, delta, t_n)?;
    Ok(reports.remove(&behavior).expect("derive_beliefs reports every node"))
}

/// Store-level health warnings, independent of any query: contradictory
/// closed testimony and simultaneous genuine conflicts between stated
/// atoms.
pub fn store_diagnostics(store: &NormStore) -> Vec<String> {
    let ont = store.ontology();
    let vocab = store.contexts();
    let mut out = Vec::new();
    let ct = close_testimony(store);
    for (positive, negative) in ct.contradictions() {
        out.push(format!(
            "contradictory testimony: {} and {} both follow from the statements",
            positive.render(ont, vocab),
            negative.render(ont, vocab)
        ));
    }
    let stated = store.stated();
    // Equal-time statements keep assertion order, so sort the warnings to
    // keep the output order-independent.
    let mut ties = Vec::new();
    for i in 0..stated.len() {
        for j in (i + 1)..stated.len() {
            if stated[i].time != stated[j].time {
                continue;
            }
            let report = classify_pair(ont, vocab, &stated[i], &stated[j])
                .expect("stated atoms are positive and validated");
            if let Some(report) = report {
                if report.genuine {
                    ties.push(format!(
                        "simultaneous conflict, unresolvable by recency: {}",
                        report.render(ont, vocab)
                    ));
                }
            }
        }
    }
    ties.sort();
    out.extend(ties);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ContextVocab;
    use crate::model::StatusLabel;
    use std::collections::BTreeMap;

    /// Six-behavior taxonomy used across the suite:
    /// HC → H, HC → C, CV → C, HCV → HC, HCV → CV, CP → CV.
    fn fixture() -> (
        Ontology,
        ContextVocab,
        BTreeMap<&'static str, ActionId>,
        ContextFormula,
        ContextFormula,
    ) {
        let mut ont = Ontology::new();
        let mut ids = BTreeMap::new();
        for name in ["H", "C", "HC", "CV", "HCV", "CP"] {
            let (next, id) = ont.add_action(name).unwrap();
            ont = next;
            ids.insert(name, id);
        }
        for (s, g) in [
            ("HC", "H"),
            ("HC", "C"),
            ("CV", "C"),
            ("HCV", "HC"),
            ("HCV", "CV"),
            ("CP", "CV"),
        ] {
            ont = ont.add_entailment(ids[s], ids[g]).unwrap();
        }
        let mut vocab = ContextVocab::new();
        let monday = ContextFormula::atom(vocab.declare("Monday").unwrap());
        let morning = ContextFormula::atom(vocab.declare("Morning").unwrap());
        (ont, vocab, ids, monday, morning)
    }

    fn store_with(
        ont: &Ontology,
        vocab: &ContextVocab,
        atoms: &[(Modal, ActionId, &ContextFormula, Time)],
    ) -> NormStore {
        let mut store = NormStore::new(ont.clone(), vocab.clone());
        for (modal, behavior, context, time) in atoms {
            store = store
                .with_testimony(*modal, *behavior, (*context).clone(), *time)
                .unwrap();
        }
        store
    }

    fn labels(
        reports: &BTreeMap<ActionId, StatusReport>,
        ids: &BTreeMap<&'static str, ActionId>,
    ) -> BTreeMap<&'static str, StatusLabel> {
        ids.iter().map(|(&name, id)| (name, reports[id].label)).collect()
    }

    #[test]
    fn closing_a_discretionary_statement_denies_both_modals() {
        let (ont, vocab, ids, _, morning) = fixture();
        let store = store_with(&ont, &vocab, &[(Modal::Opt, ids["HC"], &morning, 2)]);
        let ct = close_testimony(&store);
        let non_obl = TestimonyAtom::negative(Modal::Obl, ids["HC"], morning.clone(), 2);
        let non_imp = TestimonyAtom::negative(Modal::Imp, ids["HC"], morning.clone(), 2);
        assert!(ct.contains(&non_obl));
        assert!(ct.contains(&non_imp));
        assert_eq!(ct.len(), 3);
        assert!(!ct.is_contradictory());
        assert_eq!(
            ct.source(&TestimonyAtom::positive(Modal::Opt, ids["HC"], morning.clone(), 2)),
            Some(&TestimonySource::Stated)
        );
        match ct.source(&non_obl) {
            Some(TestimonySource::Derived { rule: RuleId::D1a, from }) => {
                assert_eq!(from.len(), 1);
                assert_eq!(from[0].modal, Modal::Opt);
            }
            other => panic!("unexpected source {other:?}"),
        }
    }

    #[test]
    fn closing_obligation_and_prohibition_adds_the_exclusions() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &monday, 1), (Modal::Imp, ids["CV"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        assert!(ct.contains(&TestimonyAtom::negative(Modal::Imp, ids["HC"], monday.clone(), 1)));
        assert!(ct.contains(&TestimonyAtom::negative(Modal::Obl, ids["CV"], morning.clone(), 2)));
        assert!(!ct.is_contradictory());
    }

    #[test]
    fn directly_contradictory_statements_close_to_discretion_and_flag() {
        let (ont, vocab, ids, monday, _) = fixture();
        // Same behavior, same context, same time, opposite force.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &monday, 1), (Modal::Imp, ids["HC"], &monday, 1)],
        );
        let ct = close_testimony(&store);
        // Both exclusions arrive, and together they deduce discretion.
        assert!(ct.contains(&TestimonyAtom::positive(Modal::Opt, ids["HC"], monday.clone(), 1)));
        // Both stated atoms now face their complements.
        assert_eq!(ct.contradictions().len(), 2);
        assert!(ct.is_contradictory());
    }

    #[test]
    fn obligation_inherits_upward_unless_denied_later_above() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        // Discretion first, obligation second: the obligation stands.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Opt, ids["HC"], &monday, 1), (Modal::Obl, ids["HC"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::positive(Modal::Obl, ids["HC"], morning.clone(), 2);

        let outcome = try_inherit_obl(&env, &stated, ids["C"], &delta, 3);
        match outcome {
            RuleOutcome::Derived { belief, trace } => {
                assert_eq!(belief, BeliefAtom::positive(Modal::Obl, ids["C"], delta.clone(), 3));
                assert!(trace.defeats.is_empty());
                // The denied obligation from the earlier discretion was
                // examined but falls outside the window.
                assert_eq!(trace.candidates_checked, 1);
                assert_eq!(trace.rule_applications.len(), 1);
                assert_eq!(trace.rule_applications[0].rule, RuleId::R1);
            }
            other => panic!("expected derivation, got {other:?}"),
        }

        // Obligation first, discretion second: the later denial above
        // (here: at the same behavior) defeats the projection.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &monday, 1), (Modal::Opt, ids["HC"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::positive(Modal::Obl, ids["HC"], monday.clone(), 1);
        match try_inherit_obl(&env, &stated, ids["C"], &delta, 3) {
            RuleOutcome::Defeated { trace } => {
                assert_eq!(
                    trace.defeats,
                    vec![DefeatRecord {
                        rule: RuleId::R1,
                        stated: stated.clone(),
                        defeater: TestimonyAtom::negative(
                            Modal::Obl,
                            ids["HC"],
                            morning.clone(),
                            2
                        ),
                        path_witness: vec![ids["HC"], ids["HC"]],
                        window: TimeWindow { stated: 1, defeater: 2, query: 3 },
                    }]
                );
                assert_eq!(
                    trace.conclusion,
                    Conclusion::Blocked(BeliefAtom::positive(Modal::Obl, ids["C"], delta.clone(), 3))
                );
            }
            other => panic!("expected defeat, got {other:?}"),
        }
    }

    #[test]
    fn prohibition_inherits_downward_unless_denied_on_the_path() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        // Prohibition at CV, later obligation at HCV (which denies the
        // prohibition there deductively).
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Imp, ids["CV"], &monday, 1), (Modal::Obl, ids["HCV"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::positive(Modal::Imp, ids["CV"], monday.clone(), 1);

        // Target HCV: the denial sits below-or-at the target.
        match try_inherit_imp(&env, &stated, ids["HCV"], &delta, 3) {
            RuleOutcome::Defeated { trace } => {
                assert_eq!(
                    trace.defeats,
                    vec![DefeatRecord {
                        rule: RuleId::R3,
                        stated: stated.clone(),
                        defeater: TestimonyAtom::negative(
                            Modal::Imp,
                            ids["HCV"],
                            morning.clone(),
                            2
                        ),
                        path_witness: vec![ids["HCV"], ids["HCV"], ids["CV"]],
                        window: TimeWindow { stated: 1, defeater: 2, query: 3 },
                    }]
                );
            }
            other => panic!("expected defeat, got {other:?}"),
        }
        // Target CP: the denial is unrelated to CP, so the prohibition
        // projects.
        assert!(try_inherit_imp(&env, &stated, ids["CP"], &delta, 3).is_derived());
    }

    #[test]
    fn denied_obligation_inherits_downward_unless_obliged_between() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        // Discretion at C, later obligation at HC.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Opt, ids["C"], &monday, 1), (Modal::Obl, ids["HC"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::negative(Modal::Obl, ids["C"], monday.clone(), 1);
        assert!(ct.contains(&stated), "closure supplies the denied obligation");

        // Target HCV: the obligation at HC lies between HCV and C.
        match try_inherit_nonobl(&env, &stated, ids["HCV"], &delta, 3) {
            RuleOutcome::Defeated { trace } => {
                assert_eq!(
                    trace.defeats,
                    vec![DefeatRecord {
                        rule: RuleId::R4,
                        stated: stated.clone(),
                        defeater: TestimonyAtom::positive(
                            Modal::Obl,
                            ids["HC"],
                            morning.clone(),
                            2
                        ),
                        path_witness: vec![ids["HCV"], ids["HC"], ids["C"]],
                        window: TimeWindow { stated: 1, defeater: 2, query: 3 },
                    }]
                );
            }
            other => panic!("expected defeat, got {other:?}"),
        }
        // Target CV: HC is not on the CV-to-C path, so the denial projects.
        assert!(try_inherit_nonobl(&env, &stated, ids["CV"], &delta, 3).is_derived());
    }

    #[test]
    fn denied_prohibition_inherits_upward_unless_prohibited_later_above() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        // Discretion at HC first, prohibition at C second.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Opt, ids["HC"], &monday, 1), (Modal::Imp, ids["C"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::negative(Modal::Imp, ids["HC"], monday.clone(), 1);
        match try_inherit_nonimp(&env, &stated, ids["H"], &delta, 3) {
            RuleOutcome::Defeated { trace } => {
                assert_eq!(trace.defeats.len(), 1);
                assert_eq!(
                    trace.defeats[0].defeater,
                    TestimonyAtom::positive(Modal::Imp, ids["C"], morning.clone(), 2)
                );
                assert_eq!(trace.defeats[0].path_witness, vec![ids["HC"], ids["C"]]);
            }
            other => panic!("expected defeat, got {other:?}"),
        }

        // Reversed order: prohibition first, discretion second — the
        // prohibition is now outside the window, so the denial projects.
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Imp, ids["C"], &monday, 1), (Modal::Opt, ids["HC"], &morning, 2)],
        );
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::negative(Modal::Imp, ids["HC"], morning.clone(), 2);
        let outcome = try_inherit_nonimp(&env, &stated, ids["C"], &delta, 3);
        match outcome {
            RuleOutcome::Derived { belief, trace } => {
                assert_eq!(belief, BeliefAtom::negative(Modal::Imp, ids["C"], delta.clone(), 3));
                assert_eq!(trace.candidates_checked, 1);
            }
            other => panic!("expected derivation, got {other:?}"),
        }
    }

    #[test]
    fn inapplicable_premises_report_the_failing_precondition() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        let store = store_with(&ont, &vocab, &[(Modal::Obl, ids["CV"], &monday, 1)]);
        let ct = close_testimony(&store);
        let env = RuleEnv { ontology: &ont, contexts: &vocab, testimony: &ct };
        let stated = TestimonyAtom::positive(Modal::Obl, ids["CV"], monday.clone(), 1);

        let reason = |outcome: RuleOutcome| match outcome {
            RuleOutcome::NotApplicable { reason } => reason,
            other => panic!("expected not-applicable, got {other:?}"),
        };

        // Wrong premise shape for the rule.
        assert!(reason(try_inherit_imp(&env, &stated, ids["C"], &delta, 3))
            .contains("fires from Ïmp testimony"));
        // No entailment to the target.
        assert!(reason(try_inherit_obl(&env, &stated, ids["H"], &delta, 3))
            .contains("no entailment"));
        // Query context too weak.
        assert!(reason(try_inherit_obl(&env, &stated, ids["C"], &morning, 3))
            .contains("does not entail"));
        // Stated after the horizon.
        assert!(reason(try_inherit_obl(&env, &stated, ids["C"], &delta, 0))
            .contains("after the query horizon"));
        // Premise not in the closure.
        let foreign = TestimonyAtom::positive(Modal::Obl, ids["H"], monday.clone(), 1);
        assert!(reason(try_inherit_obl(&env, &foreign, ids["H"], &delta, 3))
            .contains("not in the closed testimony"));
    }

    #[test]
    fn earlier_prohibition_yields_discretion_below_a_later_discretion() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Imp, ids["C"], &monday, 1), (Modal::Opt, ids["HC"], &morning, 2)],
        );
        let reports = derive_beliefs(&store, &delta, 3).unwrap();
        let got = labels(&reports, &ids);
        let expected: BTreeMap<&str, StatusLabel> = [
            ("H", StatusLabel::NonImpermissible),
            ("C", StatusLabel::Optional),
            ("HC", StatusLabel::Optional),
            ("CV", StatusLabel::Impermissible),
            ("HCV", StatusLabel::NonObligatory),
            ("CP", StatusLabel::Impermissible),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, expected);
        // The discretionary label at HC is the deduced closure of both
        // denials.
        assert!(reports[&ids["HC"]]
            .beliefs
            .contains(&BeliefAtom::positive(Modal::Opt, ids["HC"], delta.clone(), 3)));
        // No contradictions anywhere.
        assert!(reports.values().all(|r| r.label != StatusLabel::Inconsistent));
    }

    #[test]
    fn simultaneous_direct_conflict_defeats_both_sides_and_warns() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &monday, 1), (Modal::Imp, ids["HC"], &morning, 1)],
        );
        let reports = derive_beliefs(&store, &delta, 1).unwrap();
        for (_, report) in reports.iter() {
            assert_eq!(report.label, StatusLabel::Unknown);
            assert!(report.beliefs.is_empty());
        }
        let hc = &reports[&ids["HC"]];
        assert_eq!(hc.diagnostics.len(), 1);
        assert!(hc.diagnostics[0].contains("unresolvable by recency"), "{}", hc.diagnostics[0]);
        // Every attempted projection at HC was defeated, none derived.
        assert!(!hc.traces.is_empty());
        assert!(hc.traces.iter().all(|t| !t.conclusion.is_derived()));
    }

    #[test]
    fn the_horizon_slices_testimony_by_time() {
        let (ont, vocab, ids, monday, morning) = fixture();
        let delta = monday.clone().and(morning.clone());
        let store = store_with(
            &ont,
            &vocab,
            &[(Modal::Opt, ids["HC"], &monday, 1), (Modal::Obl, ids["HC"], &morning, 2)],
        );
        // At horizon 1 only the discretion is visible.
        assert_eq!(
            query_status(&store, ids["HC"], &delta, 1).unwrap().label,
            StatusLabel::Optional
        );
        // At horizon 2 the later obligation wins.
        assert_eq!(
            query_status(&store, ids["HC"], &delta, 2).unwrap().label,
            StatusLabel::Obligatory
        );
        // The beliefs carry the queried context and horizon.
        let report = query_status(&store, ids["HC"], &delta, 2).unwrap();
        assert!(report
            .beliefs
            .contains(&BeliefAtom::positive(Modal::Obl, ids["HC"], delta.clone(), 2)));
    }

    #[test]
    fn queries_validate_behavior_and_context_references() {
        let (ont, vocab, ids, monday, _) = fixture();
        let store = store_with(&ont, &vocab, &[(Modal::Obl, ids["HC"], &monday, 1)]);
        assert!(matches!(
            query_status(&store, ActionId(99), &monday, 1),
            Err(EngineError::Ontology(OntologyError::ForeignId(99)))
        ));
        let foreign = ContextFormula::Atom(crate::context::CtxAtomId(42));
        assert!(matches!(
            derive_beliefs(&store, &foreign, 1),
            Err(EngineError::Context(ContextError::UndeclaredAtom(42)))
        ));
    }

    #[test]
    fn store_diagnostics_surface_contradictions_and_ties() {
        let (ont, vocab, ids, monday, _) = fixture();
        let top = ContextFormula::Top;
        let clean = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &monday, 1), (Modal::Opt, ids["HC"], &monday, 2)],
        );
        assert!(store_diagnostics(&clean).is_empty());

        let conflicted = store_with(
            &ont,
            &vocab,
            &[(Modal::Obl, ids["HC"], &top, 1), (Modal::Imp, ids["HC"], &top, 1)],
        );
        let diags = store_diagnostics(&conflicted);
        // Two contradiction pairs from the closure plus the simultaneous
        // direct conflict.
        assert_eq!(diags.len(), 3);
        assert!(diags.iter().any(|d| d.contains("contradictory testimony")));
        assert!(diags.iter().any(|d| d.contains("unresolvable by recency")));
    }
}

//! Brute-force reference semantics for small stores.
//!
//! [`naive_extension`] computes extensions the slow, direct way: close the
//! testimony by repeated scanning, enumerate every ground instance of the
//! four inheritance rules, apply them **in many different orders** —
//! exhaustively when few enough, otherwise a fixed-seed sample of shuffles
//! — re-checking each instance's justification against the current theory
//! before applying it, then close the belief layer and re-validate every
//! applied justification against the final set. Distinct resulting atom
//! sets come back as distinct extensions.
//!
//! The engine takes shortcuts this module refuses on principle (single
//! pass per rule, no order exploration); [`assert_engine_equivalence`]
//! pins those shortcuts to the naive semantics on any in-bounds store.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::context::{ContextError, ContextFormula};
use crate::engine::{close_testimony, derive_beliefs, EngineError};
use crate::model::{BeliefAtom, Modal, NormStore, Polarity, RuleId, TestimonyAtom, Time};

/// Largest ontology the oracle will grind through.
pub const MAX_NODES: usize = 10;
/// Most stated atoms the oracle will grind through.
pub const MAX_STATED: usize = 8;
/// Most declared context atoms the oracle will grind through.
pub const MAX_CONTEXT_ATOMS: usize = 4;

/// Ground-instance order exploration: sample size when the instance count
/// makes exhaustive permutation infeasible.
const SAMPLED_ORDERS: usize = 200;
/// Instance counts up to this get every permutation.
const EXHAUSTIVE_LIMIT: usize = 6;
/// Seed for the sampled shuffles — fixed so runs are reproducible.
const SHUFFLE_SEED: u64 = 0x0DD1C;

/// An atom of an extension: either layer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtAtom {
    Testimony(TestimonyAtom),
    Belief(BeliefAtom),
}

impl ExtAtom {
    /// The testimony atom, when this is one.
    pub fn as_testimony(&self) -> Option<&TestimonyAtom> {
        match self {
            ExtAtom::Testimony(t) => Some(t),
            ExtAtom::Belief(_) => None,
        }
    }

    /// The belief atom, when this is one.
    pub fn as_belief(&self) -> Option<&BeliefAtom> {
        match self {
            ExtAtom::Belief(b) => Some(b),
            ExtAtom::Testimony(_) => None,
        }
    }

    /// Human rendering at the appropriate layer.
    pub fn render(
        &self,
        ont: &crate::ontology::Ontology,
        vocab: &crate::context::ContextVocab,
    ) -> String {
        match self {
            ExtAtom::Testimony(t) => t.render(ont, vocab),
            ExtAtom::Belief(b) => b.render(ont, vocab),
        }
    }
}

/// One fully instantiated rule application.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundInstance {
    pub rule: RuleId,
    pub premises: Vec<ExtAtom>,
    pub conclusion: ExtAtom,
}

/// One extension: the closed atom set and the ordered log of applications
/// that produced it (from the first order that reached this set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub atoms: BTreeSet<ExtAtom>,
    pub application_log: Vec<GroundInstance>,
}

impl Extension {
    /// The belief-layer portion.
    pub fn beliefs(&self) -> impl Iterator<Item = &BeliefAtom> {
        self.atoms.iter().filter_map(ExtAtom::as_belief)
    }

    /// The testimony-layer portion.
    pub fn testimony(&self) -> impl Iterator<Item = &TestimonyAtom> {
        self.atoms.iter().filter_map(ExtAtom::as_testimony)
    }
}

/// Errors raised by the reference semantics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    /// The store exceeds what brute force can grind through.
    #[error("{what} count {actual} exceeds the oracle cap of {cap}")]
    TooLarge { what: &'static str, actual: usize, cap: usize },
    /// Equivalence needs exactly one extension.
    #[error("expected exactly one extension, found {count}")]
    MultipleExtensions { count: usize },
    /// The engine and the reference semantics disagree.
    #[error("engine and oracle disagree: {details}")]
    Mismatch { details: String },
    /// Defensive: an applied instance's justification fails against the
    /// final set. Unreachable while justifications probe only the
    /// testimony layer, which the default stage never extends.
    #[error("applied instance lost its justification in the final set: {details}")]
    JustificationRegression { details: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// Shape of the inheritance rule a testimony atom feeds, if any:
/// (rule, projects upward?, conclusion polarity/modal, defeater
/// polarity/modal).
fn rule_shape(atom: &TestimonyAtom) -> Option<(RuleId, bool, (Polarity, Modal), (Polarity, Modal))> {
    match (atom.polarity, atom.modal) {
        (Polarity::Positive, Modal::Obl) => Some((
            RuleId::R1,
            true,
            (Polarity::Positive, Modal::Obl),
            (Polarity::Negative, Modal::Obl),
        )),
        (Polarity::Negative, Modal::Imp) => Some((
            RuleId::R2,
            true,
            (Polarity::Negative, Modal::Imp),
            (Polarity::Positive, Modal::Imp),
        )),
        (Polarity::Positive, Modal::Imp) => Some((
            RuleId::R3,
            false,
            (Polarity::Positive, Modal::Imp),
            (Polarity::Negative, Modal::Imp),
        )),
        (Polarity::Negative, Modal::Obl) => Some((
            RuleId::R4,
            false,
            (Polarity::Negative, Modal::Obl),
            (Polarity::Positive, Modal::Obl),
        )),
        _ => None,
    }
}

/// Every permutation of `0..n`, via Heap's algorithm.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, arr: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, arr, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut arr: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut arr, &mut out);
    out
}

/// Whether `instance` is blocked by contrary testimony in `theory`.
fn blocked(
    store: &NormStore,
    delta_entails: &BTreeMap<ContextFormula, bool>,
    theory: &BTreeSet<ExtAtom>,
    instance: &GroundInstance,
    t_n: Time,
) -> bool {
    let ont = store.ontology();
    let premise = instance.premises[0]
        .as_testimony()
        .expect("inheritance instances have one testimony premise");
    let target = instance
        .conclusion
        .as_belief()
        .expect("inheritance instances conclude a belief")
        .behavior;
    let (_, upward, _, defeater) = rule_shape(premise).expect("instances come from rule premises");
    theory
        .iter()
        .filter_map(ExtAtom::as_testimony)
        .any(|z| {
            if (z.polarity, z.modal) != defeater {
                return false;
            }
            if !(premise.time <= z.time && z.time <= t_n) {
                return false;
            }
            if !delta_entails.get(&z.context).copied().unwrap_or(false) {
                return false;
            }
            if upward {
                ont.entails(premise.behavior, z.behavior)
            } else {
                ont.entails(z.behavior, target)
                    || (ont.entails(target, z.behavior)
                        && ont.entails(z.behavior, premise.behavior))
            }
        })
}

/// Computes every extension of `store` at query context `delta` and
/// horizon `t_n`, by brute force. Only defined for small stores — see the
/// `MAX_*` caps.
pub fn naive_extension(
    store: &NormStore,
    delta: &ContextFormula,
    t_n: Time,
) -> Result<Vec<Extension>, OracleError> {
    let ont = store.ontology();
    let vocab = store.contexts();
    let caps = [
        ("ontology node", ont.node_count(), MAX_NODES),
        ("stated atom", store.stated().len(), MAX_STATED),
        ("context atom", vocab.len(), MAX_CONTEXT_ATOMS),
    ];
    for (what, actual, cap) in caps {
        if actual > cap {
            return Err(OracleError::TooLarge { what, actual, cap });
        }
    }
    vocab.satisfiable(delta)?;

    // Stage one: close the time slice of the testimony by repeated
    // scanning, logging each deduction.
    let mut testimony: BTreeSet<TestimonyAtom> = store
        .stated()
        .iter()
        .filter(|t| t.time <= t_n)
        .cloned()
        .collect();
    let mut base_log: Vec<GroundInstance> = Vec::new();
    loop {
        let snapshot: Vec<TestimonyAtom> = testimony.iter().cloned().collect();
        let mut pending: Vec<(TestimonyAtom, RuleId, Vec<TestimonyAtom>)> = Vec::new();
        for a in &snapshot {
            let same_triple = |polarity: Polarity, modal: Modal| TestimonyAtom {
                polarity,
                modal,
                behavior: a.behavior,
                context: a.context.clone(),
                time: a.time,
            };
            match (a.polarity, a.modal) {
                (Polarity::Positive, Modal::Opt) => {
                    pending.push((
                        same_triple(Polarity::Negative, Modal::Obl),
                        RuleId::D1a,
                        vec![a.clone()],
                    ));
                    pending.push((
                        same_triple(Polarity::Negative, Modal::Imp),
                        RuleId::D1a,
                        vec![a.clone()],
                    ));
                }
                (Polarity::Positive, Modal::Obl) => pending.push((
                    same_triple(Polarity::Negative, Modal::Imp),
                    RuleId::D1b,
                    vec![a.clone()],
                )),
                (Polarity::Positive, Modal::Imp) => pending.push((
                    same_triple(Polarity::Negative, Modal::Obl),
                    RuleId::D1bContra,
                    vec![a.clone()],
                )),
                (Polarity::Negative, Modal::Obl) => {
                    let partner = same_triple(Polarity::Negative, Modal::Imp);
                    if testimony.contains(&partner) {
                        pending.push((
                            same_triple(Polarity::Positive, Modal::Opt),
                            RuleId::D1a,
                            vec![a.clone(), partner],
                        ));
                    }
                }
                _ => {}
            }
        }
        let mut grew = false;
        for (conclusion, rule, premises) in pending {
            if testimony.insert(conclusion.clone()) {
                base_log.push(GroundInstance {
                    rule,
                    premises: premises.into_iter().map(ExtAtom::Testimony).collect(),
                    conclusion: ExtAtom::Testimony(conclusion),
                });
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    // Context entailment from `delta` is consulted constantly during order
    // exploration; the closed testimony fixes the formulas involved, so
    // tabulate once.
    let mut delta_entails: BTreeMap<ContextFormula, bool> = BTreeMap::new();
    for atom in &testimony {
        if !delta_entails.contains_key(&atom.context) {
            let holds = vocab.entails(delta, &atom.context)?;
            delta_entails.insert(atom.context.clone(), holds);
        }
    }

    // Stage two: enumerate ground instances of the inheritance rules whose
    // preconditions hold.
    let mut instances: Vec<GroundInstance> = Vec::new();
    for premise in &testimony {
        let Some((rule, upward, conclusion_shape, _)) = rule_shape(premise) else { continue };
        if premise.time > t_n {
            continue;
        }
        if !delta_entails.get(&premise.context).copied().unwrap_or(false) {
            continue;
        }
        for target in ont.nodes() {
            let projects = if upward {
                ont.entails(premise.behavior, target)
            } else {
                ont.entails(target, premise.behavior)
            };
            if !projects {
                continue;
            }
            instances.push(GroundInstance {
                rule,
                premises: vec![ExtAtom::Testimony(premise.clone())],
                conclusion: ExtAtom::Belief(BeliefAtom {
                    polarity: conclusion_shape.0,
                    modal: conclusion_shape.1,
                    behavior: target,
                    context: delta.clone(),
                    time: t_n,
                }),
            });
        }
    }
    instances.sort();

    // Orders to explore: every permutation when feasible, otherwise the
    // sorted order plus seeded shuffles.
    let orders: Vec<Vec<usize>> = if instances.len() <= EXHAUSTIVE_LIMIT {
        permutations(instances.len())
    } else {
        let identity: Vec<usize> = (0..instances.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(SHUFFLE_SEED);
        let mut orders = vec![identity.clone()];
        for _ in 1..SAMPLED_ORDERS {
            let mut order = identity.clone();
            order.shuffle(&mut rng);
            orders.push(order);
        }
        orders
    };

    let base_theory: BTreeSet<ExtAtom> =
        testimony.iter().cloned().map(ExtAtom::Testimony).collect();

    let mut extensions: BTreeMap<BTreeSet<ExtAtom>, Vec<GroundInstance>> = BTreeMap::new();
    for order in &orders {
        let mut theory = base_theory.clone();
        let mut log = base_log.clone();
        let mut applied = vec![false; instances.len()];

        // Apply defaults in this order until no more fire.
        loop {
            let mut progressed = false;
            for &idx in order {
                if applied[idx] {
                    continue;
                }
                if blocked(store, &delta_entails, &theory, &instances[idx], t_n) {
                    continue;
                }
                applied[idx] = true;
                progressed = true;
                theory.insert(instances[idx].conclusion.clone());
                log.push(instances[idx].clone());
            }
            if !progressed {
                break;
            }
        }

        // Stage three: deductive closure of the belief layer.
        loop {
            let beliefs: Vec<BeliefAtom> =
                theory.iter().filter_map(ExtAtom::as_belief).cloned().collect();
            let mut pending: Vec<(BeliefAtom, RuleId, Vec<BeliefAtom>)> = Vec::new();
            for b in &beliefs {
                let same_triple = |polarity: Polarity, modal: Modal| BeliefAtom {
                    polarity,
                    modal,
                    behavior: b.behavior,
                    context: b.context.clone(),
                    time: b.time,
                };
                match (b.polarity, b.modal) {
                    (Polarity::Positive, Modal::Obl) => pending.push((
                        same_triple(Polarity::Negative, Modal::Imp),
                        RuleId::D1d,
                        vec![b.clone()],
                    )),
                    (Polarity::Positive, Modal::Imp) => pending.push((
                        same_triple(Polarity::Negative, Modal::Obl),
                        RuleId::D1dContra,
                        vec![b.clone()],
                    )),
                    (Polarity::Negative, Modal::Obl) => {
                        let partner = same_triple(Polarity::Negative, Modal::Imp);
                        if theory.contains(&ExtAtom::Belief(partner.clone())) {
                            pending.push((
                                same_triple(Polarity::Positive, Modal::Opt),
                                RuleId::D1c,
                                vec![b.clone(), partner],
                            ));
                        }
                    }
                    _ => {}
                }
            }
            let mut grew = false;
            for (conclusion, rule, premises) in pending {
                if theory.insert(ExtAtom::Belief(conclusion.clone())) {
                    log.push(GroundInstance {
                        rule,
                        premises: premises.into_iter().map(ExtAtom::Belief).collect(),
                        conclusion: ExtAtom::Belief(conclusion),
                    });
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }

        // Re-validate every applied justification against the final set.
        for (idx, was_applied) in applied.iter().enumerate() {
            if *was_applied && blocked(store, &delta_entails, &theory, &instances[idx], t_n) {
                return Err(OracleError::JustificationRegression {
                    details: format!(
                        "{} concluding {}",
                        instances[idx].rule,
                        instances[idx].conclusion.render(ont, vocab)
                    ),
                });
            }
        }

        extensions.entry(theory).or_insert(log);
    }

    Ok(extensions
        .into_iter()
        .map(|(atoms, application_log)| Extension { atoms, application_log })
        .collect())
}

/// Checks the fast engine against the reference semantics on one query:
/// the store must have exactly one extension, whose testimony and belief
/// portions must equal the engine's closed testimony and derived beliefs.
pub fn assert_engine_equivalence(
    store: &NormStore,
    delta: &ContextFormula,
    t_n: Time,
) -> Result<(), OracleError> {
    let extensions = naive_extension(store, delta, t_n)?;
    if extensions.len() != 1 {
        return Err(OracleError::MultipleExtensions { count: extensions.len() });
    }
    let extension = &extensions[0];
    let ont = store.ontology();
    let vocab = store.contexts();

    // Compare testimony layers. Closure never changes timestamps, so the
    // slice of the full closure equals the closure of the slice.
    let engine_testimony: BTreeSet<TestimonyAtom> = close_testimony(store)
        .atoms()
        .filter(|t| t.time <= t_n)
        .cloned()
        .collect();
    let oracle_testimony: BTreeSet<TestimonyAtom> = extension.testimony().cloned().collect();

    // Compare belief layers.
    let reports = derive_beliefs(store, delta, t_n)?;
    let engine_beliefs: BTreeSet<BeliefAtom> =
        reports.values().flat_map(|r| r.beliefs.iter().cloned()).collect();
    let oracle_beliefs: BTreeSet<BeliefAtom> = extension.beliefs().cloned().collect();

    let mut gaps: Vec<String> = Vec::new();
    for t in engine_testimony.difference(&oracle_testimony) {
        gaps.push(format!("engine-only testimony {}", t.render(ont, vocab)));
    }
    for t in oracle_testimony.difference(&engine_testimony) {
        gaps.push(format!("oracle-only testimony {}", t.render(ont, vocab)));
    }
    for b in engine_beliefs.difference(&oracle_beliefs) {
        gaps.push(format!("engine-only belief {}", b.render(ont, vocab)));
    }
    for b in oracle_beliefs.difference(&engine_beliefs) {
        gaps.push(format!("oracle-only belief {}", b.render(ont, vocab)));
    }
    if gaps.is_empty() {
        Ok(())
    } else {
        Err(OracleError::Mismatch { details: gaps.join("; ") })
    }
}

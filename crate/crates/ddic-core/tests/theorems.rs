//! Golden regression suite: the canonical cooking taxonomy exercised by
//! every conflict pattern the engine resolves, with the exact beliefs,
//! labels, and defeat records each scenario must produce.
//!
//! Taxonomy (specific → general): HC → H, HC → C, CV → C, HCV → HC,
//! HCV → CV, CP → CV. Contexts: Monday, Morning; every query runs at
//! δ = Monday ∧ Morning with horizon 3.

use std::collections::BTreeMap;

use ddic_core::{
    query_status, BeliefAtom, ContextFormula, ContextVocab, DefeatRecord, Modal, NormStore,
    Ontology, Polarity, RuleId, StatusLabel, StatusReport, TestimonyAtom, TimeWindow,
};

struct Fixture {
    ontology: Ontology,
    contexts: ContextVocab,
    ids: BTreeMap<&'static str, ddic_core::ActionId>,
    monday: ContextFormula,
    morning: ContextFormula,
    delta: ContextFormula,
}

fn fixture() -> Fixture {
    let mut ontology = Ontology::new();
    let mut ids = BTreeMap::new();
    for name in ["H", "C", "HC", "CV", "HCV", "CP"] {
        let (next, id) = ontology.add_action(name).unwrap();
        ontology = next;
        ids.insert(name, id);
    }
    for (specific, general) in
        [("HC", "H"), ("HC", "C"), ("CV", "C"), ("HCV", "HC"), ("HCV", "CV"), ("CP", "CV")]
    {
        ontology = ontology.add_entailment(ids[specific], ids[general]).unwrap();
    }
    let mut contexts = ContextVocab::new();
    let monday = ContextFormula::atom(contexts.declare("Monday").unwrap());
    let morning = ContextFormula::atom(contexts.declare("Morning").unwrap());
    let delta = monday.clone().and(morning.clone());
    Fixture { ontology, contexts, ids, monday, morning, delta }
}

impl Fixture {
    /// Builds a store from `(modal, behavior, context, time)` statements.
    fn store(&self, atoms: &[(Modal, &str, &ContextFormula, u64)]) -> NormStore {
        let mut store = NormStore::new(self.ontology.clone(), self.contexts.clone());
        for (modal, behavior, context, time) in atoms {
            store = store
                .with_testimony(*modal, self.ids[behavior], (*context).clone(), *time)
                .unwrap();
        }
        store
    }

    fn query(&self, store: &NormStore, behavior: &str) -> StatusReport {
        query_status(store, self.ids[behavior], &self.delta, 3).unwrap()
    }

    fn belief(&self, polarity: Polarity, modal: Modal, behavior: &str) -> BeliefAtom {
        BeliefAtom {
            polarity,
            modal,
            behavior: self.ids[behavior],
            context: self.delta.clone(),
            time: 3,
        }
    }

    /// Asserts the queried behavior's belief set contains (or omits) the
    /// belief `{polarity} {modal}` at δ and the horizon.
    fn assert_judgment(
        &self,
        store: &NormStore,
        behavior: &str,
        polarity: Polarity,
        modal: Modal,
        derivable: bool,
    ) {
        let report = self.query(store, behavior);
        let atom = self.belief(polarity, modal, behavior);
        assert_eq!(
            report.beliefs.contains(&atom),
            derivable,
            "{} should{} contain {}",
            behavior,
            if derivable { "" } else { " not" },
            atom.render(&self.ontology, &self.contexts),
        );
    }

    /// The defeat records attached to blocked conclusions for `rule` at
    /// the queried behavior.
    fn defeats_for(&self, store: &NormStore, behavior: &str, rule: RuleId) -> Vec<DefeatRecord> {
        self.query(store, behavior)
            .traces
            .iter()
            .filter(|t| !t.conclusion.is_derived())
            .flat_map(|t| t.defeats.iter())
            .filter(|d| d.rule == rule)
            .cloned()
            .collect()
    }

    fn testimony(
        &self,
        polarity: Polarity,
        modal: Modal,
        behavior: &str,
        context: &ContextFormula,
        time: u64,
    ) -> TestimonyAtom {
        TestimonyAtom {
            polarity,
            modal,
            behavior: self.ids[behavior],
            context: context.clone(),
            time,
        }
    }
}

use Modal::{Imp, Obl, Opt};
use Polarity::{Negative, Positive};

/// Direct conflict, prohibition last: the later statement wins outright.
#[test]
fn a_later_prohibition_completely_defeats_a_direct_obligation() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "HC", &fx.monday, 1), (Imp, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HC", Positive, Imp, true);
    fx.assert_judgment(&store, "C", Positive, Obl, false);
    assert_eq!(fx.query(&store, "HC").label, StatusLabel::Impermissible);
}

/// Direct conflict, obligation last: the reverse order flips the winner.
#[test]
fn a_later_obligation_completely_defeats_a_direct_prohibition() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "HC", &fx.morning, 1), (Obl, "HC", &fx.monday, 2)]);
    fx.assert_judgment(&store, "HC", Positive, Obl, true);
    fx.assert_judgment(&store, "HCV", Positive, Imp, false);
    assert_eq!(fx.query(&store, "HC").label, StatusLabel::Obligatory);
}

/// A general obligation against a specific discretionary norm: the shared
/// grounds end up non-obligatory (no true conflict, obligations do not
/// inherit downward).
#[test]
fn a_specific_discretionary_norm_makes_the_shared_grounds_non_obligatory() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "C", &fx.monday, 1), (Opt, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HC", Negative, Obl, true);
}

/// A prior general discretionary norm against a later specific
/// obligation: defeat happens only along the shared path.
#[test]
fn a_later_specific_obligation_defeats_the_discretionary_norm_only_on_shared_grounds() {
    let fx = fixture();
    let store = fx.store(&[(Opt, "C", &fx.monday, 1), (Obl, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HC", Positive, Obl, true);
    fx.assert_judgment(&store, "CV", Negative, Obl, true);
    fx.assert_judgment(&store, "HCV", Negative, Obl, false);
}

/// A prior specific obligation against a later general discretionary
/// norm: the obligation is completely defeated.
#[test]
fn a_later_general_discretionary_norm_completely_defeats_a_specific_obligation() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "HC", &fx.morning, 1), (Opt, "C", &fx.monday, 2)]);
    fx.assert_judgment(&store, "HC", Negative, Obl, true);
    fx.assert_judgment(&store, "H", Positive, Obl, false);
}

/// A specific prohibition under a general discretionary norm keeps its
/// grounds impermissible regardless of order.
#[test]
fn a_specific_prohibition_survives_a_general_discretionary_norm() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "CV", &fx.monday, 1), (Opt, "C", &fx.morning, 2)]);
    fx.assert_judgment(&store, "CV", Positive, Imp, true);
}

/// A prior general prohibition against a later specific discretionary
/// norm: the discretionary norm carves an exception along its path only.
#[test]
fn a_later_specific_discretionary_norm_carves_an_exception_from_a_prohibition() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "C", &fx.monday, 1), (Opt, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HC", Negative, Imp, true);
    fx.assert_judgment(&store, "CV", Positive, Imp, true);
    fx.assert_judgment(&store, "HCV", Positive, Imp, false);
    assert_eq!(fx.query(&store, "HC").label, StatusLabel::Optional);
    assert_eq!(fx.query(&store, "CV").label, StatusLabel::Impermissible);
}

/// A prior specific discretionary norm against a later general
/// prohibition: the prohibition shuts down the upward inference.
#[test]
fn a_later_general_prohibition_defeats_upward_inference_from_a_discretionary_norm() {
    let fx = fixture();
    let store = fx.store(&[(Opt, "HC", &fx.morning, 1), (Imp, "C", &fx.monday, 2)]);
    fx.assert_judgment(&store, "HC", Positive, Imp, true);
    fx.assert_judgment(&store, "H", Negative, Imp, false);
}

/// A general obligation against a specific prohibition: the shared
/// grounds stay impermissible (obligations do not inherit downward).
#[test]
fn a_specific_prohibition_under_a_general_obligation_keeps_its_grounds() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "C", &fx.morning, 1), (Imp, "CV", &fx.monday, 2)]);
    fx.assert_judgment(&store, "CV", Positive, Imp, true);
}

/// A prior general prohibition against a later specific obligation: the
/// obligation adds an exception on the shared path; others persist.
#[test]
fn a_later_specific_obligation_carves_an_exception_from_a_prohibition() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "CV", &fx.monday, 1), (Obl, "HCV", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HCV", Positive, Obl, true);
    fx.assert_judgment(&store, "CP", Positive, Imp, true);
    fx.assert_judgment(&store, "HCV", Positive, Imp, false);
    assert_eq!(fx.query(&store, "HCV").label, StatusLabel::Obligatory);
    assert_eq!(fx.query(&store, "CP").label, StatusLabel::Impermissible);
}

/// A prior specific obligation against a later general prohibition: the
/// prohibition completely defeats the obligation.
#[test]
fn a_later_general_prohibition_completely_defeats_a_specific_obligation() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "HCV", &fx.morning, 1), (Imp, "CV", &fx.monday, 2)]);
    fx.assert_judgment(&store, "HCV", Positive, Imp, true);
    fx.assert_judgment(&store, "HC", Positive, Obl, false);
}

/// An obligation and a discretionary norm whose behaviors only
/// intersect: the intersection is non-obligatory.
#[test]
fn an_intersection_under_a_discretionary_norm_is_non_obligatory() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "CV", &fx.monday, 1), (Opt, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HCV", Negative, Obl, true);
}

/// A prohibition and a discretionary norm whose behaviors only
/// intersect: the intersection stays impermissible.
#[test]
fn an_intersection_under_a_prohibition_stays_impermissible() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "CV", &fx.monday, 1), (Opt, "HC", &fx.morning, 2)]);
    fx.assert_judgment(&store, "HCV", Positive, Imp, true);
}

// ---------------------------------------------------------------------
// Defeat records: the exact rule, stated atom, defeater, path witness,
// and window for the four canonical blocked inferences.
// ---------------------------------------------------------------------

#[test]
fn the_blocked_upward_obligation_records_its_defeater() {
    let fx = fixture();
    let store = fx.store(&[(Obl, "HC", &fx.monday, 1), (Imp, "HC", &fx.morning, 2)]);
    let defeats = fx.defeats_for(&store, "C", RuleId::R1);
    assert_eq!(
        defeats,
        vec![DefeatRecord {
            rule: RuleId::R1,
            stated: fx.testimony(Positive, Obl, "HC", &fx.monday, 1),
            defeater: fx.testimony(Negative, Obl, "HC", &fx.morning, 2),
            path_witness: vec![fx.ids["HC"], fx.ids["HC"]],
            window: TimeWindow { stated: 1, defeater: 2, query: 3 },
        }]
    );
}

#[test]
fn the_blocked_downward_non_obligation_records_the_obligation_on_its_path() {
    let fx = fixture();
    let store = fx.store(&[(Opt, "C", &fx.monday, 1), (Obl, "HC", &fx.morning, 2)]);
    let defeats = fx.defeats_for(&store, "HCV", RuleId::R4);
    assert_eq!(
        defeats,
        vec![DefeatRecord {
            rule: RuleId::R4,
            stated: fx.testimony(Negative, Obl, "C", &fx.monday, 1),
            defeater: fx.testimony(Positive, Obl, "HC", &fx.morning, 2),
            path_witness: vec![fx.ids["HCV"], fx.ids["HC"], fx.ids["C"]],
            window: TimeWindow { stated: 1, defeater: 2, query: 3 },
        }]
    );
}

#[test]
fn the_blocked_downward_prohibition_records_the_discretionary_defeater() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "C", &fx.monday, 1), (Opt, "HC", &fx.morning, 2)]);
    let defeats = fx.defeats_for(&store, "HCV", RuleId::R3);
    assert_eq!(
        defeats,
        vec![DefeatRecord {
            rule: RuleId::R3,
            stated: fx.testimony(Positive, Imp, "C", &fx.monday, 1),
            defeater: fx.testimony(Negative, Imp, "HC", &fx.morning, 2),
            path_witness: vec![fx.ids["HCV"], fx.ids["HC"], fx.ids["C"]],
            window: TimeWindow { stated: 1, defeater: 2, query: 3 },
        }]
    );
}

#[test]
fn the_blocked_reflexive_prohibition_records_the_derived_denial() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "CV", &fx.monday, 1), (Obl, "HCV", &fx.morning, 2)]);
    let defeats = fx.defeats_for(&store, "HCV", RuleId::R3);
    assert_eq!(
        defeats,
        vec![DefeatRecord {
            rule: RuleId::R3,
            stated: fx.testimony(Positive, Imp, "CV", &fx.monday, 1),
            defeater: fx.testimony(Negative, Imp, "HCV", &fx.morning, 2),
            path_witness: vec![fx.ids["HCV"], fx.ids["HCV"], fx.ids["CV"]],
            window: TimeWindow { stated: 1, defeater: 2, query: 3 },
        }]
    );
}

/// The defeat record renders with the rule, both atoms, the node path,
/// and the inclusive window.
#[test]
fn defeat_records_render_their_whole_story() {
    let fx = fixture();
    let store = fx.store(&[(Imp, "CV", &fx.monday, 1), (Obl, "HCV", &fx.morning, 2)]);
    let defeats = fx.defeats_for(&store, "HCV", RuleId::R3);
    assert_eq!(
        defeats[0].render(&fx.ontology, &fx.contexts),
        "R3 from Ïmp(CV, Monday, 1) defeated by ¬Ïmp(HCV, Morning, 2) \
         via HCV → HCV → CV within 1 ≤ 2 ≤ 3"
    );
}

//! The behavior taxonomy: a finite DAG of action entailments.
//!
//! Nodes are behaviors; a directed edge `specific → general` records that
//! performing the specific behavior necessarily performs the general one
//! (helping-cook entails cooking). Entailment is the reflexive-transitive
//! closure of the edge relation, and it is the backbone of the inference
//! rules: obligations inherit up the graph, prohibitions inherit down, and
//! defeaters are sought along entailment paths.
//!
//! Ontology values are immutable snapshots: the mutation operations return
//! a new ontology and leave the receiver untouched, so every store and
//! in-flight query keeps a consistent view. The transitive closure is
//! recomputed on mutation, which keeps `entails` a set lookup at query
//! time; taxonomies at the intended scale are tens of nodes, so rebuild
//! cost is irrelevant.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Identifier of a declared behavior: an index into the ontology that
/// issued it. Ids order by declaration, not by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub(crate) u32);

impl ActionId {
    /// Index of this behavior within its ontology.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "action#{}", self.0)
    }
}

/// Errors from taxonomy construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    /// A second declaration of an already-declared behavior name.
    #[error("action `{0}` is already declared")]
    DuplicateAction(String),
    /// A name that no declaration introduced.
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    /// An id issued by a different (or later) ontology snapshot.
    #[error("action id #{0} was not issued by this ontology")]
    ForeignId(u32),
    /// The new edge would close a directed cycle; the path lists the cycle
    /// that would form, starting and ending at the new edge's source.
    #[error("entailment cycle: {}", path.join(" -> "))]
    CycleIntroduced { path: Vec<String> },
}

/// How two behaviors stand to one another in the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorRelation {
    /// The same behavior.
    Equal,
    /// The first behavior entails the second (first is more specific).
    Specializes,
    /// The second behavior entails the first (first is more general).
    Generalizes,
    /// Incomparable, but some behavior entails both; carries the
    /// lexicographically least such common specialization as witness.
    Intersects(ActionId),
    /// Incomparable with no common specialization.
    Disjoint,
}

/// An immutable snapshot of the behavior taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    names: Vec<String>,
    /// Direct edges, specific → general.
    edges: BTreeSet<(ActionId, ActionId)>,
    /// `reach[i]` = every node reachable from node `i` along edges,
    /// including `i` itself (the generalizations of `i`).
    reach: Vec<BTreeSet<ActionId>>,
}

impl Default for Ontology {
    fn default() -> Self {
        Self::new()
    }
}

impl Ontology {
    /// Empty taxonomy.
    pub fn new() -> Self {
        Ontology {
            names: Vec::new(),
            edges: BTreeSet::new(),
            reach: Vec::new(),
        }
    }

    /// Declares a behavior, returning the extended snapshot and the new id.
    pub fn add_action(&self, name: &str) -> Result<(Ontology, ActionId), OntologyError> {
        if self.names.iter().any(|n| n == name) {
            return Err(OntologyError::DuplicateAction(name.to_string()));
        }
        let mut next = self.clone();
        let id = ActionId(next.names.len() as u32);
        next.names.push(name.to_string());
        next.reach.push(BTreeSet::from([id]));
        Ok((next, id))
    }

    /// Adds an entailment edge `specific → general`, returning the extended
    /// snapshot. Rejects edges that would close a cycle (including
    /// self-edges), reporting the cycle that would form.
    pub fn add_entailment(
        &self,
        specific: ActionId,
        general: ActionId,
    ) -> Result<Ontology, OntologyError> {
        self.check_id(specific)?;
        self.check_id(general)?;
        if self.entails(general, specific) {
            // general already reaches specific, so the new edge closes a
            // cycle: specific → general → … → specific.
            let mut path: Vec<String> = vec![self.names[specific.index()].clone()];
            for node in self.path_between(general, specific) {
                path.push(self.names[node.index()].clone());
            }
            return Err(OntologyError::CycleIntroduced { path });
        }
        let mut next = self.clone();
        next.edges.insert((specific, general));
        next.rebuild_reach();
        Ok(next)
    }

    /// Looks a behavior up by name.
    pub fn resolve(&self, name: &str) -> Option<ActionId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| ActionId(i as u32))
    }

    /// Name of a declared behavior. Panics on ids this snapshot never
    /// issued; ids are not transferable between unrelated ontologies.
    pub fn name(&self, id: ActionId) -> &str {
        &self.names[id.index()]
    }

    /// Validates that an id belongs to this snapshot.
    pub fn check_id(&self, id: ActionId) -> Result<(), OntologyError> {
        if id.index() < self.names.len() {
            Ok(())
        } else {
            Err(OntologyError::ForeignId(id.0))
        }
    }

    /// Number of declared behaviors.
    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    /// All declared behavior ids, in declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.names.len()).map(|i| ActionId(i as u32))
    }

    /// Direct edges `specific → general`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (ActionId, ActionId)> + '_ {
        self.edges.iter().copied()
    }

    /// Reflexive-transitive entailment: does `a` entail `b`?
    pub fn entails(&self, a: ActionId, b: ActionId) -> bool {
        self.reach[a.index()].contains(&b)
    }

    /// Every behavior `a` entails, including `a` itself (the
    /// generalizations of `a`; upward set).
    pub fn generalizations(&self, a: ActionId) -> &BTreeSet<ActionId> {
        &self.reach[a.index()]
    }

    /// Every behavior that entails `a`, including `a` itself (the
    /// specializations of `a`; downward set).
    pub fn specializations(&self, a: ActionId) -> BTreeSet<ActionId> {
        self.nodes().filter(|&x| self.entails(x, a)).collect()
    }

    /// Every `y` lying on an entailment path from `a` up to `b`, endpoints
    /// included: `{y : a ⊨ y and y ⊨ b}`. Empty when `a` does not entail
    /// `b`; defeater scans rely on that instead of an error.
    pub fn between(&self, a: ActionId, b: ActionId) -> BTreeSet<ActionId> {
        if !self.entails(a, b) {
            return BTreeSet::new();
        }
        self.reach[a.index()]
            .iter()
            .copied()
            .filter(|&y| self.entails(y, b))
            .collect()
    }

    /// Classifies the relation between two behaviors. For incomparable
    /// behaviors with common specializations, the witness is the one with
    /// the lexicographically least name, making the result deterministic.
    pub fn relate(&self, a: ActionId, b: ActionId) -> BehaviorRelation {
        if a == b {
            return BehaviorRelation::Equal;
        }
        if self.entails(a, b) {
            return BehaviorRelation::Specializes;
        }
        if self.entails(b, a) {
            return BehaviorRelation::Generalizes;
        }
        let witness = self
            .nodes()
            .filter(|&x| self.entails(x, a) && self.entails(x, b))
            .min_by(|&x, &y| self.name(x).cmp(self.name(y)));
        match witness {
            Some(w) => BehaviorRelation::Intersects(w),
            None => BehaviorRelation::Disjoint,
        }
    }

    /// Recomputes `reach` from the edge set (iterated relaxation; the
    /// graph is acyclic and tiny).
    fn rebuild_reach(&mut self) {
        let n = self.names.len();
        let mut reach: Vec<BTreeSet<ActionId>> =
            (0..n).map(|i| BTreeSet::from([ActionId(i as u32)])).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for &(src, dst) in &self.edges {
                let additions: Vec<ActionId> = reach[dst.index()]
                    .iter()
                    .copied()
                    .filter(|x| !reach[src.index()].contains(x))
                    .collect();
                if !additions.is_empty() {
                    reach[src.index()].extend(additions);
                    changed = true;
                }
            }
        }
        self.reach = reach;
    }

    /// One concrete edge path from `from` up to `to` (assumes
    /// `entails(from, to)`); used to report the cycle an edge would close.
    fn path_between(&self, from: ActionId, to: ActionId) -> Vec<ActionId> {
        // Breadth-first search over direct edges.
        let mut parents: Vec<Option<ActionId>> = vec![None; self.names.len()];
        let mut queue = std::collections::VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(cur) = queue.pop_front() {
            if cur == to {
                break;
            }
            for &(src, dst) in self.edges.range((cur, ActionId(0))..=(cur, ActionId(u32::MAX))) {
                debug_assert_eq!(src, cur);
                if seen.insert(dst) {
                    parents[dst.index()] = Some(cur);
                    queue.push_back(dst);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            match parents[cur.index()] {
                Some(p) => {
                    path.push(p);
                    cur = p;
                }
                None => break, // from == to (self-edge case)
            }
        }
        path.reverse();
        path
    }
}

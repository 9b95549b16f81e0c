//! Propositional context logic for norm applicability.
//!
//! Every piece of normative testimony carries a context formula describing
//! when it applies ("on Monday", "in the morning", …). Context formulas are
//! classical propositional formulas over a small vocabulary of declared
//! atoms; the query context δ activates an atom's norm exactly when δ
//! entails the atom's context.
//!
//! Entailment, satisfiability, and joint consistency are decided by
//! exhaustive truth-table evaluation. The vocabulary is capped at
//! [`ContextVocab::MAX_ATOMS`] atoms so the table never exceeds 2^16 rows;
//! stores at the intended desk scale use two or three atoms, where the
//! table is a handful of rows. No normalization is performed: formulas are
//! compared and stored structurally.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Identifier of a declared context atom: an index into its
/// [`ContextVocab`]. Ids are only meaningful together with the vocabulary
/// that issued them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CtxAtomId(pub(crate) u16);

impl CtxAtomId {
    /// Index of this atom within its vocabulary.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The set of context propositions a store knows about.
///
/// Atoms are declared once, by name, and referenced by [`CtxAtomId`]
/// thereafter. The vocabulary is append-only and capped at
/// [`Self::MAX_ATOMS`] atoms to keep truth-table evaluation exhaustive yet
/// bounded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextVocab {
    names: Vec<String>,
}

/// Errors from vocabulary declaration and formula evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    /// A second declaration of an already-declared atom name.
    #[error("context atom `{0}` is already declared")]
    DuplicateAtom(String),
    /// Declaring one more atom would exceed the evaluation cap.
    #[error("context vocabulary is full ({cap} atoms): cannot declare `{name}`")]
    TooManyAtoms { name: String, cap: usize },
    /// A formula referenced an atom id the vocabulary never issued.
    #[error("context formula references undeclared atom #{0}")]
    UndeclaredAtom(u16),
}

impl ContextVocab {
    /// Hard cap on declared atoms; 2^16 truth-table rows at worst.
    pub const MAX_ATOMS: usize = 16;

    /// Empty vocabulary.
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a new atom and returns its id.
    pub fn declare(&mut self, name: &str) -> Result<CtxAtomId, ContextError> {
        if self.names.iter().any(|n| n == name) {
            return Err(ContextError::DuplicateAtom(name.to_string()));
        }
        if self.names.len() >= Self::MAX_ATOMS {
            return Err(ContextError::TooManyAtoms {
                name: name.to_string(),
                cap: Self::MAX_ATOMS,
            });
        }
        self.names.push(name.to_string());
        Ok(CtxAtomId((self.names.len() - 1) as u16))
    }

    /// Looks an atom up by name.
    pub fn resolve(&self, name: &str) -> Option<CtxAtomId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| CtxAtomId(i as u16))
    }

    /// Name of a declared atom. Panics on an id this vocabulary never
    /// issued (ids are not transferable between vocabularies).
    pub fn name(&self, id: CtxAtomId) -> &str {
        &self.names[id.index()]
    }

    /// Number of declared atoms.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True when no atoms are declared.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Iterates over declared atom ids in declaration order.
    pub fn ids(&self) -> impl Iterator<Item = CtxAtomId> + '_ {
        (0..self.names.len()).map(|i| CtxAtomId(i as u16))
    }

    fn check_declared(&self, f: &ContextFormula) -> Result<(), ContextError> {
        for id in f.atoms() {
            if id.index() >= self.names.len() {
                return Err(ContextError::UndeclaredAtom(id.0));
            }
        }
        Ok(())
    }

    /// Decides `f ⊨ g`: every assignment satisfying `f` also satisfies
    /// `g`. Exhaustive over the atoms occurring in either formula, which
    /// yields the same verdict as enumerating the full vocabulary because
    /// the verdict of a formula is independent of atoms it never mentions.
    pub fn entails(&self, f: &ContextFormula, g: &ContextFormula) -> Result<bool, ContextError> {
        self.check_declared(f)?;
        self.check_declared(g)?;
        let atoms: Vec<CtxAtomId> = f.atoms().union(&g.atoms()).copied().collect();
        let verdict = assignments(&atoms).all(|assign| !f.evaluate(&assign) || g.evaluate(&assign));
        Ok(verdict)
    }

    /// Decides whether some assignment satisfies `f`.
    pub fn satisfiable(&self, f: &ContextFormula) -> Result<bool, ContextError> {
        self.check_declared(f)?;
        let atoms: Vec<CtxAtomId> = f.atoms().into_iter().collect();
        let verdict = assignments(&atoms).any(|assign| f.evaluate(&assign));
        Ok(verdict)
    }

    /// Decides whether `f` and `g` can hold together (joint
    /// satisfiability).
    pub fn consistent(&self, f: &ContextFormula, g: &ContextFormula) -> Result<bool, ContextError> {
        self.check_declared(f)?;
        self.check_declared(g)?;
        let atoms: Vec<CtxAtomId> = f.atoms().union(&g.atoms()).copied().collect();
        let verdict = assignments(&atoms).any(|assign| f.evaluate(&assign) && g.evaluate(&assign));
        Ok(verdict)
    }
}

/// One row of a truth table: the atoms mapped to true.
#[derive(Debug, Clone)]
pub struct Assignment {
    true_atoms: BTreeSet<CtxAtomId>,
}

impl Assignment {
    /// Truth value of an atom under this assignment; atoms outside the
    /// enumerated set are false.
    pub fn is_true(&self, id: CtxAtomId) -> bool {
        self.true_atoms.contains(&id)
    }
}

/// Iterates every assignment over the given atoms (2^n rows).
fn assignments(atoms: &[CtxAtomId]) -> impl Iterator<Item = Assignment> + '_ {
    debug_assert!(atoms.len() <= ContextVocab::MAX_ATOMS);
    (0u32..(1u32 << atoms.len())).map(move |mask| Assignment {
        true_atoms: atoms
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, id)| *id)
            .collect(),
    })
}

/// A propositional context formula.
///
/// `Top` is the always-true context (written `true` in scripts). Formulas
/// are plain trees: no simplification or normalization is applied, so two
/// logically equivalent formulas may compare unequal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextFormula {
    /// The always-applicable context.
    Top,
    /// A declared context proposition.
    Atom(CtxAtomId),
    /// Negation.
    Not(Box<ContextFormula>),
    /// Conjunction.
    And(Box<ContextFormula>, Box<ContextFormula>),
    /// Disjunction.
    Or(Box<ContextFormula>, Box<ContextFormula>),
    /// Material implication.
    Implies(Box<ContextFormula>, Box<ContextFormula>),
}

impl ContextFormula {
    /// Atom wrapper.
    pub fn atom(id: CtxAtomId) -> Self {
        ContextFormula::Atom(id)
    }

    /// Negation of `self`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        ContextFormula::Not(Box::new(self))
    }

    /// Conjunction `self ∧ other`.
    pub fn and(self, other: Self) -> Self {
        ContextFormula::And(Box::new(self), Box::new(other))
    }

    /// Disjunction `self ∨ other`.
    pub fn or(self, other: Self) -> Self {
        ContextFormula::Or(Box::new(self), Box::new(other))
    }

    /// Implication `self → other`.
    pub fn implies(self, other: Self) -> Self {
        ContextFormula::Implies(Box::new(self), Box::new(other))
    }

    /// The set of atoms occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<CtxAtomId> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<CtxAtomId>) {
        match self {
            ContextFormula::Top => {}
            ContextFormula::Atom(id) => {
                out.insert(*id);
            }
            ContextFormula::Not(f) => f.collect_atoms(out),
            ContextFormula::And(f, g) | ContextFormula::Or(f, g) | ContextFormula::Implies(f, g) => {
                f.collect_atoms(out);
                g.collect_atoms(out);
            }
        }
    }

    /// Truth value under one assignment.
    pub fn evaluate(&self, assign: &Assignment) -> bool {
        match self {
            ContextFormula::Top => true,
            ContextFormula::Atom(id) => assign.is_true(*id),
            ContextFormula::Not(f) => !f.evaluate(assign),
            ContextFormula::And(f, g) => f.evaluate(assign) && g.evaluate(assign),
            ContextFormula::Or(f, g) => f.evaluate(assign) || g.evaluate(assign),
            ContextFormula::Implies(f, g) => !f.evaluate(assign) || g.evaluate(assign),
        }
    }

    /// Renders the formula with the minimum parentheses that reproduce its
    /// tree under the script grammar (`!` binds tightest, then `&`, then
    /// `|`, then right-associative `->`).
    pub fn render(&self, vocab: &ContextVocab) -> String {
        let mut out = String::new();
        self.render_prec(vocab, 0, &mut out);
        out
    }

    /// Precedence levels: Implies = 0, Or = 1, And = 2, Not = 3, leaves = 4.
    fn level(&self) -> u8 {
        match self {
            ContextFormula::Implies(..) => 0,
            ContextFormula::Or(..) => 1,
            ContextFormula::And(..) => 2,
            ContextFormula::Not(..) => 3,
            ContextFormula::Top | ContextFormula::Atom(..) => 4,
        }
    }

    fn render_prec(&self, vocab: &ContextVocab, min_level: u8, out: &mut String) {
        let needs_parens = self.level() < min_level;
        if needs_parens {
            out.push('(');
        }
        match self {
            ContextFormula::Top => out.push_str("true"),
            ContextFormula::Atom(id) => out.push_str(vocab.name(*id)),
            ContextFormula::Not(f) => {
                out.push('!');
                f.render_prec(vocab, 3, out);
            }
            ContextFormula::And(f, g) => {
                f.render_prec(vocab, 2, out);
                out.push_str(" & ");
                g.render_prec(vocab, 3, out);
            }
            ContextFormula::Or(f, g) => {
                f.render_prec(vocab, 1, out);
                out.push_str(" | ");
                g.render_prec(vocab, 2, out);
            }
            ContextFormula::Implies(f, g) => {
                f.render_prec(vocab, 1, out);
                out.push_str(" -> ");
                g.render_prec(vocab, 0, out);
            }
        }
        if needs_parens {
            out.push(')');
        }
    }
}

impl fmt::Display for CtxAtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Conjunction of two formulas, used to form the shared context of a
/// norm pair.
pub fn conjoin(f: &ContextFormula, g: &ContextFormula) -> ContextFormula {
    f.clone().and(g.clone())
}

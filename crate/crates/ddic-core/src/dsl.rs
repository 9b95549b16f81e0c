//! The `.ddic` script language.
//!
//! A script is a sequence of single-line statements, `#` to end of line is
//! a comment, identifiers are case-sensitive `[A-Za-z][A-Za-z0-9_]*`, and
//! the only reserved word is `true`:
//!
//! ```text
//! action HC                             # declare a behavior
//! entails HC -> C                       # HC is the more specific behavior
//! context Monday                        # declare a context atom
//! @1 obl(HC, Monday & Morning)          # timestamped testimony
//! query @3 (HC, Monday)                 # print the status of a behavior
//! expect @3 ~Obl(HC, Monday)            # belief ¬Obl must be derivable
//! expect not @3 Obl(C, Monday)          # belief Obl must NOT be derivable
//! ```
//!
//! Context formulas use `!` `&` `|` `->` with that precedence (tightest
//! first); `->` associates right, `&` and `|` left. The comma after the
//! behavior keeps `|` free for disjunction inside formulas.
//!
//! Declarations may appear anywhere: names resolve after a whole-file
//! declaration pass, and an unresolved name is reported at its use site.
//! Parsing canonicalizes — declarations sorted, testimony stable-sorted by
//! time, queries and expectations in file order — so [`parse_script`] ∘
//! [`format_script`] is the identity on scripts and the composition the
//! other way round is idempotent on text.

use thiserror::Error;

use crate::context::{ContextFormula, ContextVocab};
use crate::model::{Modal, NormStore, Polarity, Time};
use crate::ontology::{ActionId, Ontology, OntologyError};

/// A syntax or resolution error with its position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: expected {expected}, found \"{found}\"")]
pub struct ParseError {
    /// 1-based line of the first offending token.
    pub line: usize,
    /// 1-based column (in characters) of the first offending token.
    pub column: usize,
    /// What the parser needed at that position.
    pub expected: String,
    /// The offending token, or `end of line`.
    pub found: String,
}

/// One testimony statement, resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestimonyLine {
    pub time: Time,
    pub modal: Modal,
    pub behavior: ActionId,
    pub context: ContextFormula,
}

/// One `query` statement, resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLine {
    pub time: Time,
    pub behavior: ActionId,
    pub context: ContextFormula,
}

/// One `expect` statement, resolved: the belief
/// `{~}Modal(behavior, context, time)` must (`present`) or must not
/// (`!present`) be derivable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub present: bool,
    pub polarity: Polarity,
    pub modal: Modal,
    pub behavior: ActionId,
    pub context: ContextFormula,
    pub time: Time,
}

/// A parsed, resolved, canonicalized script.
///
/// Only [`parse_script`] builds these, so every reference is resolved and
/// the canonical ordering invariants hold by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    ontology: Ontology,
    contexts: ContextVocab,
    testimony: Vec<TestimonyLine>,
    queries: Vec<QueryLine>,
    expectations: Vec<Expectation>,
}

impl Script {
    /// The declared behavior taxonomy.
    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    /// The declared context vocabulary.
    pub fn contexts(&self) -> &ContextVocab {
        &self.contexts
    }

    /// Testimony statements, stable-sorted by time.
    pub fn testimony(&self) -> &[TestimonyLine] {
        &self.testimony
    }

    /// Query statements, in file order.
    pub fn queries(&self) -> &[QueryLine] {
        &self.queries
    }

    /// Expectations, in file order.
    pub fn expectations(&self) -> &[Expectation] {
        &self.expectations
    }

    /// Replays the testimony into a norm store.
    pub fn to_store(&self) -> NormStore {
        let mut store = NormStore::new(self.ontology.clone(), self.contexts.clone());
        for t in &self.testimony {
            store = store
                .with_testimony(t.modal, t.behavior, t.context.clone(), t.time)
                .expect("script references are resolved by the parser");
        }
        store
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Ident,
    Nat,
    Arrow,
    At,
    LParen,
    RParen,
    Comma,
    Bang,
    Amp,
    Pipe,
    Tilde,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    text: String,
    col: usize,
}

fn lex_line(line_no: usize, line: &str) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let col = i + 1;
        let mut single = |kind: TokKind, text: &str| {
            toks.push(Tok { kind, text: text.to_string(), col });
        };
        match c {
            '@' => single(TokKind::At, "@"),
            '(' => single(TokKind::LParen, "("),
            ')' => single(TokKind::RParen, ")"),
            ',' => single(TokKind::Comma, ","),
            '!' => single(TokKind::Bang, "!"),
            '&' => single(TokKind::Amp, "&"),
            '|' => single(TokKind::Pipe, "|"),
            '~' => single(TokKind::Tilde, "~"),
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push(Tok { kind: TokKind::Arrow, text: "->".to_string(), col });
                    i += 2;
                    continue;
                }
                return Err(ParseError {
                    line: line_no,
                    column: col,
                    expected: "\"->\"".to_string(),
                    found: "-".to_string(),
                });
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                toks.push(Tok { kind: TokKind::Ident, text, col });
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                if text.parse::<u64>().is_err() {
                    return Err(ParseError {
                        line: line_no,
                        column: col,
                        expected: "a timestamp within range".to_string(),
                        found: text,
                    });
                }
                toks.push(Tok { kind: TokKind::Nat, text, col });
                continue;
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    column: col,
                    expected: "a statement token".to_string(),
                    found: other.to_string(),
                })
            }
        }
        i += 1;
    }
    Ok(toks)
}

/// A name occurrence pending resolution.
#[derive(Debug, Clone)]
struct NameRef {
    name: String,
    line: usize,
    col: usize,
}

/// Context formula with unresolved atom names.
#[derive(Debug, Clone)]
enum RawCtx {
    Top,
    Atom(NameRef),
    Not(Box<RawCtx>),
    And(Box<RawCtx>, Box<RawCtx>),
    Or(Box<RawCtx>, Box<RawCtx>),
    Implies(Box<RawCtx>, Box<RawCtx>),
}

/// A syntactically valid line, pre-resolution.
#[derive(Debug, Clone)]
enum RawLine {
    Action(NameRef),
    Entails { specific: NameRef, general: NameRef },
    Context(NameRef),
    Testimony { time: Time, modal: Modal, behavior: NameRef, context: RawCtx },
    Query { time: Time, behavior: NameRef, context: RawCtx },
    Expectation {
        present: bool,
        polarity: Polarity,
        modal: Modal,
        behavior: NameRef,
        context: RawCtx,
        time: Time,
    },
}

struct LineParser<'t> {
    line: usize,
    toks: &'t [Tok],
    pos: usize,
    /// Column just past the last character, for end-of-line errors.
    end_col: usize,
}

impl<'t> LineParser<'t> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn err(&self, expected: &str) -> ParseError {
        let (column, found) = match self.peek() {
            Some(t) => (t.col, t.text.clone()),
            None => (self.end_col, "end of line".to_string()),
        };
        ParseError { line: self.line, column, expected: expected.to_string(), found }
    }

    fn take(&mut self, kind: TokKind, expected: &str) -> Result<Tok, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.err(expected)),
        }
    }

    /// An identifier usable as a name; `true` is reserved.
    fn take_name(&mut self, expected: &str) -> Result<NameRef, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident && t.text != "true" => {
                let name = NameRef { name: t.text.clone(), line: self.line, col: t.col };
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.err(expected)),
        }
    }

    fn take_time(&mut self) -> Result<Time, ParseError> {
        let tok = self.take(TokKind::Nat, "a timestamp")?;
        Ok(tok.text.parse().expect("lexer validated the range"))
    }

    /// True when the upcoming token is the given bare keyword.
    fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokKind::Ident && t.text == word)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("end of line"))
        }
    }

    // Context formulas: implication (right-assoc, loosest), disjunction,
    // conjunction, negation, primary.
    fn parse_ctx(&mut self) -> Result<RawCtx, ParseError> {
        let left = self.parse_or()?;
        if self.peek().map(|t| t.kind) == Some(TokKind::Arrow) {
            self.pos += 1;
            let right = self.parse_ctx()?;
            Ok(RawCtx::Implies(Box::new(left), Box::new(right)))
        } else {
            Ok(left)
        }
    }

    fn parse_or(&mut self) -> Result<RawCtx, ParseError> {
        let mut formula = self.parse_and()?;
        while self.peek().map(|t| t.kind) == Some(TokKind::Pipe) {
            self.pos += 1;
            let right = self.parse_and()?;
            formula = RawCtx::Or(Box::new(formula), Box::new(right));
        }
        Ok(formula)
    }

    fn parse_and(&mut self) -> Result<RawCtx, ParseError> {
        let mut formula = self.parse_unary()?;
        while self.peek().map(|t| t.kind) == Some(TokKind::Amp) {
            self.pos += 1;
            let right = self.parse_unary()?;
            formula = RawCtx::And(Box::new(formula), Box::new(right));
        }
        Ok(formula)
    }

    fn parse_unary(&mut self) -> Result<RawCtx, ParseError> {
        if self.peek().map(|t| t.kind) == Some(TokKind::Bang) {
            self.pos += 1;
            Ok(RawCtx::Not(Box::new(self.parse_unary()?)))
        } else {
            self.parse_primary()
        }
    }

    fn parse_primary(&mut self) -> Result<RawCtx, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident && t.text == "true" => {
                self.pos += 1;
                Ok(RawCtx::Top)
            }
            Some(t) if t.kind == TokKind::Ident => {
                let atom = NameRef { name: t.text.clone(), line: self.line, col: t.col };
                self.pos += 1;
                Ok(RawCtx::Atom(atom))
            }
            Some(t) if t.kind == TokKind::LParen => {
                self.pos += 1;
                let inner = self.parse_ctx()?;
                self.take(TokKind::RParen, "\")\"")?;
                Ok(inner)
            }
            _ => Err(self.err("a context formula")),
        }
    }
}

fn parse_line(
    line_no: usize,
    toks: &[Tok],
    end_col: usize,
) -> Result<Option<RawLine>, ParseError> {
    if toks.is_empty() {
        return Ok(None);
    }
    let mut p = LineParser { line: line_no, toks, pos: 0, end_col };
    let raw = if p.at_keyword("action") {
        p.pos += 1;
        RawLine::Action(p.take_name("an action name")?)
    } else if p.at_keyword("entails") {
        p.pos += 1;
        let specific = p.take_name("an action name")?;
        p.take(TokKind::Arrow, "\"->\"")?;
        let general = p.take_name("an action name")?;
        RawLine::Entails { specific, general }
    } else if p.at_keyword("context") {
        p.pos += 1;
        RawLine::Context(p.take_name("a context atom name")?)
    } else if p.peek().map(|t| t.kind) == Some(TokKind::At) {
        p.pos += 1;
        let time = p.take_time()?;
        let tok = p.take(TokKind::Ident, "obl, imp, or opt")?;
        let modal = match tok.text.as_str() {
            "obl" => Modal::Obl,
            "imp" => Modal::Imp,
            "opt" => Modal::Opt,
            _ => {
                return Err(ParseError {
                    line: line_no,
                    column: tok.col,
                    expected: "obl, imp, or opt".to_string(),
                    found: tok.text,
                })
            }
        };
        p.take(TokKind::LParen, "\"(\"")?;
        let behavior = p.take_name("a behavior name")?;
        p.take(TokKind::Comma, "\",\"")?;
        let context = p.parse_ctx()?;
        p.take(TokKind::RParen, "\")\"")?;
        RawLine::Testimony { time, modal, behavior, context }
    } else if p.at_keyword("query") {
        p.pos += 1;
        p.take(TokKind::At, "\"@\"")?;
        let time = p.take_time()?;
        p.take(TokKind::LParen, "\"(\"")?;
        let behavior = p.take_name("a behavior name")?;
        p.take(TokKind::Comma, "\",\"")?;
        let context = p.parse_ctx()?;
        p.take(TokKind::RParen, "\")\"")?;
        RawLine::Query { time, behavior, context }
    } else if p.at_keyword("expect") {
        p.pos += 1;
        let present = if p.at_keyword("not") {
            p.pos += 1;
            false
        } else {
            true
        };
        p.take(TokKind::At, "\"@\"")?;
        let time = p.take_time()?;
        let polarity = if p.peek().map(|t| t.kind) == Some(TokKind::Tilde) {
            p.pos += 1;
            Polarity::Negative
        } else {
            Polarity::Positive
        };
        let tok = p.take(TokKind::Ident, "Obl, Imp, or Opt")?;
        let modal = match tok.text.as_str() {
            "Obl" => Modal::Obl,
            "Imp" => Modal::Imp,
            "Opt" => Modal::Opt,
            _ => {
                return Err(ParseError {
                    line: line_no,
                    column: tok.col,
                    expected: "Obl, Imp, or Opt".to_string(),
                    found: tok.text,
                })
            }
        };
        p.take(TokKind::LParen, "\"(\"")?;
        let behavior = p.take_name("a behavior name")?;
        p.take(TokKind::Comma, "\",\"")?;
        let context = p.parse_ctx()?;
        p.take(TokKind::RParen, "\")\"")?;
        RawLine::Expectation { present, polarity, modal, behavior, context, time }
    } else {
        return Err(p.err("a statement (action, entails, context, @, query, or expect)"));
    };
    p.finish()?;
    Ok(Some(raw))
}

fn resolve_action(ontology: &Ontology, name: &NameRef) -> Result<ActionId, ParseError> {
    ontology.resolve(&name.name).ok_or_else(|| ParseError {
        line: name.line,
        column: name.col,
        expected: "a declared action".to_string(),
        found: name.name.clone(),
    })
}

fn resolve_ctx(vocab: &ContextVocab, raw: &RawCtx) -> Result<ContextFormula, ParseError> {
    Ok(match raw {
        RawCtx::Top => ContextFormula::Top,
        RawCtx::Atom(name) => {
            let id = vocab.resolve(&name.name).ok_or_else(|| ParseError {
                line: name.line,
                column: name.col,
                expected: "a declared context atom".to_string(),
                found: name.name.clone(),
            })?;
            ContextFormula::atom(id)
        }
        RawCtx::Not(f) => resolve_ctx(vocab, f)?.not(),
        RawCtx::And(f, g) => resolve_ctx(vocab, f)?.and(resolve_ctx(vocab, g)?),
        RawCtx::Or(f, g) => resolve_ctx(vocab, f)?.or(resolve_ctx(vocab, g)?),
        RawCtx::Implies(f, g) => resolve_ctx(vocab, f)?.implies(resolve_ctx(vocab, g)?),
    })
}

/// Declared context atoms are capped so context reasoning (truth tables
/// over the occurring atoms) stays small.
const MAX_CONTEXT_DECLS: usize = 16;

/// Parses script text into a canonical [`Script`].
pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    // Pass one: per-line syntax.
    let mut raws: Vec<RawLine> = Vec::new();
    for (idx, raw_line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let toks = lex_line(line_no, line)?;
        let end_col = line.chars().count() + 1;
        if let Some(raw) = parse_line(line_no, &toks, end_col)? {
            raws.push(raw);
        }
    }

    // Pass two: collect declarations (duplicates and the context cap are
    // reported at the offending declaration, in file order).
    let mut action_names: Vec<&NameRef> = Vec::new();
    let mut context_names: Vec<&NameRef> = Vec::new();
    for raw in &raws {
        match raw {
            RawLine::Action(name) => {
                if action_names.iter().any(|n| n.name == name.name) {
                    return Err(ParseError {
                        line: name.line,
                        column: name.col,
                        expected: "a new action name".to_string(),
                        found: name.name.clone(),
                    });
                }
                action_names.push(name);
            }
            RawLine::Context(name) => {
                if context_names.iter().any(|n| n.name == name.name) {
                    return Err(ParseError {
                        line: name.line,
                        column: name.col,
                        expected: "a new context atom name".to_string(),
                        found: name.name.clone(),
                    });
                }
                if context_names.len() == MAX_CONTEXT_DECLS {
                    return Err(ParseError {
                        line: name.line,
                        column: name.col,
                        expected: format!("at most {MAX_CONTEXT_DECLS} context atoms"),
                        found: name.name.clone(),
                    });
                }
                context_names.push(name);
            }
            _ => {}
        }
    }

    // Canonical identity: declarations sorted by name.
    let mut sorted_actions: Vec<&str> =
        action_names.iter().map(|n| n.name.as_str()).collect();
    sorted_actions.sort_unstable();
    let mut ontology = Ontology::new();
    for name in sorted_actions {
        ontology = ontology.add_action(name).expect("duplicates rejected above").0;
    }
    let mut sorted_contexts: Vec<&str> =
        context_names.iter().map(|n| n.name.as_str()).collect();
    sorted_contexts.sort_unstable();
    let mut contexts = ContextVocab::new();
    for name in sorted_contexts {
        contexts.declare(name).expect("duplicates and cap rejected above");
    }

    // Pass three: resolve every use site in file order, so the first
    // unresolved or cyclic reference in the file wins.
    let mut testimony: Vec<TestimonyLine> = Vec::new();
    let mut queries: Vec<QueryLine> = Vec::new();
    let mut expectations: Vec<Expectation> = Vec::new();
    for raw in &raws {
        match raw {
            RawLine::Action(_) | RawLine::Context(_) => {}
            RawLine::Entails { specific, general } => {
                let s = resolve_action(&ontology, specific)?;
                let g = resolve_action(&ontology, general)?;
                ontology = match ontology.add_entailment(s, g) {
                    Ok(next) => next,
                    Err(OntologyError::CycleIntroduced { .. }) => {
                        return Err(ParseError {
                            line: specific.line,
                            column: specific.col,
                            expected: "an entailment that does not close a cycle".to_string(),
                            found: specific.name.clone(),
                        })
                    }
                    Err(other) => unreachable!("ids are resolved: {other}"),
                };
            }
            RawLine::Testimony { time, modal, behavior, context } => {
                testimony.push(TestimonyLine {
                    time: *time,
                    modal: *modal,
                    behavior: resolve_action(&ontology, behavior)?,
                    context: resolve_ctx(&contexts, context)?,
                });
            }
            RawLine::Query { time, behavior, context } => {
                queries.push(QueryLine {
                    time: *time,
                    behavior: resolve_action(&ontology, behavior)?,
                    context: resolve_ctx(&contexts, context)?,
                });
            }
            RawLine::Expectation { present, polarity, modal, behavior, context, time } => {
                expectations.push(Expectation {
                    present: *present,
                    polarity: *polarity,
                    modal: *modal,
                    behavior: resolve_action(&ontology, behavior)?,
                    context: resolve_ctx(&contexts, context)?,
                    time: *time,
                });
            }
        }
    }

    // Canonical order: testimony stable-sorted by time (file order breaks
    // ties); queries and expectations keep file order.
    testimony.sort_by_key(|t| t.time);

    Ok(Script { ontology, contexts, testimony, queries, expectations })
}

/// Parses a bare context formula — the `ctx` production alone — against
/// an existing vocabulary. Used for ad-hoc query contexts; positions in
/// errors are 1-based within `text`.
pub fn parse_context(text: &str, vocab: &ContextVocab) -> Result<ContextFormula, ParseError> {
    let line = text.strip_suffix('\r').unwrap_or(text);
    let toks = lex_line(1, line)?;
    let mut p = LineParser { line: 1, toks: &toks, pos: 0, end_col: line.chars().count() + 1 };
    let raw = p.parse_ctx()?;
    p.finish()?;
    resolve_ctx(vocab, &raw)
}

fn modal_keyword(modal: Modal) -> &'static str {
    match modal {
        Modal::Obl => "obl",
        Modal::Imp => "imp",
        Modal::Opt => "opt",
    }
}

/// Renders a script in canonical form: sorted declarations, then testimony
/// by time, then queries, then expectations. Parsing the result
/// reproduces the script exactly.
pub fn format_script(script: &Script) -> String {
    let ont = script.ontology();
    let vocab = script.contexts();
    let mut out = String::new();

    let mut actions: Vec<&str> = ont.nodes().map(|id| ont.name(id)).collect();
    actions.sort_unstable();
    for name in actions {
        out.push_str(&format!("action {name}\n"));
    }
    let mut edges: Vec<(&str, &str)> =
        ont.edges().map(|(s, g)| (ont.name(s), ont.name(g))).collect();
    edges.sort_unstable();
    for (specific, general) in edges {
        out.push_str(&format!("entails {specific} -> {general}\n"));
    }
    let mut atoms: Vec<&str> = vocab.ids().map(|id| vocab.name(id)).collect();
    atoms.sort_unstable();
    for name in atoms {
        out.push_str(&format!("context {name}\n"));
    }
    for t in script.testimony() {
        out.push_str(&format!(
            "@{} {}({}, {})\n",
            t.time,
            modal_keyword(t.modal),
            ont.name(t.behavior),
            t.context.render(vocab)
        ));
    }
    for q in script.queries() {
        out.push_str(&format!(
            "query @{} ({}, {})\n",
            q.time,
            ont.name(q.behavior),
            q.context.render(vocab)
        ));
    }
    for e in script.expectations() {
        out.push_str(&format!(
            "expect {}@{} {}{}({}, {})\n",
            if e.present { "" } else { "not " },
            e.time,
            if e.polarity == Polarity::Negative { "~" } else { "" },
            e.modal.belief_name(),
            ont.name(e.behavior),
            e.context.render(vocab)
        ));
    }
    out
}

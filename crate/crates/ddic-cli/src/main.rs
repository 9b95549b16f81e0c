//! `ddic` — command-line front end for the norm engine.
//!
//! Four subcommands: `check` runs a script's expectations, `query` asks for
//! one behavior's status, `repl` reads statements interactively, and
//! `conflicts` lists conflicting statement pairs.
//!
//! Exit codes: 0 all expectations hold, 1 at least one failed, 2 the input
//! could not be parsed or resolved, 3 the store carries a diagnostic and
//! `--strict` was given. Parse errors take precedence over failed
//! expectations, which take precedence over strict-mode diagnostics.

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddic_core::{
    parse_context, parse_script, query_status, scan_conflicts, store_diagnostics, ActionId,
    BeliefAtom, ConflictReport, ContextFormula, ContextVocab, DefeatRecord, DerivationTrace,
    Expectation, Ontology, Polarity, Script, StatusReport, TestimonyAtom, Time,
};
use serde_json::{json, Value};

/// All expectations hold (or the command has none to check).
const EXIT_OK: u8 = 0;
/// At least one expectation failed.
const EXIT_FAILED: u8 = 1;
/// The input could not be parsed, or a name could not be resolved.
const EXIT_ERROR: u8 = 2;
/// The store carries a diagnostic and `--strict` was given.
const EXIT_STRICT: u8 = 3;

#[derive(Parser)]
#[command(name = "ddic", version, about = "Defeasible deontic norm engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script and report which of its expectations hold.
    Check {
        /// Script to check.
        path: PathBuf,
        /// Fail (exit 3) when the store carries diagnostics, such as
        /// contradictory or simultaneously conflicting statements.
        #[arg(long)]
        strict: bool,
        /// Print the report as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Report one behavior's status under a context.
    Query {
        /// Script holding the declarations and statements.
        path: PathBuf,
        /// Behavior to ask about.
        behavior: String,
        /// Query context, e.g. "Monday & Morning" or "true".
        context: String,
        /// Query horizon (defaults to the latest stated timestamp).
        time: Option<Time>,
        /// Query horizon, as a flag.
        #[arg(long, conflicts_with = "time", value_name = "TIME")]
        at: Option<Time>,
        /// Show every rule application and every defeat.
        #[arg(long)]
        trace: bool,
        /// Print the report as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Read statements line by line and answer status questions.
    Repl {
        /// Script to preload before reading stdin.
        path: Option<PathBuf>,
    },
    /// List conflicting statement pairs in a script.
    Conflicts {
        /// Script to scan.
        path: PathBuf,
        /// Print the conflicts as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check { path, strict, json } => cmd_check(&path, strict, json),
        Command::Query { path, behavior, context, time, at, trace, json } => {
            cmd_query(&path, &behavior, &context, at.or(time), trace, json)
        }
        Command::Repl { path } => cmd_repl(path.as_deref()),
        Command::Conflicts { path, json } => cmd_conflicts(&path, json),
    };
    ExitCode::from(code)
}

/// Reads and parses a script, reporting failures on stderr.
fn load_script(path: &Path) -> Result<(String, Script), u8> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", path.display());
            return Err(EXIT_ERROR);
        }
    };
    match parse_script(&text) {
        Ok(script) => Ok((text, script)),
        Err(err) => {
            eprintln!("error: {}: {err}", path.display());
            Err(EXIT_ERROR)
        }
    }
}

fn cmd_check(path: &Path, strict: bool, as_json: bool) -> u8 {
    let (text, script) = match load_script(path) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    let store = script.to_store();
    let ont = script.ontology();
    let vocab = script.contexts();

    let mut query_reports = Vec::new();
    for query in script.queries() {
        match query_status(&store, query.behavior, &query.context, query.time) {
            Ok(report) => query_reports.push((query, report)),
            Err(err) => {
                eprintln!("error: {}: query failed: {err}", path.display());
                return EXIT_ERROR;
            }
        }
    }

    let lines = expectation_lines(&text);
    let mut results = Vec::new();
    for (index, expectation) in script.expectations().iter().enumerate() {
        let report = match query_status(
            &store,
            expectation.behavior,
            &expectation.context,
            expectation.time,
        ) {
            Ok(report) => report,
            Err(err) => {
                eprintln!("error: {}: expectation failed to evaluate: {err}", path.display());
                return EXIT_ERROR;
            }
        };
        let atom = expected_atom(expectation);
        let holds = report.beliefs.contains(&atom) == expectation.present;
        results.push((lines.get(index).copied().unwrap_or(0), expectation, atom, holds));
    }

    let diagnostics = store_diagnostics(&store);
    let conflicts = match scan_conflicts(&store) {
        Ok(conflicts) => conflicts,
        Err(err) => {
            eprintln!("error: {}: {err}", path.display());
            return EXIT_ERROR;
        }
    };

    let failed = results.iter().filter(|(_, _, _, holds)| !holds).count();
    if as_json {
        let payload = json!({
            "schema": 1,
            "ok": failed == 0,
            "expectations": results
                .iter()
                .map(|(line, expectation, _, holds)| {
                    expectation_json(*line, expectation, *holds, ont, vocab)
                })
                .collect::<Vec<_>>(),
            "queries": query_reports
                .iter()
                .map(|(query, report)| {
                    report_json(query.behavior, &query.context, query.time, report, ont, vocab)
                })
                .collect::<Vec<_>>(),
            "conflicts": conflicts
                .iter()
                .map(|conflict| conflict_json(conflict, ont, vocab))
                .collect::<Vec<_>>(),
            "diagnostics": diagnostics,
        });
        println!("{}", serde_json::to_string_pretty(&payload).expect("valid json"));
    } else {
        for (query, report) in &query_reports {
            println!(
                "query @{} ({}, {}): {}",
                query.time,
                ont.name(query.behavior),
                query.context.render(vocab),
                report.label
            );
        }
        for (line, expectation, atom, holds) in &results {
            if *holds {
                continue;
            }
            let rendered = atom.render(ont, vocab);
            if expectation.present {
                println!("line {line}: expected {rendered} to be derivable, but it is not");
            } else {
                println!("line {line}: expected {rendered} not to be derivable, but it is");
            }
        }
        for diagnostic in &diagnostics {
            println!("warning: {diagnostic}");
        }
        println!(
            "{}: {}/{} expectations hold",
            path.display(),
            results.len() - failed,
            results.len()
        );
    }

    if failed > 0 {
        EXIT_FAILED
    } else if strict && !diagnostics.is_empty() {
        EXIT_STRICT
    } else {
        EXIT_OK
    }
}

fn cmd_query(
    path: &Path,
    behavior: &str,
    context: &str,
    time: Option<Time>,
    trace: bool,
    as_json: bool,
) -> u8 {
    let (_, script) = match load_script(path) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    let store = script.to_store();
    let ont = script.ontology();
    let vocab = script.contexts();

    let Some(target) = ont.resolve(behavior) else {
        eprintln!("error: unknown action \"{behavior}\"");
        return EXIT_ERROR;
    };
    let delta = match parse_context(context, vocab) {
        Ok(delta) => delta,
        Err(err) => {
            eprintln!("error: context: {err}");
            return EXIT_ERROR;
        }
    };
    let horizon = time.or_else(|| store.max_time()).unwrap_or(0);

    let report = match query_status(&store, target, &delta, horizon) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_ERROR;
        }
    };
    let conflicts = match scan_conflicts(&store) {
        Ok(conflicts) => conflicts,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_ERROR;
        }
    };

    if as_json {
        let mut payload = report_json(target, &delta, horizon, &report, ont, vocab);
        let object = payload.as_object_mut().expect("report is an object");
        object.insert("schema".into(), json!(1));
        object.insert(
            "conflicts".into(),
            json!(conflicts
                .iter()
                .map(|conflict| conflict_json(conflict, ont, vocab))
                .collect::<Vec<_>>()),
        );
        println!("{}", serde_json::to_string_pretty(&payload).expect("valid json"));
    } else {
        println!("{}", report.label);
        for belief in &report.beliefs {
            println!("belief: {}", belief.render(ont, vocab));
        }
        for diagnostic in &report.diagnostics {
            println!("warning: {diagnostic}");
        }
        if trace {
            for item in &report.traces {
                print_trace(item, ont, vocab);
            }
        }
    }
    EXIT_OK
}

fn cmd_conflicts(path: &Path, as_json: bool) -> u8 {
    let (_, script) = match load_script(path) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    let store = script.to_store();
    let ont = script.ontology();
    let vocab = script.contexts();
    let conflicts = match scan_conflicts(&store) {
        Ok(conflicts) => conflicts,
        Err(err) => {
            eprintln!("error: {}: {err}", path.display());
            return EXIT_ERROR;
        }
    };
    if as_json {
        let payload = json!({
            "schema": 1,
            "conflicts": conflicts
                .iter()
                .map(|conflict| conflict_json(conflict, ont, vocab))
                .collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&payload).expect("valid json"));
    } else if conflicts.is_empty() {
        println!("no conflicts");
    } else {
        for conflict in &conflicts {
            println!("{}", conflict.render(ont, vocab));
        }
    }
    EXIT_OK
}

fn cmd_repl(seed: Option<&Path>) -> u8 {
    let mut buffer = String::new();
    if let Some(path) = seed {
        match load_script(path) {
            Ok((text, _)) => {
                buffer = text;
                if !buffer.is_empty() && !buffer.ends_with('\n') {
                    buffer.push('\n');
                }
            }
            Err(code) => return code,
        }
    }

    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("ddic> ");
            io::stdout().flush().ok();
        }
        let line = match lines.next() {
            Some(Ok(line)) => line,
            Some(Err(err)) => {
                eprintln!("error: stdin: {err}");
                return EXIT_ERROR;
            }
            None => return EXIT_OK,
        };
        let trimmed = line.trim();
        if trimmed == "quit" {
            return EXIT_OK;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            buffer.push_str(&line);
            buffer.push('\n');
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("status") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                answer_status(rest.trim(), &buffer);
                continue;
            }
        }

        let mut candidate = buffer.clone();
        candidate.push_str(&line);
        candidate.push('\n');
        match parse_script(&candidate) {
            Ok(script) => {
                buffer = candidate;
                if trimmed.starts_with("query") {
                    // The line just accepted is the script's last query.
                    if let Some(query) = script.queries().last() {
                        let store = script.to_store();
                        match query_status(&store, query.behavior, &query.context, query.time) {
                            Ok(report) => println!("{}", report.label),
                            Err(err) => eprintln!("error: {err}"),
                        }
                    }
                }
            }
            Err(err) => eprintln!("error: {err}"),
        }
    }
}

/// Answers a REPL `status <action>, <context>` question against everything
/// accepted so far, at the latest stated timestamp.
fn answer_status(request: &str, buffer: &str) {
    let Some((name, context)) = request.split_once(',') else {
        eprintln!("error: usage: status <action>, <context>");
        return;
    };
    // Accepted lines always re-parse; the grammar has no cross-line state.
    let script = match parse_script(buffer) {
        Ok(script) => script,
        Err(err) => {
            eprintln!("error: {err}");
            return;
        }
    };
    let Some(target) = script.ontology().resolve(name.trim()) else {
        eprintln!("error: unknown action \"{}\"", name.trim());
        return;
    };
    let delta = match parse_context(context.trim(), script.contexts()) {
        Ok(delta) => delta,
        Err(err) => {
            eprintln!("error: context: {err}");
            return;
        }
    };
    let store = script.to_store();
    let horizon = store.max_time().unwrap_or(0);
    match query_status(&store, target, &delta, horizon) {
        Ok(report) => println!("{}", report.label),
        Err(err) => eprintln!("error: {err}"),
    }
}

/// The belief atom an `expect` line claims is (or is not) derivable.
fn expected_atom(expectation: &Expectation) -> BeliefAtom {
    BeliefAtom {
        polarity: expectation.polarity,
        modal: expectation.modal,
        behavior: expectation.behavior,
        context: expectation.context.clone(),
        time: expectation.time,
    }
}

/// 1-based line numbers of the script's `expect` statements, in file order.
fn expectation_lines(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| {
            let rest = line.trim_start();
            rest.strip_prefix("expect")
                .is_some_and(|tail| tail.is_empty() || tail.starts_with(char::is_whitespace))
        })
        .map(|(index, _)| index + 1)
        .collect()
}

fn print_trace(trace: &DerivationTrace, ont: &Ontology, vocab: &ContextVocab) {
    let belief = trace.conclusion.belief().render(ont, vocab);
    let verdict = if trace.conclusion.is_derived() { "derived" } else { "blocked" };
    println!(
        "trace: {verdict} {belief} after checking {} candidate defeater{}",
        trace.candidates_checked,
        if trace.candidates_checked == 1 { "" } else { "s" }
    );
    for application in &trace.rule_applications {
        let premises = application
            .premises
            .iter()
            .map(|premise| premise.render(ont, vocab))
            .collect::<Vec<_>>()
            .join(", ");
        let mut line = format!("  {} from {premises}", application.rule);
        for condition in &application.side_conditions {
            line.push_str("; ");
            line.push_str(&condition.render(ont, vocab));
        }
        println!("{line}");
    }
    for defeat in &trace.defeats {
        println!("  defeated: {}", defeat.render(ont, vocab));
    }
}

fn polarity_json(polarity: Polarity) -> &'static str {
    match polarity {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
    }
}

fn belief_json(atom: &BeliefAtom, ont: &Ontology, vocab: &ContextVocab) -> Value {
    json!({
        "polarity": polarity_json(atom.polarity),
        "modal": atom.modal.belief_name(),
        "behavior": ont.name(atom.behavior),
        "context": atom.context.render(vocab),
        "time": atom.time,
    })
}

fn testimony_json(atom: &TestimonyAtom, ont: &Ontology, vocab: &ContextVocab) -> Value {
    json!({
        "polarity": polarity_json(atom.polarity),
        "modal": atom.modal.belief_name(),
        "behavior": ont.name(atom.behavior),
        "context": atom.context.render(vocab),
        "time": atom.time,
    })
}

fn defeat_json(defeat: &DefeatRecord, ont: &Ontology, vocab: &ContextVocab) -> Value {
    json!({
        "rule": defeat.rule.as_str(),
        "stated": testimony_json(&defeat.stated, ont, vocab),
        "defeater": testimony_json(&defeat.defeater, ont, vocab),
        "path": defeat
            .path_witness
            .iter()
            .map(|&id| ont.name(id))
            .collect::<Vec<_>>(),
        "window": {
            "stated": defeat.window.stated,
            "defeater": defeat.window.defeater,
            "query": defeat.window.query,
        },
    })
}

fn trace_json(trace: &DerivationTrace, ont: &Ontology, vocab: &ContextVocab) -> Value {
    json!({
        "derived": trace.conclusion.is_derived(),
        "belief": belief_json(trace.conclusion.belief(), ont, vocab),
        "rules": trace
            .rule_applications
            .iter()
            .map(|application| json!({
                "rule": application.rule.as_str(),
                "premises": application
                    .premises
                    .iter()
                    .map(|premise| premise.render(ont, vocab))
                    .collect::<Vec<_>>(),
                "conditions": application
                    .side_conditions
                    .iter()
                    .map(|condition| condition.render(ont, vocab))
                    .collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>(),
        "defeats": trace
            .defeats
            .iter()
            .map(|defeat| defeat_json(defeat, ont, vocab))
            .collect::<Vec<_>>(),
        "candidates_checked": trace.candidates_checked,
    })
}

fn conflict_json(conflict: &ConflictReport, ont: &Ontology, vocab: &ContextVocab) -> Value {
    json!({
        "kind": conflict.kind.as_str(),
        "genuine": conflict.genuine,
        "behavior": ont.name(conflict.shared_behavior),
        "context": conflict.shared_context.render(vocab),
        "first": testimony_json(&conflict.first, ont, vocab),
        "second": testimony_json(&conflict.second, ont, vocab),
        "note": conflict.note,
    })
}

fn report_json(
    behavior: ActionId,
    delta: &ContextFormula,
    horizon: Time,
    report: &StatusReport,
    ont: &Ontology,
    vocab: &ContextVocab,
) -> Value {
    json!({
        "behavior": ont.name(behavior),
        "context": delta.render(vocab),
        "time": horizon,
        "label": report.label.as_str(),
        "beliefs": report
            .beliefs
            .iter()
            .map(|belief| belief_json(belief, ont, vocab))
            .collect::<Vec<_>>(),
        "traces": report
            .traces
            .iter()
            .map(|trace| trace_json(trace, ont, vocab))
            .collect::<Vec<_>>(),
        "diagnostics": report.diagnostics,
    })
}

fn expectation_json(
    line: usize,
    expectation: &Expectation,
    holds: bool,
    ont: &Ontology,
    vocab: &ContextVocab,
) -> Value {
    json!({
        "line": line,
        "holds": holds,
        "present": expectation.present,
        "polarity": polarity_json(expectation.polarity),
        "modal": expectation.modal.belief_name(),
        "behavior": ont.name(expectation.behavior),
        "context": expectation.context.render(vocab),
        "time": expectation.time,
    })
}

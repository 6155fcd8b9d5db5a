//! Explicit-state LTL model checking of AIGER circuits.
//!
//! A circuit satisfies a specification when every trace through it satisfies
//! the specification formula. The checker builds a Büchi automaton for the
//! negated property, takes its product with the circuit's reachable state
//! space, and searches the product for an accepting lasso with nested DFS.

mod brute;
mod buchi;
mod ndfs;
mod ts;

pub use brute::{brute_force_check, enumerate_lassos, BruteBounds, CircuitLasso, LassoOracle};
pub use buchi::{ltl_to_buchi, BuchiAutomaton, BuchiState};
pub use ndfs::{find_accepting_lasso, ExplicitGraph, GraphLasso};
pub use ts::{circuit_to_ts, resolve_atoms, AtomSource, Role, TransitionSystem, MAX_ENUM_INPUTS};

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write as _;
use std::process::Command;

use thiserror::Error;

use crate::aiger::{parse_aiger, validate, AigerCircuit, ParseMode, Simulator, ValidationReport};
use crate::ltl::{LassoTrace, Ltl, Specification};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("atom resolution failed: {0}")]
    AtomResolution(String),
    #[error("product state space exceeds {limit} states")]
    StateCap { limit: usize },
    #[error("Büchi automaton exceeds {limit} states")]
    BuchiCap { limit: usize },
    #[error("too many atoms: {0}")]
    TooManyAtoms(usize),
    #[error("circuit has too many inputs, latches or outputs to enumerate")]
    CircuitTooLarge,
    #[error("invalid circuit: {0}")]
    Circuit(String),
    #[error("brute-force bounds exceeded: {0}")]
    Bounds(String),
    #[error("external checker: {0}")]
    External(String),
}

impl CheckError {
    /// Resource caps as opposed to input problems.
    pub fn is_cap(&self) -> bool {
        matches!(self, CheckError::StateCap { .. } | CheckError::BuchiCap { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    pub max_buchi_states: usize,
    pub max_product_states: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { max_buchi_states: 1 << 16, max_product_states: 1 << 20 }
    }
}

/// A violating trace of a circuit, with the circuit input bits that drive
/// it (bit `k` = circuit input `k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Over the specification alphabet, inputs first.
    pub trace: LassoTrace,
    pub inputs_prefix: Vec<u64>,
    pub inputs_loop: Vec<u64>,
}

impl Counterexample {
    /// Replays the input bits through the circuit and checks that the
    /// produced letters equal the trace and that the loop returns to the
    /// latch state it started in.
    pub fn replays_on(&self, circuit: &AigerCircuit, sources: &[AtomSource]) -> bool {
        let Ok(sim) = Simulator::new(circuit) else { return false };
        let letter_of = |out: u64, x: u64| -> Vec<bool> {
            sources
                .iter()
                .map(|src| match *src {
                    AtomSource::Input(j) => x >> j & 1 == 1,
                    AtomSource::Output(j) => out >> j & 1 == 1,
                })
                .collect()
        };
        let mut state = 0u64;
        for (x, step) in self.inputs_prefix.iter().zip(self.trace.prefix()) {
            let (out, next) = sim.step_bits(state, *x);
            if &letter_of(out, *x) != step {
                return false;
            }
            state = next;
        }
        let loop_start = state;
        for (x, step) in self.inputs_loop.iter().zip(self.trace.cycle()) {
            let (out, next) = sim.step_bits(state, *x);
            if &letter_of(out, *x) != step {
                return false;
            }
            state = next;
        }
        self.inputs_prefix.len() == self.trace.prefix().len()
            && self.inputs_loop.len() == self.trace.cycle().len()
            && state == loop_start
    }
}

/// Problem that makes a circuit unusable for checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxIssue {
    pub message: String,
    pub report: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictKind {
    Match,
    Satisfied,
    Violated,
    SyntaxError,
}

/// Outcome of checking a circuit. `Match` is never produced by the checker
/// itself; it is decided by comparing against a target circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Match,
    Satisfied,
    Violated(Counterexample),
    SyntaxError(SyntaxIssue),
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Match => VerdictKind::Match,
            Verdict::Satisfied => VerdictKind::Satisfied,
            Verdict::Violated(_) => VerdictKind::Violated,
            Verdict::SyntaxError(_) => VerdictKind::SyntaxError,
        }
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, Verdict::Satisfied | Verdict::Match)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Match => write!(f, "MATCH"),
            Verdict::Satisfied => write!(f, "SATISFIED"),
            Verdict::Violated(cex) => write!(f, "VIOLATED\n{}", cex.trace),
            Verdict::SyntaxError(issue) => write!(f, "SYNTAX_ERROR\n{}", issue.message),
        }
    }
}

/// Formula and role under which a circuit is checked against `spec`:
/// realizable specifications are implemented, unrealizable ones refuted by
/// a counter-strategy that must force the negated formula.
pub fn property_for(spec: &Specification, formula: Ltl) -> (Ltl, Role) {
    if spec.presumed_realizable {
        (formula, Role::System)
    } else {
        (Ltl::not(formula), Role::CounterStrategy)
    }
}

/// Checks `circuit` against `spec`.
pub fn check(circuit: &AigerCircuit, spec: &Specification) -> Result<Verdict, CheckError> {
    check_with(circuit, spec, &CheckConfig::default())
}

pub fn check_with(circuit: &AigerCircuit, spec: &Specification, config: &CheckConfig) -> Result<Verdict, CheckError> {
    let (formula, role) = property_for(spec, spec.to_formula());
    check_formula(circuit, spec, &formula, role, config)
}

/// Parses `text` leniently and checks it; unparseable or strict-invalid
/// text yields `SyntaxError`.
pub fn check_text(text: &str, spec: &Specification, config: &CheckConfig) -> Result<Verdict, CheckError> {
    match parse_aiger(text, ParseMode::Lenient) {
        Ok(c) => check_with(&c, spec, config),
        Err(e) => Ok(Verdict::SyntaxError(SyntaxIssue { message: e.to_string(), report: None })),
    }
}

/// Checks whether every trace of `circuit` satisfies `formula`, whose atoms
/// are the specification's atoms mapped onto the circuit per `role`.
pub fn check_formula(
    circuit: &AigerCircuit,
    spec: &Specification,
    formula: &Ltl,
    role: Role,
    config: &CheckConfig,
) -> Result<Verdict, CheckError> {
    let report = validate(circuit);
    if !report.valid_strict {
        let message = report.defects.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Ok(Verdict::SyntaxError(SyntaxIssue { message, report: Some(report) }));
    }
    let sources = resolve_atoms(spec, circuit, role)?;
    let alphabet = spec.alphabet();
    let ts = circuit_to_ts(circuit, &sources, config.max_product_states)?;
    let negated = ltl_to_buchi(&Ltl::not(formula.clone()), &alphabet, config.max_buchi_states)?;
    match find_violation(&ts, &negated, config.max_product_states)? {
        None => Ok(Verdict::Satisfied),
        Some((prefix, cycle)) => {
            let to_step = |letter: u64| (0..alphabet.len()).map(|k| letter >> k & 1 == 1).collect::<Vec<bool>>();
            let trace = LassoTrace::new(
                alphabet.clone(),
                prefix.iter().map(|e| to_step(e.0)).collect(),
                cycle.iter().map(|e| to_step(e.0)).collect(),
            )
            .expect("cycle is nonempty");
            Ok(Verdict::Violated(Counterexample {
                trace,
                inputs_prefix: prefix.iter().map(|e| e.1).collect(),
                inputs_loop: cycle.iter().map(|e| e.1).collect(),
            }))
        }
    }
}

type Edge = (u64, u64); // (letter, circuit input bits)

/// Product of the transition system with the automaton; returns the letters
/// of an accepting lasso if one exists.
fn find_violation(
    ts: &TransitionSystem,
    aut: &BuchiAutomaton,
    max_states: usize,
) -> Result<Option<(Vec<Edge>, Vec<Edge>)>, CheckError> {
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut graph: ExplicitGraph<Edge> = ExplicitGraph { succ: Vec::new(), accepting: Vec::new(), initial: Vec::new() };
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, usize), nodes: &mut Vec<(usize, usize)>, graph: &mut ExplicitGraph<Edge>, queue: &mut VecDeque<usize>| -> Result<usize, CheckError> {
        if let Some(&id) = ids.get(&key) {
            return Ok(id);
        }
        if nodes.len() >= max_states {
            return Err(CheckError::StateCap { limit: max_states });
        }
        let id = nodes.len();
        nodes.push(key);
        graph.succ.push(Vec::new());
        graph.accepting.push(aut.states[key.1].accepting);
        ids.insert(key, id);
        queue.push_back(id);
        Ok(id)
    };
    for &q in &aut.initial {
        let id = intern((0, q), &mut nodes, &mut graph, &mut queue)?;
        graph.initial.push(id);
    }
    while let Some(id) = queue.pop_front() {
        let (s, q) = nodes[id];
        let state = &aut.states[q];
        let mut out = Vec::new();
        for (x, &(letter, s2)) in ts.transitions[s].iter().enumerate() {
            if !state.admits(letter) {
                continue;
            }
            for &q2 in &state.succ {
                let target = intern((s2, q2), &mut nodes, &mut graph, &mut queue)?;
                out.push((target, (letter, x as u64)));
            }
        }
        graph.succ[id] = out;
    }
    Ok(find_accepting_lasso(&graph).map(|l| {
        (
            l.prefix.into_iter().map(|(_, e)| e).collect(),
            l.cycle.into_iter().map(|(_, e)| e).collect(),
        )
    }))
}

/// Number of sub-specifications `(∧ assumptions) → g_i` the circuit
/// satisfies; strict-invalid circuits score 0.
pub fn count_satisfied_subspecs(circuit: &AigerCircuit, spec: &Specification) -> Result<usize, CheckError> {
    count_satisfied_subspecs_with(circuit, spec, &CheckConfig::default())
}

pub fn count_satisfied_subspecs_with(
    circuit: &AigerCircuit,
    spec: &Specification,
    config: &CheckConfig,
) -> Result<usize, CheckError> {
    if !validate(circuit).valid_strict {
        return Ok(0);
    }
    let mut count = 0;
    for sub in spec.subspecs() {
        let (formula, role) = property_for(spec, sub);
        if check_formula(circuit, spec, &formula, role, config)?.is_satisfied() {
            count += 1;
        }
    }
    Ok(count)
}

/// Environment variable naming an external checker command. The command is
/// invoked with the path of a combined model file (circuit, then the
/// specification in the comment section) and must print `SAT` or `UNSAT`.
pub const EXTERNAL_CHECKER_ENV: &str = "CIRCUIT_REPAIR_EXTERNAL_CHECKER";

/// Combined model file handed to an external checker.
pub fn combined_model_file(circuit: &AigerCircuit, spec: &Specification) -> String {
    let (formula, role) = property_for(spec, spec.to_formula());
    let mut text = circuit.serialize(true);
    text.push_str("c\n");
    text.push_str(&spec.to_text());
    text.push_str(&format!(
        "ROLE\n{}\nFORMULA\n{}\n",
        if role == Role::System { "system" } else { "counter_strategy" },
        formula
    ));
    text
}

/// Runs the external checker named by [`EXTERNAL_CHECKER_ENV`]. Returns
/// `Ok(None)` when the variable is unset; `Some(true)` means SAT.
pub fn check_external(circuit: &AigerCircuit, spec: &Specification) -> Result<Option<bool>, CheckError> {
    let Ok(cmd) = std::env::var(EXTERNAL_CHECKER_ENV) else { return Ok(None) };
    if cmd.trim().is_empty() {
        return Ok(None);
    }
    let path = std::env::temp_dir().join(format!("circuit-repair-{}.model", std::process::id()));
    let mut file = std::fs::File::create(&path).map_err(|e| CheckError::External(e.to_string()))?;
    file.write_all(combined_model_file(circuit, spec).as_bytes())
        .map_err(|e| CheckError::External(e.to_string()))?;
    drop(file);
    let mut parts = cmd.split_whitespace();
    let program = parts.next().expect("nonempty");
    let output = Command::new(program)
        .args(parts)
        .arg(&path)
        .output()
        .map_err(|e| CheckError::External(e.to_string()));
    let _ = std::fs::remove_file(&path);
    let output = output?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    match stdout.split_whitespace().last() {
        Some("SAT") => Ok(Some(true)),
        Some("UNSAT") => Ok(Some(false)),
        other => Err(CheckError::External(format!("unexpected checker output {other:?}"))),
    }
}

use std::collections::{HashMap, VecDeque};

use crate::aiger::{AigerCircuit, Simulator, SymbolKind};
use crate::ltl::Specification;

use super::CheckError;

/// Whether a circuit implements the system or a counter-strategy of the
/// environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Circuit inputs carry the specification inputs, outputs the outputs.
    System,
    /// Roles swapped: the circuit reads the system's outputs and drives the
    /// specification inputs.
    CounterStrategy,
}

/// Where a specification atom gets its value in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomSource {
    Input(usize),
    Output(usize),
}

/// Maps every specification atom (inputs then outputs) onto a circuit input
/// or output. Symbol-table names win; otherwise the `k`-th specification
/// atom of a kind maps to the `k`-th circuit port of that kind.
pub fn resolve_atoms(spec: &Specification, circuit: &AigerCircuit, role: Role) -> Result<Vec<AtomSource>, CheckError> {
    let lookup = |name: &str, pos: usize, kind: SymbolKind| -> Result<AtomSource, CheckError> {
        let len = match kind {
            SymbolKind::Input => circuit.inputs.len(),
            _ => circuit.outputs.len(),
        };
        let named = circuit
            .symbols
            .iter()
            .find(|((k, idx), n)| *k == kind && n.as_str() == name && *idx < len)
            .map(|((_, idx), _)| *idx);
        let idx = match named {
            Some(i) => i,
            None if pos < len => pos,
            None => {
                return Err(CheckError::AtomResolution(format!(
                    "atom '{name}' has no matching circuit {} (circuit has {len})",
                    if kind == SymbolKind::Input { "input" } else { "output" }
                )))
            }
        };
        Ok(match kind {
            SymbolKind::Input => AtomSource::Input(idx),
            _ => AtomSource::Output(idx),
        })
    };
    let (in_kind, out_kind) = match role {
        Role::System => (SymbolKind::Input, SymbolKind::Output),
        Role::CounterStrategy => (SymbolKind::Output, SymbolKind::Input),
    };
    let mut out = Vec::new();
    for (k, name) in spec.inputs.iter().enumerate() {
        out.push(lookup(name, k, in_kind)?);
    }
    for (k, name) in spec.outputs.iter().enumerate() {
        out.push(lookup(name, k, out_kind)?);
    }
    Ok(out)
}

/// Maximum number of circuit inputs whose assignments are enumerated.
pub const MAX_ENUM_INPUTS: usize = 16;

/// The Mealy-style transition system of a circuit: states are reachable
/// latch valuations, and each (state, input assignment) pair is one
/// transition labeled with the letter over the mapped atoms.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    /// Latch valuations, bit `k` = latch `k`. Index 0 is the all-false
    /// initial state.
    pub states: Vec<u64>,
    /// Per state, per input assignment: (letter, successor state index).
    pub transitions: Vec<Vec<(u64, usize)>>,
    pub num_inputs: usize,
}

impl TransitionSystem {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }
}

/// Builds the reachable transition system of a strict-valid circuit.
/// Letters are bitmasks over `sources` (bit `k` = atom `k`).
pub fn circuit_to_ts(
    circuit: &AigerCircuit,
    sources: &[AtomSource],
    max_states: usize,
) -> Result<TransitionSystem, CheckError> {
    let sim = Simulator::new(circuit).map_err(|e| CheckError::Circuit(e.to_string()))?;
    if sim.num_inputs() > MAX_ENUM_INPUTS || sim.num_latches() > 64 || sim.num_outputs() > 64 {
        return Err(CheckError::CircuitTooLarge);
    }
    let num_inputs = sim.num_inputs();
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut states = vec![0u64];
    index.insert(0, 0);
    let mut transitions: Vec<Vec<(u64, usize)>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(si) = queue.pop_front() {
        let s = states[si];
        let mut row = Vec::with_capacity(1 << num_inputs);
        for x in 0..(1u64 << num_inputs) {
            let (out, next) = sim.step_bits(s, x);
            let letter = sources.iter().enumerate().fold(0u64, |acc, (k, src)| {
                let bit = match *src {
                    AtomSource::Input(j) => x >> j & 1,
                    AtomSource::Output(j) => out >> j & 1,
                };
                acc | (bit << k)
            });
            let ni = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if states.len() >= max_states {
                        return Err(CheckError::StateCap { limit: max_states });
                    }
                    states.push(next);
                    index.insert(next, states.len() - 1);
                    queue.push_back(states.len() - 1);
                    states.len() - 1
                }
            };
            row.push((letter, ni));
        }
        if transitions.len() <= si {
            transitions.resize(si + 1, Vec::new());
        }
        transitions[si] = row;
    }
    transitions.resize(states.len(), Vec::new());
    Ok(TransitionSystem { states, transitions, num_inputs })
}

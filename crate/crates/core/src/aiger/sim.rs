use super::circuit::{AigerCircuit, Literal};
use super::validate::validate;
use super::AigerError;

/// A strict-valid circuit prepared for repeated evaluation: AND gates in
/// topological order over a dense variable table.
#[derive(Debug, Clone)]
pub struct Simulator {
    num_vars: usize,
    inputs: Vec<u32>,
    latch_out: Vec<u32>,
    latch_next: Vec<Literal>,
    outputs: Vec<Literal>,
    /// (out var, in1, in2) in evaluation order.
    gates: Vec<(u32, Literal, Literal)>,
}

impl Simulator {
    pub fn new(circuit: &AigerCircuit) -> Result<Self, AigerError> {
        let report = validate(circuit);
        if let Some(d) = report.defects.into_iter().next() {
            return Err(AigerError::Invalid(d));
        }
        let num_vars = circuit.header_max_var() as usize + 1;
        // gate index by defined var
        let mut gate_of = vec![usize::MAX; num_vars];
        for (i, a) in circuit.ands.iter().enumerate() {
            gate_of[a.out.var() as usize] = i;
        }
        let mut order = Vec::with_capacity(circuit.ands.len());
        let mut placed = vec![false; circuit.ands.len()];
        for root in 0..circuit.ands.len() {
            let mut stack = vec![(root, false)];
            while let Some((g, expanded)) = stack.pop() {
                if placed[g] {
                    continue;
                }
                if expanded {
                    placed[g] = true;
                    order.push(g);
                    continue;
                }
                stack.push((g, true));
                let a = circuit.ands[g];
                for lit in [a.in2, a.in1] {
                    let dep = gate_of[lit.var() as usize];
                    if dep != usize::MAX && !placed[dep] {
                        stack.push((dep, false));
                    }
                }
            }
        }
        Ok(Simulator {
            num_vars,
            inputs: circuit.inputs.iter().map(|l| l.var()).collect(),
            latch_out: circuit.latches.iter().map(|l| l.out.var()).collect(),
            latch_next: circuit.latches.iter().map(|l| l.next).collect(),
            outputs: circuit.outputs.clone(),
            gates: order
                .into_iter()
                .map(|g| {
                    let a = circuit.ands[g];
                    (a.out.var(), a.in1, a.in2)
                })
                .collect(),
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_latches(&self) -> usize {
        self.latch_out.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// All-false latch state.
    pub fn initial_state(&self) -> Vec<bool> {
        vec![false; self.latch_out.len()]
    }

    /// One clock cycle: returns the output values under `state` and
    /// `inputs`, and the latch state of the next cycle.
    pub fn step(&self, state: &[bool], inputs: &[bool]) -> (Vec<bool>, Vec<bool>) {
        assert_eq!(state.len(), self.latch_out.len(), "state width");
        assert_eq!(inputs.len(), self.inputs.len(), "input width");
        let mut vals = vec![false; self.num_vars];
        for (v, &b) in self.inputs.iter().zip(inputs) {
            vals[*v as usize] = b;
        }
        for (v, &b) in self.latch_out.iter().zip(state) {
            vals[*v as usize] = b;
        }
        let lit = |vals: &[bool], l: Literal| vals[l.var() as usize] ^ l.is_negated();
        for &(out, a, b) in &self.gates {
            vals[out as usize] = lit(&vals, a) && lit(&vals, b);
        }
        let outputs = self.outputs.iter().map(|&l| lit(&vals, l)).collect();
        let next = self.latch_next.iter().map(|&l| lit(&vals, l)).collect();
        (outputs, next)
    }

    /// Bit-packed [`Simulator::step`]: bit `k` of `state`/`inputs`/outputs is
    /// latch/input/output `k`. Requires at most 64 of each.
    pub fn step_bits(&self, state: u64, inputs: u64) -> (u64, u64) {
        let mut vals = vec![false; self.num_vars];
        for (k, v) in self.inputs.iter().enumerate() {
            vals[*v as usize] = inputs >> k & 1 == 1;
        }
        for (k, v) in self.latch_out.iter().enumerate() {
            vals[*v as usize] = state >> k & 1 == 1;
        }
        let lit = |vals: &[bool], l: Literal| vals[l.var() as usize] ^ l.is_negated();
        for &(out, a, b) in &self.gates {
            vals[out as usize] = lit(&vals, a) && lit(&vals, b);
        }
        let pack = |ls: &[Literal]| {
            ls.iter().enumerate().fold(0u64, |acc, (k, &l)| acc | (u64::from(lit(&vals, l)) << k))
        };
        (pack(&self.outputs), pack(&self.latch_next))
    }

    /// Runs from the initial state over `inputs`, returning outputs per step.
    pub fn run(&self, inputs: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let mut state = self.initial_state();
        inputs
            .iter()
            .map(|x| {
                let (out, next) = self.step(&state, x);
                state = next;
                out
            })
            .collect()
    }
}

/// One step of `circuit`; see [`Simulator::step`].
pub fn simulate_step(
    circuit: &AigerCircuit,
    state: &[bool],
    inputs: &[bool],
) -> Result<(Vec<bool>, Vec<bool>), AigerError> {
    Ok(Simulator::new(circuit)?.step(state, inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::circuit::{AndGate, Latch};

    #[test]
    fn constant_true_output() {
        let c = AigerCircuit::new(vec![], vec![], vec![Literal::TRUE], vec![]);
        let sim = Simulator::new(&c).unwrap();
        assert!(sim.run(&vec![vec![]; 5]).iter().all(|o| o == &vec![true]));
    }

    #[test]
    fn toggle_latch() {
        let c = AigerCircuit::new(vec![], vec![Latch { out: Literal(2), next: Literal(3) }], vec![Literal(2)], vec![]);
        let sim = Simulator::new(&c).unwrap();
        let outs: Vec<bool> = sim.run(&vec![vec![]; 4]).into_iter().map(|o| o[0]).collect();
        assert_eq!(outs, vec![false, true, false, true]);
    }

    #[test]
    fn gates_out_of_order() {
        // 8 = 6 & 2 listed before 6 = 2 & 4
        let c = AigerCircuit::new(
            vec![Literal(2), Literal(4)],
            vec![],
            vec![Literal(8), Literal(9)],
            vec![
                AndGate { out: Literal(8), in1: Literal(6), in2: Literal(2) },
                AndGate { out: Literal(6), in1: Literal(2), in2: Literal(4) },
            ],
        );
        let sim = Simulator::new(&c).unwrap();
        assert_eq!(sim.step(&[], &[true, true]).0, vec![true, false]);
        assert_eq!(sim.step(&[], &[true, false]).0, vec![false, true]);
        assert_eq!(sim.step_bits(0, 0b11).0, 0b01);
    }
}

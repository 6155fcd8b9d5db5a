//! Small synthetic specifications with known implementations.
//!
//! Every output follows one pattern over the inputs (copy, negation,
//! conjunction, disjunction or one-step delay), stated as a single
//! guarantee. The implementing circuit is built deterministically from the
//! patterns, so equal specifications always get equal circuits.

use rand::Rng;

use crate::aiger::{AigerCircuit, AndGate, Latch, Literal};
use crate::ltl::{parse_ltl, Ltl, Specification};
use crate::rng::sample_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Copy(usize),
    Negate(usize),
    And(usize, usize),
    Or(usize, usize),
    Delay(usize),
}

impl Pattern {
    fn guarantee(self, out: usize) -> Ltl {
        let text = match self {
            Pattern::Copy(k) => format!("G (o{out} <-> i{k})"),
            Pattern::Negate(k) => format!("G (o{out} <-> !i{k})"),
            Pattern::And(k, l) => format!("G (o{out} <-> (i{k} & i{l}))"),
            Pattern::Or(k, l) => format!("G (o{out} <-> (i{k} | i{l}))"),
            Pattern::Delay(k) => format!("G ((X o{out}) <-> i{k})"),
        };
        parse_ltl(&text, None).expect("pattern text parses")
    }

    fn all(inputs: usize) -> Vec<Pattern> {
        let mut out = Vec::new();
        for k in 0..inputs {
            out.extend([Pattern::Copy(k), Pattern::Negate(k), Pattern::Delay(k)]);
            for l in k + 1..inputs {
                out.extend([Pattern::And(k, l), Pattern::Or(k, l)]);
            }
        }
        out
    }
}

/// A toy specification: input/output counts, one pattern per output and an
/// optional fairness assumption on `i0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ToySpec {
    pub inputs: usize,
    pub patterns: Vec<Pattern>,
    pub assume_fair: bool,
}

impl ToySpec {
    pub fn specification(&self) -> Specification {
        let assumptions = if self.assume_fair { vec![parse_ltl("G (F i0)", None).unwrap()] } else { vec![] };
        Specification::new(
            (0..self.inputs).map(|k| format!("i{k}")).collect(),
            (0..self.patterns.len()).map(|k| format!("o{k}")).collect(),
            assumptions,
            self.patterns.iter().enumerate().map(|(j, p)| p.guarantee(j)).collect(),
            true,
        )
        .expect("toy atoms are declared")
    }

    /// Inputs take variables `1..=I`, then one latch per delayed output,
    /// then one AND gate per conjunction or disjunction, in output order.
    pub fn circuit(&self) -> AigerCircuit {
        let input = |k: usize| Literal::from_var(k as u32 + 1, false);
        let mut next_var = self.inputs as u32 + 1;
        let mut latches = Vec::new();
        let mut latch_of = vec![None; self.patterns.len()];
        for (j, p) in self.patterns.iter().enumerate() {
            if let Pattern::Delay(k) = *p {
                let out = Literal::from_var(next_var, false);
                next_var += 1;
                latches.push(Latch { out, next: input(k) });
                latch_of[j] = Some(out);
            }
        }
        let mut ands = Vec::new();
        let mut outputs = Vec::new();
        for (j, p) in self.patterns.iter().enumerate() {
            let lit = match *p {
                Pattern::Copy(k) => input(k),
                Pattern::Negate(k) => input(k).negate(),
                Pattern::Delay(_) => latch_of[j].unwrap(),
                Pattern::And(k, l) | Pattern::Or(k, l) => {
                    let out = Literal::from_var(next_var, false);
                    next_var += 1;
                    if matches!(p, Pattern::And(..)) {
                        ands.push(AndGate { out, in1: input(k), in2: input(l) });
                        out
                    } else {
                        ands.push(AndGate { out, in1: input(k).negate(), in2: input(l).negate() });
                        out.negate()
                    }
                }
            };
            outputs.push(lit);
        }
        AigerCircuit::new((0..self.inputs).map(input).collect(), latches, outputs, ands)
    }
}

/// Draws a toy specification with 1 to 3 inputs and 1 to 2 outputs.
pub fn random_toy_spec<R: Rng + ?Sized>(rng: &mut R) -> ToySpec {
    let inputs = rng.gen_range(1..=3);
    let outputs = rng.gen_range(1..=2);
    let choices = Pattern::all(inputs);
    ToySpec {
        inputs,
        patterns: (0..outputs).map(|_| choices[rng.gen_range(0..choices.len())]).collect(),
        assume_fair: rng.gen_bool(0.3),
    }
}

/// `count` distinct toy (specification, circuit) pairs.
pub fn toy_corpus(count: usize, seed: u64) -> Vec<(Specification, AigerCircuit)> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut i = 0u64;
    // the pattern space holds several hundred specifications
    while out.len() < count && i < 100 * count as u64 + 1000 {
        let toy = random_toy_spec(&mut sample_rng(seed, i));
        i += 1;
        if seen.insert(toy.clone()) {
            out.push((toy.specification(), toy.circuit()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::validate;
    use crate::check::check;

    #[test]
    fn toy_circuits_are_correct() {
        for (spec, circuit) in toy_corpus(60, 1) {
            assert!(validate(&circuit).valid_strict);
            assert!(check(&circuit, &spec).unwrap().is_satisfied(), "{}\n{}", spec.to_text(), circuit);
            assert_eq!(circuit.inputs.len(), spec.inputs.len());
            assert_eq!(circuit.outputs.len(), spec.outputs.len());
        }
    }

    #[test]
    fn corpus_is_deterministic_and_distinct() {
        let a = toy_corpus(200, 7);
        assert_eq!(a.len(), 200);
        assert_eq!(a, toy_corpus(200, 7));
        let texts: std::collections::HashSet<String> = a.iter().map(|(s, _)| s.to_text()).collect();
        assert_eq!(texts.len(), 200);
    }
}

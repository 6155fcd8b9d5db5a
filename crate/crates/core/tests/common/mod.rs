#![allow(dead_code)]

use circuit_repair::aiger::{AigerCircuit, AndGate, Latch, Literal};
use circuit_repair::ltl::{Ltl, LtlOp, Specification};
use rand::Rng;

pub fn leaf(name: &str) -> Ltl {
    match name {
        "true" => Ltl::True,
        "false" => Ltl::False,
        a => Ltl::atom(a),
    }
}

/// Every formula with exactly `size` nodes over the given leaves.
pub fn formulas_of_size(size: usize, leaves: &[&str], memo: &mut Vec<Vec<Ltl>>) -> Vec<Ltl> {
    while memo.len() <= size {
        let n = memo.len();
        let mut out = Vec::new();
        if n == 1 {
            out.extend(leaves.iter().map(|l| leaf(l)));
        } else if n >= 2 {
            for op in LtlOp::ALL_UNARY {
                for c in &memo[n - 1] {
                    out.push(Ltl::from_op(op, vec![c.clone()]));
                }
            }
            for left in 1..n - 1 {
                let right = n - 1 - left;
                for op in LtlOp::ALL_BINARY {
                    for a in &memo[left] {
                        for b in &memo[right] {
                            out.push(Ltl::from_op(op, vec![a.clone(), b.clone()]));
                        }
                    }
                }
            }
        }
        memo.push(out);
    }
    memo[size].clone()
}

/// Random formula with roughly `size` nodes.
pub fn random_formula<R: Rng>(rng: &mut R, size: usize, leaves: &[&str]) -> Ltl {
    if size <= 1 {
        return leaf(leaves[rng.gen_range(0..leaves.len())]);
    }
    if size == 2 || rng.gen_bool(0.3) {
        let op = LtlOp::ALL_UNARY[rng.gen_range(0..4)];
        return Ltl::from_op(op, vec![random_formula(rng, size - 1, leaves)]);
    }
    let left = rng.gen_range(1..size - 1);
    let op = LtlOp::ALL_BINARY[rng.gen_range(0..6)];
    Ltl::from_op(
        op,
        vec![random_formula(rng, left, leaves), random_formula(rng, size - 1 - left, leaves)],
    )
}

fn random_literal<R: Rng>(rng: &mut R, max_var: u32) -> Literal {
    Literal::from_var(rng.gen_range(0..=max_var), rng.gen_bool(0.5))
}

/// Random strict-valid circuit: inputs, then latches, then AND gates, each
/// gate reading only earlier variables.
pub fn random_circuit<R: Rng>(rng: &mut R, inputs: usize, latches: usize, outputs: usize, ands: usize) -> AigerCircuit {
    let (i, l, a) = (inputs as u32, latches as u32, ands as u32);
    let input_lits = (1..=i).map(|v| Literal::from_var(v, false)).collect();
    let all = i + l + a;
    let latch_list = (0..l)
        .map(|k| Latch { out: Literal::from_var(i + 1 + k, false), next: random_literal(rng, all) })
        .collect();
    let and_list = (0..a)
        .map(|k| {
            let v = i + l + 1 + k;
            AndGate {
                out: Literal::from_var(v, false),
                in1: random_literal(rng, v - 1),
                in2: random_literal(rng, v - 1),
            }
        })
        .collect();
    let outs = (0..outputs).map(|_| random_literal(rng, all)).collect();
    AigerCircuit::new(input_lits, latch_list, outs, and_list)
}

pub fn io_spec(inputs: usize, outputs: usize, guarantees: Vec<Ltl>) -> Specification {
    Specification::new(
        (0..inputs).map(|k| format!("i{k}")).collect(),
        (0..outputs).map(|k| format!("o{k}")).collect(),
        vec![],
        guarantees,
        true,
    )
    .unwrap()
}

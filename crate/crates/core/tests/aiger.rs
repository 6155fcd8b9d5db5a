mod common;

use circuit_repair::aiger::{arbiter, parse_aiger, validate, AigerCircuit, Literal, ParseMode, Simulator};
use circuit_repair::rng::seeded;
use common::random_circuit;
use rand::Rng;

/// Value of a literal by recursive descent through the AND gates.
fn value(c: &AigerCircuit, lit: Literal, inputs: &[bool], state: &[bool]) -> bool {
    let v = lit.var();
    let raw = if v == 0 {
        false
    } else if let Some(k) = c.inputs.iter().position(|l| l.var() == v) {
        inputs[k]
    } else if let Some(k) = c.latches.iter().position(|l| l.out.var() == v) {
        state[k]
    } else {
        let g = c.ands.iter().find(|g| g.out.var() == v).expect("defined variable");
        value(c, g.in1, inputs, state) && value(c, g.in2, inputs, state)
    };
    raw ^ lit.is_negated()
}

#[test]
fn random_circuits_round_trip() {
    let mut rng = seeded(11);
    for _ in 0..1000 {
        let (i, l, o, a) = (rng.gen_range(0..6), rng.gen_range(0..5), rng.gen_range(0..6), rng.gen_range(0..15));
        let c = random_circuit(&mut rng, i, l, o, a);
        let text = c.serialize(false);
        let back = parse_aiger(&text, ParseMode::Strict).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.serialize(false), text);
        assert!(validate(&back).valid_strict);
    }
}

#[test]
fn arbiter_circuits_are_canonical() {
    for text in [arbiter::FAULTY, arbiter::PARTIAL, arbiter::CORRECT] {
        let c = parse_aiger(text, ParseMode::Strict).unwrap();
        assert_eq!(c.serialize(false), text);
        assert_eq!((c.inputs.len(), c.latches.len(), c.outputs.len()), (5, 2, 5));
    }
}

#[test]
fn simulation_matches_gate_semantics() {
    let mut rng = seeded(12);
    for _ in 0..200 {
        let (i, l, a) = (rng.gen_range(1..4), rng.gen_range(0..4), rng.gen_range(0..10));
        let c = random_circuit(&mut rng, i, l, 3, a);
        let sim = Simulator::new(&c).unwrap();
        let mut state = vec![false; l];
        for _ in 0..8 {
            let inputs: Vec<bool> = (0..i).map(|_| rng.gen_bool(0.5)).collect();
            let (outs, next) = sim.step(&state, &inputs);
            let want: Vec<bool> = c.outputs.iter().map(|&o| value(&c, o, &inputs, &state)).collect();
            assert_eq!(outs, want);
            state = c.latches.iter().map(|l| value(&c, l.next, &inputs, &state)).collect();
            assert_eq!(next, state);
        }
    }
}

#[test]
fn lenient_parse_repairs_header() {
    let c = parse_aiger("aag 99 2 0 1 5\n2\n4\n6\n6 2 4\n", ParseMode::Lenient).unwrap();
    assert_eq!(c.serialize(false), "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n");
    assert!(parse_aiger("aag 99 2 0 1 5\n2\n4\n6\n6 2 4\n", ParseMode::Strict).is_err());
}

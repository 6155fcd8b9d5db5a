//! Token ids and positional encodings of a specification and a circuit.

use circuit_repair::aiger::arbiter;
use circuit_repair::encoding::{detokenize_circuit, tokenize_circuit, tokenize_spec, tree_position, Vocab};
use circuit_repair::ltl::arbiter_spec;

fn main() {
    let vocab = Vocab::standard();
    println!("vocabulary of {} tokens", vocab.len());

    let spec = tokenize_spec(&arbiter_spec(), &vocab).unwrap();
    for (k, seg) in spec.segments.iter().enumerate() {
        let names: Vec<&str> = seg.tokens.iter().map(|&t| vocab.name(t).unwrap()).collect();
        println!("segment {k} ({:?}): {}", seg.kind, names.join(" "));
    }
    let seg = &spec.segments[0];
    for (tok, path) in seg.tokens.iter().zip(&seg.paths).take(5) {
        let pos: Vec<String> = tree_position(path, 4, 8).unwrap().iter().map(|x| format!("{x}")).collect();
        println!("  {:>3} path {path:?} -> [{}]", vocab.name(*tok).unwrap(), pos.join(" "));
    }

    let circuit = tokenize_circuit(arbiter::CORRECT, true, &vocab).unwrap();
    println!("circuit: {} tokens", circuit.tokens.len());
    let body = &circuit.tokens[1..];
    print!("round trip:\n{}", detokenize_circuit(body, &vocab, 5));
}

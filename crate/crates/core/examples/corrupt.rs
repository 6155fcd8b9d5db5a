//! Inject random errors into a correct circuit and measure how far the
//! result moved.

use circuit_repair::aiger::{arbiter, parse_aiger, ParseMode};
use circuit_repair::check::check;
use circuit_repair::corrupt::{corrupt_circuit_detailed, trunc_gauss_pmf, CorruptionParams};
use circuit_repair::ltl::arbiter_spec;
use circuit_repair::metrics::circuit_distance;
use circuit_repair::rng::seeded;

fn main() {
    let params = CorruptionParams::default();
    let pmf = trunc_gauss_pmf(0.0, params.sigma_changes, 1, params.max_changes as i64, false).unwrap();
    let head: Vec<String> = pmf.iter().take(6).map(|p| format!("{p:.3}")).collect();
    println!("P(changes = 1..6) = {}", head.join(" "));

    let spec = arbiter_spec();
    let original = parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap();
    for seed in 0..5 {
        let out = corrupt_circuit_detailed(&original, &params, &mut seeded(seed)).unwrap();
        println!(
            "seed {seed}: {} changes ({} deletions), distance {}, verdict {:?}",
            out.changes,
            out.deletions,
            circuit_distance(&original, &out.circuit),
            check(&out.circuit, &spec).map(|v| v.kind())
        );
    }
    let out = corrupt_circuit_detailed(&original, &params, &mut seeded(42)).unwrap();
    print!("\nseed 42:\n{}", out.circuit.serialize(false));
}

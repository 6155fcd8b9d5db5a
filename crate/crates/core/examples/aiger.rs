//! Parse, validate and simulate AIGER circuits.

use circuit_repair::aiger::{arbiter, parse_aiger, validate, ParseMode, Simulator};

fn main() {
    let c = parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap();
    let s = c.stats();
    println!("{} inputs, {} latches, {} outputs, {} gates", c.inputs.len(), s.num_latches, c.outputs.len(), s.num_ands);

    let sim = Simulator::new(&c).unwrap();
    let idle = vec![vec![false; 5]; 5];
    for (t, out) in sim.run(&idle).iter().enumerate() {
        let bits: String = out.iter().map(|&b| if b { '1' } else { '0' }).collect();
        println!("t={t} outputs {bits}");
    }

    // gate 8 reads the undefined variable 9 and the header counts are off
    let broken = "aag 3 1 0 1 2\n2\n6\n6 2 18\n";
    println!("\nstrict: {}", parse_aiger(broken, ParseMode::Strict).unwrap_err());
    let lenient = parse_aiger(broken, ParseMode::Lenient).unwrap();
    let report = validate(&lenient);
    println!("lenient parse, strict-valid: {}", report.valid_strict);
    for d in &report.defects {
        println!("  {d}");
    }
    print!("canonical:\n{}", lenient.serialize(false));
}

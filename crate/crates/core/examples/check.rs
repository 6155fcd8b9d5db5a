//! Model-check the three arbiter circuits against the arbiter specification
//! and cross-check the result with lasso enumeration on a small circuit.

use circuit_repair::aiger::{arbiter, parse_aiger, ParseMode};
use circuit_repair::check::{brute_force_check, check, count_satisfied_subspecs, BruteBounds, Verdict};
use circuit_repair::ltl::{arbiter_spec, parse_ltl, Specification};

fn main() {
    let spec = arbiter_spec();
    for (name, text) in [("faulty", arbiter::FAULTY), ("partial", arbiter::PARTIAL), ("correct", arbiter::CORRECT)] {
        let c = parse_aiger(text, ParseMode::Strict).unwrap();
        let subs = count_satisfied_subspecs(&c, &spec).unwrap();
        match check(&c, &spec).unwrap() {
            Verdict::Violated(cex) => {
                println!("{name}: VIOLATED ({subs}/5 sub-specifications)");
                println!("  witness: {} prefix steps, {} loop steps", cex.trace.prefix().len(), cex.trace.cycle().len());
            }
            v => println!("{name}: {v} ({subs}/5 sub-specifications)"),
        }
    }

    // a toggling latch: o0 alternates, so "G F o0" holds and "F G o0" fails
    let toggle = parse_aiger("aag 2 1 1 1 0\n2\n4 5\n4\n", ParseMode::Strict).unwrap();
    for f in ["G F o0", "F G o0"] {
        let spec = Specification::new(vec!["i0".into()], vec!["o0".into()], vec![], vec![parse_ltl(f, None).unwrap()], true)
            .unwrap();
        let fast = check(&toggle, &spec).unwrap().kind();
        let slow = brute_force_check(&toggle, &spec, &spec.to_formula(), &BruteBounds::default()).unwrap().kind();
        println!("{f}: automaton {fast:?}, lasso enumeration {slow:?}");
    }
}

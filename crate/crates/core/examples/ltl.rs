//! Parse LTL formulas, print them fully parenthesized and evaluate them on
//! an ultimately periodic trace.

use circuit_repair::ltl::{arbiter_spec, eval_lasso, parse_ltl, LassoTrace};

fn main() {
    let f = parse_ltl("G (r -> F g) & G !(g & X g)", None).unwrap();
    let stats = f.stats();
    println!("{f}\n  size {} depth {}", stats.size, stats.depth);

    // r g: request once, grant one step later, then idle forever
    let trace = LassoTrace::new(
        vec!["r".into(), "g".into()],
        vec![vec![true, false], vec![false, true]],
        vec![vec![false, false]],
    )
    .unwrap();
    println!("{trace}");
    println!("holds: {}", eval_lasso(&f, &trace).unwrap());

    match parse_ltl("G (r -> ", None) {
        Ok(_) => unreachable!(),
        Err(e) => println!("error: {e}"),
    }

    let spec = arbiter_spec();
    println!("\narbiter specification, total AST size {}:\n{}", spec.ast_size(), spec.to_text());
    for (k, sub) in spec.subspecs().iter().enumerate() {
        println!("sub-specification {k}: {sub}");
    }
}

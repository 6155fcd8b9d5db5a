//! Edit distances, prediction classification and binned reports.

use circuit_repair::aiger::{arbiter, parse_aiger, ParseMode};
use circuit_repair::check::CheckConfig;
use circuit_repair::ltl::arbiter_spec;
use circuit_repair::metrics::{
    bin_report, circuit_distance, classify_prediction, improvement, levenshtein_chars, report_csv, BinKey, BinRecord,
};

fn main() {
    println!("kitten -> sitting: {}", levenshtein_chars("kitten", "sitting"));
    let parse = |t: &str| parse_aiger(t, ParseMode::Strict).unwrap();
    let (faulty, partial, correct) = (parse(arbiter::FAULTY), parse(arbiter::PARTIAL), parse(arbiter::CORRECT));
    println!("faulty  -> correct: {}", circuit_distance(&faulty, &correct));
    println!("partial -> correct: {}", circuit_distance(&partial, &correct));

    let spec = arbiter_spec();
    let config = CheckConfig::default();
    let mut records = Vec::new();
    for (name, text) in [("faulty", arbiter::FAULTY), ("partial", arbiter::PARTIAL), ("correct", arbiter::CORRECT)] {
        let status = classify_prediction(&spec, text, &faulty, &correct, &config);
        let gain = improvement(&spec, &faulty, text, &correct, &config);
        println!("{name:>7} as a repair of the faulty circuit: {status}, lev {:+}, sub-specs {:+}", gain.lev_delta, gain.subspec_delta);
        let lev = circuit_distance(&parse(text), &correct);
        records.push(BinRecord { status, lev_distance: lev, spec_ast_size: spec.ast_size(), target_size: 7 });
    }
    print!("\n{}", report_csv(&bin_report(&records, BinKey::LevDistance, 5)));
}

//! Generate a repair dataset from synthetic correct (specification,
//! circuit) pairs and write it as JSON lines.

use std::collections::BTreeMap;

use circuit_repair::check::CheckConfig;
use circuit_repair::pipeline::toy::toy_corpus;
use circuit_repair::pipeline::{faulty_statuses, generate_dataset, split_dataset, write_dataset, GenConfig};

fn main() {
    let corpus = toy_corpus(100, 1);
    let (spec, circuit) = &corpus[0];
    print!("first pair:\n{}{}", spec.to_text(), circuit.serialize(false));

    let config = GenConfig { draws_per_pair: 2, mix_corrupted: 1.0, seed: 1, ..Default::default() };
    let data = generate_dataset(&corpus, &[], &config, None).unwrap();
    let mut by_lev = BTreeMap::new();
    for s in &data {
        *by_lev.entry(s.lev / 5 * 5).or_insert(0) += 1;
    }
    println!("\n{} samples, by distance: {by_lev:?}", data.len());

    let mut statuses = BTreeMap::new();
    for st in faulty_statuses(&data, &CheckConfig::default()) {
        *statuses.entry(st.name()).or_insert(0) += 1;
    }
    println!("faulty circuits: {statuses:?}");

    let (train, test) = split_dataset(data, 20, 1);
    println!("train {} / test {}", train.len(), test.len());
    let mut out = Vec::new();
    write_dataset(&test[..1], &mut out).unwrap();
    print!("{}", String::from_utf8(out).unwrap());
}

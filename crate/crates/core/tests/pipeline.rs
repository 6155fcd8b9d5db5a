use std::io::BufReader;

use circuit_repair::aiger::{arbiter, parse_aiger, ParseMode};
use circuit_repair::check::{check, CheckConfig};
use circuit_repair::ltl::{arbiter_spec, Specification};
use circuit_repair::metrics::SampleStatus;
use circuit_repair::pipeline::toy::toy_corpus;
use circuit_repair::pipeline::{
    evaluate, generate_dataset, read_dataset, repair_iterative, split_dataset, write_dataset, CandidateFn, GenConfig,
    Provenance, RepairSample,
};

#[test]
fn toy_corpus_is_correct() {
    for (spec, circuit) in toy_corpus(40, 1) {
        assert!(check(&circuit, &spec).unwrap().is_satisfied(), "{}", spec.to_text());
    }
}

#[test]
fn generation_is_reproducible_and_thread_independent() {
    let corpus = toy_corpus(30, 2);
    let config = GenConfig { draws_per_pair: 2, mix_corrupted: 1.0, seed: 5, jobs: 1, ..Default::default() };
    let a = generate_dataset(&corpus, &[], &config, None).unwrap();
    let b = generate_dataset(&corpus, &[], &GenConfig { jobs: 3, ..config.clone() }, None).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|s| s.lev > 0 && s.lev <= 50 && s.provenance == Provenance::Corrupted));
    let mut buf = Vec::new();
    write_dataset(&a, &mut buf).unwrap();
    assert_eq!(read_dataset(BufReader::new(buf.as_slice())).unwrap(), a);
}

#[test]
fn mispredictions_need_a_violation() {
    let spec = arbiter_spec();
    let corpus = vec![(spec.clone(), parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap())];
    let mispredictions = vec![
        (spec.clone(), arbiter::FAULTY.to_string(), arbiter::CORRECT.to_string()),
        (spec.clone(), arbiter::PARTIAL.to_string(), arbiter::CORRECT.to_string()),
        // satisfies the specification, so it is not a repair sample
        (spec.clone(), arbiter::CORRECT.to_string(), arbiter::PARTIAL.to_string()),
    ];
    let config = GenConfig { mix_corrupted: 0.5, seed: 1, ..Default::default() };
    let data = generate_dataset(&corpus, &mispredictions, &config, None).unwrap();
    let kept: Vec<&RepairSample> = data.iter().filter(|s| s.provenance == Provenance::Misprediction).collect();
    assert_eq!(kept.len(), 1);
    assert!(kept[0].faulty == arbiter::FAULTY || kept[0].faulty == arbiter::PARTIAL);
}

#[test]
fn misleading_targets_are_replaced() {
    let spec = Specification::parse("INPUTS\ni0\nOUTPUTS\no0\nGUARANTEES\nG (o0 <-> i0)\n").unwrap();
    let faulty = "aag 1 1 0 1 0\n2\n3\n";
    // correct, but further from the faulty circuit than the direct wire
    let target = "aag 2 1 0 1 1\n2\n4\n4 2 2\n";
    let wire = "aag 1 1 0 1 0\n2\n2\n";
    let corpus = vec![(spec.clone(), parse_aiger(target, ParseMode::Strict).unwrap())];
    let mispredictions = vec![(spec.clone(), faulty.to_string(), target.to_string())];
    let config = GenConfig { mix_corrupted: 0.0, ..Default::default() };
    let source = |_: &Specification| vec![wire.to_string(), "aag 1 1 0 1 0\n2\n0\n".to_string()];
    let data = generate_dataset(&corpus, &mispredictions, &config, Some(&source)).unwrap();
    assert_eq!(data.len(), 1);
    assert_eq!((data[0].target.as_str(), data[0].lev), (wire, 1));
    let kept = generate_dataset(&corpus, &mispredictions, &config, None).unwrap();
    assert_eq!(kept[0].target, target);
}

#[test]
fn walkthrough_repairs_in_two_iterations() {
    let spec = arbiter_spec();
    let stub = CandidateFn(|_: &Specification, circuit: &str, _: usize| {
        let next = if circuit == arbiter::FAULTY { arbiter::PARTIAL } else { arbiter::CORRECT };
        vec![(circuit.to_string(), -0.1), (next.to_string(), -0.5)]
    });
    let config = CheckConfig::default();
    let trace = repair_iterative(&stub, &spec, arbiter::FAULTY, Some(arbiter::CORRECT), 3, 2, &config);
    let statuses: Vec<SampleStatus> = trace.iterations.iter().map(|r| r.status).collect();
    assert_eq!(statuses, [SampleStatus::Violated, SampleStatus::Match]);
    assert_eq!(trace.solved_at(), Some(2));
    // the copied input is never chosen over a different violating beam
    assert_eq!(trace.iterations[0].best, arbiter::PARTIAL);

    let sample = RepairSample::new(spec, arbiter::FAULTY.into(), arbiter::CORRECT.into(), Provenance::Corrupted);
    let one = evaluate(&stub, std::slice::from_ref(&sample), 1, 2, &config, 1);
    let two = evaluate(&stub, std::slice::from_ref(&sample), 2, 2, &config, 1);
    assert_eq!(one.semantic_by_iteration, [0.0]);
    assert_eq!(two.semantic_by_iteration, [0.0, 1.0]);
    assert_eq!(two.syntactic_by_iteration, [0.0, 1.0]);
    assert_eq!(one.copies, 0);
}

#[test]
fn split_is_disjoint_and_seeded() {
    let corpus = toy_corpus(20, 3);
    let data = generate_dataset(&corpus, &[], &GenConfig { mix_corrupted: 1.0, ..Default::default() }, None).unwrap();
    let (train, test) = split_dataset(data.clone(), 5, 9);
    assert_eq!((train.len() + test.len(), test.len()), (data.len(), 5));
    assert!(test.iter().all(|s| !train.contains(s)));
    assert_eq!(split_dataset(data, 5, 9).1, test);
}

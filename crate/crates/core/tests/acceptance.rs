//! End-to-end acceptance suite. Runs every criterion, prints one line per
//! criterion and exits non-zero if any of them fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use circuit_repair::aiger::{arbiter, parse_aiger, AigerCircuit, ParseMode, SymbolKind};
use circuit_repair::check::{
    check, check_formula, resolve_atoms, BruteBounds, CheckConfig, LassoOracle, Role, Verdict,
};
use circuit_repair::corrupt::{corrupt_circuit_detailed, CorruptionParams};
use circuit_repair::encoding::{tokenize_circuit, tokenize_spec, Vocab, EOS};
use circuit_repair::ltl::{arbiter_spec, eval_lasso, Ltl, Specification};
use circuit_repair::metrics::{circuit_distance, classify_prediction, levenshtein, levenshtein_chars, SampleStatus};
use circuit_repair::model::{
    decode, encode, encode_local, param_count, sample_gradients, token_accuracy, train_params, ModelConfig,
    ModelParams, TrainConfig, TrainSample,
};
use circuit_repair::pipeline::toy::toy_corpus;
use circuit_repair::pipeline::{
    evaluate, generate_dataset, repair_iterative, split_dataset, to_train_sample, CandidateFn, GenConfig,
    TransformerRepairer,
};
use circuit_repair::rng::seeded;
use common::{formulas_of_size, io_spec, random_circuit, random_formula};
use rand::seq::SliceRandom;
use rand::Rng;

// tolerances and budgets
const ARBITER_TIME: Duration = Duration::from_secs(1);
const ORACLE_TIME: Duration = Duration::from_secs(300);
const CORRUPT_RUNS: usize = 100_000;
const CORRUPT_PMF_TOL: f64 = 0.01;
const CORRUPT_DELETE_TOL: f64 = 0.01;
const CORRUPT_TIME: Duration = Duration::from_secs(120);
const LETHALITY_MIN: f64 = 0.90;
const GRAD_TOL: f64 = 1e-4;
const GRAD_TIME: Duration = Duration::from_secs(60);
const PERMUTATION_TOL: f32 = 1e-5;
const TOY_TOKEN_ACC: f64 = 0.95;
const TOY_MAX_STEPS: usize = 5000;
const TOY_SEMANTIC: f64 = 0.30;
const TOY_TIME: Duration = Duration::from_secs(3600);

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn strict(text: &str) -> AigerCircuit {
    parse_aiger(text, ParseMode::Strict).unwrap()
}

fn arbiter_golden() -> Outcome {
    let start = Instant::now();
    let spec = arbiter_spec();
    let formula = spec.to_formula();
    ensure(check(&strict(arbiter::CORRECT), &spec).unwrap() == Verdict::Satisfied, "correct arbiter not satisfied")?;
    for (name, text) in [("faulty", arbiter::FAULTY), ("partial", arbiter::PARTIAL)] {
        let c = strict(text);
        let Verdict::Violated(cex) = check(&c, &spec).unwrap() else {
            return Err(format!("{name} arbiter not violated"));
        };
        let sources = resolve_atoms(&spec, &c, Role::System).unwrap();
        ensure(cex.replays_on(&c, &sources), format!("{name} witness does not replay"))?;
        ensure(!eval_lasso(&formula, &cex.trace).unwrap(), format!("{name} witness satisfies the formula"))?;
    }
    let t = start.elapsed();
    ensure(t < ARBITER_TIME, format!("took {t:?}"))?;
    Ok(format!("{t:.2?}"))
}

/// Compares the automaton checker with lasso enumeration on one pair;
/// violations from the checker must also fail the formula on their witness.
fn agree(c: &AigerCircuit, spec: &Specification, f: &Ltl, config: &CheckConfig, oracle: &LassoOracle) -> Result<(), String> {
    let fast = check_formula(c, spec, f, Role::System, config).map_err(|e| e.to_string())?;
    let slow = oracle.check(f).map_err(|e| e.to_string())?;
    if fast.kind() != slow.kind() {
        return Err(format!("{f} on\n{}checker {:?}, oracle {:?}", c.serialize(false), fast.kind(), slow.kind()));
    }
    if let Verdict::Violated(cex) = &fast {
        ensure(!eval_lasso(f, &cex.trace).unwrap(), format!("witness for {f} satisfies it"))?;
    }
    Ok(())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let config = CheckConfig::default();
    let bounds = BruteBounds::default();
    let mut rng = seeded(2);
    // circuits are redrawn until their state space fits the oracle's bound
    let (mut circuits, mut specs, mut oracles) = (Vec::new(), Vec::new(), Vec::new());
    let mut redrawn = 0;
    while circuits.len() < 200 {
        let (i, l, a) = (rng.gen_range(1..=2), rng.gen_range(0..=3), rng.gen_range(0..=4));
        let c = random_circuit(&mut rng, i, l, 1, a);
        let spec = io_spec(i, 1, vec![]);
        match LassoOracle::new(&c, &spec, &bounds) {
            Ok(o) => {
                circuits.push(c);
                specs.push(spec);
                oracles.push(o);
            }
            Err(_) => redrawn += 1,
        }
    }
    let leaves = ["true", "false", "i0", "o0"];
    let mut memo = Vec::new();
    let mut grid = 0usize;
    for size in 1..=6 {
        for f in formulas_of_size(size, &leaves, &mut memo) {
            let k = grid % circuits.len();
            agree(&circuits[k], &specs[k], &f, &config, &oracles[k])?;
            grid += 1;
        }
    }
    let wide = ["true", "false", "i0", "i1", "o0", "o1"];
    let mut larger = 0;
    while larger < 1000 {
        let (i, l, a) = (rng.gen_range(2..=3), rng.gen_range(0..=4), rng.gen_range(0..=6));
        let c = random_circuit(&mut rng, i, l, 2, a);
        let spec = io_spec(i, 2, vec![]);
        let Ok(oracle) = LassoOracle::new(&c, &spec, &bounds) else {
            redrawn += 1;
            continue;
        };
        let f = random_formula(&mut rng, 7, &wide);
        agree(&c, &spec, &f, &config, &oracle)?;
        larger += 1;
    }
    let t = start.elapsed();
    ensure(t < ORACLE_TIME, format!("took {t:?}"))?;
    Ok(format!("{grid} grid pairs + {larger} random pairs agree ({redrawn} circuits beyond oracle bounds redrawn), {t:.1?}"))
}

fn aiger_round_trip() -> Outcome {
    let mut rng = seeded(3);
    let mut texts: Vec<(String, bool)> =
        [arbiter::FAULTY, arbiter::PARTIAL, arbiter::CORRECT].iter().map(|t| (t.to_string(), false)).collect();
    for k in 0..1000 {
        let (i, l, o, a) = (rng.gen_range(0..=5), rng.gen_range(0..=4), rng.gen_range(0..=5), rng.gen_range(0..=12));
        let mut c = random_circuit(&mut rng, i, l, o, a);
        let symbols = k % 2 == 0;
        if symbols {
            for idx in 0..c.inputs.len() {
                c.symbols.insert((SymbolKind::Input, idx), format!("in_{idx}"));
            }
            for idx in 0..c.outputs.len() {
                c.symbols.insert((SymbolKind::Output, idx), format!("out {idx}"));
            }
        }
        texts.push((c.serialize(symbols), symbols));
    }
    for (text, symbols) in &texts {
        let c = strict(text);
        let again = c.serialize(*symbols);
        ensure(&again == text, format!("serialize(parse(t)) != t for\n{text}"))?;
        ensure(strict(&again) == c, format!("parse(serialize(c)) != c for\n{text}"))?;
    }
    Ok(format!("{} circuits byte-exact", texts.len()))
}

fn corruptor_statistics() -> Outcome {
    let start = Instant::now();
    let params = CorruptionParams::default();
    let circuit = strict(arbiter::CORRECT);
    let max = params.max_changes as usize;
    let mut counts = vec![0usize; max + 1];
    let (mut changes, mut deletions) = (0u64, 0u64);
    let original = circuit.serialize(false);
    let mut rng = seeded(4);
    for _ in 0..CORRUPT_RUNS {
        let out = corrupt_circuit_detailed(&circuit, &params, &mut rng).unwrap();
        counts[out.changes as usize] += 1;
        changes += out.changes as u64;
        deletions += out.deletions as u64;
        ensure(out.circuit.inputs.len() == circuit.inputs.len(), "input removed")?;
        ensure(out.circuit.outputs.len() == circuit.outputs.len(), "output removed")?;
        ensure(out.circuit.serialize(false) != original, "output equals input")?;
    }
    // analytic pmf of |N(0, sigma)| restricted to 1..=max
    let weight = |k: usize| (-((k * k) as f64) / (2.0 * params.sigma_changes * params.sigma_changes)).exp();
    let z: f64 = (1..=max).map(weight).sum();
    let pmf_err = (1..=max)
        .map(|k| (counts[k] as f64 / CORRUPT_RUNS as f64 - weight(k) / z).abs())
        .fold(0.0, f64::max);
    let frac = deletions as f64 / changes as f64;
    let t = start.elapsed();
    ensure(counts[0] == 0, "zero-change draw")?;
    ensure(pmf_err < CORRUPT_PMF_TOL, format!("pmf max abs error {pmf_err:.4}"))?;
    ensure((frac - params.p_delete).abs() <= CORRUPT_DELETE_TOL, format!("deletion fraction {frac:.4}"))?;
    ensure(t < CORRUPT_TIME, format!("took {t:?}"))?;
    Ok(format!("pmf max abs error {pmf_err:.4}, deletion fraction {frac:.4}, {t:.1?}"))
}

fn corruption_lethality() -> Outcome {
    let corpus = toy_corpus(200, 5);
    let config = CheckConfig::default();
    let params = CorruptionParams::default();
    let mut lethal = 0;
    for (k, (spec, circuit)) in corpus.iter().enumerate() {
        let bad = corrupt_circuit_detailed(circuit, &params, &mut seeded(1000 + k as u64)).unwrap().circuit;
        let status = classify_prediction(spec, &bad.serialize(false), circuit, circuit, &config);
        if status.is_violated() || status == SampleStatus::SyntaxError {
            lethal += 1;
        }
    }
    let share = lethal as f64 / corpus.len() as f64;
    ensure(share >= LETHALITY_MIN, format!("only {share:.3} lethal"))?;
    Ok(format!("{lethal}/{} lethal", corpus.len()))
}

fn micro_sample(spec: &Specification) -> TrainSample {
    let v = Vocab::standard();
    let mut target = tokenize_circuit("aag 3 2 1 1 0\n2\n4\n6 3\n7\n", true, &v).unwrap().tokens[1..].to_vec();
    target.push(EOS);
    TrainSample {
        spec: tokenize_spec(spec, &v).unwrap(),
        circuit: tokenize_circuit("aag 4 2 1 1 1\n2\n4\n6 8\n7\n8 3 5\n", true, &v).unwrap(),
        target,
    }
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let config = ModelConfig::micro();
    let spec = io_spec(
        2,
        1,
        ["G (o0 <-> X i1)", "F o0"].iter().map(|s| circuit_repair::ltl::parse_ltl(s, None).unwrap()).collect(),
    );
    let spec = Specification { assumptions: vec![circuit_repair::ltl::parse_ltl("G F i0", None).unwrap()], ..spec };
    let s = micro_sample(&spec);
    let mut p = ModelParams::<f64>::init(&config, 21).unwrap();
    let mut rng = seeded(22);
    for t in &mut p.tensors {
        t.data.iter_mut().for_each(|x| *x += rng.gen_range(-0.1..0.1));
    }
    let mut g = p.zeros_like();
    sample_gradients(&p, &s, &mut g).unwrap();
    let used: Vec<usize> = s
        .spec
        .segments
        .iter()
        .flat_map(|seg| seg.tokens.clone())
        .chain(s.circuit.tokens.clone())
        .chain(s.decoder_input())
        .collect();
    let d = config.d_model;
    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut probes = 0;
    let mut groups = [false; 4];
    for ti in 0..p.tensors.len() {
        let name = p.tensors[ti].name.clone();
        for (k, prefix) in ["spec_local.", "circuit_local.", "global.", "decoder."].iter().enumerate() {
            groups[k] |= name.starts_with(prefix);
        }
        let n = p.tensors[ti].data.len();
        for _ in 0..3 {
            let idx = if name.starts_with("embed.") && name != "embed.kind" {
                used.choose(&mut rng).unwrap() * d + rng.gen_range(0..d)
            } else {
                rng.gen_range(0..n)
            };
            let mut plus = p.clone();
            plus.tensors[ti].data[idx] += h;
            let mut minus = p.clone();
            minus.tensors[ti].data[idx] -= h;
            let lp = sample_gradients(&plus, &s, &mut plus.zeros_like()).unwrap();
            let lm = sample_gradients(&minus, &s, &mut minus.zeros_like()).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let scale = g[ti][idx].abs().max(numeric.abs());
            let err = if scale < 1e-7 { (g[ti][idx] - numeric).abs() } else { (g[ti][idx] - numeric).abs() / scale };
            worst = worst.max(err);
            probes += 1;
        }
    }
    let t = start.elapsed();
    ensure(groups.iter().all(|&b| b), "a layer group has no parameters")?;
    ensure(worst < GRAD_TOL, format!("worst relative error {worst:e}"))?;
    ensure(t < GRAD_TIME, format!("took {t:?}"))?;
    Ok(format!("worst relative error {worst:.2e} over {probes} probes, {t:.1?}"))
}

fn random_spec<R: Rng>(rng: &mut R) -> Specification {
    let leaves = ["i0", "i1", "i2", "o0", "o1", "true"];
    let gen = |n: usize, rng: &mut R| {
        (0..n)
            .map(|_| {
                let size = rng.gen_range(2..=9);
                random_formula(rng, size, &leaves)
            })
            .collect::<Vec<_>>()
    };
    let assumptions = gen(rng.gen_range(0..=3), rng);
    let guarantees = gen(rng.gen_range(2..=5), rng);
    Specification { assumptions, ..io_spec(3, 2, guarantees) }
}

fn permutation_invariance() -> Outcome {
    let config = ModelConfig::micro();
    let p = ModelParams::<f32>::init(&config, 31).unwrap();
    let v = Vocab::standard();
    let circuit = tokenize_circuit(arbiter::CORRECT, true, &v).unwrap();
    let prefix = micro_sample(&io_spec(1, 1, vec![])).decoder_input();
    let mut rng = seeded(32);
    let mut worst = 0.0f32;
    for _ in 0..50 {
        let spec = random_spec(&mut rng);
        let base = decode(&p, &encode(&p, &tokenize_spec(&spec, &v).unwrap(), &circuit).unwrap(), &prefix);
        let mut shuffled = spec.clone();
        shuffled.assumptions.shuffle(&mut rng);
        shuffled.guarantees.shuffle(&mut rng);
        let other = decode(&p, &encode(&p, &tokenize_spec(&shuffled, &v).unwrap(), &circuit).unwrap(), &prefix);
        for (a, b) in base.data.iter().zip(&other.data) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= PERMUTATION_TOL, format!("max logit difference {worst:e}"))?;
    Ok(format!("50 specs, max logit difference {worst:.1e}"))
}

fn parameter_separation() -> Outcome {
    let separated = ModelConfig::small();
    let shared = ModelConfig { separated: false, ..separated.clone() };
    let (a, b) = (param_count(&separated), param_count(&shared));
    ensure(a > b, format!("separated {a} <= shared {b}"))?;
    let p = ModelParams::<f32>::init(&separated, 41).unwrap();
    let mut zeroed = p.clone();
    for t in zeroed.tensors.iter_mut().filter(|t| t.name.starts_with("circuit_local.")) {
        t.data.iter_mut().for_each(|x| *x = 0.0);
    }
    let v = Vocab::standard();
    let mut rng = seeded(42);
    for text in [arbiter::FAULTY, arbiter::PARTIAL, arbiter::CORRECT] {
        let spec = tokenize_spec(&random_spec(&mut rng), &v).unwrap();
        let circuit = tokenize_circuit(text, true, &v).unwrap();
        let before = encode_local(&p, &spec, &circuit).unwrap();
        let after = encode_local(&zeroed, &spec, &circuit).unwrap();
        ensure(before.segments == after.segments, "segment representations changed")?;
        ensure(before.circuit != after.circuit, "circuit-local parameters unused")?;
    }
    Ok(format!("separated {a} > shared {b} parameters; segments bit-identical"))
}

fn toy_end_to_end() -> Outcome {
    let start = Instant::now();
    let corpus = toy_corpus(300, 7);
    let gen = GenConfig { draws_per_pair: 3, mix_corrupted: 1.0, seed: 7, ..Default::default() };
    let data = generate_dataset(&corpus, &[], &gen, None).unwrap();
    let (train, test) = split_dataset(data, 100, 7);
    let train: Vec<_> = train.into_iter().take(500).collect();
    ensure(train.len() == 500 && test.len() == 100, format!("dataset {} / {}", train.len(), test.len()))?;
    let vocab = Vocab::standard();
    let train_set: Vec<_> = train.iter().map(|s| to_train_sample(s, &vocab).unwrap()).collect();
    let config = ModelConfig { dropout: 0.0, ..ModelConfig::small() };
    let tc = TrainConfig { steps: TOY_MAX_STEPS, batch_size: 16, warmup: 4000, seed: 1, ..Default::default() };
    let mut params = ModelParams::<f32>::init(&config, 1).unwrap();
    let mut reached = None;
    train_params(&mut params, &tc, &train_set, |step, _, p| {
        if step % 250 == 0 {
            let acc = token_accuracy(p, &train_set).unwrap();
            if acc >= TOY_TOKEN_ACC {
                reached = Some((step, acc));
                return false;
            }
        }
        true
    })
    .unwrap();
    let (step, acc) = reached.ok_or("token accuracy never reached the target")?;
    let model = TransformerRepairer { params: &params, vocab: &vocab, max_len: 64 };
    let report = evaluate(&model, &test, 3, 4, &CheckConfig::default(), 1);
    let sem = report.semantic_by_iteration.clone();
    let t = start.elapsed();
    ensure(sem[0] >= TOY_SEMANTIC, format!("semantic accuracy {:.3}", sem[0]))?;
    ensure(sem.windows(2).all(|w| w[1] >= w[0]), format!("accuracy not monotone in n: {sem:?}"))?;
    ensure(t < TOY_TIME, format!("took {t:?}"))?;
    Ok(format!(
        "token accuracy {acc:.3} at step {step}; semantic accuracy by n {:?}; {t:.0?}",
        sem.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>()
    ))
}

fn levenshtein_and_filter() -> Outcome {
    ensure(levenshtein_chars("kitten", "sitting") == 3, "kitten/sitting")?;
    let mut rng = seeded(5);
    let word = |rng: &mut rand_chacha::ChaCha8Rng| (0..rng.gen_range(0..12)).map(|_| rng.gen_range(0..4u8)).collect::<Vec<_>>();
    for _ in 0..2000 {
        let (a, b, c) = (word(&mut rng), word(&mut rng), word(&mut rng));
        let (ab, ba) = (levenshtein(&a, &b), levenshtein(&b, &a));
        ensure(levenshtein(&a, &a) == 0, "d(a, a) != 0")?;
        ensure((ab == 0) == (a == b), "d(a, b) = 0 iff a = b")?;
        ensure(ab == ba, "symmetry")?;
        ensure(levenshtein(&a, &c) <= ab + levenshtein(&b, &c), "triangle inequality")?;
        ensure(ab >= a.len().abs_diff(b.len()) && ab <= a.len().max(b.len()), "length bounds")?;
    }
    // large circuits and heavy corruption so that many samples exceed the cap
    let params = CorruptionParams { sigma_changes: 60.0, max_changes: 150, ..Default::default() };
    let corpus: Vec<_> = (0..30)
        .map(|_| {
            let c = random_circuit(&mut rng, 3, 3, 2, 20);
            (io_spec(3, 2, vec![]), c)
        })
        .chain(toy_corpus(30, 9))
        .collect();
    let unfiltered = GenConfig { params: params.clone(), mix_corrupted: 1.0, max_lev: usize::MAX, seed: 9, draws_per_pair: 3, ..Default::default() };
    let all = generate_dataset(&corpus, &[], &unfiltered, None).unwrap();
    let capped = generate_dataset(&corpus, &[], &GenConfig { max_lev: 50, ..unfiltered }, None).unwrap();
    let over = all.iter().filter(|s| s.lev > 50).count();
    ensure(over > 0, "no sample above the cap to filter")?;
    ensure(capped.iter().all(|s| s.lev <= 50), "sample above 50 kept")?;
    let expected: Vec<_> = all.iter().filter(|s| s.lev <= 50).collect();
    ensure(capped.iter().collect::<Vec<_>>() == expected, "filter dropped samples within the cap")?;
    for s in &capped {
        let d = circuit_distance(&parse_aiger(&s.faulty, ParseMode::Lenient).unwrap(), &strict(&s.target));
        ensure(d == s.lev, "recorded distance differs")?;
    }
    Ok(format!("axioms hold; filter removed {over} of {} samples", all.len()))
}

fn demo_walkthrough() -> Outcome {
    let spec = arbiter_spec();
    let stub = CandidateFn(|_: &Specification, circuit: &str, _: usize| {
        let next = if circuit == arbiter::FAULTY { arbiter::PARTIAL } else { arbiter::CORRECT };
        vec![(next.to_string(), 0.0)]
    });
    let initial = check(&strict(arbiter::FAULTY), &spec).unwrap().kind();
    let trace = repair_iterative(&stub, &spec, arbiter::FAULTY, None, 2, 1, &CheckConfig::default());
    let verdicts: Vec<String> = std::iter::once(format!("{initial:?}"))
        .chain(trace.iterations.iter().map(|r| format!("{:?}", r.status)))
        .collect();
    ensure(verdicts == ["Violated", "Violated", "Satisfied"], format!("verdicts {verdicts:?}"))?;
    ensure(trace.iterations[1].best == arbiter::CORRECT, "final circuit is not the correct arbiter")?;
    Ok(verdicts.join(" -> "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("arbiter golden verdicts", arbiter_golden),
        ("checker equals lasso oracle", oracle_equivalence),
        ("aiger round trip", aiger_round_trip),
        ("corruptor statistics", corruptor_statistics),
        ("corruption lethality", corruption_lethality),
        ("gradient check", gradient_check),
        ("permutation invariance", permutation_invariance),
        ("parameter separation", parameter_separation),
        ("toy end-to-end training", toy_end_to_end),
        ("levenshtein and filter", levenshtein_and_filter),
        ("repair walkthrough", demo_walkthrough),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

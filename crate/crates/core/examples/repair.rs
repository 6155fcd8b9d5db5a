//! Iterative repair of the faulty arbiter: first with a scripted model that
//! replays a known repair sequence, then with an untrained transformer to
//! show the beam interface.

use circuit_repair::aiger::arbiter;
use circuit_repair::check::CheckConfig;
use circuit_repair::encoding::Vocab;
use circuit_repair::ltl::{arbiter_spec, Specification};
use circuit_repair::model::{ModelConfig, ModelParams};
use circuit_repair::pipeline::{repair_iterative, CandidateFn, TransformerRepairer};

fn main() {
    let spec = arbiter_spec();
    let config = CheckConfig::default();
    let scripted = CandidateFn(|_: &Specification, circuit: &str, _: usize| {
        let next = if circuit == arbiter::FAULTY { arbiter::PARTIAL } else { arbiter::CORRECT };
        vec![(next.to_string(), 0.0)]
    });
    let trace = repair_iterative(&scripted, &spec, arbiter::FAULTY, Some(arbiter::CORRECT), 3, 1, &config);
    for r in &trace.iterations {
        print!("iteration {}: {}\n{}", r.index, r.status, r.best);
    }
    println!("solved at iteration {:?}\n", trace.solved_at());

    let params = ModelParams::<f32>::init(&ModelConfig::micro(), 0).unwrap();
    let vocab = Vocab::standard();
    let model = TransformerRepairer { params: &params, vocab: &vocab, max_len: 24 };
    let trace = repair_iterative(&model, &spec, arbiter::FAULTY, None, 1, 3, &config);
    for b in &trace.iterations[0].beams {
        println!("untrained beam, log p {:.2}: {}", b.score, b.status);
    }
}

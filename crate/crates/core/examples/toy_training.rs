//! Train the small model on generated toy repair samples until it fits the
//! training set, then evaluate iterative repair on held-out samples. The
//! optional argument caps the number of training steps.

use std::time::Instant;

use circuit_repair::check::CheckConfig;
use circuit_repair::encoding::Vocab;
use circuit_repair::model::{token_accuracy, train_params, ModelConfig, ModelParams, TrainConfig};
use circuit_repair::pipeline::toy::toy_corpus;
use circuit_repair::pipeline::{evaluate, generate_dataset, split_dataset, to_train_sample, GenConfig, TransformerRepairer};

fn main() {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let corpus = toy_corpus(300, 7);
    let gen = GenConfig { draws_per_pair: 3, mix_corrupted: 1.0, seed: 7, ..Default::default() };
    let data = generate_dataset(&corpus, &[], &gen, None).unwrap();
    let (train, test) = split_dataset(data, 100, 7);
    let train: Vec<_> = train.into_iter().take(500).collect();
    let vocab = Vocab::standard();
    let train_set: Vec<_> = train.iter().map(|s| to_train_sample(s, &vocab).unwrap()).collect();
    let lens: Vec<usize> = train_set.iter().map(|s| s.target.len()).collect();
    println!("train {} test {} mean target len {:.1}", train.len(), test.len(), lens.iter().sum::<usize>() as f64 / lens.len() as f64);
    let config = ModelConfig { dropout: 0.0, ..ModelConfig::small() };
    let tc = TrainConfig { steps, batch_size: 16, warmup: 4000, seed: 1, ..Default::default() };
    let mut params = ModelParams::<f32>::init(&config, 1).unwrap();
    let start = Instant::now();
    train_params(&mut params, &tc, &train_set, |step, loss, p| {
        if step % 250 == 0 {
            let acc = token_accuracy(p, &train_set).unwrap();
            println!("step {step} loss {loss:.4} train acc {acc:.4} t={:.0}s", start.elapsed().as_secs_f64());
            return acc < 0.95;
        }
        true
    })
    .unwrap();
    let model = TransformerRepairer { params: &params, vocab: &vocab, max_len: 64 };
    let report = evaluate(&model, &test, 2, 4, &CheckConfig::default(), 1);
    println!("{report}t={:.0}s", start.elapsed().as_secs_f64());
}

use circuit_repair::aiger::arbiter;
use circuit_repair::encoding::{tokenize_circuit, tokenize_spec, Vocab, EOS};
use circuit_repair::ltl::{arbiter_spec, parse_ltl, Specification};
use circuit_repair::model::{
    attention, beam_search, decode, encode, encode_local, loss, sample_gradients, Mat, ModelConfig, ModelParams,
    TrainSample,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_spec() -> Specification {
    Specification::new(
        vec!["i0".into(), "i1".into()],
        vec!["o0".into()],
        vec![parse_ltl("G F i0", None).unwrap()],
        vec![parse_ltl("G (o0 <-> i1)", None).unwrap(), parse_ltl("F o0", None).unwrap()],
        true,
    )
    .unwrap()
}

fn sample(spec: &Specification) -> TrainSample {
    let v = Vocab::standard();
    let circuit = "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n";
    let mut target = tokenize_circuit("aag 2 2 0 1 0\n2\n4\n4\n", true, &v).unwrap().tokens[1..].to_vec();
    target.push(EOS);
    TrainSample {
        spec: tokenize_spec(spec, &v).unwrap(),
        circuit: tokenize_circuit(circuit, true, &v).unwrap(),
        target,
    }
}

fn perturbed(config: &ModelConfig, seed: u64) -> ModelParams<f64> {
    // non-trivial gains and biases so every path carries gradient
    let mut p = ModelParams::<f64>::init(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for t in &mut p.tensors {
        for x in &mut t.data {
            *x += rng.gen_range(-0.1..0.1);
        }
    }
    p
}

/// Relative error `|a - n| / max(|a|, |n|)`; pairs with both magnitudes
/// below `1e-7` are compared absolutely.
fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-7 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

#[test]
fn gradients_match_finite_differences() {
    let config = ModelConfig::micro();
    let spec = small_spec();
    let s = sample(&spec);
    let p = perturbed(&config, 11);
    let mut g = p.zeros_like();
    sample_gradients(&p, &s, &mut g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut probed = 0;
    // a few entries of every tensor, with embeddings probed at used rows
    let used: Vec<usize> = s
        .spec
        .segments
        .iter()
        .flat_map(|seg| seg.tokens.clone())
        .chain(s.circuit.tokens.clone())
        .chain(s.decoder_input())
        .collect();
    let d = config.d_model;
    for ti in 0..p.tensors.len() {
        let name = p.tensors[ti].name.clone();
        let n = p.tensors[ti].data.len();
        let picks: Vec<usize> = if name.starts_with("embed.") && name != "embed.kind" {
            (0..2).map(|_| used.choose(&mut rng).unwrap() * d + rng.gen_range(0..d)).collect()
        } else {
            (0..2).map(|_| rng.gen_range(0..n)).collect()
        };
        for idx in picks {
            let mut plus = p.clone();
            plus.tensors[ti].data[idx] += h;
            let mut minus = p.clone();
            minus.tensors[ti].data[idx] -= h;
            let lp = sample_gradients(&plus, &s, &mut plus.zeros_like()).unwrap();
            let lm = sample_gradients(&minus, &s, &mut minus.zeros_like()).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let e = rel_err(g[ti][idx], numeric);
            assert!(e < 1e-4, "{name}[{idx}]: analytic {} numeric {numeric}", g[ti][idx]);
            worst = worst.max(e);
            probed += 1;
        }
    }
    assert!(probed <= 200);
    eprintln!("probed {probed}, worst relative error {worst:e}");
}

#[test]
fn attention_examples() {
    let q = Mat::from_vec(1, 3, vec![0.3f64, -1.0, 2.0]);
    let k = Mat::from_vec(1, 3, vec![1.0, 0.5, 0.1]);
    let v = Mat::from_vec(1, 2, vec![4.0, -2.0]);
    assert_eq!(attention(&q, &k, &v, None).data, vec![4.0, -2.0]);
    let k = Mat::from_vec(3, 3, vec![1.0; 9]);
    let v = Mat::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let out = attention(&q, &k, &v, None);
    assert!((out.data[0] - 3.0).abs() < 1e-12 && (out.data[1] - 4.0).abs() < 1e-12);
}

#[test]
fn attention_against_scalar_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut m = |r, c| Mat::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f32>>());
    let (q, k, v) = (m(3, 4), m(3, 4), m(3, 4));
    let out = attention(&q, &k, &v, None);
    for i in 0..3 {
        let s: Vec<f64> = (0..3)
            .map(|j| (0..4).map(|c| q.row(i)[c] as f64 * k.row(j)[c] as f64).sum::<f64>() / 2.0)
            .collect();
        let z: f64 = s.iter().map(|x| x.exp()).sum();
        for c in 0..4 {
            let want: f64 = (0..3).map(|j| s[j].exp() / z * v.row(j)[c] as f64).sum();
            assert!((out.row(i)[c] as f64 - want).abs() < 1e-6);
        }
    }
    let mut mask = Mat::zeros(3, 3);
    mask.row_mut(0)[1] = f32::NEG_INFINITY;
    mask.row_mut(0)[2] = f32::NEG_INFINITY;
    let masked = attention(&q, &k, &v, Some(&mask));
    assert_eq!(masked.row(0), v.row(0));
}

#[test]
fn loss_examples() {
    let logits = Mat::from_vec(2, 3, vec![0.0f64, 100.0, -100.0, -100.0, -100.0, 100.0]);
    assert!(loss(&logits, &[1, 2]) < 1e-12);
    let uniform = Mat::from_vec(1, 68, vec![0.5f64; 68]);
    assert!((loss(&uniform, &[7]) - 68f64.ln()).abs() < 1e-12);
    assert!((loss(&logits, &[1, 0]) - loss(&logits, &[1])).abs() < 1e-12);
}

#[test]
fn decoder_is_causal_and_memory_order_free() {
    let config = ModelConfig::micro();
    let p = ModelParams::<f32>::init(&config, 2).unwrap();
    let spec = small_spec();
    let s = sample(&spec);
    let mem = encode(&p, &s.spec, &s.circuit).unwrap();
    assert_eq!(decode(&p, &mem, &[1]).rows, 1);
    let prefix = s.decoder_input();
    let base = decode(&p, &mem, &prefix);
    let mut changed = prefix.clone();
    changed[3] = 40;
    let other = decode(&p, &mem, &changed);
    for i in 0..3 {
        assert_eq!(base.row(i), other.row(i));
    }
    let mut rows: Vec<usize> = (0..mem.rows).collect();
    rows.reverse();
    let mut permuted = Mat::zeros(mem.rows, mem.cols);
    for (i, &r) in rows.iter().enumerate() {
        permuted.row_mut(i).copy_from_slice(mem.row(r));
    }
    let again = decode(&p, &permuted, &prefix);
    for (a, b) in base.data.iter().zip(&again.data) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn memory_shape_counts_tokens() {
    let config = ModelConfig::micro();
    let p = ModelParams::<f32>::init(&config, 4).unwrap();
    let v = Vocab::standard();
    let spec = tokenize_spec(&arbiter_spec(), &v).unwrap();
    let circuit = tokenize_circuit(arbiter::CORRECT, true, &v).unwrap();
    let mem = encode(&p, &spec, &circuit).unwrap();
    assert_eq!((mem.rows, mem.cols), (spec.num_tokens() + circuit.tokens.len(), config.d_model));
    let one = Specification::new(vec![], vec!["o0".into()], vec![], vec![parse_ltl("F o0", None).unwrap()], true).unwrap();
    let enc = tokenize_spec(&one, &v).unwrap();
    let prefix_only = tokenize_circuit("aag 0 0 0 0 0\n", true, &v).unwrap();
    assert_eq!(encode(&p, &enc, &prefix_only).unwrap().rows, 2 + 1);
}

#[test]
fn circuit_parameters_do_not_reach_segments() {
    let config = ModelConfig::micro();
    let p = ModelParams::<f32>::init(&config, 6).unwrap();
    let s = sample(&small_spec());
    let before = encode_local(&p, &s.spec, &s.circuit).unwrap();
    let mut zeroed = p.clone();
    for t in zeroed.tensors.iter_mut().filter(|t| t.name.starts_with("circuit_local.") || t.name == "embed.circuit") {
        t.data.iter_mut().for_each(|x| *x = 0.0);
    }
    let after = encode_local(&zeroed, &s.spec, &s.circuit).unwrap();
    assert_eq!(before.segments, after.segments);
    assert_ne!(before.circuit, after.circuit);
    let mut shifted = p.clone();
    shifted.get_mut("spec_local.0.ff2.bias").unwrap().data[0] += 0.5;
    let moved = encode_local(&shifted, &s.spec, &s.circuit).unwrap();
    for (a, b) in before.segments.iter().zip(&moved.segments) {
        assert_ne!(a, b);
    }
}

#[test]
fn beam_returns_requested_width() {
    let config = ModelConfig::micro();
    let p = ModelParams::<f32>::init(&config, 8).unwrap();
    let s = sample(&small_spec());
    let beams = beam_search(&p, &s.spec, &s.circuit, 3, 6).unwrap();
    assert_eq!(beams.len(), 3);
    assert!(beams.windows(2).all(|w| w[0].log_prob >= w[1].log_prob));
}

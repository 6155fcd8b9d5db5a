//! Beam search over summed log-probabilities.

use std::cmp::Ordering;

use super::net::{decode, encode, log_probs_last};
use super::{ModelError, ModelParams, Scalar};
use crate::encoding::{EncodedCircuit, EncodedSpec, EOS, SOS};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens without SOS; ends with EOS when the beam finished.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
}

fn by_score(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.log_prob.partial_cmp(&a.log_prob).unwrap_or(Ordering::Equal).then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search with an arbitrary next-token distribution.
/// `log_probs(prefix)` receives SOS plus the tokens so far. Beams stop at
/// `eos` or after `max_len` tokens; the `beam` best hypotheses are returned
/// best first (fewer only if fewer sequences exist).
pub fn beam_search_with(
    mut log_probs: impl FnMut(&[usize]) -> Vec<f64>,
    sos: usize,
    eos: usize,
    beam: usize,
    max_len: usize,
) -> Vec<Hypothesis> {
    let beam = beam.max(1);
    let mut live = vec![Hypothesis { tokens: Vec::new(), log_prob: 0.0 }];
    let mut done: Vec<Hypothesis> = Vec::new();
    for _ in 0..max_len {
        let mut cands = Vec::new();
        for h in &live {
            let mut prefix = vec![sos];
            prefix.extend(&h.tokens);
            let lp = log_probs(&prefix);
            let mut ids: Vec<usize> = (0..lp.len()).collect();
            ids.sort_by(|&a, &b| lp[b].partial_cmp(&lp[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            for &t in ids.iter().take(beam) {
                let mut tokens = h.tokens.clone();
                tokens.push(t);
                cands.push(Hypothesis { tokens, log_prob: h.log_prob + lp[t] });
            }
        }
        cands.sort_by(by_score);
        cands.truncate(beam);
        live.clear();
        for c in cands {
            if c.tokens.last() == Some(&eos) {
                done.push(c);
            } else {
                live.push(c);
            }
        }
        done.sort_by(by_score);
        let best_live = live.iter().map(|h| h.log_prob).fold(f64::NEG_INFINITY, f64::max);
        if live.is_empty() || (done.len() >= beam && done[beam - 1].log_prob >= best_live) {
            break;
        }
    }
    done.extend(live);
    done.sort_by(by_score);
    done.truncate(beam);
    done
}

/// Decodes `beam` candidate circuits for an encoded repair query.
pub fn beam_search<T: Scalar>(
    p: &ModelParams<T>,
    spec: &EncodedSpec,
    circuit: &EncodedCircuit,
    beam: usize,
    max_len: usize,
) -> Result<Vec<Hypothesis>, ModelError> {
    let memory = encode(p, spec, circuit)?;
    let max_len = max_len.min(p.config.max_circuit_len);
    Ok(beam_search_with(
        |prefix| log_probs_last(&decode(p, &memory, prefix)).into_iter().map(Scalar::f64).collect(),
        SOS,
        EOS,
        beam,
        max_len,
    ))
}

//! Iterative repair with a candidate-proposing model, and evaluation.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::{lenient, RepairSample};
use crate::check::CheckConfig;
use crate::encoding::{detokenize_circuit, tokenize_circuit, tokenize_spec, Vocab};
use crate::ltl::Specification;
use crate::metrics::{bin_report, classify_against, improvement, report_csv, BinKey, BinRecord, SampleStatus};
use crate::model::{beam_search, ModelParams, Scalar};

/// Proposes repaired circuits: up to `beam` (text, score) pairs, best
/// first.
pub trait RepairModel: Sync {
    fn propose(&self, spec: &Specification, circuit: &str, beam: usize) -> Vec<(String, f64)>;
}

/// A repair model given by a function.
pub struct CandidateFn<F>(pub F);

impl<F> RepairModel for CandidateFn<F>
where
    F: Fn(&Specification, &str, usize) -> Vec<(String, f64)> + Sync,
{
    fn propose(&self, spec: &Specification, circuit: &str, beam: usize) -> Vec<(String, f64)> {
        (self.0)(spec, circuit, beam)
    }
}

/// Beam search through a trained model.
pub struct TransformerRepairer<'a, T> {
    pub params: &'a ModelParams<T>,
    pub vocab: &'a Vocab,
    pub max_len: usize,
}

impl<T: Scalar> RepairModel for TransformerRepairer<'_, T> {
    fn propose(&self, spec: &Specification, circuit: &str, beam: usize) -> Vec<(String, f64)> {
        let (Ok(s), Ok(c)) = (
            tokenize_spec(spec, self.vocab),
            tokenize_circuit(circuit, spec.presumed_realizable, self.vocab),
        ) else {
            return Vec::new();
        };
        match beam_search(self.params, &s, &c, beam, self.max_len) {
            Ok(hyps) => hyps
                .into_iter()
                .map(|h| (detokenize_circuit(&h.tokens, self.vocab, spec.inputs.len()), h.log_prob))
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamRecord {
    pub text: String,
    pub score: f64,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub index: usize,
    pub input: String,
    pub best: String,
    pub beams: Vec<BeamRecord>,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iterations: Vec<IterationRecord>,
    pub status: SampleStatus,
}

impl IterationTrace {
    /// Iteration (1-based) at which the circuit was first repaired.
    pub fn solved_at(&self) -> Option<usize> {
        self.iterations.iter().find(|r| r.status.is_correct()).map(|r| r.index)
    }
}

impl Serialize for SampleStatus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn rank(s: SampleStatus) -> u8 {
    match s {
        SampleStatus::Match => 0,
        SampleStatus::Satisfied => 1,
        SampleStatus::Violated => 2,
        SampleStatus::ViolatedCopy => 3,
        SampleStatus::SyntaxError => 4,
    }
}

/// Repairs `circuit` for up to `max_iters` rounds. Each round classifies
/// every beam; the first round with a correct beam ends the trace,
/// otherwise the best-scoring violating beam that is not a copy of the
/// input (or failing that, any violating beam) becomes the next input.
pub fn repair_iterative(
    model: &dyn RepairModel,
    spec: &Specification,
    circuit: &str,
    target: Option<&str>,
    max_iters: usize,
    beam: usize,
    config: &CheckConfig,
) -> IterationTrace {
    let target = target.and_then(lenient);
    let mut input = circuit.to_string();
    let mut iterations = Vec::new();
    for index in 1..=max_iters.max(1) {
        let faulty = lenient(&input).unwrap_or_default();
        let beams: Vec<BeamRecord> = model
            .propose(spec, &input, beam.max(1))
            .into_iter()
            .map(|(text, score)| {
                let status = classify_against(spec, &text, &faulty, target.as_ref(), config);
                BeamRecord { text, score, status }
            })
            .collect();
        let by_score = |a: &&BeamRecord, b: &&BeamRecord| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal);
        let correct = beams.iter().filter(|b| b.status.is_correct()).min_by(|a, b| {
            rank(a.status).cmp(&rank(b.status)).then_with(|| by_score(a, b))
        });
        let chosen = correct
            .or_else(|| beams.iter().filter(|b| b.status == SampleStatus::Violated).min_by(by_score))
            .or_else(|| beams.iter().filter(|b| b.status.is_violated()).min_by(by_score));
        let (best, status) = match chosen {
            Some(b) => (b.text.clone(), b.status),
            None => (beams.first().map(|b| b.text.clone()).unwrap_or_default(), SampleStatus::SyntaxError),
        };
        let next = best.clone();
        iterations.push(IterationRecord { index, input: input.clone(), best, beams, status });
        if status.is_correct() || status == SampleStatus::SyntaxError {
            return IterationTrace { iterations, status };
        }
        input = next;
    }
    let status = iterations.last().map(|r| r.status).unwrap_or(SampleStatus::SyntaxError);
    IterationTrace { iterations, status }
}

/// Aggregates of a pipeline run over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    pub max_iters: usize,
    pub beam: usize,
    /// Share repaired (match or satisfied) within `k + 1` iterations.
    pub semantic_by_iteration: Vec<f64>,
    /// Share matching the target within `k + 1` iterations.
    pub syntactic_by_iteration: Vec<f64>,
    /// Mean number of correct beams in the first iteration.
    pub mean_correct_beams: f64,
    pub copies: usize,
    pub syntax_errors: usize,
    /// Mean `lev(prediction, target) - lev(faulty, target)` over samples
    /// whose first prediction violates the specification.
    pub mean_lev_delta: Option<f64>,
    pub subspec_deltas: BTreeMap<i64, usize>,
    #[serde(skip)]
    pub records: Vec<BinRecord>,
}

impl EvalReport {
    pub fn semantic_accuracy(&self) -> f64 {
        self.semantic_by_iteration.last().copied().unwrap_or(0.0)
    }

    pub fn syntactic_accuracy(&self) -> f64 {
        self.syntactic_by_iteration.last().copied().unwrap_or(0.0)
    }

    pub fn bin_csv(&self, key: BinKey, width: usize) -> String {
        report_csv(&bin_report(&self.records, key, width))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples {}  beam {}  iterations {}", self.samples, self.beam, self.max_iters)?;
        for (k, (sem, syn)) in self.semantic_by_iteration.iter().zip(&self.syntactic_by_iteration).enumerate() {
            writeln!(f, "n={}  semantic {:.4}  syntactic {:.4}", k + 1, sem, syn)?;
        }
        writeln!(f, "correct beams per sample {:.3}", self.mean_correct_beams)?;
        writeln!(f, "copies {}  syntax errors {}", self.copies, self.syntax_errors)?;
        match self.mean_lev_delta {
            Some(d) => writeln!(f, "mean lev delta of violating predictions {d:.3}"),
            None => writeln!(f, "mean lev delta of violating predictions n/a"),
        }
    }
}

struct SampleOutcome {
    solved_at: Option<usize>,
    matched_at: Option<usize>,
    correct_beams: usize,
    first_status: SampleStatus,
    final_status: SampleStatus,
    lev_delta: Option<i64>,
    subspec_delta: Option<i64>,
}

fn run_sample(model: &dyn RepairModel, s: &RepairSample, max_iters: usize, beam: usize, config: &CheckConfig) -> SampleOutcome {
    let trace = repair_iterative(model, &s.spec, &s.faulty, Some(&s.target), max_iters, beam, config);
    let first = &trace.iterations[0];
    let matched_at = trace.iterations.iter().find(|r| r.status == SampleStatus::Match).map(|r| r.index);
    let (mut lev_delta, mut subspec_delta) = (None, None);
    if let (Some(f), Some(t)) = (lenient(&s.faulty), lenient(&s.target)) {
        let rec = improvement(&s.spec, &f, &first.best, &t, config);
        if first.status.is_violated() {
            lev_delta = Some(rec.lev_delta);
        }
        subspec_delta = Some(rec.subspec_delta);
    }
    SampleOutcome {
        solved_at: trace.solved_at(),
        matched_at,
        correct_beams: first.beams.iter().filter(|b| b.status.is_correct()).count(),
        first_status: first.status,
        final_status: trace.status,
        lev_delta,
        subspec_delta,
    }
}

/// Runs [`repair_iterative`] on every sample (in parallel on `jobs`
/// threads, 0 for the default) and aggregates the results.
pub fn evaluate(
    model: &dyn RepairModel,
    dataset: &[RepairSample],
    max_iters: usize,
    beam: usize,
    config: &CheckConfig,
    jobs: usize,
) -> EvalReport {
    let max_iters = max_iters.max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    let outcomes: Vec<SampleOutcome> =
        pool.install(|| dataset.par_iter().map(|s| run_sample(model, s, max_iters, beam, config)).collect());
    let n = dataset.len().max(1) as f64;
    let share = |f: &dyn Fn(&SampleOutcome) -> Option<usize>, k: usize| {
        outcomes.iter().filter(|o| f(o).is_some_and(|i| i <= k)).count() as f64 / n
    };
    let deltas: Vec<i64> = outcomes.iter().filter_map(|o| o.lev_delta).collect();
    let mut subspec_deltas = BTreeMap::new();
    for d in outcomes.iter().filter_map(|o| o.subspec_delta) {
        *subspec_deltas.entry(d).or_insert(0) += 1;
    }
    let records = dataset
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| BinRecord {
            status: o.final_status,
            lev_distance: s.lev,
            spec_ast_size: s.spec.ast_size(),
            target_size: lenient(&s.target).map(|c| c.stats().size).unwrap_or(0),
        })
        .collect();
    EvalReport {
        samples: dataset.len(),
        max_iters,
        beam,
        semantic_by_iteration: (1..=max_iters).map(|k| share(&|o| o.solved_at, k)).collect(),
        syntactic_by_iteration: (1..=max_iters).map(|k| share(&|o| o.matched_at, k)).collect(),
        mean_correct_beams: outcomes.iter().map(|o| o.correct_beams).sum::<usize>() as f64 / n,
        copies: outcomes.iter().filter(|o| o.first_status == SampleStatus::ViolatedCopy).count(),
        syntax_errors: outcomes.iter().filter(|o| o.first_status == SampleStatus::SyntaxError).count(),
        mean_lev_delta: (!deltas.is_empty()).then(|| deltas.iter().sum::<i64>() as f64 / deltas.len() as f64),
        subspec_deltas,
        records,
    }
}

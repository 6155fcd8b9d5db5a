//! Repair dataset generation, iterative repair and evaluation.

mod repair;
pub mod toy;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aiger::{parse_aiger, validate, AigerCircuit, ParseMode};
use crate::check::{check_with, CheckConfig};
use crate::encoding::{circuit_body_tokens, tokenize_circuit, tokenize_spec, EncodingError, Vocab, EOS};
use crate::model::TrainSample;
use crate::corrupt::{corrupt_circuit, CorruptError, CorruptionParams};
use crate::ltl::{LtlError, SpecRecord, Specification};
use crate::metrics::{circuit_distance, classify_prediction, SampleStatus};
use crate::rng::sample_rng;

pub use repair::{
    evaluate, repair_iterative, BeamRecord, CandidateFn, EvalReport, IterationRecord, IterationTrace, RepairModel,
    TransformerRepairer,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Corrupt(#[from] CorruptError),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Corrupted,
    Misprediction,
}

/// A specification, a defective circuit and a correct target.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairSample {
    pub spec: Specification,
    pub faulty: String,
    pub target: String,
    pub provenance: Provenance,
    /// Distance between faulty and target.
    pub lev: usize,
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub spec: SpecRecord,
    pub faulty: String,
    pub target: String,
    pub provenance: Provenance,
}

fn lenient(text: &str) -> Option<AigerCircuit> {
    parse_aiger(text, ParseMode::Lenient).ok()
}

fn text_distance(a: &str, b: &str) -> usize {
    match (lenient(a), lenient(b)) {
        (Some(x), Some(y)) => circuit_distance(&x, &y),
        _ => usize::MAX,
    }
}

impl RepairSample {
    pub fn new(spec: Specification, faulty: String, target: String, provenance: Provenance) -> Self {
        let lev = text_distance(&faulty, &target);
        RepairSample { spec, faulty, target, provenance, lev }
    }

    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            spec: self.spec.to_record(),
            faulty: self.faulty.clone(),
            target: self.target.clone(),
            provenance: self.provenance,
        }
    }

    pub fn from_record(r: SampleRecord) -> Result<Self, LtlError> {
        Ok(RepairSample::new(r.spec.into_spec()?, r.faulty, r.target, r.provenance))
    }

    fn key(&self) -> (String, String, String) {
        let canon = |t: &str| lenient(t).map(|c| c.serialize(false)).unwrap_or_else(|| t.to_string());
        (self.spec.to_text(), canon(&self.faulty), canon(&self.target))
    }
}

/// Writes one JSON object per line.
pub fn write_dataset(samples: &[RepairSample], mut w: impl Write) -> Result<(), PipelineError> {
    for s in samples {
        let line = serde_json::to_string(&s.to_record()).map_err(|e| PipelineError::Other(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_dataset(r: impl BufRead) -> Result<Vec<RepairSample>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord =
            serde_json::from_str(&line).map_err(|e| PipelineError::Format { line: i + 1, msg: e.to_string() })?;
        out.push(RepairSample::from_record(rec).map_err(|e| PipelineError::Format { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

/// Something that proposes circuits for a specification, standing in for
/// a synthesis model queried with a small beam.
pub trait CandidateSource: Sync {
    fn candidates(&self, spec: &Specification) -> Vec<String>;
}

impl<F: Fn(&Specification) -> Vec<String> + Sync> CandidateSource for F {
    fn candidates(&self, spec: &Specification) -> Vec<String> {
        self(spec)
    }
}

/// Swaps the target for the correct candidate closest to the faulty
/// circuit when that is strictly closer than the current target.
pub fn replace_misleading_target(sample: &RepairSample, candidates: &[String], config: &CheckConfig) -> RepairSample {
    let Some(faulty) = lenient(&sample.faulty) else { return sample.clone() };
    let mut best: Option<(usize, AigerCircuit)> = None;
    for text in candidates {
        let Some(c) = lenient(text) else { continue };
        if !validate(&c).valid_strict || !matches!(check_with(&c, &sample.spec, config), Ok(v) if v.is_satisfied()) {
            continue;
        }
        let d = circuit_distance(&faulty, &c);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, c));
        }
    }
    match best {
        Some((d, c)) if d < sample.lev => RepairSample { target: c.serialize(false), lev: d, ..sample.clone() },
        _ => sample.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub params: CorruptionParams,
    /// Corruptions drawn per corpus pair.
    pub draws_per_pair: usize,
    /// Share of corrupted samples in the output.
    pub mix_corrupted: f64,
    pub max_lev: usize,
    pub seed: u64,
    pub check: CheckConfig,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            params: CorruptionParams::default(),
            draws_per_pair: 1,
            mix_corrupted: 0.61,
            max_lev: 50,
            seed: 0,
            check: CheckConfig::default(),
            jobs: 0,
        }
    }
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool")
}

/// Builds repair samples from correct pairs (corrupted with per-sample
/// seeded streams) and from mispredictions (kept when they violate their
/// specification), replaces misleading targets, filters by distance,
/// deduplicates and mixes the two pools to `mix_corrupted`.
pub fn generate_dataset(
    corpus: &[(Specification, AigerCircuit)],
    mispredictions: &[(Specification, String, String)],
    config: &GenConfig,
    candidates: Option<&dyn CandidateSource>,
) -> Result<Vec<RepairSample>, PipelineError> {
    config.params.validate()?;
    let draws = config.draws_per_pair.max(1);
    let work = |i: usize| -> Result<Option<RepairSample>, PipelineError> {
        let (spec, circuit) = &corpus[i / draws];
        let mut rng = sample_rng(config.seed, i as u64);
        let faulty = corrupt_circuit(circuit, &config.params, &mut rng)?;
        let s = RepairSample::new(spec.clone(), faulty.serialize(false), circuit.serialize(false), Provenance::Corrupted);
        Ok(Some(s))
    };
    let threads = pool(config.jobs);
    let corrupted: Vec<Option<RepairSample>> =
        threads.install(|| (0..corpus.len() * draws).into_par_iter().map(work).collect::<Result<_, _>>())?;
    let mispredicted: Vec<Option<RepairSample>> = threads.install(|| {
        mispredictions
            .par_iter()
            .map(|(spec, faulty, target)| {
                let (Some(f), Some(t)) = (lenient(faulty), lenient(target)) else { return None };
                let status = classify_prediction(spec, faulty, &f, &t, &config.check);
                status.is_violated().then(|| {
                    RepairSample::new(spec.clone(), f.serialize(false), t.serialize(false), Provenance::Misprediction)
                })
            })
            .collect()
    });
    let finish = |pool: Vec<Option<RepairSample>>| -> Vec<RepairSample> {
        let replaced: Vec<RepairSample> = threads.install(|| {
            pool.into_par_iter()
                .flatten()
                .map(|s| match candidates {
                    Some(src) => replace_misleading_target(&s, &src.candidates(&s.spec), &config.check),
                    None => s,
                })
                .collect()
        });
        let mut seen = HashSet::new();
        replaced.into_iter().filter(|s| s.lev > 0 && s.lev <= config.max_lev && seen.insert(s.key())).collect()
    };
    let corrupted = finish(corrupted);
    let mispredicted = finish(mispredicted);
    let out = mix(corrupted, mispredicted, config.mix_corrupted);
    if out.is_empty() {
        return Err(PipelineError::Empty);
    }
    Ok(out)
}

/// Largest interleaving of the two pools with the requested share of `a`.
fn mix(a: Vec<RepairSample>, b: Vec<RepairSample>, share_a: f64) -> Vec<RepairSample> {
    let share = share_a.clamp(0.0, 1.0);
    let (na, nb) = if share >= 1.0 {
        (a.len(), 0)
    } else if share <= 0.0 {
        (0, b.len())
    } else {
        let total = (a.len() as f64 / share).min(b.len() as f64 / (1.0 - share)).floor();
        let na = ((total * share).round() as usize).min(a.len());
        (na, ((total as usize).saturating_sub(na)).min(b.len()))
    };
    let mut out = Vec::with_capacity(na + nb);
    let (mut ia, mut ib) = (a.into_iter().take(na), b.into_iter().take(nb));
    let (mut ta, mut tb) = (0usize, 0usize);
    while ta < na || tb < nb {
        // keep the running share of `a` as close to na / (na + nb) as possible
        let take_a = tb >= nb || (ta < na && (ta as f64 + 0.5) * (nb as f64) <= (tb as f64 + 0.5) * (na as f64));
        if take_a {
            out.push(ia.next().unwrap());
            ta += 1;
        } else {
            out.push(ib.next().unwrap());
            tb += 1;
        }
    }
    out
}

/// Model input and target tokens of a sample.
pub fn to_train_sample(sample: &RepairSample, vocab: &Vocab) -> Result<TrainSample, EncodingError> {
    let mut target = circuit_body_tokens(&sample.target, vocab)?;
    target.push(EOS);
    Ok(TrainSample {
        spec: tokenize_spec(&sample.spec, vocab)?,
        circuit: tokenize_circuit(&sample.faulty, sample.spec.presumed_realizable, vocab)?,
        target,
    })
}

/// Splits samples into training and held-out parts after a seeded shuffle.
pub fn split_dataset(mut samples: Vec<RepairSample>, held_out: usize, seed: u64) -> (Vec<RepairSample>, Vec<RepairSample>) {
    use rand::seq::SliceRandom;
    samples.shuffle(&mut crate::rng::seeded(seed));
    let k = held_out.min(samples.len());
    let test = samples.split_off(samples.len() - k);
    (samples, test)
}

/// Status of the faulty circuit of every sample, for corpus statistics.
pub fn faulty_statuses(samples: &[RepairSample], config: &CheckConfig) -> Vec<SampleStatus> {
    samples
        .iter()
        .map(|s| {
            let t = lenient(&s.target).unwrap_or_default();
            let f = lenient(&s.faulty).unwrap_or_default();
            classify_prediction(&s.spec, &s.faulty, &f, &t, config)
        })
        .collect()
}

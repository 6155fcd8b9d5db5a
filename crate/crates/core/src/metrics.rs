//! Edit distances, prediction classification, improvement measures and
//! difficulty-binned reports.

use std::collections::BTreeMap;
use std::fmt;

use crate::aiger::{parse_aiger, validate, AigerCircuit, AigerError, CanonicalToken, ParseMode};
use crate::check::{check_with, count_satisfied_subspecs_with, CheckConfig, Verdict};
use crate::ltl::Specification;

/// Insert/delete/substitute edit distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let next = (row[j + 1] + 1).min(row[j] + 1).min(diag + usize::from(x != y));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Character-wise distance between two strings.
pub fn levenshtein_chars(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// The symbols distances are measured in: one per integer or word plus one
/// per line break.
pub fn circuit_tokens(circuit: &AigerCircuit) -> Vec<String> {
    circuit
        .canonical_tokens()
        .into_iter()
        .map(|t| match t {
            CanonicalToken::Word(w) => w.to_string(),
            CanonicalToken::Int(n) => n.to_string(),
            CanonicalToken::Newline => "\n".to_string(),
        })
        .collect()
}

/// Tokens of arbitrary text in the same units, for predictions that do not
/// parse.
pub fn text_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        out.extend(line.split_whitespace().map(str::to_string));
        out.push("\n".to_string());
    }
    out
}

/// Token-level distance between canonical serializations.
pub fn circuit_distance(c1: &AigerCircuit, c2: &AigerCircuit) -> usize {
    levenshtein(&circuit_tokens(c1), &circuit_tokens(c2))
}

pub fn circuit_text_distance(t1: &str, t2: &str) -> Result<usize, AigerError> {
    let c1 = parse_aiger(t1, ParseMode::Lenient)?;
    let c2 = parse_aiger(t2, ParseMode::Lenient)?;
    Ok(circuit_distance(&c1, &c2))
}

/// Distance from prediction text to a circuit; unparseable text is
/// compared token by token as written.
fn prediction_distance(prediction: &str, target: &AigerCircuit) -> usize {
    let tokens = match parse_aiger(prediction, ParseMode::Lenient) {
        Ok(c) => circuit_tokens(&c),
        Err(_) => text_tokens(prediction),
    };
    levenshtein(&tokens, &circuit_tokens(target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleStatus {
    Match,
    Satisfied,
    Violated,
    ViolatedCopy,
    SyntaxError,
}

impl SampleStatus {
    pub const ALL: [SampleStatus; 5] = [
        SampleStatus::Match,
        SampleStatus::Satisfied,
        SampleStatus::Violated,
        SampleStatus::ViolatedCopy,
        SampleStatus::SyntaxError,
    ];

    pub fn is_correct(self) -> bool {
        matches!(self, SampleStatus::Match | SampleStatus::Satisfied)
    }

    pub fn is_violated(self) -> bool {
        matches!(self, SampleStatus::Violated | SampleStatus::ViolatedCopy)
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleStatus::Match => "match",
            SampleStatus::Satisfied => "satisfied",
            SampleStatus::Violated => "violated",
            SampleStatus::ViolatedCopy => "violated_copy",
            SampleStatus::SyntaxError => "syntax_error",
        }
    }
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies a predicted circuit. Check failures (state caps, atoms that
/// cannot be resolved) count as violations.
pub fn classify_prediction(
    spec: &Specification,
    prediction: &str,
    faulty: &AigerCircuit,
    target: &AigerCircuit,
    config: &CheckConfig,
) -> SampleStatus {
    classify_against(spec, prediction, faulty, Some(target), config)
}

/// [`classify_prediction`] when the target may be unknown, in which case
/// no prediction is a match.
pub fn classify_against(
    spec: &Specification,
    prediction: &str,
    faulty: &AigerCircuit,
    target: Option<&AigerCircuit>,
    config: &CheckConfig,
) -> SampleStatus {
    let Ok(pred) = parse_aiger(prediction, ParseMode::Lenient) else {
        return SampleStatus::SyntaxError;
    };
    if !validate(&pred).valid_strict {
        return SampleStatus::SyntaxError;
    }
    let text = pred.serialize(false);
    if target.is_some_and(|t| text == t.serialize(false)) {
        return SampleStatus::Match;
    }
    match check_with(&pred, spec, config) {
        Ok(Verdict::Satisfied) | Ok(Verdict::Match) => SampleStatus::Satisfied,
        Ok(Verdict::SyntaxError(_)) => SampleStatus::SyntaxError,
        Ok(Verdict::Violated(_)) | Err(_) => {
            if text == faulty.serialize(false) {
                SampleStatus::ViolatedCopy
            } else {
                SampleStatus::Violated
            }
        }
    }
}

/// Syntactic and semantic progress of a prediction over the faulty input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImprovementRecord {
    /// `lev(prediction, target) - lev(faulty, target)`; negative is better.
    pub lev_delta: i64,
    /// Sub-specifications satisfied by the prediction minus those satisfied
    /// by the faulty circuit; positive is better.
    pub subspec_delta: i64,
}

pub fn improvement(
    spec: &Specification,
    faulty: &AigerCircuit,
    prediction: &str,
    target: &AigerCircuit,
    config: &CheckConfig,
) -> ImprovementRecord {
    let count = |c: &AigerCircuit| count_satisfied_subspecs_with(c, spec, config).unwrap_or(0) as i64;
    let pred_count = parse_aiger(prediction, ParseMode::Lenient).map(|c| count(&c)).unwrap_or(0);
    ImprovementRecord {
        lev_delta: prediction_distance(prediction, target) as i64 - circuit_distance(faulty, target) as i64,
        subspec_delta: pred_count - count(faulty),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinKey {
    LevDistance,
    SpecAstSize,
    TargetSize,
}

impl std::str::FromStr for BinKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lev_distance" => Ok(BinKey::LevDistance),
            "spec_ast_size" => Ok(BinKey::SpecAstSize),
            "target_size" => Ok(BinKey::TargetSize),
            _ => Err(format!("unknown bin key {s:?}")),
        }
    }
}

/// One evaluated sample as seen by [`bin_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinRecord {
    pub status: SampleStatus,
    pub lev_distance: usize,
    pub spec_ast_size: usize,
    pub target_size: usize,
}

impl BinRecord {
    fn key(&self, key: BinKey) -> usize {
        match key {
            BinKey::LevDistance => self.lev_distance,
            BinKey::SpecAstSize => self.spec_ast_size,
            BinKey::TargetSize => self.target_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinRow {
    pub lo: usize,
    pub hi: usize,
    pub counts: [usize; 5],
    pub sem_acc: f64,
}

impl BinRow {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Groups records into bins `[k·w, (k+1)·w)` of the chosen key. Only
/// non-empty bins are listed, in ascending order.
pub fn bin_report(records: &[BinRecord], key: BinKey, width: usize) -> Vec<BinRow> {
    let width = width.max(1);
    let mut bins: BTreeMap<usize, [usize; 5]> = BTreeMap::new();
    for r in records {
        let counts = bins.entry(r.key(key) / width).or_default();
        counts[SampleStatus::ALL.iter().position(|s| *s == r.status).unwrap()] += 1;
    }
    bins.into_iter()
        .map(|(k, counts)| {
            let total: usize = counts.iter().sum();
            BinRow { lo: k * width, hi: (k + 1) * width, counts, sem_acc: (counts[0] + counts[1]) as f64 / total as f64 }
        })
        .collect()
}

pub const REPORT_HEADER: &str = "bin_lo,bin_hi,match,satisfied,violated,violated_copy,syntax_error,sem_acc";

pub fn report_csv(rows: &[BinRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let c = r.counts;
        out.push_str(&format!("{},{},{},{},{},{},{},{:.4}\n", r.lo, r.hi, c[0], c[1], c[2], c[3], c[4], r.sem_acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::arbiter;
    use crate::ltl::arbiter_spec;

    fn strict(t: &str) -> AigerCircuit {
        parse_aiger(t, ParseMode::Strict).unwrap()
    }

    #[test]
    fn textbook_distances() {
        assert_eq!(levenshtein_chars("kitten", "sitting"), 3);
        assert_eq!(levenshtein_chars("flaw", "flaw"), 0);
        assert_eq!(levenshtein_chars("", "abc"), 3);
        assert_eq!(levenshtein::<u8>(&[1, 2], &[]), 2);
    }

    #[test]
    fn arbiter_distances() {
        let (a, b, c) = (strict(arbiter::FAULTY), strict(arbiter::PARTIAL), strict(arbiter::CORRECT));
        assert_eq!(circuit_distance(&c, &c), 0);
        assert_eq!(circuit_distance(&a, &c), 15);
        assert_eq!(circuit_distance(&b, &c), 10);
    }

    #[test]
    fn deleting_a_line() {
        let c = strict(arbiter::CORRECT);
        let mut d = c.clone();
        d.ands.remove(1);
        // three integers and a newline, plus the AND count in the header
        assert_eq!(circuit_distance(&c, &d), 5);
    }

    #[test]
    fn classification() {
        let spec = arbiter_spec();
        let cfg = CheckConfig::default();
        let (a, c) = (strict(arbiter::FAULTY), strict(arbiter::CORRECT));
        assert_eq!(classify_prediction(&spec, arbiter::CORRECT, &a, &c, &cfg), SampleStatus::Match);
        assert_eq!(classify_prediction(&spec, arbiter::FAULTY, &a, &c, &cfg), SampleStatus::ViolatedCopy);
        assert_eq!(classify_prediction(&spec, arbiter::PARTIAL, &a, &c, &cfg), SampleStatus::Violated);
        assert_eq!(classify_prediction(&spec, "aag x\n", &a, &c, &cfg), SampleStatus::SyntaxError);
        // same circuit with the two latches swapped is correct but not equal
        let swapped = "aag 12 5 2 5 5\n2\n4\n6\n8\n10\n12 24\n14 15\n16\n18\n20\n22\n0\n16 13 15\n18 13 14\n20 12 15\n22 12 14\n24 23 17\n";
        assert_eq!(classify_prediction(&spec, swapped, &a, &c, &cfg), SampleStatus::Satisfied);
    }

    #[test]
    fn improvement_records() {
        let spec = arbiter_spec();
        let cfg = CheckConfig::default();
        let (a, c) = (strict(arbiter::FAULTY), strict(arbiter::CORRECT));
        let same = improvement(&spec, &a, arbiter::FAULTY, &c, &cfg);
        assert_eq!(same, ImprovementRecord { lev_delta: 0, subspec_delta: 0 });
        let target = improvement(&spec, &a, arbiter::CORRECT, &c, &cfg);
        assert_eq!(target.lev_delta, -15);
        let faulty_count = count_satisfied_subspecs_with(&a, &spec, &cfg).unwrap() as i64;
        assert_eq!(target.subspec_delta, 5 - faulty_count);
        let partial = improvement(&spec, &a, arbiter::PARTIAL, &c, &cfg);
        assert_eq!(partial, ImprovementRecord { lev_delta: -5, subspec_delta: -1 });
    }

    #[test]
    fn binning() {
        assert!(bin_report(&[], BinKey::LevDistance, 5).is_empty());
        let r = BinRecord { status: SampleStatus::Satisfied, lev_distance: 13, spec_ast_size: 4, target_size: 2 };
        let rows = bin_report(&[r], BinKey::LevDistance, 5);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].lo, rows[0].hi, rows[0].sem_acc), (10, 15, 1.0));
        assert!(report_csv(&rows).starts_with(REPORT_HEADER));
    }
}

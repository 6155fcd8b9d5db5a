//! Vocabulary, tokenization and positional encodings for the repair model.

use std::collections::HashMap;

use thiserror::Error;

use crate::aiger::{parse_aiger, AigerError, ParseMode};
use crate::ltl::{Ltl, Specification};

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const REAL: usize = 3;
pub const UNREAL: usize = 4;

pub const MAX_SEGMENTS: usize = 12;
pub const MAX_SEGMENT_LEN: usize = 25;
/// Largest integer a circuit token may carry.
pub const MAX_INT: u32 = 61;
pub const DEFAULT_TREE_DEPTH: usize = 16;

const OPERATORS: [&str; 12] = ["true", "false", "!", "&", "|", "->", "<->", "X", "U", "R", "G", "F"];

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("{count} properties exceed the limit of {MAX_SEGMENTS}")]
    TooManySegments { count: usize },
    #[error("property {index} has {len} tokens, limit {MAX_SEGMENT_LEN}")]
    SegmentTooLong { index: usize, len: usize },
    #[error("atom '{0}' is not in the vocabulary")]
    UnknownAtom(String),
    #[error("tree depth {depth} exceeds {max}")]
    DepthOverflow { depth: usize, max: usize },
    #[error("integer {0} outside the token range 0..=61")]
    IntOutOfRange(u32),
    #[error(transparent)]
    Aiger(#[from] AigerError),
    #[error("malformed vocabulary: {0}")]
    BadVocab(String),
}

/// Token names and ids. One vocabulary serves specifications, circuits and
/// targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::standard()
    }
}

impl Vocab {
    /// Specials, LTL operators, `i0..i4`, `o0..o4`, integers `0..=61`, then
    /// the newline token.
    pub fn standard() -> Vocab {
        let mut names: Vec<String> = ["<pad>", "<sos>", "<eos>", "<real>", "<unreal>"].map(String::from).to_vec();
        names.extend(OPERATORS.iter().map(|s| s.to_string()));
        names.extend((0..5).map(|k| format!("i{k}")));
        names.extend((0..5).map(|k| format!("o{k}")));
        names.extend((0..=MAX_INT).map(|n| n.to_string()));
        names.push("<nl>".into());
        Vocab::from_names(names).expect("standard vocabulary is bijective")
    }

    fn from_names(names: Vec<String>) -> Result<Vocab, EncodingError> {
        let ids: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        if ids.len() != names.len() {
            return Err(EncodingError::BadVocab("duplicate token".into()));
        }
        Ok(Vocab { names, ids })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn int_id(&self, n: u32) -> Option<usize> {
        if n > MAX_INT {
            return None;
        }
        self.id(&n.to_string())
    }

    pub fn newline(&self) -> usize {
        self.ids["<nl>"]
    }

    /// Integer carried by a token, if it is an integer token.
    pub fn int_value(&self, id: usize) -> Option<u32> {
        self.name(id).and_then(|n| n.parse().ok())
    }

    /// One token per line; the line number is the id.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.names {
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Vocab, EncodingError> {
        let names: Vec<String> = text.lines().map(str::to_string).collect();
        if names.first().map(String::as_str) != Some("<pad>") {
            return Err(EncodingError::BadVocab("id 0 must be <pad>".into()));
        }
        Vocab::from_names(names)
    }
}

/// A node's path from the root: one branch index (0 = left or only child,
/// 1 = right) per edge.
pub type TreePath = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Assumption,
    Guarantee,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub tokens: Vec<usize>,
    pub paths: Vec<TreePath>,
}

impl Segment {
    pub fn positions(&self, max_depth: usize, dim: usize) -> Result<Vec<Vec<f32>>, EncodingError> {
        self.paths.iter().map(|p| tree_position(p, max_depth, dim)).collect()
    }
}

/// A specification as model input: assumptions first, then guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSpec {
    pub segments: Vec<Segment>,
}

impl EncodedSpec {
    pub fn num_tokens(&self) -> usize {
        self.segments.iter().map(|s| s.tokens.len()).sum()
    }
}

fn formula_tokens(f: &Ltl, vocab: &Vocab) -> Result<(Vec<usize>, Vec<TreePath>), EncodingError> {
    let mut tokens = Vec::new();
    let mut paths = Vec::new();
    let mut stack: Vec<(&Ltl, TreePath)> = vec![(f, Vec::new())];
    while let Some((node, path)) = stack.pop() {
        let name = match node {
            Ltl::Atom(a) => a.as_str(),
            _ => node.op().symbol().unwrap(),
        };
        tokens.push(vocab.id(name).ok_or_else(|| EncodingError::UnknownAtom(name.to_string()))?);
        for (branch, child) in node.children().into_iter().enumerate().rev() {
            let mut p = path.clone();
            p.push(branch as u8);
            stack.push((child, p));
        }
        paths.push(path);
    }
    Ok((tokens, paths))
}

/// Prefix-order tokens of every property with their tree paths.
pub fn tokenize_spec(spec: &Specification, vocab: &Vocab) -> Result<EncodedSpec, EncodingError> {
    let count = spec.assumptions.len() + spec.guarantees.len();
    if count > MAX_SEGMENTS {
        return Err(EncodingError::TooManySegments { count });
    }
    let kinds = spec
        .assumptions
        .iter()
        .map(|f| (SegmentKind::Assumption, f))
        .chain(spec.guarantees.iter().map(|f| (SegmentKind::Guarantee, f)));
    let mut segments = Vec::with_capacity(count);
    for (index, (kind, f)) in kinds.enumerate() {
        let (tokens, paths) = formula_tokens(f, vocab)?;
        if tokens.len() > MAX_SEGMENT_LEN {
            return Err(EncodingError::SegmentTooLong { index, len: tokens.len() });
        }
        segments.push(Segment { kind, tokens, paths });
    }
    Ok(EncodedSpec { segments })
}

/// Tree position of a path: slot pair `t` holds the one-hot branch taken
/// `t` edges above the node, so a child's vector is its parent's shifted by
/// one slot pair with the child's own branch in front. The `2·max_depth`
/// base vector is tiled (and truncated) to `dim`.
pub fn tree_position(path: &[u8], max_depth: usize, dim: usize) -> Result<Vec<f32>, EncodingError> {
    if path.len() > max_depth {
        return Err(EncodingError::DepthOverflow { depth: path.len(), max: max_depth });
    }
    let mut base = vec![0.0f32; 2 * max_depth];
    for (t, &branch) in path.iter().rev().enumerate() {
        base[2 * t + branch as usize] = 1.0;
    }
    Ok((0..dim).map(|i| if base.is_empty() { 0.0 } else { base[i % base.len()] }).collect())
}

/// Tree positions of every node of `formula` in prefix order.
pub fn tree_positional_encoding(formula: &Ltl, max_depth: usize, dim: usize) -> Result<Vec<Vec<f32>>, EncodingError> {
    let mut out = Vec::new();
    let mut stack: Vec<(&Ltl, TreePath)> = vec![(formula, Vec::new())];
    while let Some((node, path)) = stack.pop() {
        out.push(tree_position(&path, max_depth, dim)?);
        for (branch, child) in node.children().into_iter().enumerate().rev() {
            let mut p = path.clone();
            p.push(branch as u8);
            stack.push((child, p));
        }
    }
    Ok(out)
}

/// Sinusoidal encoding of sequence position `pos`.
pub fn sinusoidal_position(pos: usize, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|i| {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / dim as f64);
            let angle = pos as f64 * rate;
            (if i % 2 == 0 { angle.sin() } else { angle.cos() }) as f32
        })
        .collect()
}

/// Circuit tokens: the realizability marker followed by the body, one token
/// per integer and a newline token after each line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCircuit {
    pub tokens: Vec<usize>,
}

impl EncodedCircuit {
    pub fn positions(&self, dim: usize) -> Vec<Vec<f32>> {
        (0..self.tokens.len()).map(|p| sinusoidal_position(p, dim)).collect()
    }
}

/// Body tokens of a circuit text without any prefix.
pub fn circuit_body_tokens(text: &str, vocab: &Vocab) -> Result<Vec<usize>, EncodingError> {
    let circuit = parse_aiger(text, ParseMode::Lenient)?;
    let mut tokens = Vec::new();
    for line in circuit.body_lines() {
        for n in line {
            tokens.push(vocab.int_id(n).ok_or(EncodingError::IntOutOfRange(n))?);
        }
        tokens.push(vocab.newline());
    }
    Ok(tokens)
}

pub fn tokenize_circuit(text: &str, realizable: bool, vocab: &Vocab) -> Result<EncodedCircuit, EncodingError> {
    let mut tokens = vec![if realizable { REAL } else { UNREAL }];
    tokens.extend(circuit_body_tokens(text, vocab)?);
    Ok(EncodedCircuit { tokens })
}

/// Rebuilds circuit text from decoder output. Specials are dropped (the
/// stream ends at the first EOS), lines are split at newline tokens and
/// assigned to sections by arity: `num_inputs` single-integer lines, then
/// pairs as latches, then single-integer lines as outputs, then triples as
/// AND gates. Lines that fit nowhere are kept verbatim so that malformed
/// output fails to parse downstream.
pub fn detokenize_circuit(ids: &[usize], vocab: &Vocab, num_inputs: usize) -> String {
    let mut lines: Vec<Vec<String>> = vec![Vec::new()];
    for &id in ids {
        match id {
            EOS => break,
            PAD | SOS | REAL | UNREAL => continue,
            _ if id == vocab.newline() => lines.push(Vec::new()),
            _ => lines.last_mut().unwrap().push(vocab.name(id).unwrap_or("?").to_string()),
        }
    }
    lines.retain(|l| !l.is_empty());
    if lines.is_empty() {
        return String::new();
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Stage {
        Inputs,
        Latches,
        Outputs,
        Ands,
    }
    let mut stage = Stage::Inputs;
    let mut counts = [0usize; 4];
    let mut max_var = 0u32;
    for line in &lines {
        let arity = line.len();
        if stage == Stage::Inputs && (arity != 1 || counts[0] == num_inputs) {
            stage = Stage::Latches;
        }
        if stage == Stage::Latches && arity != 2 {
            stage = Stage::Outputs;
        }
        if stage == Stage::Outputs && arity != 1 {
            stage = Stage::Ands;
        }
        let fits = match stage {
            Stage::Inputs | Stage::Outputs => arity == 1,
            Stage::Latches => arity == 2,
            Stage::Ands => arity == 3,
        };
        if fits {
            counts[stage as usize] += 1;
        }
        for n in line.iter().filter_map(|t| t.parse::<u32>().ok()) {
            max_var = max_var.max(n / 2);
        }
    }
    let mut out = format!("aag {} {} {} {} {}\n", max_var, counts[0], counts[1], counts[2], counts[3]);
    for line in lines {
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::arbiter;
    use crate::ltl::{arbiter_spec, parse_ltl};

    #[test]
    fn vocab_layout() {
        let v = Vocab::standard();
        assert_eq!(v.len(), 90);
        assert_eq!(v.name(PAD), Some("<pad>"));
        assert_eq!(v.int_value(v.int_id(61).unwrap()), Some(61));
        assert!(v.int_id(62).is_none());
        assert_eq!(Vocab::from_dump(&v.dump()).unwrap(), v);
        for id in 0..v.len() {
            assert_eq!(v.id(v.name(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn guarantee_in_prefix_order() {
        let v = Vocab::standard();
        let spec = Specification::new(
            vec!["i0".into()],
            vec!["o0".into()],
            vec![],
            vec![parse_ltl("G (i0 -> F o0)", None).unwrap()],
            true,
        )
        .unwrap();
        let enc = tokenize_spec(&spec, &v).unwrap();
        let names: Vec<&str> = enc.segments[0].tokens.iter().map(|&t| v.name(t).unwrap()).collect();
        assert_eq!(names, ["G", "->", "i0", "F", "o0"]);
        assert_eq!(enc.segments[0].paths, vec![vec![], vec![0], vec![0, 0], vec![0, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn arbiter_segments_and_limits() {
        let v = Vocab::standard();
        let enc = tokenize_spec(&arbiter_spec(), &v).unwrap();
        assert_eq!(enc.segments.len(), 5);
        assert!(enc.segments.iter().all(|s| s.kind == SegmentKind::Guarantee));
        let mut spec = arbiter_spec();
        spec.guarantees = vec![parse_ltl("o0", None).unwrap(); 13];
        assert_eq!(tokenize_spec(&spec, &v), Err(EncodingError::TooManySegments { count: 13 }));
        spec.guarantees = vec![parse_ltl("foo", None).unwrap()];
        assert!(matches!(tokenize_spec(&spec, &v), Err(EncodingError::UnknownAtom(_))));
    }

    #[test]
    fn tree_positions() {
        let root = tree_position(&[], 16, 64).unwrap();
        assert!(root.iter().all(|&x| x == 0.0));
        let until = parse_ltl("i0 U o0", None).unwrap();
        let pos = tree_positional_encoding(&until, 16, 32).unwrap();
        let diff: Vec<usize> = (0..32).filter(|&i| pos[1][i] != pos[2][i]).collect();
        assert_eq!(diff, vec![0, 1]);
        let f = parse_ltl("F o0", None).unwrap();
        let pos = tree_positional_encoding(&f, 4, 8).unwrap();
        let mut expect = vec![0.0; 8];
        expect[2..].copy_from_slice(&pos[0][..6]);
        expect[0] = 1.0;
        assert_eq!(pos[1], expect);
        assert!(matches!(tree_position(&[0; 5], 4, 8), Err(EncodingError::DepthOverflow { .. })));
    }

    #[test]
    fn circuit_tokens() {
        let v = Vocab::standard();
        let enc = tokenize_circuit("aag 1 1 0 0 0\n2\n", true, &v).unwrap();
        assert_eq!(enc.tokens, vec![REAL, v.int_id(2).unwrap(), v.newline()]);
        assert_eq!(detokenize_circuit(&enc.tokens, &v, 1), "aag 1 1 0 0 0\n2\n");
        let arb = tokenize_circuit(arbiter::CORRECT, false, &v).unwrap();
        assert_eq!(arb.tokens.len(), 1 + (5 * 2 + 2 * 3 + 5 * 2 + 5 * 4));
        assert_eq!(arb.tokens[0], UNREAL);
        assert!(matches!(tokenize_circuit("aag 31 1 0 1 0\n62\n62\n", true, &v), Err(EncodingError::IntOutOfRange(62))));
        assert_eq!(detokenize_circuit(&[], &v, 3), "");
    }

    #[test]
    fn detokenize_round_trip() {
        let v = Vocab::standard();
        for text in [arbiter::FAULTY, arbiter::PARTIAL, arbiter::CORRECT] {
            let enc = tokenize_circuit(text, true, &v).unwrap();
            assert_eq!(detokenize_circuit(&enc.tokens, &v, 5), text);
        }
    }
}

//! Independent oracle for the model checker: enumerate the lassos of a
//! small circuit and evaluate the formula on each one directly.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use crate::aiger::{validate, AigerCircuit, ValidationReport};
use crate::ltl::{eval_lasso, LassoTrace, Ltl, Specification};

use super::ts::{circuit_to_ts, resolve_atoms, AtomSource};
use super::{property_for, CheckError, Counterexample, SyntaxIssue, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteBounds {
    pub max_latches: usize,
    pub max_inputs: usize,
    pub max_formula_size: usize,
    /// Longest `|prefix| + |loop|` enumerated; `None` derives it from the
    /// circuit (see [`BruteBounds::lasso_len`]).
    pub max_len: Option<usize>,
}

impl Default for BruteBounds {
    fn default() -> Self {
        BruteBounds { max_latches: 4, max_inputs: 3, max_formula_size: 7, max_len: None }
    }
}

impl BruteBounds {
    /// Input-free circuits produce a single word, a lasso of at most
    /// `2^latches` steps. Otherwise every input sequence up to length
    /// `max(12 / inputs, 2)` is explored (about `2^12` sequences).
    pub fn lasso_len(&self, latches: usize, inputs: usize) -> usize {
        if let Some(n) = self.max_len {
            return n;
        }
        if inputs == 0 {
            1 << latches
        } else {
            (12 / inputs).max(2)
        }
    }
}

/// A lasso of the circuit: the letters over the mapped atoms plus the
/// circuit input bits producing them.
#[derive(Debug, Clone)]
pub struct CircuitLasso {
    pub trace: LassoTrace,
    pub inputs_prefix: Vec<u64>,
    pub inputs_loop: Vec<u64>,
}

/// All lassos of the circuit's transition system with
/// `|prefix| + |loop| <= max_len`, deduplicated by the infinite word they
/// denote.
pub fn enumerate_lassos(
    circuit: &AigerCircuit,
    sources: &[AtomSource],
    alphabet: &[String],
    max_len: usize,
) -> Result<Vec<CircuitLasso>, CheckError> {
    let ts = circuit_to_ts(circuit, sources, 1 << 20)?;
    let mut seen: HashSet<(Vec<u64>, Vec<u64>)> = HashSet::new();
    let mut out = Vec::new();
    // path of (state before step, input, letter)
    let mut path: Vec<(usize, u64, u64)> = Vec::new();
    let mut states = vec![0usize];
    let num_inputs = 1u64 << ts.num_inputs;
    // iterative DFS: per depth the next input to try
    let mut next_input: Vec<u64> = vec![0];
    while let Some(x) = next_input.last().copied() {
        let depth = path.len();
        if x >= num_inputs || depth >= max_len {
            next_input.pop();
            if let Some(_) = path.pop() {
                states.pop();
            }
            continue;
        }
        *next_input.last_mut().unwrap() += 1;
        let s = *states.last().unwrap();
        let (letter, s2) = ts.transitions[s][x as usize];
        path.push((s, x, letter));
        states.push(s2);
        // close a loop back to every earlier occurrence of s2
        for j in 0..path.len() {
            if states[j] != s2 {
                continue;
            }
            let letters: Vec<u64> = path.iter().map(|p| p.2).collect();
            let key = normalize(letters[..j].to_vec(), letters[j..].to_vec());
            if seen.insert(key) {
                let to_step = |l: u64| (0..alphabet.len()).map(|k| l >> k & 1 == 1).collect::<Vec<bool>>();
                let trace = LassoTrace::new(
                    alphabet.to_vec(),
                    letters[..j].iter().map(|&l| to_step(l)).collect(),
                    letters[j..].iter().map(|&l| to_step(l)).collect(),
                )
                .expect("nonempty loop");
                out.push(CircuitLasso {
                    trace,
                    inputs_prefix: path[..j].iter().map(|p| p.1).collect(),
                    inputs_loop: path[j..].iter().map(|p| p.1).collect(),
                });
            }
        }
        next_input.push(0);
    }
    Ok(out)
}

/// Canonical form of `prefix · loop^ω`: primitive loop, shortest prefix.
fn normalize(mut prefix: Vec<u64>, mut cycle: Vec<u64>) -> (Vec<u64>, Vec<u64>) {
    let n = cycle.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| cycle[i] == cycle[i - p]) {
            cycle.truncate(p);
            break;
        }
    }
    while let Some(&last) = prefix.last() {
        if last != *cycle.last().unwrap() {
            break;
        }
        prefix.pop();
        cycle.rotate_right(1);
    }
    (prefix, cycle)
}

/// The lassos of one circuit under one specification, enumerated once and
/// reused for any number of formulas. Per set of atoms a formula mentions,
/// only one lasso per distinct projected word is evaluated.
#[derive(Debug)]
pub struct LassoOracle {
    spec: Specification,
    max_formula_size: usize,
    /// The validation report when the circuit fails strict validation.
    lassos: Result<Vec<CircuitLasso>, ValidationReport>,
    words: Vec<(Vec<u64>, Vec<u64>)>,
    by_mask: Mutex<HashMap<u64, Arc<Vec<usize>>>>,
}

impl LassoOracle {
    pub fn new(circuit: &AigerCircuit, spec: &Specification, bounds: &BruteBounds) -> Result<Self, CheckError> {
        if circuit.latches.len() > bounds.max_latches || circuit.inputs.len() > bounds.max_inputs {
            return Err(CheckError::Bounds(format!(
                "{} latches / {} inputs exceed {} / {}",
                circuit.latches.len(),
                circuit.inputs.len(),
                bounds.max_latches,
                bounds.max_inputs
            )));
        }
        let report = validate(circuit);
        let lassos = if report.valid_strict {
            let (_, role) = property_for(spec, Ltl::True);
            let sources = resolve_atoms(spec, circuit, role)?;
            let max_len = bounds.lasso_len(circuit.latches.len(), circuit.inputs.len());
            // every reachable state must be able to appear on a loop
            let states = circuit_to_ts(circuit, &sources, 1 << 20)?.num_states();
            if states > max_len {
                return Err(CheckError::Bounds(format!("{states} reachable states > lasso length {max_len}")));
            }
            Ok(enumerate_lassos(circuit, &sources, &spec.alphabet(), max_len)?)
        } else {
            Err(report)
        };
        let letters = |steps: &[Vec<bool>]| -> Vec<u64> {
            steps.iter().map(|s| s.iter().enumerate().fold(0, |w, (k, &b)| w | (u64::from(b) << k))).collect()
        };
        let words = match &lassos {
            Ok(ls) => ls.iter().map(|l| (letters(l.trace.prefix()), letters(l.trace.cycle()))).collect(),
            Err(_) => Vec::new(),
        };
        Ok(LassoOracle {
            spec: spec.clone(),
            max_formula_size: bounds.max_formula_size,
            lassos,
            words,
            by_mask: Mutex::new(HashMap::new()),
        })
    }

    /// Indices of lassos whose words, restricted to the atoms in `mask`,
    /// are pairwise distinct.
    fn representatives(&self, mask: u64) -> Arc<Vec<usize>> {
        let mut cache = self.by_mask.lock().expect("oracle cache");
        cache
            .entry(mask)
            .or_insert_with(|| {
                let mut seen = HashSet::new();
                let project = |w: &[u64]| w.iter().map(|l| l & mask).collect::<Vec<u64>>();
                let keep = self
                    .words
                    .iter()
                    .enumerate()
                    .filter(|(_, (p, c))| seen.insert(normalize(project(p), project(c))))
                    .map(|(k, _)| k)
                    .collect();
                Arc::new(keep)
            })
            .clone()
    }

    /// Number of distinct lassos enumerated.
    pub fn len(&self) -> usize {
        self.lassos.as_ref().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluates `formula` (over the specification's atoms, negated for
    /// unrealizable specifications) on every lasso.
    pub fn check(&self, formula: &Ltl) -> Result<Verdict, CheckError> {
        let size = formula.stats().size;
        if size > self.max_formula_size {
            return Err(CheckError::Bounds(format!("formula size {size} > {}", self.max_formula_size)));
        }
        let lassos = match &self.lassos {
            Ok(lassos) => lassos,
            Err(report) => {
                let message = "strict validation failed".to_string();
                return Ok(Verdict::SyntaxError(SyntaxIssue { message, report: Some(report.clone()) }));
            }
        };
        let (property, _) = property_for(&self.spec, formula.clone());
        let alphabet = self.spec.alphabet();
        let mut mask = 0u64;
        for atom in formula.atoms() {
            match alphabet.iter().position(|a| *a == atom) {
                Some(k) => mask |= 1 << k,
                None => return Err(CheckError::AtomResolution(format!("unknown atom '{atom}'"))),
            }
        }
        for &k in self.representatives(mask).iter() {
            let lasso = &lassos[k];
            let (prefix, cycle) = &self.words[k];
            let holds = if prefix.len() + cycle.len() <= 64 {
                eval_bits(&property, &alphabet, prefix, cycle) & 1 == 1
            } else {
                eval_lasso(&property, &lasso.trace).map_err(|e| CheckError::AtomResolution(e.to_string()))?
            };
            if !holds {
                return Ok(Verdict::Violated(Counterexample {
                    trace: lasso.trace.clone(),
                    inputs_prefix: lasso.inputs_prefix.clone(),
                    inputs_loop: lasso.inputs_loop.clone(),
                }));
            }
        }
        Ok(Verdict::Satisfied)
    }
}

/// Truth of `f` at every position of the lasso `prefix · cycle^ω` as a
/// bit set (bit `i` = position `i`). At most 64 positions.
fn eval_bits(f: &Ltl, alphabet: &[String], prefix: &[u64], cycle: &[u64]) -> u64 {
    let p = prefix.len();
    let n = p + cycle.len();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // value at the successor of every position
    let next = |v: u64| (v >> 1) | (((v >> p) & 1) << (n - 1));
    let rec = |g: &Ltl| eval_bits(g, alphabet, prefix, cycle);
    match f {
        Ltl::True => full,
        Ltl::False => 0,
        Ltl::Atom(name) => {
            let k = alphabet.iter().position(|a| a == name).expect("atom checked");
            prefix.iter().chain(cycle).enumerate().fold(0, |v, (i, l)| v | ((l >> k & 1) << i))
        }
        Ltl::Not(a) => !rec(a) & full,
        Ltl::Next(a) => next(rec(a)),
        Ltl::And(a, b) => rec(a) & rec(b),
        Ltl::Or(a, b) => rec(a) | rec(b),
        Ltl::Implies(a, b) => (!rec(a) | rec(b)) & full,
        Ltl::Equiv(a, b) => !(rec(a) ^ rec(b)) & full,
        Ltl::Until(..) | Ltl::Finally(_) => {
            let (a, b) = match f {
                Ltl::Until(a, b) => (rec(a), rec(b)),
                Ltl::Finally(b) => (full, rec(b)),
                _ => unreachable!(),
            };
            let mut v = 0;
            loop {
                let nv = b | (a & next(v));
                if nv == v {
                    return v;
                }
                v = nv;
            }
        }
        Ltl::Release(..) | Ltl::Globally(_) => {
            let (a, b) = match f {
                Ltl::Release(a, b) => (rec(a), rec(b)),
                Ltl::Globally(b) => (0, rec(b)),
                _ => unreachable!(),
            };
            let mut v = full;
            loop {
                let nv = b & (a | next(v));
                if nv == v {
                    return v;
                }
                v = nv;
            }
        }
    }
}

/// Checks `formula` (over `spec`'s atoms, mapped per the specification's
/// role) by evaluating it on every enumerated lasso.
pub fn brute_force_check(
    circuit: &AigerCircuit,
    spec: &Specification,
    formula: &Ltl,
    bounds: &BruteBounds,
) -> Result<Verdict, CheckError> {
    let size = formula.stats().size;
    if size > bounds.max_formula_size {
        return Err(CheckError::Bounds(format!("formula size {size} > {}", bounds.max_formula_size)));
    }
    LassoOracle::new(circuit, spec, bounds)?.check(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::{parse_aiger, ParseMode};
    use crate::ltl::parse_ltl;

    fn spec() -> Specification {
        Specification::new(vec!["i0".into()], vec!["o0".into()], vec![], vec![], true).unwrap()
    }

    fn run(circuit: &str, f: &str) -> Verdict {
        let c = parse_aiger(circuit, ParseMode::Strict).unwrap();
        brute_force_check(&c, &spec(), &parse_ltl(f, None).unwrap(), &BruteBounds::default()).unwrap()
    }

    #[test]
    fn constant_outputs() {
        assert_eq!(run("aag 1 1 0 1 0\n2\n1\n", "G o0"), Verdict::Satisfied);
        assert!(matches!(run("aag 1 1 0 1 0\n2\n0\n", "G o0"), Verdict::Violated(_)));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize(vec![1, 2], vec![1, 2]), (vec![], vec![1, 2]));
        assert_eq!(normalize(vec![0], vec![3, 3, 3]), (vec![0], vec![3]));
        assert_eq!(normalize(vec![5, 1], vec![2, 1]), (vec![5], vec![1, 2]));
    }

    #[test]
    fn bounds_rejected() {
        let c = parse_aiger("aag 1 1 0 1 0\n2\n1\n", ParseMode::Strict).unwrap();
        let big = parse_ltl("G G G G o0 & o0", None).unwrap();
        let tight = BruteBounds { max_formula_size: 3, ..Default::default() };
        assert!(matches!(brute_force_check(&c, &spec(), &big, &tight), Err(CheckError::Bounds(_))));
    }

    #[test]
    fn bit_evaluation_matches_lasso_semantics() {
        use rand::Rng;
        let alphabet: Vec<String> = vec!["a".into(), "b".into()];
        let formulas = ["a U b", "G F a", "F G (a & !b)", "X X b", "a R (b | X a)", "(a <-> X b) -> F !a", "G (a -> X F b)"];
        let mut rng = crate::rng::seeded(3);
        for _ in 0..300 {
            let p = rng.gen_range(0..4);
            let c = rng.gen_range(1..5);
            let prefix: Vec<u64> = (0..p).map(|_| rng.gen_range(0..4)).collect();
            let cycle: Vec<u64> = (0..c).map(|_| rng.gen_range(0..4)).collect();
            let steps = |w: &[u64]| w.iter().map(|l| vec![l & 1 == 1, l & 2 == 2]).collect::<Vec<_>>();
            let trace = LassoTrace::new(alphabet.clone(), steps(&prefix), steps(&cycle)).unwrap();
            for f in formulas {
                let f = parse_ltl(f, None).unwrap();
                assert_eq!(eval_bits(&f, &alphabet, &prefix, &cycle) & 1 == 1, eval_lasso(&f, &trace).unwrap(), "{f}");
            }
        }
    }

    #[test]
    fn lassos_replay() {
        let c = parse_aiger("aag 2 1 1 1 0\n2\n4 2\n4\n", ParseMode::Strict).unwrap();
        let s = spec();
        let sources = resolve_atoms(&s, &c, super::super::Role::System).unwrap();
        let lassos = enumerate_lassos(&c, &sources, &s.alphabet(), 4).unwrap();
        assert!(!lassos.is_empty());
        for l in lassos {
            let cex = Counterexample { trace: l.trace, inputs_prefix: l.inputs_prefix, inputs_loop: l.inputs_loop };
            assert!(cex.replays_on(&c, &sources));
        }
    }
}

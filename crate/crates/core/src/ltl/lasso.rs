use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::Ltl;
use super::LtlError;

/// An ultimately periodic trace `prefix · loop^ω` over a fixed alphabet.
/// Each step holds one boolean per alphabet entry, in alphabet order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoTrace {
    alphabet: Vec<String>,
    prefix: Vec<Vec<bool>>,
    #[serde(rename = "loop")]
    cycle: Vec<Vec<bool>>,
}

impl LassoTrace {
    pub fn new(
        alphabet: Vec<String>,
        prefix: Vec<Vec<bool>>,
        cycle: Vec<Vec<bool>>,
    ) -> Result<Self, LtlError> {
        if cycle.is_empty() {
            return Err(LtlError::InvalidTrace("loop must contain at least one step".into()));
        }
        if let Some(step) = prefix.iter().chain(&cycle).find(|s| s.len() != alphabet.len()) {
            return Err(LtlError::InvalidTrace(format!(
                "step assigns {} atoms, alphabet has {}",
                step.len(),
                alphabet.len()
            )));
        }
        Ok(LassoTrace { alphabet, prefix, cycle })
    }

    /// Builds a trace from named assignments; the alphabet is the sorted
    /// union of all keys and every step must assign all of them.
    pub fn from_maps(
        prefix: &[BTreeMap<String, bool>],
        cycle: &[BTreeMap<String, bool>],
    ) -> Result<Self, LtlError> {
        let alphabet: Vec<String> = prefix
            .iter()
            .chain(cycle)
            .flat_map(|m| m.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let conv = |m: &BTreeMap<String, bool>| -> Result<Vec<bool>, LtlError> {
            alphabet
                .iter()
                .map(|a| {
                    m.get(a).copied().ok_or_else(|| {
                        LtlError::InvalidTrace(format!("step does not assign atom '{a}'"))
                    })
                })
                .collect()
        };
        let prefix = prefix.iter().map(conv).collect::<Result<_, _>>()?;
        let cycle = cycle.iter().map(conv).collect::<Result<_, _>>()?;
        LassoTrace::new(alphabet, prefix, cycle)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn prefix(&self) -> &[Vec<bool>] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Vec<bool>] {
        &self.cycle
    }

    /// Number of distinct positions, `|prefix| + |loop|`.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Folds an arbitrary time step onto a distinct position.
    pub fn fold(&self, k: usize) -> usize {
        if k < self.prefix.len() {
            k
        } else {
            self.prefix.len() + (k - self.prefix.len()) % self.cycle.len()
        }
    }

    /// Step at distinct position `pos` (must be `< len()`).
    pub fn step(&self, pos: usize) -> &[bool] {
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.cycle[pos - self.prefix.len()]
        }
    }

    /// Value of `atom` at arbitrary time `k`.
    pub fn value_at(&self, atom: &str, k: usize) -> Option<bool> {
        let idx = self.alphabet.iter().position(|a| a == atom)?;
        Some(self.step(self.fold(k))[idx])
    }

    fn successor(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }

    /// Whether the trace satisfies `formula` at time 0.
    pub fn satisfies(&self, formula: &Ltl) -> Result<bool, LtlError> {
        eval_lasso(formula, self)
    }
}

impl fmt::Display for LassoTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = |f: &mut fmt::Formatter<'_>, s: &[bool]| -> fmt::Result {
            let parts: Vec<String> = self
                .alphabet
                .iter()
                .zip(s)
                .map(|(a, v)| format!("{a}={}", u8::from(*v)))
                .collect();
            write!(f, "{{{}}}", parts.join(","))
        };
        write!(f, "prefix:")?;
        for s in &self.prefix {
            write!(f, " ")?;
            step(f, s)?;
        }
        write!(f, "\nloop:")?;
        for s in &self.cycle {
            write!(f, " ")?;
            step(f, s)?;
        }
        Ok(())
    }
}

/// Evaluates `formula` on the lasso at time 0.
///
/// Every subformula is evaluated on all distinct positions, bottom-up. Until
/// is the least and Release the greatest fixpoint of its one-step unfolding
/// over the folded successor relation.
pub fn eval_lasso(formula: &Ltl, trace: &LassoTrace) -> Result<bool, LtlError> {
    for atom in formula.atoms() {
        if !trace.alphabet.contains(&atom) {
            return Err(LtlError::AlphabetMismatch { atom });
        }
    }
    Ok(eval_all(formula, trace)[0])
}

pub(crate) fn eval_all(formula: &Ltl, trace: &LassoTrace) -> Vec<bool> {
    let n = trace.len();
    let succ = |i: usize| trace.successor(i);
    match formula {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(name) => {
            let idx = trace.alphabet.iter().position(|a| a == name).expect("checked alphabet");
            (0..n).map(|i| trace.step(i)[idx]).collect()
        }
        Ltl::Not(a) => eval_all(a, trace).into_iter().map(|v| !v).collect(),
        Ltl::Next(a) => {
            let va = eval_all(a, trace);
            (0..n).map(|i| va[succ(i)]).collect()
        }
        Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Equiv(a, b) => {
            let va = eval_all(a, trace);
            let vb = eval_all(b, trace);
            let op = |x: bool, y: bool| match formula {
                Ltl::And(..) => x && y,
                Ltl::Or(..) => x || y,
                Ltl::Implies(..) => !x || y,
                _ => x == y,
            };
            va.into_iter().zip(vb).map(|(x, y)| op(x, y)).collect()
        }
        Ltl::Until(a, b) => until_fixpoint(&eval_all(a, trace), &eval_all(b, trace), succ),
        Ltl::Finally(b) => until_fixpoint(&vec![true; n], &eval_all(b, trace), succ),
        Ltl::Release(a, b) => release_fixpoint(&eval_all(a, trace), &eval_all(b, trace), succ),
        Ltl::Globally(b) => release_fixpoint(&vec![false; n], &eval_all(b, trace), succ),
    }
}

fn until_fixpoint(a: &[bool], b: &[bool], succ: impl Fn(usize) -> usize) -> Vec<bool> {
    let n = a.len();
    let mut v = vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let nv = b[i] || (a[i] && v[succ(i)]);
            if nv != v[i] {
                v[i] = nv;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

fn release_fixpoint(a: &[bool], b: &[bool], succ: impl Fn(usize) -> usize) -> Vec<bool> {
    let n = a.len();
    let mut v = vec![true; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let nv = b[i] && (a[i] || v[succ(i)]);
            if nv != v[i] {
                v[i] = nv;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

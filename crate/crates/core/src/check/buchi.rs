//! LTL to Büchi automata by the on-the-fly tableau construction of Gerth,
//! Peled, Vardi and Wolper, followed by counter degeneralization.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::ltl::{LassoTrace, Ltl};

use super::ndfs::{find_accepting_lasso, ExplicitGraph};
use super::CheckError;

type Fid = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Nnf {
    True,
    False,
    Lit { atom: u8, positive: bool },
    And(Fid, Fid),
    Or(Fid, Fid),
    Next(Fid),
    Until(Fid, Fid),
    Release(Fid, Fid),
}

/// Hash-consed negation normal form.
#[derive(Default)]
struct Arena {
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, Fid>,
}

impl Arena {
    fn intern(&mut self, n: Nnf) -> Fid {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as Fid;
        self.nodes.push(n);
        self.index.insert(n, id);
        id
    }

    fn kind(&self, id: Fid) -> Nnf {
        self.nodes[id as usize]
    }

    fn and(&mut self, a: Fid, b: Fid) -> Fid {
        match (self.kind(a), self.kind(b)) {
            (Nnf::False, _) | (_, Nnf::False) => self.intern(Nnf::False),
            (Nnf::True, _) => b,
            (_, Nnf::True) => a,
            _ if a == b => a,
            _ => self.intern(Nnf::And(a, b)),
        }
    }

    fn or(&mut self, a: Fid, b: Fid) -> Fid {
        match (self.kind(a), self.kind(b)) {
            (Nnf::True, _) | (_, Nnf::True) => self.intern(Nnf::True),
            (Nnf::False, _) => b,
            (_, Nnf::False) => a,
            _ if a == b => a,
            _ => self.intern(Nnf::Or(a, b)),
        }
    }

    /// NNF of `f` (negated when `neg`), with derived operators rewritten:
    /// `G φ = false R φ`, `F φ = true U φ`.
    fn build(&mut self, f: &Ltl, neg: bool, atoms: &HashMap<&str, u8>) -> Result<Fid, CheckError> {
        Ok(match f {
            Ltl::True => self.intern(if neg { Nnf::False } else { Nnf::True }),
            Ltl::False => self.intern(if neg { Nnf::True } else { Nnf::False }),
            Ltl::Atom(name) => {
                let atom = *atoms
                    .get(name.as_str())
                    .ok_or_else(|| CheckError::AtomResolution(format!("atom '{name}' not in alphabet")))?;
                self.intern(Nnf::Lit { atom, positive: !neg })
            }
            Ltl::Not(a) => self.build(a, !neg, atoms)?,
            Ltl::And(a, b) | Ltl::Or(a, b) => {
                let x = self.build(a, neg, atoms)?;
                let y = self.build(b, neg, atoms)?;
                let conj = matches!(f, Ltl::And(..)) != neg;
                if conj {
                    self.and(x, y)
                } else {
                    self.or(x, y)
                }
            }
            Ltl::Implies(a, b) => {
                let x = self.build(a, !neg, atoms)?;
                let y = self.build(b, neg, atoms)?;
                if neg {
                    self.and(x, y)
                } else {
                    self.or(x, y)
                }
            }
            Ltl::Equiv(a, b) => {
                let pa = self.build(a, false, atoms)?;
                let na = self.build(a, true, atoms)?;
                let pb = self.build(b, false, atoms)?;
                let nb = self.build(b, true, atoms)?;
                let (l, r) = if neg { ((pa, nb), (na, pb)) } else { ((pa, pb), (na, nb)) };
                let l = self.and(l.0, l.1);
                let r = self.and(r.0, r.1);
                self.or(l, r)
            }
            Ltl::Next(a) => {
                let x = self.build(a, neg, atoms)?;
                self.intern(Nnf::Next(x))
            }
            Ltl::Until(a, b) | Ltl::Release(a, b) => {
                let x = self.build(a, neg, atoms)?;
                let y = self.build(b, neg, atoms)?;
                let until = matches!(f, Ltl::Until(..)) != neg;
                self.intern(if until { Nnf::Until(x, y) } else { Nnf::Release(x, y) })
            }
            Ltl::Globally(a) | Ltl::Finally(a) => {
                let x = self.build(a, neg, atoms)?;
                let until = matches!(f, Ltl::Finally(..)) != neg;
                if until {
                    let t = self.intern(Nnf::True);
                    self.intern(Nnf::Until(t, x))
                } else {
                    let ff = self.intern(Nnf::False);
                    self.intern(Nnf::Release(ff, x))
                }
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct BuchiState {
    /// Atoms that must be true when this state reads a letter.
    pub pos: u64,
    /// Atoms that must be false.
    pub neg: u64,
    pub succ: Vec<usize>,
    pub accepting: bool,
}

impl BuchiState {
    pub fn admits(&self, letter: u64) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }
}

/// A state-labeled Büchi automaton over assignments to `atoms`. A run reads
/// letter `k` in its `k`-th state, which must admit it.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    pub atoms: Vec<String>,
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
}

const INIT: usize = usize::MAX;

struct Work {
    incoming: BTreeSet<usize>,
    new: BTreeSet<Fid>,
    old: BTreeSet<Fid>,
    next: BTreeSet<Fid>,
}

/// Translates `formula` over `atoms` (at most 64) into a Büchi automaton
/// accepting exactly its models. Fails when the generalized automaton would
/// exceed `max_states` tableau nodes.
pub fn ltl_to_buchi(formula: &Ltl, atoms: &[String], max_states: usize) -> Result<BuchiAutomaton, CheckError> {
    if atoms.len() > 64 {
        return Err(CheckError::TooManyAtoms(atoms.len()));
    }
    let index: HashMap<&str, u8> = atoms.iter().enumerate().map(|(i, a)| (a.as_str(), i as u8)).collect();
    let mut arena = Arena::default();
    let root = arena.build(formula, false, &index)?;

    // Tableau nodes: (old, next) -> incoming.
    let mut lookup: HashMap<(BTreeSet<Fid>, BTreeSet<Fid>), usize> = HashMap::new();
    let mut nodes: Vec<(BTreeSet<Fid>, BTreeSet<usize>)> = Vec::new();
    let mut stack = vec![Work {
        incoming: [INIT].into(),
        new: [root].into(),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    while let Some(mut w) = stack.pop() {
        let Some(eta) = w.new.pop_first() else {
            let key = (w.old, w.next);
            if let Some(&idx) = lookup.get(&key) {
                nodes[idx].1.extend(w.incoming);
            } else {
                if nodes.len() >= max_states {
                    return Err(CheckError::BuchiCap { limit: max_states });
                }
                let id = nodes.len();
                let next = key.1.clone();
                nodes.push((key.0.clone(), w.incoming));
                lookup.insert(key, id);
                stack.push(Work { incoming: [id].into(), new: next, old: BTreeSet::new(), next: BTreeSet::new() });
            }
            continue;
        };
        let add_new = |w: &mut Work, f: Fid| {
            if !w.old.contains(&f) {
                w.new.insert(f);
            }
        };
        match arena.kind(eta) {
            Nnf::False => {}
            Nnf::True => {
                w.old.insert(eta);
                stack.push(w);
            }
            Nnf::Lit { atom, positive } => {
                let contradiction = arena
                    .index
                    .get(&Nnf::Lit { atom, positive: !positive })
                    .is_some_and(|n| w.old.contains(n));
                if !contradiction {
                    w.old.insert(eta);
                    stack.push(w);
                }
            }
            Nnf::And(a, b) => {
                w.old.insert(eta);
                add_new(&mut w, a);
                add_new(&mut w, b);
                stack.push(w);
            }
            Nnf::Next(a) => {
                w.old.insert(eta);
                w.next.insert(a);
                stack.push(w);
            }
            Nnf::Or(a, b) | Nnf::Until(a, b) | Nnf::Release(a, b) => {
                w.old.insert(eta);
                let mut w2 = Work {
                    incoming: w.incoming.clone(),
                    new: w.new.clone(),
                    old: w.old.clone(),
                    next: w.next.clone(),
                };
                match arena.kind(eta) {
                    Nnf::Or(..) => {
                        add_new(&mut w, a);
                        add_new(&mut w2, b);
                    }
                    Nnf::Until(..) => {
                        add_new(&mut w, a);
                        w.next.insert(eta);
                        add_new(&mut w2, b);
                    }
                    _ => {
                        add_new(&mut w, b);
                        w.next.insert(eta);
                        add_new(&mut w2, a);
                        add_new(&mut w2, b);
                    }
                }
                stack.push(w2);
                stack.push(w);
            }
        }
    }

    // Generalized acceptance: one set per Until subformula.
    let untils: Vec<(Fid, Fid)> = (0..arena.nodes.len() as Fid)
        .filter_map(|id| match arena.kind(id) {
            Nnf::Until(_, b) => Some((id, b)),
            _ => None,
        })
        .collect();
    let n = nodes.len();
    let mut gsucc: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ginit = Vec::new();
    for (id, (_, incoming)) in nodes.iter().enumerate() {
        for &src in incoming {
            if src == INIT {
                ginit.push(id);
            } else {
                gsucc[src].push(id);
            }
        }
    }
    let in_set = |q: usize, k: usize| {
        let (u, b) = untils[k];
        let old = &nodes[q].0;
        !old.contains(&u) || old.contains(&b)
    };
    let label = |q: usize| {
        let mut pos = 0u64;
        let mut neg = 0u64;
        for &f in &nodes[q].0 {
            if let Nnf::Lit { atom, positive } = arena.kind(f) {
                if positive {
                    pos |= 1 << atom;
                } else {
                    neg |= 1 << atom;
                }
            }
        }
        (pos, neg)
    };

    // Degeneralize with a counter over the acceptance sets.
    let k = untils.len();
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states: Vec<BuchiState> = Vec::new();
    let mut queue = VecDeque::new();
    let mut get = |q: usize, c: usize, states: &mut Vec<BuchiState>, queue: &mut VecDeque<(usize, usize)>| {
        *ids.entry((q, c)).or_insert_with(|| {
            let (pos, neg) = label(q);
            let accepting = k == 0 || (c == 0 && in_set(q, 0));
            states.push(BuchiState { pos, neg, succ: Vec::new(), accepting });
            queue.push_back((q, c));
            states.len() - 1
        })
    };
    let initial: Vec<usize> = ginit.iter().map(|&q| get(q, 0, &mut states, &mut queue)).collect();
    while let Some((q, c)) = queue.pop_front() {
        let me = get(q, c, &mut states, &mut queue);
        let c2 = if k == 0 || !in_set(q, c) { c } else { (c + 1) % k };
        let succ: Vec<usize> = gsucc[q].iter().map(|&q2| get(q2, c2, &mut states, &mut queue)).collect();
        states[me].succ = succ;
        if states.len() > max_states {
            return Err(CheckError::BuchiCap { limit: max_states });
        }
    }
    Ok(BuchiAutomaton { atoms: atoms.to_vec(), states, initial })
}

impl BuchiAutomaton {
    /// Whether the automaton accepts some word.
    pub fn is_empty(&self) -> bool {
        let graph = ExplicitGraph {
            succ: self.states.iter().map(|s| s.succ.iter().map(|&t| (t, ())).collect()).collect(),
            accepting: self.states.iter().map(|s| s.accepting && s.pos & s.neg == 0).collect(),
            initial: self.initial.clone(),
        };
        find_accepting_lasso(&graph).is_none()
    }

    /// Lasso membership: product of the automaton with the positions of the
    /// trace, searched for an accepting cycle.
    pub fn accepts(&self, trace: &LassoTrace) -> bool {
        let map: Vec<Option<usize>> = self
            .atoms
            .iter()
            .map(|a| trace.alphabet().iter().position(|t| t == a))
            .collect();
        let n = trace.len();
        let letters: Vec<u64> = (0..n)
            .map(|p| {
                let step = trace.step(p);
                map.iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, m)| acc | (u64::from(m.is_some_and(|j| step[j])) << i))
            })
            .collect();
        let succ_pos = |p: usize| if p + 1 < n { p + 1 } else { trace.prefix().len() };
        let m = self.states.len();
        let node = |p: usize, q: usize| p * m + q;
        let mut graph = ExplicitGraph {
            succ: vec![Vec::new(); n * m],
            accepting: vec![false; n * m],
            initial: Vec::new(),
        };
        for p in 0..n {
            for (q, st) in self.states.iter().enumerate() {
                if !st.admits(letters[p]) {
                    continue;
                }
                graph.accepting[node(p, q)] = st.accepting;
                graph.succ[node(p, q)] = st.succ.iter().map(|&q2| (node(succ_pos(p), q2), ())).collect();
            }
        }
        graph.initial = self.initial.iter().filter(|&&q| self.states[q].admits(letters[0])).map(|&q| node(0, q)).collect();
        find_accepting_lasso(&graph).is_some()
    }
}

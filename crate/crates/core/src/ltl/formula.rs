use std::collections::BTreeSet;
use std::fmt;

/// An LTL formula. Derived operators (`|`, `->`, `<->`, `R`, `G`, `F`) are
/// kept as their own node kinds so the shape written by the user survives
/// printing and tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ltl {
    True,
    False,
    Atom(String),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Equiv(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
    Globally(Box<Ltl>),
    Finally(Box<Ltl>),
}

/// Node kind without children; used by the tokenizer and by generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LtlOp {
    True,
    False,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Equiv,
    Next,
    Until,
    Release,
    Globally,
    Finally,
}

impl LtlOp {
    pub fn arity(self) -> usize {
        match self {
            LtlOp::True | LtlOp::False | LtlOp::Atom => 0,
            LtlOp::Not | LtlOp::Next | LtlOp::Globally | LtlOp::Finally => 1,
            _ => 2,
        }
    }

    /// Surface symbol of the operator; `None` for atoms.
    pub fn symbol(self) -> Option<&'static str> {
        Some(match self {
            LtlOp::True => "true",
            LtlOp::False => "false",
            LtlOp::Atom => return None,
            LtlOp::Not => "!",
            LtlOp::And => "&",
            LtlOp::Or => "|",
            LtlOp::Implies => "->",
            LtlOp::Equiv => "<->",
            LtlOp::Next => "X",
            LtlOp::Until => "U",
            LtlOp::Release => "R",
            LtlOp::Globally => "G",
            LtlOp::Finally => "F",
        })
    }

    pub const ALL_UNARY: [LtlOp; 4] = [LtlOp::Not, LtlOp::Next, LtlOp::Globally, LtlOp::Finally];
    pub const ALL_BINARY: [LtlOp; 6] = [
        LtlOp::And,
        LtlOp::Or,
        LtlOp::Implies,
        LtlOp::Equiv,
        LtlOp::Until,
        LtlOp::Release,
    ];
}

/// Size and depth of a formula's syntax tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AstStats {
    /// Number of nodes.
    pub size: usize,
    /// Longest root-to-leaf path, counted in edges.
    pub depth: usize,
}

impl Ltl {
    pub fn atom(name: impl Into<String>) -> Ltl {
        Ltl::Atom(name.into())
    }

    pub fn not(f: Ltl) -> Ltl {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Implies(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Equiv(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Ltl {
        Ltl::Next(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Ltl) -> Ltl {
        Ltl::Globally(Box::new(f))
    }

    pub fn finally(f: Ltl) -> Ltl {
        Ltl::Finally(Box::new(f))
    }

    /// Builds a node from an operator and its children. Panics if the number
    /// of children does not match the operator's arity or if `op` is `Atom`.
    pub fn from_op(op: LtlOp, mut children: Vec<Ltl>) -> Ltl {
        assert_eq!(children.len(), op.arity(), "arity mismatch for {op:?}");
        let mut pop = || Box::new(children.remove(0));
        match op {
            LtlOp::True => Ltl::True,
            LtlOp::False => Ltl::False,
            LtlOp::Atom => panic!("atoms carry a name; use Ltl::atom"),
            LtlOp::Not => Ltl::Not(pop()),
            LtlOp::Next => Ltl::Next(pop()),
            LtlOp::Globally => Ltl::Globally(pop()),
            LtlOp::Finally => Ltl::Finally(pop()),
            LtlOp::And => Ltl::And(pop(), pop()),
            LtlOp::Or => Ltl::Or(pop(), pop()),
            LtlOp::Implies => Ltl::Implies(pop(), pop()),
            LtlOp::Equiv => Ltl::Equiv(pop(), pop()),
            LtlOp::Until => Ltl::Until(pop(), pop()),
            LtlOp::Release => Ltl::Release(pop(), pop()),
        }
    }

    pub fn op(&self) -> LtlOp {
        match self {
            Ltl::True => LtlOp::True,
            Ltl::False => LtlOp::False,
            Ltl::Atom(_) => LtlOp::Atom,
            Ltl::Not(_) => LtlOp::Not,
            Ltl::And(..) => LtlOp::And,
            Ltl::Or(..) => LtlOp::Or,
            Ltl::Implies(..) => LtlOp::Implies,
            Ltl::Equiv(..) => LtlOp::Equiv,
            Ltl::Next(_) => LtlOp::Next,
            Ltl::Until(..) => LtlOp::Until,
            Ltl::Release(..) => LtlOp::Release,
            Ltl::Globally(_) => LtlOp::Globally,
            Ltl::Finally(_) => LtlOp::Finally,
        }
    }

    /// Children in left-to-right order.
    pub fn children(&self) -> Vec<&Ltl> {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => vec![],
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => vec![a],
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Equiv(a, b)
            | Ltl::Until(a, b)
            | Ltl::Release(a, b) => vec![a, b],
        }
    }

    pub fn stats(&self) -> AstStats {
        let kids = self.children();
        let mut size = 1;
        let mut depth = 0;
        for k in kids {
            let s = k.stats();
            size += s.size;
            depth = depth.max(s.depth + 1);
        }
        AstStats { size, depth }
    }

    /// Atom names occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Ltl::Atom(name) = self {
            out.insert(name.clone());
        }
        for k in self.children() {
            k.collect_atoms(out);
        }
    }

    /// Renames atoms through `f`.
    pub fn map_atoms(&self, f: &impl Fn(&str) -> String) -> Ltl {
        match self {
            Ltl::Atom(name) => Ltl::Atom(f(name)),
            Ltl::True | Ltl::False => self.clone(),
            _ => {
                let kids = self.children().into_iter().map(|k| k.map_atoms(f)).collect();
                Ltl::from_op(self.op(), kids)
            }
        }
    }

    /// Nodes in prefix (Polish) order.
    pub fn preorder(&self) -> Vec<&Ltl> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            for k in node.children().into_iter().rev() {
                stack.push(k);
            }
        }
        out
    }

    /// Right-folded conjunction; `True` for an empty list.
    pub fn conjunction(items: &[Ltl]) -> Ltl {
        match items.split_last() {
            None => Ltl::True,
            Some((last, rest)) => rest
                .iter()
                .rev()
                .fold(last.clone(), |acc, f| Ltl::and(f.clone(), acc)),
        }
    }
}

impl fmt::Display for Ltl {
    /// Fully parenthesized form: every non-leaf node is wrapped in parentheses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => write!(f, "true"),
            Ltl::False => write!(f, "false"),
            Ltl::Atom(name) => write!(f, "{name}"),
            Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => {
                write!(f, "({} {})", self.op().symbol().unwrap(), a)
            }
            Ltl::And(a, b)
            | Ltl::Or(a, b)
            | Ltl::Implies(a, b)
            | Ltl::Equiv(a, b)
            | Ltl::Until(a, b)
            | Ltl::Release(a, b) => {
                write!(f, "({} {} {})", a, self.op().symbol().unwrap(), b)
            }
        }
    }
}

/// Fully parenthesized text of `formula`.
pub fn print_ltl(formula: &Ltl) -> String {
    formula.to_string()
}

use std::collections::BTreeMap;
use std::fmt;

/// An AIGER literal: variable index times two, plus one when negated.
/// `0` is constant false and `1` constant true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal(pub u32);

impl Literal {
    pub const FALSE: Literal = Literal(0);
    pub const TRUE: Literal = Literal(1);

    pub fn from_var(var: u32, negated: bool) -> Literal {
        Literal(var * 2 + u32::from(negated))
    }

    pub fn var(self) -> u32 {
        self.0 / 2
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_constant(self) -> bool {
        self.0 < 2
    }

    pub fn negate(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Latch {
    pub out: Literal,
    pub next: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AndGate {
    pub out: Literal,
    pub in1: Literal,
    pub in2: Literal,
}

/// Which list a symbol-table entry names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Input,
    Latch,
    Output,
}

impl SymbolKind {
    pub fn prefix(self) -> char {
        match self {
            SymbolKind::Input => 'i',
            SymbolKind::Latch => 'l',
            SymbolKind::Output => 'o',
        }
    }
}

/// An ASCII AIGER circuit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AigerCircuit {
    /// Header `M`. Serialization writes `max(max_var, largest variable used)`.
    pub max_var: u32,
    pub inputs: Vec<Literal>,
    pub latches: Vec<Latch>,
    pub outputs: Vec<Literal>,
    pub ands: Vec<AndGate>,
    pub symbols: BTreeMap<(SymbolKind, usize), String>,
}

/// Gate counts; `size` is AND gates plus latches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitStats {
    pub num_ands: usize,
    pub num_latches: usize,
    pub size: usize,
}

impl AigerCircuit {
    /// Builds a circuit whose header `M` is the largest variable used.
    pub fn new(
        inputs: Vec<Literal>,
        latches: Vec<Latch>,
        outputs: Vec<Literal>,
        ands: Vec<AndGate>,
    ) -> Self {
        let mut c = AigerCircuit { max_var: 0, inputs, latches, outputs, ands, symbols: BTreeMap::new() };
        c.max_var = c.used_max_var();
        c
    }

    /// Every literal slot of the circuit in definition order.
    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.inputs
            .iter()
            .copied()
            .chain(self.latches.iter().flat_map(|l| [l.out, l.next]))
            .chain(self.outputs.iter().copied())
            .chain(self.ands.iter().flat_map(|a| [a.out, a.in1, a.in2]))
    }

    pub fn used_max_var(&self) -> u32 {
        self.literals().map(Literal::var).max().unwrap_or(0)
    }

    pub fn header_max_var(&self) -> u32 {
        self.max_var.max(self.used_max_var())
    }

    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            num_ands: self.ands.len(),
            num_latches: self.latches.len(),
            size: self.ands.len() + self.latches.len(),
        }
    }

    /// Canonical text: header from the actual counts, one definition per
    /// line with single spaces, sections in AIGER order, and the symbol table
    /// only when `with_symbols` is set. Comments are never emitted.
    pub fn serialize(&self, with_symbols: bool) -> String {
        let mut out = String::new();
        self.write_header(&mut out);
        self.write_body(&mut out);
        if with_symbols {
            for ((kind, idx), name) in &self.symbols {
                out.push_str(&format!("{}{} {}\n", kind.prefix(), idx, name));
            }
        }
        out
    }

    fn write_header(&self, out: &mut String) {
        out.push_str(&format!(
            "aag {} {} {} {} {}\n",
            self.header_max_var(),
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.ands.len()
        ));
    }

    /// Definition lines without the header.
    pub fn body_lines(&self) -> Vec<Vec<u32>> {
        let mut lines = Vec::new();
        lines.extend(self.inputs.iter().map(|l| vec![l.0]));
        lines.extend(self.latches.iter().map(|l| vec![l.out.0, l.next.0]));
        lines.extend(self.outputs.iter().map(|l| vec![l.0]));
        lines.extend(self.ands.iter().map(|a| vec![a.out.0, a.in1.0, a.in2.0]));
        lines
    }

    fn write_body(&self, out: &mut String) {
        for line in self.body_lines() {
            let parts: Vec<String> = line.iter().map(u32::to_string).collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        }
    }

    /// Header integers followed by body integers with a newline marker after
    /// each line; the unit of [`crate::metrics::circuit_distance`].
    pub fn canonical_tokens(&self) -> Vec<CanonicalToken> {
        let mut toks = vec![CanonicalToken::Word("aag")];
        for n in [
            self.header_max_var() as usize,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.ands.len(),
        ] {
            toks.push(CanonicalToken::Int(n as u32));
        }
        toks.push(CanonicalToken::Newline);
        for line in self.body_lines() {
            toks.extend(line.into_iter().map(CanonicalToken::Int));
            toks.push(CanonicalToken::Newline);
        }
        toks
    }

    /// Name of an input or output: the symbol table entry when present,
    /// otherwise `i{idx}` / `o{idx}`.
    pub fn io_name(&self, kind: SymbolKind, idx: usize) -> String {
        self.symbols.get(&(kind, idx)).cloned().unwrap_or_else(|| format!("{}{}", kind.prefix(), idx))
    }
}

/// One symbol of the canonical token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonicalToken {
    Word(&'static str),
    Int(u32),
    Newline,
}

impl fmt::Display for AigerCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize(true))
    }
}

/// Canonical text of `circuit`; see [`AigerCircuit::serialize`].
pub fn serialize_aiger(circuit: &AigerCircuit, with_symbols: bool) -> String {
    circuit.serialize(with_symbols)
}

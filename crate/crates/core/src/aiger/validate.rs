use std::collections::HashMap;
use std::fmt;

use super::circuit::{AigerCircuit, Literal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefectKind {
    HeaderMismatch,
    DanglingLiteral,
    Redefinition,
    CombinationalCycle,
    /// A defining literal that is odd or a constant.
    OddDefinition,
    VarOutOfRange,
}

/// Section of an AIGER file a defect points into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Header,
    Input,
    Latch,
    Output,
    And,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub kind: DefectKind,
    pub section: Section,
    /// Index into the section's list.
    pub index: usize,
    /// 1-based line in the canonical layout (header is line 1).
    pub line: usize,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} in {:?} {} (line {})", self.kind, self.section, self.index, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub valid_strict: bool,
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn first(&self) -> Option<&Defect> {
        self.defects.first()
    }
}

fn line_of(c: &AigerCircuit, section: Section, index: usize) -> usize {
    let (i, l, o) = (c.inputs.len(), c.latches.len(), c.outputs.len());
    2 + index
        + match section {
            Section::Header => return 1,
            Section::Input => 0,
            Section::Latch => i,
            Section::Output => i + l,
            Section::And => i + l + o,
        }
}

/// Checks the strict-validity invariants of an AIGER circuit: header range,
/// even non-constant definitions, single definition per variable, defined
/// reads, and acyclic AND gates. Defects are listed in file order.
pub fn validate(circuit: &AigerCircuit) -> ValidationReport {
    let mut defects = Vec::new();
    let mut push = |kind, section, index| {
        defects.push(Defect { kind, section, index, line: line_of(circuit, section, index) })
    };

    // Variables defined by inputs, latches and ANDs, mapped to their first site.
    let mut defined: HashMap<u32, (Section, usize)> = HashMap::new();
    let mut definitions: Vec<(Section, usize, Literal)> = Vec::new();
    definitions.extend(circuit.inputs.iter().enumerate().map(|(i, l)| (Section::Input, i, *l)));
    definitions.extend(circuit.latches.iter().enumerate().map(|(i, l)| (Section::Latch, i, l.out)));
    definitions.extend(circuit.ands.iter().enumerate().map(|(i, a)| (Section::And, i, a.out)));

    let mut def_defects: Vec<(Section, usize, DefectKind)> = Vec::new();
    for &(section, idx, lit) in &definitions {
        if lit.is_negated() || lit.is_constant() {
            def_defects.push((section, idx, DefectKind::OddDefinition));
            continue;
        }
        if defined.contains_key(&lit.var()) {
            def_defects.push((section, idx, DefectKind::Redefinition));
        } else {
            defined.insert(lit.var(), (section, idx));
        }
    }

    let read_ok = |lit: Literal| lit.is_constant() || defined.contains_key(&lit.var());
    let max_var = circuit.max_var;

    let mut emit_site = |section: Section, idx: usize, lits: &[Literal]| {
        for &(s, i, kind) in def_defects.iter().filter(|d| d.0 == section && d.1 == idx) {
            push(kind, s, i);
        }
        if lits.iter().any(|l| l.var() > max_var) {
            push(DefectKind::VarOutOfRange, section, idx);
        }
    };
    let mut reads: Vec<(Section, usize, Vec<Literal>)> = Vec::new();
    for (i, l) in circuit.inputs.iter().enumerate() {
        emit_site(Section::Input, i, &[*l]);
    }
    for (i, l) in circuit.latches.iter().enumerate() {
        emit_site(Section::Latch, i, &[l.out, l.next]);
        reads.push((Section::Latch, i, vec![l.next]));
    }
    for (i, l) in circuit.outputs.iter().enumerate() {
        emit_site(Section::Output, i, &[*l]);
        reads.push((Section::Output, i, vec![*l]));
    }
    for (i, a) in circuit.ands.iter().enumerate() {
        emit_site(Section::And, i, &[a.out, a.in1, a.in2]);
        reads.push((Section::And, i, vec![a.in1, a.in2]));
    }
    for (section, idx, lits) in reads {
        if lits.iter().any(|l| !read_ok(*l)) {
            push(DefectKind::DanglingLiteral, section, idx);
        }
    }

    if let Some(idx) = find_cycle(circuit) {
        push(DefectKind::CombinationalCycle, Section::And, idx);
    }

    defects.sort_by_key(|d| d.line);
    ValidationReport { valid_strict: defects.is_empty(), defects }
}

/// Index of an AND gate on a combinational cycle, if any. Only gates whose
/// output is an even non-constant literal participate.
fn find_cycle(circuit: &AigerCircuit) -> Option<usize> {
    let mut gate_of: HashMap<u32, usize> = HashMap::new();
    for (i, a) in circuit.ands.iter().enumerate() {
        if !a.out.is_negated() && !a.out.is_constant() {
            gate_of.entry(a.out.var()).or_insert(i);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; circuit.ands.len()];
    for start in 0..circuit.ands.len() {
        if color[start] != 0 || gate_of.get(&circuit.ands[start].out.var()) != Some(&start) {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        while let Some(&mut (g, ref mut child)) = stack.last_mut() {
            let gate = circuit.ands[g];
            let operands = [gate.in1, gate.in2];
            if *child < 2 {
                let lit = operands[*child];
                *child += 1;
                if let Some(&next) = gate_of.get(&lit.var()) {
                    match color[next] {
                        0 => {
                            color[next] = 1;
                            stack.push((next, 0));
                        }
                        1 => return Some(next),
                        _ => {}
                    }
                }
            } else {
                color[g] = 2;
                stack.pop();
            }
        }
    }
    None
}

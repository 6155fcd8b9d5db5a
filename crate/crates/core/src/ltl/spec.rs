use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::formula::Ltl;
use super::parse::parse_ltl;
use super::LtlError;

/// Maximum number of inputs and outputs a model-facing specification may
/// declare.
pub const MAX_IO: usize = 5;

/// An assume-guarantee LTL specification.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Specification {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub assumptions: Vec<Ltl>,
    pub guarantees: Vec<Ltl>,
    pub presumed_realizable: bool,
}

impl Specification {
    /// Builds a specification and checks atom membership and that inputs and
    /// outputs are disjoint.
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        assumptions: Vec<Ltl>,
        guarantees: Vec<Ltl>,
        presumed_realizable: bool,
    ) -> Result<Self, LtlError> {
        let spec = Specification { inputs, outputs, assumptions, guarantees, presumed_realizable };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LtlError> {
        let ins: BTreeSet<&String> = self.inputs.iter().collect();
        let outs: BTreeSet<&String> = self.outputs.iter().collect();
        if ins.len() != self.inputs.len() || outs.len() != self.outputs.len() {
            return Err(LtlError::InvalidSpec("duplicate atom declaration".into()));
        }
        if let Some(shared) = ins.intersection(&outs).next() {
            return Err(LtlError::InvalidSpec(format!(
                "atom '{shared}' declared as both input and output"
            )));
        }
        for f in self.assumptions.iter().chain(&self.guarantees) {
            for atom in f.atoms() {
                if !ins.contains(&atom) && !outs.contains(&atom) {
                    return Err(LtlError::InvalidSpec(format!("undeclared atom '{atom}'")));
                }
            }
        }
        Ok(())
    }

    /// Declared atoms, inputs first.
    pub fn alphabet(&self) -> Vec<String> {
        self.inputs.iter().chain(&self.outputs).cloned().collect()
    }

    /// `(a_1 ∧ … ∧ a_n) → (g_1 ∧ … ∧ g_m)` with right-folded conjunctions.
    /// No assumptions gives the bare guarantee conjunction; no guarantees
    /// gives `true`.
    pub fn to_formula(&self) -> Ltl {
        if self.guarantees.is_empty() {
            return Ltl::True;
        }
        let guarantees = Ltl::conjunction(&self.guarantees);
        if self.assumptions.is_empty() {
            guarantees
        } else {
            Ltl::implies(Ltl::conjunction(&self.assumptions), guarantees)
        }
    }

    /// One formula `(a_1 ∧ … ∧ a_n) → g_i` per guarantee, in guarantee order.
    pub fn subspecs(&self) -> Vec<Ltl> {
        let antecedent = (!self.assumptions.is_empty()).then(|| Ltl::conjunction(&self.assumptions));
        self.guarantees
            .iter()
            .map(|g| match &antecedent {
                Some(a) => Ltl::implies(a.clone(), g.clone()),
                None => g.clone(),
            })
            .collect()
    }

    /// Total AST size over all properties.
    pub fn ast_size(&self) -> usize {
        self.assumptions.iter().chain(&self.guarantees).map(|f| f.stats().size).sum()
    }

    /// Parses the sectioned text format (`INPUTS`, `OUTPUTS`, `ASSUMPTIONS`,
    /// `GUARANTEES`, `REALIZABLE`; one item per line, `#` starts a comment).
    pub fn parse(text: &str) -> Result<Self, LtlError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Section {
            None,
            Inputs,
            Outputs,
            Assumptions,
            Guarantees,
            Realizable,
        }
        let mut section = Section::None;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut assumptions = Vec::new();
        let mut guarantees = Vec::new();
        let mut realizable = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| LtlError::Syntax { line: idx + 1, col: 1, msg };
            match line {
                "INPUTS" => section = Section::Inputs,
                "OUTPUTS" => section = Section::Outputs,
                "ASSUMPTIONS" => section = Section::Assumptions,
                "GUARANTEES" => section = Section::Guarantees,
                "REALIZABLE" => section = Section::Realizable,
                _ => match section {
                    Section::None => return Err(bad(format!("item outside a section: '{line}'"))),
                    Section::Inputs | Section::Outputs => {
                        let ok = line.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                            && line.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                        if !ok {
                            return Err(bad(format!("invalid atom name '{line}'")));
                        }
                        if section == Section::Inputs {
                            inputs.push(line.to_string());
                        } else {
                            outputs.push(line.to_string());
                        }
                    }
                    Section::Assumptions | Section::Guarantees => {
                        let f = parse_ltl(line, None).map_err(|e| match e {
                            LtlError::Syntax { col, msg, .. } => {
                                LtlError::Syntax { line: idx + 1, col, msg }
                            }
                            other => other,
                        })?;
                        if section == Section::Assumptions {
                            assumptions.push(f);
                        } else {
                            guarantees.push(f);
                        }
                    }
                    Section::Realizable => {
                        realizable = Some(match line {
                            "true" | "1" | "yes" => true,
                            "false" | "0" | "no" => false,
                            _ => return Err(bad(format!("expected true/false, got '{line}'"))),
                        })
                    }
                },
            }
        }
        Specification::new(inputs, outputs, assumptions, guarantees, realizable.unwrap_or(true))
    }

    /// Text in the sectioned format accepted by [`Specification::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = |name: &str, items: Vec<String>| {
            let _ = writeln!(out, "{name}");
            for item in items {
                let _ = writeln!(out, "{item}");
            }
        };
        section("INPUTS", self.inputs.clone());
        section("OUTPUTS", self.outputs.clone());
        section("ASSUMPTIONS", self.assumptions.iter().map(|f| f.to_string()).collect());
        section("GUARANTEES", self.guarantees.iter().map(|f| f.to_string()).collect());
        section("REALIZABLE", vec![self.presumed_realizable.to_string()]);
        out
    }

    pub fn to_record(&self) -> SpecRecord {
        SpecRecord {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            assumptions: self.assumptions.iter().map(|f| f.to_string()).collect(),
            guarantees: self.guarantees.iter().map(|f| f.to_string()).collect(),
            realizable: self.presumed_realizable,
        }
    }
}

/// Flat serializable view of a specification with formulas as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub assumptions: Vec<String>,
    pub guarantees: Vec<String>,
    pub realizable: bool,
}

impl SpecRecord {
    pub fn into_spec(self) -> Result<Specification, LtlError> {
        let parse_all = |items: Vec<String>| -> Result<Vec<Ltl>, LtlError> {
            items.iter().map(|s| parse_ltl(s, None)).collect()
        };
        Specification::new(
            self.inputs,
            self.outputs,
            parse_all(self.assumptions)?,
            parse_all(self.guarantees)?,
            self.realizable,
        )
    }
}

/// The four-process arbiter: response for every request/grant pair plus
/// mutual exclusion of the grants. Atoms follow the positional convention
/// of the printed arbiter circuits: inputs `i0 r_2 r_0 r_3 r_1` become
/// `i0..i4` and outputs `g_3 g_2 g_0 g_1 o4` become `o0..o4`.
pub fn arbiter_spec() -> Specification {
    // r_k -> input index, g_k -> output index
    let r = ["i2", "i4", "i1", "i3"];
    let g = ["o2", "o3", "o1", "o0"];
    let mut guarantees: Vec<Ltl> = (0..4)
        .map(|k| parse_ltl(&format!("G ({} -> F {})", r[k], g[k]), None).unwrap())
        .collect();
    let mutex = format!(
        "G (((!{g0}) & (!{g1}) & ((!{g2}) | (!{g3}))) | (((!{g0}) | (!{g1})) & (!{g2}) & (!{g3})))",
        g0 = g[0],
        g1 = g[1],
        g2 = g[2],
        g3 = g[3]
    );
    guarantees.push(parse_ltl(&mutex, None).unwrap());
    Specification::new(
        (0..5).map(|i| format!("i{i}")).collect(),
        (0..5).map(|i| format!("o{i}")).collect(),
        vec![],
        guarantees,
        true,
    )
    .unwrap()
}

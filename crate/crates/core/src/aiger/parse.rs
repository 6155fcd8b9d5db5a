use std::collections::BTreeMap;

use super::circuit::{AigerCircuit, AndGate, Latch, Literal, SymbolKind};
use super::validate::{validate, Defect, DefectKind, Section};
use super::AigerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Enforce every strict-validity invariant.
    Strict,
    /// Accept dangling literals, redefinitions and header/body count
    /// mismatches; the header is recomputed from the body.
    Lenient,
}

struct Body {
    header: [u32; 5],
    lines: Vec<(usize, Vec<u32>)>,
    symbols: BTreeMap<(SymbolKind, usize), String>,
}

fn split_lines(text: &str) -> Result<Body, AigerError> {
    let mut iter = text.lines().enumerate();
    let header_line = loop {
        match iter.next() {
            None => return Err(AigerError::Malformed { line: 1, msg: "empty input".into() }),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((n, l)) => break (n + 1, l),
        }
    };
    let mut parts = header_line.1.split_whitespace();
    if parts.next() != Some("aag") {
        return Err(AigerError::Malformed { line: header_line.0, msg: "header must start with 'aag'".into() });
    }
    let nums: Vec<&str> = parts.collect();
    if nums.len() != 5 {
        return Err(AigerError::Malformed {
            line: header_line.0,
            msg: format!("header needs 5 integers, found {}", nums.len()),
        });
    }
    let mut header = [0u32; 5];
    for (slot, s) in header.iter_mut().zip(&nums) {
        *slot = s.parse().map_err(|_| AigerError::Malformed {
            line: header_line.0,
            msg: format!("invalid header integer '{s}'"),
        })?;
    }

    let mut lines = Vec::new();
    let mut symbols = BTreeMap::new();
    let mut in_symbols = false;
    for (n, raw) in iter {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "c" || line.starts_with("c ") {
            break;
        }
        let first = line.chars().next().unwrap();
        if matches!(first, 'i' | 'l' | 'o') {
            let (head, name) = line.split_once(' ').unwrap_or((line, ""));
            let kind = match first {
                'i' => SymbolKind::Input,
                'l' => SymbolKind::Latch,
                _ => SymbolKind::Output,
            };
            let idx: usize = head[1..].parse().map_err(|_| AigerError::Malformed {
                line: line_no,
                msg: format!("invalid symbol entry '{line}'"),
            })?;
            if name.trim().is_empty() {
                return Err(AigerError::Malformed { line: line_no, msg: "symbol without a name".into() });
            }
            symbols.insert((kind, idx), name.trim().to_string());
            in_symbols = true;
            continue;
        }
        if in_symbols {
            return Err(AigerError::Malformed {
                line: line_no,
                msg: "definition after symbol table".into(),
            });
        }
        let nums = line
            .split_whitespace()
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| AigerError::Malformed { line: line_no, msg: format!("invalid integer in '{line}'") })?;
        lines.push((line_no, nums));
    }
    Ok(Body { header, lines, symbols })
}

fn arity_error(line: usize, want: usize, got: usize) -> AigerError {
    AigerError::Malformed { line, msg: format!("expected {want} integers, found {got}") }
}

/// Parses ASCII AIGER text. Comments (everything after a `c` line) are
/// ignored.
pub fn parse_aiger(text: &str, mode: ParseMode) -> Result<AigerCircuit, AigerError> {
    let body = split_lines(text)?;
    match mode {
        ParseMode::Strict => parse_strict(body),
        ParseMode::Lenient => parse_lenient(body),
    }
}

fn parse_strict(body: Body) -> Result<AigerCircuit, AigerError> {
    let [m, i, l, o, a] = body.header.map(|x| x as usize);
    let expected = i + l + o + a;
    if body.lines.len() != expected {
        let line = body.lines.get(expected).map(|x| x.0).unwrap_or(1);
        return Err(AigerError::Invalid(Defect {
            kind: DefectKind::HeaderMismatch,
            section: Section::Header,
            index: 0,
            line,
        }));
    }
    let mut it = body.lines.into_iter();
    let mut take = |want: usize| -> Result<Vec<u32>, AigerError> {
        let (line, nums) = it.next().expect("count checked");
        if nums.len() != want {
            return Err(arity_error(line, want, nums.len()));
        }
        Ok(nums)
    };
    let mut c = AigerCircuit { max_var: m as u32, symbols: body.symbols, ..Default::default() };
    for _ in 0..i {
        c.inputs.push(Literal(take(1)?[0]));
    }
    for _ in 0..l {
        let n = take(2)?;
        c.latches.push(Latch { out: Literal(n[0]), next: Literal(n[1]) });
    }
    for _ in 0..o {
        c.outputs.push(Literal(take(1)?[0]));
    }
    for _ in 0..a {
        let n = take(3)?;
        c.ands.push(AndGate { out: Literal(n[0]), in1: Literal(n[1]), in2: Literal(n[2]) });
    }
    let report = validate(&c);
    if let Some(d) = report.defects.into_iter().next() {
        return Err(AigerError::Invalid(d));
    }
    Ok(c)
}

/// Section boundaries come from line arities: single integers before the
/// latches are inputs, single integers after them are outputs. Without
/// latches the run of single integers is split by the header's input count.
fn parse_lenient(body: Body) -> Result<AigerCircuit, AigerError> {
    let header_inputs = body.header[1] as usize;
    let mut phase = 0; // 0 singles, 1 latches, 2 outputs, 3 ands
    let mut singles = Vec::new();
    let mut c = AigerCircuit { symbols: body.symbols, ..Default::default() };
    for (line, nums) in body.lines {
        let arity = nums.len();
        let next_phase = match (phase, arity) {
            (0, 1) => 0,
            (0 | 1, 2) => 1,
            (1 | 2, 1) => 2,
            (_, 3) => 3,
            (p, n) => {
                let want = match p {
                    0 => "1, 2 or 3",
                    1 => "1, 2 or 3",
                    2 => "1 or 3",
                    _ => "3",
                };
                return Err(AigerError::Malformed {
                    line,
                    msg: format!("expected {want} integers at this point, found {n}"),
                });
            }
        };
        phase = next_phase;
        match phase {
            0 => singles.push(Literal(nums[0])),
            1 => c.latches.push(Latch { out: Literal(nums[0]), next: Literal(nums[1]) }),
            2 => c.outputs.push(Literal(nums[0])),
            _ => c.ands.push(AndGate { out: Literal(nums[0]), in1: Literal(nums[1]), in2: Literal(nums[2]) }),
        }
    }
    if c.latches.is_empty() {
        let split = header_inputs.min(singles.len());
        let outs = singles.split_off(split);
        // outputs collected after an empty latch section cannot exist, the
        // singles run swallowed them
        debug_assert!(c.outputs.is_empty());
        c.outputs = outs;
    }
    c.inputs = singles;
    c.max_var = c.used_max_var();
    Ok(c)
}

//! Injection of human-like errors into correct circuits.

use rand::Rng;
use thiserror::Error;

use crate::aiger::{AigerCircuit, Literal};

#[derive(Debug, Error, PartialEq)]
pub enum CorruptError {
    #[error("invalid corruption parameters: {0}")]
    InvalidParams(String),
    #[error("empty support for truncated Gaussian on [{lo}, {hi}]")]
    EmptySupport { lo: i64, hi: i64 },
    #[error("circuit has nothing to corrupt")]
    NothingToCorrupt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionParams {
    pub sigma_changes: f64,
    pub max_changes: u32,
    pub sigma_var: f64,
    pub p_delete: f64,
    pub var_lo: u32,
    pub var_hi: u32,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        CorruptionParams { sigma_changes: 7.5, max_changes: 50, sigma_var: 10.0, p_delete: 0.2, var_lo: 0, var_hi: 61 }
    }
}

impl CorruptionParams {
    pub fn validate(&self) -> Result<(), CorruptError> {
        let bad = |m: &str| Err(CorruptError::InvalidParams(m.to_string()));
        if !(0.0..=1.0).contains(&self.p_delete) {
            return bad("p_delete must lie in [0, 1]");
        }
        if self.max_changes < 1 {
            return bad("max_changes must be at least 1");
        }
        if self.var_lo >= self.var_hi {
            return bad("var_lo must be below var_hi");
        }
        if !(self.sigma_changes > 0.0 && self.sigma_var > 0.0) {
            return bad("standard deviations must be positive");
        }
        Ok(())
    }
}

/// Probability mass function of the discrete truncated Gaussian on
/// `lo..=hi`, indexed from `lo`.
pub fn trunc_gauss_pmf(mean: f64, sigma: f64, lo: i64, hi: i64, exclude_mean: bool) -> Result<Vec<f64>, CorruptError> {
    if lo > hi {
        return Err(CorruptError::EmptySupport { lo, hi });
    }
    let weight = |k: i64| {
        if exclude_mean && k as f64 == mean {
            return 0.0;
        }
        let z = (k as f64 - mean) / sigma;
        (-0.5 * z * z).exp()
    };
    let mut w: Vec<f64> = (lo..=hi).map(weight).collect();
    let mut total: f64 = w.iter().sum();
    if total == 0.0 || !total.is_finite() {
        // sigma so small that every weight underflowed: keep the nearest
        // admissible integers
        let dist = |k: i64| (k as f64 - mean).abs();
        let best = (lo..=hi)
            .filter(|&k| !(exclude_mean && k as f64 == mean))
            .map(dist)
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(CorruptError::EmptySupport { lo, hi });
        }
        w = (lo..=hi)
            .map(|k| if !(exclude_mean && k as f64 == mean) && dist(k) == best { 1.0 } else { 0.0 })
            .collect();
        total = w.iter().sum();
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Draws `k ∈ [lo, hi]` with probability proportional to
/// `exp(-(k - mean)² / 2σ²)`; `mean` itself is skipped when `exclude_mean`.
pub fn sample_trunc_gauss_int<R: Rng + ?Sized>(
    mean: f64,
    sigma: f64,
    lo: i64,
    hi: i64,
    exclude_mean: bool,
    rng: &mut R,
) -> Result<i64, CorruptError> {
    let pmf = trunc_gauss_pmf(mean, sigma, lo, hi, exclude_mean)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (i, p) in pmf.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        acc += p;
        last = Some(i);
        if u < acc {
            return Ok(lo + i as i64);
        }
    }
    Ok(lo + last.expect("nonempty support") as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    InputDef,
    LatchOut,
    LatchNext,
    OutputDef,
    AndOut,
    AndIn1,
    AndIn2,
}

/// A variable-number slot of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub site: Site,
    pub index: usize,
}

/// Inputs, then latch pairs, then outputs, then AND triples.
pub fn enumerate_positions(circuit: &AigerCircuit) -> Vec<Position> {
    let mut out = Vec::new();
    let p = |site, index| Position { site, index };
    out.extend((0..circuit.inputs.len()).map(|i| p(Site::InputDef, i)));
    for i in 0..circuit.latches.len() {
        out.push(p(Site::LatchOut, i));
        out.push(p(Site::LatchNext, i));
    }
    out.extend((0..circuit.outputs.len()).map(|i| p(Site::OutputDef, i)));
    for i in 0..circuit.ands.len() {
        out.push(p(Site::AndOut, i));
        out.push(p(Site::AndIn1, i));
        out.push(p(Site::AndIn2, i));
    }
    out
}

fn slot(circuit: &mut AigerCircuit, pos: Position) -> &mut Literal {
    let i = pos.index;
    match pos.site {
        Site::InputDef => &mut circuit.inputs[i],
        Site::LatchOut => &mut circuit.latches[i].out,
        Site::LatchNext => &mut circuit.latches[i].next,
        Site::OutputDef => &mut circuit.outputs[i],
        Site::AndOut => &mut circuit.ands[i].out,
        Site::AndIn1 => &mut circuit.ands[i].in1,
        Site::AndIn2 => &mut circuit.ands[i].in2,
    }
}

/// What a corruption did, for statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionOutcome {
    pub circuit: AigerCircuit,
    pub changes: u32,
    pub deletions: u32,
    pub replacements: Vec<(u32, u32)>,
}

pub fn corrupt_circuit<R: Rng + ?Sized>(
    circuit: &AigerCircuit,
    params: &CorruptionParams,
    rng: &mut R,
) -> Result<AigerCircuit, CorruptError> {
    corrupt_circuit_detailed(circuit, params, rng).map(|o| o.circuit)
}

/// Draws a change count, then per change either deletes a latch or AND
/// line (probability `p_delete`) or replaces one variable number with a
/// nearby different one. Attempts that happen to reproduce the input (a
/// later change undoing an earlier one) are redrawn.
pub fn corrupt_circuit_detailed<R: Rng + ?Sized>(
    circuit: &AigerCircuit,
    params: &CorruptionParams,
    rng: &mut R,
) -> Result<CorruptionOutcome, CorruptError> {
    params.validate()?;
    if circuit.latches.is_empty() && circuit.ands.is_empty() && enumerate_positions(circuit).is_empty() {
        return Err(CorruptError::NothingToCorrupt);
    }
    let original = circuit.serialize(false);
    loop {
        let outcome = corrupt_once(circuit, params, rng)?;
        if outcome.circuit.serialize(false) != original {
            return Ok(outcome);
        }
    }
}

fn corrupt_once<R: Rng + ?Sized>(
    circuit: &AigerCircuit,
    params: &CorruptionParams,
    rng: &mut R,
) -> Result<CorruptionOutcome, CorruptError> {
    let changes =
        sample_trunc_gauss_int(0.0, params.sigma_changes, 1, params.max_changes as i64, false, rng)? as u32;
    let mut c = circuit.clone();
    let mut deletions = 0;
    let mut replacements = Vec::new();
    for _ in 0..changes {
        let deletable = c.latches.len() + c.ands.len();
        let delete = rng.gen_bool(params.p_delete);
        if delete && deletable > 0 {
            let k = rng.gen_range(0..deletable);
            if k < c.latches.len() {
                c.latches.remove(k);
            } else {
                c.ands.remove(k - c.latches.len());
            }
            deletions += 1;
            continue;
        }
        let positions = enumerate_positions(&c);
        if positions.is_empty() {
            // everything deleted from a circuit without inputs or outputs
            break;
        }
        let pos = positions[rng.gen_range(0..positions.len())];
        let lit = slot(&mut c, pos);
        let old = lit.0;
        let new = sample_trunc_gauss_int(
            old as f64,
            params.sigma_var,
            params.var_lo as i64,
            params.var_hi as i64,
            true,
            rng,
        )? as u32;
        *lit = Literal(new);
        replacements.push((old, new));
    }
    c.max_var = c.used_max_var();
    Ok(CorruptionOutcome { circuit: c, changes, deletions, replacements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::{arbiter, parse_aiger, ParseMode};
    use crate::rng::seeded;

    #[test]
    fn narrow_gaussian_picks_neighbours() {
        let mut rng = seeded(1);
        for _ in 0..200 {
            let k = sample_trunc_gauss_int(12.0, 1e-3, 0, 61, true, &mut rng).unwrap();
            assert!(k == 11 || k == 13, "{k}");
        }
    }

    #[test]
    fn pmf_decreasing_from_one() {
        let pmf = trunc_gauss_pmf(0.0, 7.5, 1, 50, false).unwrap();
        assert!(pmf.windows(2).all(|w| w[0] > w[1]));
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_support() {
        let mut rng = seeded(0);
        assert!(sample_trunc_gauss_int(3.0, 1.0, 3, 3, true, &mut rng).is_err());
        assert!(sample_trunc_gauss_int(0.0, 1.0, 4, 3, false, &mut rng).is_err());
    }

    #[test]
    fn position_counts() {
        let c = parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap();
        assert_eq!(enumerate_positions(&c).len(), 29);
        assert!(enumerate_positions(&AigerCircuit::default()).is_empty());
        let io = parse_aiger("aag 1 1 0 1 0\n2\n2\n", ParseMode::Strict).unwrap();
        assert_eq!(enumerate_positions(&io).len(), 2);
    }

    #[test]
    fn forced_deletion() {
        let c = parse_aiger("aag 3 1 1 1 1\n2\n4 6\n6\n6 2 4\n", ParseMode::Strict).unwrap();
        let params = CorruptionParams { p_delete: 1.0, max_changes: 1, ..Default::default() };
        let out = corrupt_circuit(&c, &params, &mut seeded(5)).unwrap();
        assert_eq!(out.latches.len() + out.ands.len(), 1);
        assert_eq!(out.inputs.len(), 1);
        assert_eq!(out.outputs.len(), 1);
    }

    #[test]
    fn invalid_params() {
        let p = CorruptionParams { p_delete: 2.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = CorruptionParams { var_lo: 5, var_hi: 5, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn always_differs_and_stays_in_range() {
        let c = parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap();
        let params = CorruptionParams::default();
        for seed in 0..300 {
            let o = corrupt_circuit_detailed(&c, &params, &mut seeded(seed)).unwrap();
            assert_ne!(o.circuit.serialize(false), c.serialize(false));
            assert!((1..=50).contains(&o.changes));
            assert!(o.replacements.iter().all(|&(a, b)| a != b && b <= 61));
            assert_eq!(o.circuit.inputs.len(), 5);
            assert_eq!(o.circuit.outputs.len(), 5);
        }
    }

    #[test]
    fn golden_seed_42() {
        let c = parse_aiger(arbiter::CORRECT, ParseMode::Strict).unwrap();
        let out = corrupt_circuit(&c, &CorruptionParams::default(), &mut seeded(42)).unwrap();
        assert_eq!(out.serialize(false), "aag 20 5 2 5 4\n2\n4\n0\n8\n7\n12 13\n14 24\n16\n18\n20\n12\n0\n18 15 12\n20 7 8\n22 14 12\n41 23 17\n");
    }
}

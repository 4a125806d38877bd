use super::node::representation_error;
use crate::error::{Error, Result};
use crate::fxcode::{FxOp, FxProgram, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Exact maximum error per program output, in output order.
    pub outputs: Vec<f64>,
    pub max: f64,
    /// Number of input lattice points visited.
    pub visited: u128,
}

/// Real inputs consistent with the integer `v`: within the input's error
/// bound of `2^-m v` and inside its range.
fn cell(prog: &FxProgram, input: NodeId, v: i128) -> Option<(f64, f64)> {
    let nd = &prog.nodes[input];
    let e = representation_error(prog, input).unwrap_or(0.0);
    let x = nd.format.to_real(v);
    let lo = (x - e).max(nd.range.lo);
    let hi = (x + e).min(nd.range.hi);
    (lo <= hi).then_some((lo, hi))
}

fn lattice(prog: &FxProgram, input: NodeId) -> Vec<i128> {
    let nd = &prog.nodes[input];
    let e = representation_error(prog, input).unwrap_or(0.0);
    let scale = 2f64.powi(nd.format.m as i32);
    let lo = (((nd.range.lo - e) * scale).floor() as i128).max(nd.format.min_int());
    let hi = (((nd.range.hi + e) * scale).ceil() as i128).min(nd.format.max_int());
    (lo..=hi).filter(|&v| cell(prog, input, v).is_some()).collect()
}

/// Exact worst-case output error over every combination of representable
/// free inputs and, for each, every real input in its quantization cell.
/// Input words next to the range edge may push an output past its format;
/// like the MILP, the oracle keeps the unbounded integer result.
/// Linked inputs read the fixed-point value of their source, so each output
/// is compared against real arithmetic on the values the program actually
/// consumes.
pub fn enumerate_oracle(prog: &FxProgram, max_states: u128) -> Result<OracleResult> {
    let free = prog.free_inputs();
    let inputs = prog.input_nodes();
    let lattices: Vec<Vec<i128>> = free.iter().map(|&i| lattice(prog, i)).collect();
    let total = lattices
        .iter()
        .try_fold(1u128, |acc, l| acc.checked_mul(l.len() as u128))
        .unwrap_or(u128::MAX);
    if total > max_states {
        return Err(Error::StateSpaceTooLarge(total));
    }
    let mut worst = vec![0.0f64; prog.outputs.len()];
    let mut idx = vec![0usize; free.len()];
    let mut visited = 0u128;
    if lattices.iter().any(Vec::is_empty) {
        return Ok(OracleResult {
            outputs: worst,
            max: 0.0,
            visited,
        });
    }
    loop {
        let ints: Vec<i64> = idx.iter().zip(&lattices).map(|(&k, l)| l[k] as i64).collect();
        let vals = prog.eval_fx_unchecked(&ints)?;
        visited += 1;
        // Interval of each input node's real value.
        let mut free_pos = 0;
        let boxes: Vec<(f64, f64)> = inputs
            .iter()
            .map(|&i| match prog.nodes[i].op {
                FxOp::Input { link: Some(src) } => {
                    let x = prog.nodes[src].format.to_real(vals[src]);
                    (x, x)
                }
                _ => {
                    let c = cell(prog, i, ints[free_pos] as i128).expect("lattice points have cells");
                    free_pos += 1;
                    c
                }
            })
            .collect();
        for (w, out) in worst.iter_mut().zip(&prog.outputs) {
            let nd = &prog.nodes[out.node];
            let (mut lo, mut hi) = (nd.offset, nd.offset);
            for (&a, &(l, h)) in nd.affine.iter().zip(&boxes) {
                lo += (a * l).min(a * h);
                hi += (a * l).max(a * h);
            }
            let fx = nd.format.to_real(vals[out.node]);
            *w = w.max(hi - fx).max(fx - lo);
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                let max = worst.iter().copied().fold(0.0, f64::max);
                return Ok(OracleResult {
                    outputs: worst,
                    max,
                    visited,
                });
            }
            idx[d] += 1;
            if idx[d] < lattices[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Real value of every node when the free inputs take `real_inputs` and
/// linked inputs take the fixed-point value of their source from `fx`.
pub fn reference_values(prog: &FxProgram, real_inputs: &[f64], fx: &[i128]) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    let mut next = 0;
    for &i in &prog.input_nodes() {
        match prog.nodes[i].op {
            FxOp::Input { link: Some(src) } => all.push(prog.nodes[src].format.to_real(fx[src])),
            _ => {
                all.push(*real_inputs.get(next).ok_or_else(|| {
                    Error::Dimension("too few real inputs".into())
                })?);
                next += 1;
            }
        }
    }
    prog.eval_real(&all)
}

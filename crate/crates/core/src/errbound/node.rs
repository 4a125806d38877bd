use serde::Serialize;

use super::lp::{LinearProgram, Relation, Sense, VarId};
use super::milp::{solve_milp, MilpStatus};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::fxcode::{FxOp, FxProgram, NodeId, OutputRole};

/// Largest integer magnitude a MILP variable may reach before the
/// double-precision relaxation can no longer certify integrality.
const EXACT_INTEGER_LIMIT: f64 = 4.5e15;

/// Sign of the pre-shift integer `tmp` assumed by one MILP instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignCase {
    NonNegative,
    NonPositive,
    /// No truncating shift: the operation is exact and needs no split.
    Exact,
}

/// Whether the instance maximizes `a - a_fx` or `a_fx - a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Over,
    Under,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMethod {
    /// Closed form for inputs and constants.
    Representation,
    Milp,
    /// Interval propagation, used when the MILP is out of numeric range.
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub case: SignCase,
    pub direction: Direction,
    /// Error attained by the assignment.
    pub value: f64,
    pub assignment: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBound {
    pub node: String,
    /// Certified bound on `|a - 2^-m a_fx|`.
    pub bound: f64,
    /// Largest error attained by a feasible assignment.
    pub attained: f64,
    pub method: BoundMethod,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramErrorBound {
    pub nodes: Vec<ErrorBound>,
    /// Bound per program output, in output order.
    pub outputs: Vec<f64>,
    /// Euclidean norm of the output bounds.
    pub b_e2: f64,
}

impl ProgramErrorBound {
    pub fn state_bounds(&self, prog: &FxProgram) -> Vec<f64> {
        self.role_bounds(prog, |r| matches!(r, OutputRole::State(_)))
    }

    pub fn control_bounds(&self, prog: &FxProgram) -> Vec<f64> {
        self.role_bounds(prog, |r| matches!(r, OutputRole::Control(_)))
    }

    fn role_bounds(&self, prog: &FxProgram, keep: impl Fn(OutputRole) -> bool) -> Vec<f64> {
        prog.outputs
            .iter()
            .zip(&self.outputs)
            .filter(|(o, _)| keep(o.role))
            .map(|(_, &b)| b)
            .collect()
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Error of an input or constant node: `2^-m`, or zero for a constant
/// that its format represents exactly.
pub fn representation_error(prog: &FxProgram, node: NodeId) -> Option<f64> {
    let nd = &prog.nodes[node];
    match nd.op {
        FxOp::Input { .. } => Some(nd.format.lsb()),
        FxOp::Constant { value, quantized } => {
            if nd.format.to_real(quantized as i128) == value {
                Some(0.0)
            } else {
                Some(nd.format.lsb())
            }
        }
        _ => None,
    }
}

struct Operand {
    real: VarId,
    fixed: VarId,
}

struct Builder<'a> {
    prog: &'a FxProgram,
    bounds: &'a [f64],
    lp: LinearProgram,
}

impl Builder<'_> {
    /// Real value `b`, its fixed-point integer `b_hat` and the coupling
    /// `|b - 2^-m b_hat| <= b(e_b)`. `b_hat` is continuous when it is
    /// pinned to a lattice elsewhere.
    fn operand(&mut self, node: NodeId, name: &str, integer: bool) -> Operand {
        let nd = &self.prog.nodes[node];
        let e = self.bounds[node];
        let scale = 2f64.powi(nd.format.m as i32);
        let lo = (((nd.range.lo - e) * scale).ceil()).max(nd.format.min_int() as f64);
        let hi = (((nd.range.hi + e) * scale).floor()).min(nd.format.max_int() as f64);
        let real = self.lp.add_var(name, nd.range.lo, nd.range.hi);
        let hat = format!("{name}_hat");
        let fixed = if integer {
            self.lp.add_int_var(hat, lo, hi, 1)
        } else {
            self.lp.add_var(hat, lo, hi)
        };
        let lsb = nd.format.lsb();
        self.lp.add_constraint(
            format!("{name}_err_hi"),
            vec![(real, 1.0), (fixed, -lsb)],
            Relation::Le,
            e,
        );
        self.lp.add_constraint(
            format!("{name}_err_lo"),
            vec![(real, 1.0), (fixed, -lsb)],
            Relation::Ge,
            -e,
        );
        Operand { real, fixed }
    }
}

fn interval_of(terms: &[(f64, f64, f64)]) -> (f64, f64) {
    // (coefficient, lo, hi) triples.
    terms.iter().fold((0.0, 0.0), |(l, h), &(a, lo, hi)| {
        let (x, y) = (a * lo, a * hi);
        (l + x.min(y), h + x.max(y))
    })
}

/// Weighted LLL reduction (δ = 3/4) of the rows of `basis`.
fn lll_reduce(mut basis: Vec<Vec<i128>>, weights: &[f64]) -> Vec<Vec<i128>> {
    let n = basis.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gso = |basis: &[Vec<i128>]| {
        let scaled: Vec<Vec<f64>> = basis
            .iter()
            .map(|v| v.iter().zip(weights).map(|(&x, w)| x as f64 * w).collect())
            .collect();
        let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut mu = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut v = scaled[i].clone();
            for j in 0..i {
                mu[i][j] = dot(&scaled[i], &star[j]) / dot(&star[j], &star[j]);
                for (a, b) in v.iter_mut().zip(&star[j]) {
                    *a -= mu[i][j] * b;
                }
            }
            star.push(v);
        }
        (star, mu)
    };
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 1000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gso(&basis);
            let q = mu[k][j].round() as i128;
            if q != 0 {
                let bj = basis[j].clone();
                for (a, b) in basis[k].iter_mut().zip(&bj) {
                    *a -= q * b;
                }
            }
        }
        let (star, mu) = gso(&basis);
        let lhs = dot(&star[k], &star[k]);
        let rhs = (0.75 - mu[k][k - 1] * mu[k][k - 1]) * dot(&star[k - 1], &star[k - 1]);
        if lhs >= rhs {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    basis
}

/// MILP for one sign case and direction of a const_mul, add, sub or
/// shift_align node, given bounds on every earlier node's error. Returns
/// `None` when the case cannot occur.
///
/// A truncating shift of `tmp1 = s*tmp` (with `s` the sign case) is encoded
/// as `tmp1 = 2^k divisor + remainder`. The integer points of that relation
/// are parameterized by a reduced lattice basis, so branching happens on
/// well-conditioned coordinates `t1, t2, ...`.
pub fn build_op_milp(
    prog: &FxProgram,
    node: NodeId,
    operand_bounds: &[f64],
    case: SignCase,
    direction: Direction,
) -> Result<Option<LinearProgram>> {
    let nd = &prog.nodes[node];
    let k = prog.shift(node);
    if (k <= 0) != (case == SignCase::Exact) {
        return Ok(None);
    }
    let exact = k <= 0;
    let mut b = Builder {
        prog,
        bounds: operand_bounds,
        lp: LinearProgram::new(Sense::Maximize),
    };
    // Real result as terms over real variables; tmp as integer-weighted
    // terms over fixed-point ones.
    let mut real_terms: Vec<(VarId, f64)> = Vec::new();
    let mut tmp_terms: Vec<(VarId, i128)> = Vec::new();
    match nd.op {
        FxOp::ConstMul {
            operand,
            coeff,
            quantized_coeff,
            ..
        } => {
            let op = b.operand(operand, "b", exact);
            real_terms.push((op.real, coeff));
            tmp_terms.push((op.fixed, quantized_coeff as i128));
        }
        FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => {
            let sign = if matches!(nd.op, FxOp::Add { .. }) { 1 } else { -1 };
            let f = prog.align(lhs, rhs);
            let wl = 1i128 << (f - prog.nodes[lhs].format.m);
            let wr = sign * (1i128 << (f - prog.nodes[rhs].format.m));
            let l = b.operand(lhs, "b", exact);
            real_terms.push((l.real, 1.0));
            if rhs == lhs {
                real_terms.push((l.real, sign as f64));
                tmp_terms.push((l.fixed, wl + wr));
            } else {
                let r = b.operand(rhs, "c", exact);
                real_terms.push((r.real, sign as f64));
                tmp_terms.push((l.fixed, wl));
                tmp_terms.push((r.fixed, wr));
            }
        }
        FxOp::ShiftAlign { operand } => {
            let op = b.operand(operand, "b", exact);
            real_terms.push((op.real, 1.0));
            tmp_terms.push((op.fixed, 1));
        }
        FxOp::Input { .. } | FxOp::Constant { .. } => {
            return Err(Error::Unsupported(format!(
                "node `{}` has no operation to encode",
                nd.id
            )))
        }
    }

    let ranges: Vec<(f64, f64, f64)> = tmp_terms
        .iter()
        .map(|&(v, a)| (a as f64, b.lp.vars[v].lo, b.lp.vars[v].hi))
        .collect();
    let (tlo, thi) = interval_of(&ranges);
    if tlo.abs().max(thi.abs()) > EXACT_INTEGER_LIMIT {
        return Err(Error::Unsupported(format!(
            "node `{}` exceeds exact double-precision integers",
            nd.id
        )));
    }
    let tmp = b.lp.add_var("tmp", tlo, thi);
    let mut def: Vec<(VarId, f64)> = tmp_terms.iter().map(|&(v, a)| (v, a as f64)).collect();
    def.push((tmp, -1.0));
    b.lp.add_constraint("tmp_def", def, Relation::Eq, 0.0);

    let ma = nd.format.lsb();
    let dir = if direction == Direction::Over { 1.0 } else { -1.0 };
    // Fixed-point result `afx`, worth 2^-m_a each.
    let afx: VarId;
    if exact {
        let up = 2f64.powi(-k);
        afx = b.lp.add_var("a_hat", tlo * up, thi * up);
        b.lp.add_constraint("a_hat_def", vec![(tmp, up), (afx, -1.0)], Relation::Eq, 0.0);
    } else {
        let pos = case == SignCase::NonNegative;
        if (pos && thi < 0.0) || (!pos && tlo > 0.0) {
            return Ok(None);
        }
        let p2 = 1i128 << k;
        let p2k = p2 as f64;
        let s: i128 = if pos { 1 } else { -1 };
        let t1hi = if pos { thi.max(0.0) } else { (-tlo).max(0.0) };
        let tmp1 = b.lp.add_var("tmp1", 0.0, t1hi);
        b.lp.add_constraint("tmp_sign", vec![(tmp, s as f64), (tmp1, -1.0)], Relation::Eq, 0.0);
        let dmax = (t1hi / p2k).floor();
        let divisor = b.lp.add_var("divisor", 0.0, dmax);
        let remainder = b.lp.add_var("remainder", 0.0, p2k - 1.0);
        b.lp.add_constraint(
            "shift",
            vec![(tmp1, 1.0), (divisor, -p2k), (remainder, -1.0)],
            Relation::Eq,
            0.0,
        );

        // Points (z, remainder) with s*w.z = remainder (mod 2^k), basis rows.
        let p = tmp_terms.len();
        let mut basis: Vec<Vec<i128>> = Vec::with_capacity(p + 1);
        for (i, &(_, w)) in tmp_terms.iter().enumerate() {
            let mut row = vec![0i128; p + 1];
            row[i] = 1;
            row[p] = (s * w).rem_euclid(p2);
            basis.push(row);
        }
        let mut last = vec![0i128; p + 1];
        last[p] = p2;
        basis.push(last);
        let mut boxes: Vec<(f64, f64)> = tmp_terms
            .iter()
            .map(|&(v, _)| (b.lp.vars[v].lo, b.lp.vars[v].hi))
            .collect();
        boxes.push((0.0, p2k - 1.0));
        let weights: Vec<f64> = boxes.iter().map(|(l, h)| 1.0 / (h - l).max(1.0)).collect();
        let basis = lll_reduce(basis, &weights);

        // Coordinate bounds from the inverse basis over the box.
        let bm = Matrix::from_rows(
            &basis
                .iter()
                .map(|r| r.iter().map(|&x| x as f64).collect())
                .collect::<Vec<Vec<f64>>>(),
        )?;
        let inv = bm.inverse()?;
        let mut ts = Vec::with_capacity(p + 1);
        for j in 0..=p {
            let terms: Vec<(f64, f64, f64)> =
                (0..=p).map(|i| (inv[(i, j)], boxes[i].0, boxes[i].1)).collect();
            let (lo, hi) = interval_of(&terms);
            ts.push(b.lp.add_int_var(
                format!("t{}", j + 1),
                (lo - 1e-6).floor(),
                (hi + 1e-6).ceil(),
                2,
            ));
        }
        let coord = |name: String, var: VarId, col: usize, b: &mut Builder| {
            let mut terms = vec![(var, 1.0)];
            terms.extend(ts.iter().zip(&basis).map(|(&t, row)| (t, -(row[col] as f64))));
            b.lp.add_constraint(name, terms, Relation::Eq, 0.0);
        };
        for (i, &(v, _)) in tmp_terms.iter().enumerate() {
            let name = format!("lattice_{}", b.lp.vars[v].name);
            coord(name, v, i, &mut b);
        }
        coord("lattice_remainder".into(), remainder, p, &mut b);
        // divisor = (s*w.z - remainder) / 2^k, exact on each basis row.
        let mut terms = vec![(divisor, 1.0)];
        for (&t, row) in ts.iter().zip(&basis) {
            let num: i128 = tmp_terms.iter().zip(row).map(|(&(_, w), &z)| s * w * z).sum::<i128>() - row[p];
            terms.push((t, -((num / p2) as f64)));
        }
        b.lp.add_constraint("lattice_divisor", terms, Relation::Eq, 0.0);

        afx = b.lp.add_var("a_hat", -dmax, dmax);
        b.lp.add_constraint("a_hat_def", vec![(afx, 1.0), (divisor, -(s as f64))], Relation::Eq, 0.0);
    }
    let mut obj: Vec<(VarId, f64)> = real_terms.iter().map(|&(v, a)| (v, dir * a)).collect();
    obj.push((afx, -dir * ma));
    b.lp.set_objective(obj, 0.0);
    Ok(Some(b.lp))
}

/// Interval-propagation bound for one node given operand bounds.
pub fn affine_node_bound(prog: &FxProgram, node: NodeId, bounds: &[f64]) -> f64 {
    if let Some(e) = representation_error(prog, node) {
        return e;
    }
    let nd = &prog.nodes[node];
    let k = prog.shift(node);
    let trunc = |lsb_before_shift: f64| {
        if k > 0 {
            (2f64.powi(k) - 1.0) * lsb_before_shift
        } else {
            0.0
        }
    };
    match nd.op {
        FxOp::ConstMul {
            operand,
            coeff,
            quantized_coeff,
            coeff_shift,
        } => {
            let on = &prog.nodes[operand];
            let qc = quantized_coeff as f64 * 2f64.powi(-(coeff_shift as i32));
            let reach = on.range.magnitude() + bounds[operand];
            (coeff - qc).abs() * reach
                + coeff.abs() * bounds[operand]
                + trunc(2f64.powi(-((coeff_shift + on.format.m) as i32)))
        }
        FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => {
            let f = prog.align(lhs, rhs);
            bounds[lhs] + bounds[rhs] + trunc(2f64.powi(-(f as i32)))
        }
        FxOp::ShiftAlign { operand } => bounds[operand] + trunc(prog.nodes[operand].format.lsb()),
        FxOp::Input { .. } | FxOp::Constant { .. } => unreachable!("handled above"),
    }
}

/// Bound on one node's error: the largest optimum over its sign-case
/// MILPs, or the representation error for inputs and constants.
pub fn bound_node_error(prog: &FxProgram, node: NodeId, operand_bounds: &[f64]) -> Result<ErrorBound> {
    let nd = &prog.nodes[node];
    if let Some(e) = representation_error(prog, node) {
        return Ok(ErrorBound {
            node: nd.id.clone(),
            bound: e,
            attained: e,
            method: BoundMethod::Representation,
            certificate: None,
        });
    }
    let mut bound: f64 = 0.0;
    let mut attained: f64 = 0.0;
    let mut certificate = None;
    for case in [SignCase::Exact, SignCase::NonNegative, SignCase::NonPositive] {
        for direction in [Direction::Over, Direction::Under] {
            let lp = match build_op_milp(prog, node, operand_bounds, case, direction) {
                Ok(Some(lp)) => lp,
                Ok(None) => continue,
                Err(Error::Unsupported(_)) => return Ok(affine_fallback(prog, node, operand_bounds)),
                Err(e) => return Err(e),
            };
            let sol = solve_milp(&lp)?;
            if sol.status == MilpStatus::Infeasible {
                continue;
            }
            bound = bound.max(sol.bound);
            if sol.incumbent > attained || certificate.is_none() {
                attained = attained.max(sol.incumbent);
                certificate = Some(Certificate {
                    case,
                    direction,
                    value: sol.incumbent,
                    assignment: lp.vars.iter().map(|v| v.name.clone()).zip(sol.x).collect(),
                });
            }
        }
    }
    Ok(ErrorBound {
        node: nd.id.clone(),
        bound,
        attained,
        method: BoundMethod::Milp,
        certificate,
    })
}

fn affine_fallback(prog: &FxProgram, node: NodeId, bounds: &[f64]) -> ErrorBound {
    let e = affine_node_bound(prog, node, bounds);
    ErrorBound {
        node: prog.nodes[node].id.clone(),
        bound: e,
        attained: 0.0,
        method: BoundMethod::Affine,
        certificate: None,
    }
}

/// Bounds every node in program order, each from its operands' bounds,
/// and combines the output bounds into `b(e2)`.
pub fn bound_program_error(prog: &FxProgram) -> Result<ProgramErrorBound> {
    let mut bounds = Vec::with_capacity(prog.nodes.len());
    let mut nodes = Vec::with_capacity(prog.nodes.len());
    for i in 0..prog.nodes.len() {
        let eb = bound_node_error(prog, i, &bounds)?;
        bounds.push(eb.bound);
        nodes.push(eb);
    }
    let outputs: Vec<f64> = prog.outputs.iter().map(|o| bounds[o.node]).collect();
    Ok(ProgramErrorBound {
        b_e2: euclidean_norm(&outputs),
        nodes,
        outputs,
    })
}

/// Per-node bounds from interval propagation alone.
pub fn affine_program_bounds(prog: &FxProgram) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(prog.nodes.len());
    for i in 0..prog.nodes.len() {
        let e = affine_node_bound(prog, i, &bounds);
        bounds.push(e);
    }
    bounds
}

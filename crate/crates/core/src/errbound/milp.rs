use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::error::{Error, Result};

pub const NODE_CAP: usize = 10_000;
pub const GAP_TOLERANCE: f64 = 1e-9;
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// The node cap stopped the search; `bound` is still a valid bound.
    NodeCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Objective of the best integer-feasible assignment found.
    pub incumbent: f64,
    /// Proven bound on the optimum (upper for maximization).
    pub bound: f64,
    pub x: Vec<f64>,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    lp: &'a LinearProgram,
    work: LinearProgram,
    flip: f64,
    seq: usize,
}

impl Search<'_> {
    /// Relaxation over the given bounds, in maximization form.
    fn relax(&mut self, lo: &[f64], hi: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        for (v, (&l, &h)) in self.work.vars.iter_mut().zip(lo.iter().zip(hi)) {
            v.lo = l;
            v.hi = h;
        }
        let sol = solve_lp(&self.work)?;
        match sol.status {
            LpStatus::Optimal => Ok(Some((self.flip * sol.objective, sol.x))),
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::Solver("relaxation is unbounded".into())),
        }
    }

    fn node(&mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Option<Node>> {
        Ok(self.relax(&lo, &hi)?.map(|(bound, x)| {
            self.seq += 1;
            Node {
                bound,
                seq: self.seq,
                lo,
                hi,
                x,
            }
        }))
    }

    /// Most fractional integer variable among the highest priority class.
    fn branching_var(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, u8, f64)> = None;
        for (j, v) in self.lp.vars.iter().enumerate() {
            if !v.integer {
                continue;
            }
            let frac = (x[j] - x[j].round()).abs();
            if frac <= INTEGRALITY_TOLERANCE {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, p, f)) => v.priority > p || (v.priority == p && frac > f + 1e-12),
            };
            if better {
                best = Some((j, v.priority, frac));
            }
        }
        best.map(|(j, _, _)| j)
    }

    /// Objective with the integer variables fixed at their rounded values
    /// and the continuous ones re-optimized.
    fn polish(&mut self, node: &Node) -> Result<(f64, Vec<f64>)> {
        let mut lo = node.lo.clone();
        let mut hi = node.hi.clone();
        for (j, v) in self.lp.vars.iter().enumerate() {
            if v.integer {
                let r = node.x[j].round();
                lo[j] = r;
                hi[j] = r;
            }
        }
        Ok(self
            .relax(&lo, &hi)?
            .unwrap_or_else(|| (node.bound, node.x.clone())))
    }
}

/// Branch and bound over the simplex relaxation. A depth-first dive runs
/// until the first incumbent, then the open node with the best bound is
/// expanded next. Ties break on creation order, so runs are deterministic.
pub fn solve_milp(lp: &LinearProgram) -> Result<MilpSolution> {
    lp.validate()?;
    let flip = if lp.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let mut search = Search {
        lp,
        work: lp.clone(),
        flip,
        seq: 0,
    };
    let lo: Vec<f64> = lp.vars.iter().map(|v| if v.integer { v.lo.ceil() } else { v.lo }).collect();
    let hi: Vec<f64> = lp.vars.iter().map(|v| if v.integer { v.hi.floor() } else { v.hi }).collect();
    let Some(root) = search.node(lo, hi)? else {
        return Ok(MilpSolution {
            status: MilpStatus::Infeasible,
            incumbent: flip * f64::NEG_INFINITY,
            bound: flip * f64::NEG_INFINITY,
            x: vec![f64::NAN; lp.vars.len()],
            nodes: 1,
        });
    };

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut pruned_bound = f64::NEG_INFINITY;
    let mut stack = vec![root];
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut nodes = 1;
    let mut capped = false;
    loop {
        let next = if incumbent.is_none() {
            stack.pop()
        } else {
            if !stack.is_empty() {
                heap.extend(stack.drain(..));
            }
            heap.pop()
        };
        let Some(node) = next else { break };
        let best = incumbent.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v);
        if node.bound <= best + GAP_TOLERANCE {
            pruned_bound = pruned_bound.max(node.bound);
            continue;
        }
        let Some(j) = search.branching_var(&node.x) else {
            let (value, x) = search.polish(&node)?;
            pruned_bound = pruned_bound.max(node.bound);
            if value > best {
                incumbent = Some((value, x));
            }
            continue;
        };
        if nodes >= NODE_CAP {
            capped = true;
            pruned_bound = pruned_bound.max(node.bound);
            pruned_bound = pruned_bound.max(heap.iter().chain(&stack).map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max));
            break;
        }
        let v = node.x[j];
        let mut down_hi = node.hi.clone();
        down_hi[j] = v.floor();
        let mut up_lo = node.lo.clone();
        up_lo[j] = v.ceil();
        let down = search.node(node.lo.clone(), down_hi)?;
        let up = search.node(up_lo, node.hi.clone())?;
        nodes += 2;
        // The dive explores the child with the better bound first.
        let mut children: Vec<Node> = [down, up].into_iter().flatten().collect();
        children.sort_by(|a, b| a.cmp(b));
        stack.extend(children);
    }

    let status = if capped {
        MilpStatus::NodeCap
    } else if incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    let (value, x) = incumbent.unwrap_or((f64::NEG_INFINITY, vec![f64::NAN; lp.vars.len()]));
    let bound = if status == MilpStatus::Infeasible {
        f64::NEG_INFINITY
    } else {
        value.max(pruned_bound)
    };
    Ok(MilpSolution {
        status,
        incumbent: flip * value,
        bound: flip * bound,
        x,
        nodes,
    })
}

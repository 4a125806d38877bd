use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
    /// Branch-and-bound branches on higher priorities first.
    pub priority: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
    pub objective_offset: f64,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_offset: 0.0,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lo,
            hi,
            integer: false,
            priority: 0,
        });
        self.vars.len() - 1
    }

    pub fn add_int_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, priority: u8) -> VarId {
        let id = self.add_var(name, lo, hi);
        self.vars[id].integer = true;
        self.vars[id].priority = priority;
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>, offset: f64) {
        self.objective = terms;
        self.objective_offset = offset;
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        for v in &self.vars {
            if v.lo.is_nan() || v.hi.is_nan() || v.lo == f64::INFINITY || v.hi == f64::NEG_INFINITY {
                return Err(Error::Solver(format!("variable `{}` has invalid bounds", v.name)));
            }
        }
        let terms = self
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter())
            .chain(&self.objective);
        for &(j, a) in terms {
            if j >= n {
                return Err(Error::Solver(format!("undeclared variable index {j}")));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if self.constraints.iter().any(|c| !c.rhs.is_finite()) || !self.objective_offset.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }

    /// Largest violation of any bound or constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lo - xi).max(xi - v.hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// CPLEX-style LP text for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::new();
        let name = |j: VarId| self.vars[j].name.replace(|c: char| !c.is_ascii_alphanumeric() && c != '_', "_");
        let linear = |terms: &[(VarId, f64)]| {
            let mut out = String::new();
            for (k, &(j, a)) in terms.iter().enumerate() {
                let sign = if a < 0.0 { "-" } else if k > 0 { "+" } else { "" };
                let _ = write!(out, " {sign} {:e} {}", a.abs(), name(j));
            }
            if out.is_empty() {
                out.push_str(" 0");
            }
            out
        };
        if self.objective_offset != 0.0 {
            let _ = writeln!(s, "\\ objective offset {:e}", self.objective_offset);
        }
        let _ = writeln!(
            s,
            "{}",
            match self.sense {
                Sense::Maximize => "Maximize",
                Sense::Minimize => "Minimize",
            }
        );
        let _ = writeln!(s, " obj:{}", linear(&self.objective));
        let _ = writeln!(s, "Subject To");
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let label = if c.name.is_empty() {
                format!("c{}", i + 1)
            } else {
                c.name.clone()
            };
            let _ = writeln!(s, " {label}:{} {rel} {:e}", linear(&c.terms), c.rhs);
        }
        let _ = writeln!(s, "Bounds");
        for (j, v) in self.vars.iter().enumerate() {
            let bound = |x: f64| {
                if x.is_infinite() {
                    if x > 0.0 { "+inf".to_string() } else { "-inf".to_string() }
                } else {
                    format!("{x:e}")
                }
            };
            let _ = writeln!(s, " {} <= {} <= {}", bound(v.lo), name(j), bound(v.hi));
        }
        let ints: Vec<String> = (0..self.vars.len()).filter(|&j| self.vars[j].integer).map(name).collect();
        if !ints.is_empty() {
            let _ = writeln!(s, "General");
            let _ = writeln!(s, " {}", ints.join(" "));
        }
        let _ = writeln!(s, "End");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;
const PRICING_TOLERANCE: f64 = 1e-11;
const ITERATION_CAP: usize = 50_000;
const DEGENERATE_STREAK: usize = 50;

/// How an original variable is expressed in nonnegative tableau columns.
/// Bounded columns are scaled to `[0, 1]` so that coefficients stay
/// comparable across variables of very different magnitude.
enum Map {
    Shifted { offset: f64, col: usize, scale: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost` over the current basis. Columns with `allowed[j] =
    /// false` never enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<LpStatus> {
        let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cost: Vec<f64> = if scale > 0.0 {
            cost.iter().map(|c| c / scale).collect()
        } else {
            return Ok(LpStatus::Optimal);
        };
        let mut degenerate = 0;
        for _ in 0..ITERATION_CAP {
            let bland = degenerate >= DEGENERATE_STREAK;
            // Reduced cost d_j = c_j - c_B B^-1 a_j; enter when positive.
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.width {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for (i, row) in self.rows.iter().enumerate() {
                    d -= cost[self.basis[i]] * row[j];
                }
                if d > PRICING_TOLERANCE {
                    match enter {
                        None => enter = Some((j, d)),
                        Some((_, best)) if !bland && d > best => enter = Some((j, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((c, _)) = enter else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > SIMPLEX_TOLERANCE {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c);
        }
        Err(Error::Solver(format!(
            "simplex did not terminate within {ITERATION_CAP} pivots"
        )))
    }
}

/// Solves the continuous relaxation (integrality flags are ignored) with a
/// dense two-phase tableau simplex. Dantzig pricing falls back to Bland's
/// rule after a run of degenerate pivots.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let infeasible = || LpSolution {
        status: LpStatus::Infeasible,
        objective: f64::NAN,
        x: vec![f64::NAN; lp.vars.len()],
    };
    let mut maps = Vec::with_capacity(lp.vars.len());
    let mut ncols = 0;
    // Rows as (coefficients by column, relation, rhs); upper bounds become rows.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for v in &lp.vars {
        if v.lo > v.hi + SIMPLEX_TOLERANCE {
            return Ok(infeasible());
        }
        if v.lo.is_finite() {
            let width = v.hi - v.lo;
            let scale = if width.is_finite() && width > 0.0 { width } else { 1.0 };
            maps.push(Map::Shifted {
                offset: v.lo,
                col: ncols,
                scale,
            });
            if v.hi.is_finite() {
                rows.push((vec![(ncols, 1.0)], Relation::Le, width.max(0.0) / scale));
            }
            ncols += 1;
        } else if v.hi.is_finite() {
            maps.push(Map::Shifted {
                offset: v.hi,
                col: ncols,
                scale: -1.0,
            });
            ncols += 1;
        } else {
            maps.push(Map::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }
    let expand = |terms: &[(VarId, f64)]| -> (Vec<(usize, f64)>, f64) {
        let mut out = Vec::new();
        let mut shift = 0.0;
        for &(j, a) in terms {
            match maps[j] {
                Map::Shifted { offset, col, scale } => {
                    shift += a * offset;
                    out.push((col, a * scale));
                }
                Map::Split { pos, neg } => {
                    out.push((pos, a));
                    out.push((neg, -a));
                }
            }
        }
        (out, shift)
    };
    for c in &lp.constraints {
        let (terms, shift) = expand(&c.terms);
        rows.push((terms, c.relation, c.rhs - shift));
    }

    // Dense rows, scaled, with nonnegative right-hand sides.
    let mut dense: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for (terms, rel, rhs) in rows {
        let mut a = vec![0.0; ncols];
        for (j, v) in terms {
            a[j] += v;
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            let ok = match rel {
                Relation::Le => rhs >= -SIMPLEX_TOLERANCE,
                Relation::Ge => rhs <= SIMPLEX_TOLERANCE,
                Relation::Eq => rhs.abs() <= SIMPLEX_TOLERANCE,
            };
            if !ok {
                return Ok(infeasible());
            }
            continue;
        }
        let (mut a, mut rhs, mut rel) = (a, rhs / scale, rel);
        a.iter_mut().for_each(|v| *v /= scale);
        if rhs < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        dense.push((a, rel, rhs));
    }

    let m = dense.len();
    let nslack = dense.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = dense.iter().filter(|r| r.1 != Relation::Le).count();
    let width = ncols + nslack + nart;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        width,
    };
    let (mut s, mut art) = (ncols, ncols + nslack);
    for (a, rel, rhs) in &dense {
        let mut row = vec![0.0; width + 1];
        row[..ncols].copy_from_slice(a);
        row[width] = *rhs;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                tab.basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[art] = 1.0;
                tab.basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                tab.basis.push(art);
                art += 1;
            }
        }
        tab.rows.push(row);
    }

    let first_art = ncols + nslack;
    if nart > 0 {
        let mut cost = vec![0.0; width];
        cost[first_art..].iter_mut().for_each(|c| *c = -1.0);
        let all = vec![true; width];
        tab.optimize(&cost, &all)?;
        let residual: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= first_art)
            .map(|(i, _)| tab.rhs(i))
            .sum();
        if residual > SIMPLEX_TOLERANCE {
            return Ok(infeasible());
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_art {
                let col = (0..first_art)
                    .filter(|j| !tab.basis.contains(j))
                    .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()))
                    .filter(|&j| tab.rows[i][j].abs() > SIMPLEX_TOLERANCE);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; width];
    let flip = if lp.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let (obj, _) = expand(&lp.objective);
    for (j, a) in obj {
        cost[j] += flip * a;
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < first_art).collect();
    let status = tab.optimize(&cost, &allowed)?;
    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            objective: flip * f64::INFINITY,
            x: vec![f64::NAN; lp.vars.len()],
        });
    }

    let mut cols = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        cols[b] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .zip(&lp.vars)
        .map(|(mp, v)| {
            let val = match *mp {
                Map::Shifted { offset, col, scale } => offset + scale * cols[col],
                Map::Split { pos, neg } => cols[pos] - cols[neg],
            };
            val.clamp(v.lo, v.hi)
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
    })
}

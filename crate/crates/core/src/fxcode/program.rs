use serde::{Deserialize, Serialize};

use super::format::{allocate_format, shr_toward_zero, FxFormat, Interval};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FxOp {
    /// Program input. A linked input re-reads the value of an earlier node.
    Input {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<NodeId>,
    },
    Constant {
        value: f64,
        quantized: i64,
    },
    Add {
        lhs: NodeId,
        rhs: NodeId,
    },
    Sub {
        lhs: NodeId,
        rhs: NodeId,
    },
    ConstMul {
        operand: NodeId,
        coeff: f64,
        quantized_coeff: i64,
        coeff_shift: u32,
    },
    ShiftAlign {
        operand: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxNode {
    pub id: String,
    #[serde(flatten)]
    pub op: FxOp,
    pub format: FxFormat,
    pub range: Interval,
    /// Real value as an affine function of the program inputs.
    pub affine: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum OutputRole {
    /// Component of the controller state update (part of `e_q1`).
    State(usize),
    /// Component of the control output (part of `e_q2`).
    Control(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FxOutput {
    pub node: NodeId,
    pub role: OutputRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FxProgram {
    pub bit_budget: u32,
    pub nodes: Vec<FxNode>,
    pub outputs: Vec<FxOutput>,
    /// Node holding the initial value of each controller state, paired with
    /// the output that replaces it after every step.
    #[serde(default)]
    pub states: Vec<StateSlot>,
    /// The plant input is the negated control output.
    #[serde(default)]
    pub negate_control: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSlot {
    pub input: NodeId,
    pub update: NodeId,
}

impl FxProgram {
    /// Indices of all input nodes, in program order.
    pub fn input_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.op, FxOp::Input { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Input nodes that are not linked to another node.
    pub fn free_inputs(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.op, FxOp::Input { link: None }))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn node_by_id(&self, id: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Right-shift amount applied when producing `node` (negative = left shift).
    pub fn shift(&self, node: NodeId) -> i32 {
        let nd = &self.nodes[node];
        let m = nd.format.m as i32;
        match nd.op {
            FxOp::ConstMul {
                operand,
                coeff_shift,
                ..
            } => coeff_shift as i32 + self.nodes[operand].format.m as i32 - m,
            FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => self.align(lhs, rhs) as i32 - m,
            FxOp::ShiftAlign { operand } => self.nodes[operand].format.m as i32 - m,
            FxOp::Input { .. } | FxOp::Constant { .. } => 0,
        }
    }

    /// Fraction bits both add operands are aligned to before summing.
    pub fn align(&self, lhs: NodeId, rhs: NodeId) -> u32 {
        self.nodes[lhs].format.m.max(self.nodes[rhs].format.m)
    }

    pub fn operands(&self, node: NodeId) -> Vec<NodeId> {
        match self.nodes[node].op {
            FxOp::Input { link } => link.into_iter().collect(),
            FxOp::Constant { .. } => vec![],
            FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => vec![lhs, rhs],
            FxOp::ConstMul { operand, .. } | FxOp::ShiftAlign { operand } => vec![operand],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ninputs = self.input_nodes().len();
        for (i, node) in self.nodes.iter().enumerate() {
            if self.operands(i).iter().any(|&o| o >= i) {
                return Err(Error::Config(format!(
                    "node `{}` references a later node",
                    node.id
                )));
            }
            if node.affine.len() != ninputs {
                return Err(Error::Config(format!(
                    "node `{}` has an affine form over {} inputs, program has {ninputs}",
                    node.id,
                    node.affine.len()
                )));
            }
            if let FxOp::ConstMul {
                coeff,
                quantized_coeff,
                coeff_shift,
                ..
            } = node.op
            {
                let want = (coeff * 2f64.powi(coeff_shift as i32)).trunc();
                if want != quantized_coeff as f64 {
                    return Err(Error::Config(format!(
                        "node `{}`: coefficient {coeff} does not quantize to {quantized_coeff}",
                        node.id
                    )));
                }
            }
        }
        for out in &self.outputs {
            if out.node >= self.nodes.len() {
                return Err(Error::Config("output refers to a missing node".into()));
            }
        }
        Ok(())
    }

    /// Exact real range of every node from its affine form over the input box.
    pub fn range_analysis(&self) -> Vec<Interval> {
        let inputs = self.input_nodes();
        let boxes: Vec<Interval> = inputs.iter().map(|&i| self.nodes[i].range).collect();
        self.nodes
            .iter()
            .map(|n| affine_range(&n.affine, n.offset, &boxes))
            .collect()
    }

    /// Bit-exact evaluation. `free_inputs` holds one integer per unlinked
    /// input, in program order; returns the value of every node.
    pub fn eval_fx(&self, free_inputs: &[i64]) -> Result<Vec<i128>> {
        self.eval_integers(free_inputs, true)
    }

    /// As [`FxProgram::eval_fx`] but values that leave their format are kept
    /// instead of faulting.
    pub fn eval_fx_unchecked(&self, free_inputs: &[i64]) -> Result<Vec<i128>> {
        self.eval_integers(free_inputs, false)
    }

    fn eval_integers(&self, free_inputs: &[i64], checked: bool) -> Result<Vec<i128>> {
        let mut vals: Vec<i128> = Vec::with_capacity(self.nodes.len());
        let mut next_free = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match node.op {
                FxOp::Input { link: None } => {
                    let v = *free_inputs.get(next_free).ok_or_else(|| {
                        Error::Dimension(format!("missing value for input `{}`", node.id))
                    })? as i128;
                    next_free += 1;
                    v
                }
                FxOp::Input { link: Some(src) } => vals[src],
                FxOp::Constant { quantized, .. } => quantized as i128,
                FxOp::ConstMul {
                    operand,
                    quantized_coeff,
                    ..
                } => shr_toward_zero(quantized_coeff as i128 * vals[operand], self.shift(i)),
                FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => {
                    let f = self.align(lhs, rhs);
                    let l = vals[lhs] << (f - self.nodes[lhs].format.m);
                    let r = vals[rhs] << (f - self.nodes[rhs].format.m);
                    let s = if matches!(node.op, FxOp::Add { .. }) {
                        l + r
                    } else {
                        l - r
                    };
                    shr_toward_zero(s, self.shift(i))
                }
                FxOp::ShiftAlign { operand } => shr_toward_zero(vals[operand], self.shift(i)),
            };
            if checked && !node.format.fits(v) {
                return Err(Error::Overflow {
                    node: node.id.clone(),
                    value: v,
                });
            }
            vals.push(v);
        }
        if next_free != free_inputs.len() {
            return Err(Error::Dimension(format!(
                "{} input values for {next_free} free inputs",
                free_inputs.len()
            )));
        }
        Ok(vals)
    }

    /// Real-arithmetic evaluation with one value per input node (linked inputs
    /// included), in program order.
    pub fn eval_real(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let mut vals: Vec<f64> = Vec::with_capacity(self.nodes.len());
        let mut next = 0;
        for node in &self.nodes {
            let v = match node.op {
                FxOp::Input { .. } => {
                    let v = *inputs.get(next).ok_or_else(|| {
                        Error::Dimension(format!("missing value for input `{}`", node.id))
                    })?;
                    next += 1;
                    v
                }
                FxOp::Constant { value, .. } => value,
                FxOp::ConstMul { operand, coeff, .. } => coeff * vals[operand],
                FxOp::Add { lhs, rhs } => vals[lhs] + vals[rhs],
                FxOp::Sub { lhs, rhs } => vals[lhs] - vals[rhs],
                FxOp::ShiftAlign { operand } => vals[operand],
            };
            vals.push(v);
        }
        Ok(vals)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: FxProgram = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn state_outputs(&self) -> impl Iterator<Item = &FxOutput> {
        self.outputs
            .iter()
            .filter(|o| matches!(o.role, OutputRole::State(_)))
    }

    pub fn control_outputs(&self) -> impl Iterator<Item = &FxOutput> {
        self.outputs
            .iter()
            .filter(|o| matches!(o.role, OutputRole::Control(_)))
    }
}

pub(crate) fn affine_range(coeffs: &[f64], offset: f64, boxes: &[Interval]) -> Interval {
    let mut center = offset;
    let mut radius = 0.0;
    for (c, b) in coeffs.iter().zip(boxes) {
        center += c * b.center();
        radius += c.abs() * b.half_width();
    }
    Interval {
        lo: center - radius,
        hi: center + radius,
    }
}

/// Incremental construction of a straight-line fixed-point program. Every
/// node gets its exact range from its affine form and, unless a format is
/// forced, the best format for that range.
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    bits: u32,
    coeff_bits: u32,
    nodes: Vec<FxNode>,
    outputs: Vec<FxOutput>,
    states: Vec<StateSlot>,
    boxes: Vec<Interval>,
    negate_control: bool,
}

impl ProgramBuilder {
    pub fn new(bits: u32) -> Self {
        ProgramBuilder {
            bits,
            coeff_bits: bits,
            nodes: Vec::new(),
            outputs: Vec::new(),
            states: Vec::new(),
            boxes: Vec::new(),
            negate_control: false,
        }
    }

    /// Word length used for quantized coefficients (defaults to the data width).
    pub fn with_coeff_bits(mut self, coeff_bits: u32) -> Self {
        self.coeff_bits = coeff_bits;
        self
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn node(&self, id: NodeId) -> &FxNode {
        &self.nodes[id]
    }

    fn ninputs(&self) -> usize {
        self.boxes.len()
    }

    fn push(&mut self, id: String, op: FxOp, affine: Vec<f64>, offset: f64, format: Option<FxFormat>) -> Result<NodeId> {
        if self.nodes.iter().any(|n| n.id == id) {
            return Err(Error::Config(format!("duplicate node id `{id}`")));
        }
        let range = affine_range(&affine, offset, &self.boxes);
        let format = match format {
            Some(f) => {
                if !(f.holds(range.lo) && f.holds(range.hi)) {
                    return Err(Error::Config(format!(
                        "format {f} cannot hold the range [{}, {}] of `{id}`",
                        range.lo, range.hi
                    )));
                }
                f
            }
            None => allocate_format(range, true, self.bits)?,
        };
        self.nodes.push(FxNode {
            id,
            op,
            format,
            range,
            affine,
            offset,
        });
        Ok(self.nodes.len() - 1)
    }

    fn add_input_slot(&mut self, range: Interval) -> Vec<f64> {
        self.boxes.push(range);
        for n in &mut self.nodes {
            n.affine.push(0.0);
        }
        let mut a = vec![0.0; self.ninputs()];
        a[self.ninputs() - 1] = 1.0;
        a
    }

    pub fn input(&mut self, id: impl Into<String>, range: Interval) -> Result<NodeId> {
        self.input_with_format(id, range, None)
    }

    pub fn input_with_format(
        &mut self,
        id: impl Into<String>,
        range: Interval,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        let affine = self.add_input_slot(range);
        self.push(id.into(), FxOp::Input { link: None }, affine, 0.0, format)
    }

    /// Input that reads the stored value of `source`, in the same format.
    pub fn linked_input(&mut self, id: impl Into<String>, source: NodeId) -> Result<NodeId> {
        let src = &self.nodes[source];
        let (range, format) = (src.range, src.format);
        let affine = self.add_input_slot(range);
        self.push(id.into(), FxOp::Input { link: Some(source) }, affine, 0.0, Some(format))
    }

    pub fn constant(&mut self, id: impl Into<String>, value: f64) -> Result<NodeId> {
        self.constant_with_format(id, value, None)
    }

    pub fn constant_with_format(
        &mut self,
        id: impl Into<String>,
        value: f64,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        let format = match format {
            Some(f) => f,
            None => allocate_format(Interval::point(value), true, self.bits)?,
        };
        let quantized = format.quantize(value).ok_or_else(|| {
            Error::Config(format!("constant {value} does not fit {format}"))
        })? as i64;
        let affine = vec![0.0; self.ninputs()];
        self.push(
            id.into(),
            FxOp::Constant { value, quantized },
            affine,
            value,
            Some(format),
        )
    }

    pub fn const_mul(
        &mut self,
        id: impl Into<String>,
        operand: NodeId,
        coeff: f64,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        let cf = allocate_format(Interval::point(coeff), true, self.coeff_bits)?;
        let quantized_coeff = cf.quantize(coeff).expect("allocated format holds value") as i64;
        let src = &self.nodes[operand];
        let affine = src.affine.iter().map(|a| a * coeff).collect();
        let offset = src.offset * coeff;
        self.push(
            id.into(),
            FxOp::ConstMul {
                operand,
                coeff,
                quantized_coeff,
                coeff_shift: cf.m,
            },
            affine,
            offset,
            format,
        )
    }

    fn combine(
        &mut self,
        id: String,
        lhs: NodeId,
        rhs: NodeId,
        sign: f64,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        let (l, r) = (&self.nodes[lhs], &self.nodes[rhs]);
        let affine = l
            .affine
            .iter()
            .zip(&r.affine)
            .map(|(a, b)| a + sign * b)
            .collect();
        let offset = l.offset + sign * r.offset;
        let op = if sign > 0.0 {
            FxOp::Add { lhs, rhs }
        } else {
            FxOp::Sub { lhs, rhs }
        };
        self.push(id, op, affine, offset, format)
    }

    pub fn add(
        &mut self,
        id: impl Into<String>,
        lhs: NodeId,
        rhs: NodeId,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        self.combine(id.into(), lhs, rhs, 1.0, format)
    }

    pub fn sub(
        &mut self,
        id: impl Into<String>,
        lhs: NodeId,
        rhs: NodeId,
        format: Option<FxFormat>,
    ) -> Result<NodeId> {
        self.combine(id.into(), lhs, rhs, -1.0, format)
    }

    pub fn shift_align(
        &mut self,
        id: impl Into<String>,
        operand: NodeId,
        format: FxFormat,
    ) -> Result<NodeId> {
        let src = &self.nodes[operand];
        let (affine, offset) = (src.affine.clone(), src.offset);
        self.push(id.into(), FxOp::ShiftAlign { operand }, affine, offset, Some(format))
    }

    pub fn output(&mut self, node: NodeId, role: OutputRole) {
        self.outputs.push(FxOutput { node, role });
    }

    pub fn state(&mut self, input: NodeId, update: NodeId) {
        self.states.push(StateSlot { input, update });
    }

    pub fn negate_control(&mut self, negate: bool) {
        self.negate_control = negate;
    }

    pub fn finish(self) -> FxProgram {
        FxProgram {
            bit_budget: self.bits,
            nodes: self.nodes,
            outputs: self.outputs,
            states: self.states,
            negate_control: self.negate_control,
        }
    }
}

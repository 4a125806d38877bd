use super::format::{allocate_format, FxFormat, Interval};
use super::program::{affine_range, FxProgram, NodeId, OutputRole, ProgramBuilder};
use crate::error::{Error, Result};
use crate::plant::{observer_update_matrix, DiscretePlant, GainPair, PidRealization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub bits: u32,
    /// Coefficient word length; `None` uses `bits`.
    pub coeff_bits: Option<u32>,
}

impl SynthOptions {
    pub fn new(bits: u32) -> Self {
        SynthOptions {
            bits,
            coeff_bits: None,
        }
    }

    fn builder(&self) -> ProgramBuilder {
        ProgramBuilder::new(self.bits).with_coeff_bits(self.coeff_bits.unwrap_or(self.bits))
    }
}

struct Names {
    gain: usize,
    add: usize,
}

impl Names {
    fn gain(&mut self) -> String {
        self.gain += 1;
        format!("Gain{}", self.gain)
    }

    fn add(&mut self) -> String {
        self.add += 1;
        format!("Add{}", self.add)
    }
}

/// Left-to-right dot product `sum_j coeffs[j] * operands[j]`, zero terms
/// dropped. The final operation is named `out_id` and, when given, stored in
/// `out_format`.
fn dot(
    b: &mut ProgramBuilder,
    names: &mut Names,
    terms: &[(f64, NodeId)],
    out_id: &str,
    out_format: Option<FxFormat>,
) -> Result<NodeId> {
    let live: Vec<(f64, NodeId)> = terms.iter().copied().filter(|(c, _)| *c != 0.0).collect();
    if live.is_empty() {
        return b.constant_with_format(out_id, 0.0, out_format);
    }
    if live.len() == 1 {
        let (c, x) = live[0];
        return b.const_mul(out_id, x, c, out_format);
    }
    let (c0, x0) = live[0];
    let mut acc = b.const_mul(names.gain(), x0, c0, None)?;
    for (k, &(c, x)) in live.iter().enumerate().skip(1) {
        let term = b.const_mul(names.gain(), x, c, None)?;
        acc = if k + 1 == live.len() {
            b.add(out_id, acc, term, out_format)?
        } else {
            b.add(names.add(), acc, term, None)?
        };
    }
    Ok(acc)
}

fn suffix(base: &str, i: usize, count: usize) -> String {
    if count == 1 && base == "u" {
        base.to_string()
    } else {
        format!("{base}{}", i + 1)
    }
}

/// Fixed-point program for one controller step:
/// `xhat_new = (A - B K - L C) xhat + L y` followed by `u = K xhat_new`.
/// The plant input is `-u`.
pub fn synthesize_controller_program(
    dp: &DiscretePlant,
    gains: &GainPair,
    y_box: &[Interval],
    xhat_box: &[Interval],
    opts: SynthOptions,
) -> Result<FxProgram> {
    gains.check(dp)?;
    let (n, m, p) = (dp.states(), dp.inputs(), dp.outputs());
    if xhat_box.len() != n || y_box.len() != p {
        return Err(Error::Dimension(format!(
            "boxes for {} states and {} outputs, plant has {n} and {p}",
            xhat_box.len(),
            y_box.len()
        )));
    }
    let mat = observer_update_matrix(dp, gains);
    let row_terms = |i: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|j| mat[(i, j)]).collect();
        v.extend((0..p).map(|k| gains.l[(i, k)]));
        v
    };
    let boxes: Vec<Interval> = xhat_box.iter().chain(y_box).copied().collect();

    // The stored state must hold both the assumed box and every update value.
    let mut state_formats = Vec::with_capacity(n);
    for (i, xb) in xhat_box.iter().enumerate() {
        let upd = affine_range(&row_terms(i), 0.0, &boxes);
        state_formats.push(allocate_format(xb.hull(&upd), true, opts.bits)?);
    }

    let mut b = opts.builder();
    let mut names = Names { gain: 0, add: 0 };
    let xs: Vec<NodeId> = (0..n)
        .map(|j| b.input_with_format(format!("x{}", j + 1), xhat_box[j], Some(state_formats[j])))
        .collect::<Result<_>>()?;
    let ys: Vec<NodeId> = (0..p)
        .map(|k| b.input(suffix("y", k, p), y_box[k]))
        .collect::<Result<_>>()?;
    let operands: Vec<NodeId> = xs.iter().chain(&ys).copied().collect();

    let mut new_states = Vec::with_capacity(n);
    for i in 0..n {
        let terms: Vec<(f64, NodeId)> = row_terms(i).into_iter().zip(operands.iter().copied()).collect();
        let id = dot(&mut b, &mut names, &terms, &format!("x{}_new", i + 1), Some(state_formats[i]))?;
        b.output(id, OutputRole::State(i));
        b.state(xs[i], id);
        new_states.push(id);
    }

    let linked: Vec<NodeId> = new_states
        .iter()
        .enumerate()
        .map(|(j, &src)| b.linked_input(format!("x{}_new_in", j + 1), src))
        .collect::<Result<_>>()?;
    for i in 0..m {
        let terms: Vec<(f64, NodeId)> = (0..n).map(|j| (gains.k[(i, j)], linked[j])).collect();
        let id = dot(&mut b, &mut names, &terms, &suffix("u", i, m), None)?;
        b.output(id, OutputRole::Control(i));
    }
    b.negate_control(true);
    Ok(b.finish())
}

/// Fixed-point program for one step of the two-state PID realization with
/// input `e = -y`: `z1' = z2`, `z2' = z2 - y` and
/// `out = Chat z - Dhat y`.
pub fn synthesize_pid_program(
    pid: &PidRealization,
    y_box: Interval,
    z_box: [Interval; 2],
    opts: SynthOptions,
) -> Result<FxProgram> {
    let (c1, c2, d) = (pid.c[(0, 0)], pid.c[(0, 1)], pid.d[(0, 0)]);
    let z2_next = affine_range(&[0.0, 1.0, -1.0], 0.0, &[z_box[0], z_box[1], y_box]);
    let f1 = allocate_format(z_box[0].hull(&z_box[1]), true, opts.bits)?;
    let f2 = allocate_format(z_box[1].hull(&z2_next), true, opts.bits)?;
    // z1 receives z2, so it must share the wider format.
    let f1 = if f2.m < f1.m { f2 } else { f1 };

    let mut b = opts.builder();
    let mut names = Names { gain: 0, add: 0 };
    let z1 = b.input_with_format("z1", z_box[0], Some(f1))?;
    let z2 = b.input_with_format("z2", z_box[1], Some(f2))?;
    let y = b.input("y", y_box)?;
    let z1_new = b.shift_align("z1_new", z2, f1)?;
    let z2_new = b.sub("z2_new", z2, y, Some(f2))?;
    b.output(z1_new, OutputRole::State(0));
    b.output(z2_new, OutputRole::State(1));
    b.state(z1, z1_new);
    b.state(z2, z2_new);
    let out = dot(&mut b, &mut names, &[(c1, z1), (c2, z2), (-d, y)], "u", None)?;
    b.output(out, OutputRole::Control(0));
    Ok(b.finish())
}

/// Program for `out = coeff * x` with `x` in `range`, as in a single gain block.
pub fn synthesize_gain_program(
    coeff: f64,
    range: Interval,
    opts: SynthOptions,
) -> Result<FxProgram> {
    let mut b = opts.builder();
    let x = b.input("x", range)?;
    let y = b.const_mul("y", x, coeff, None)?;
    b.output(y, OutputRole::Control(0));
    Ok(b.finish())
}

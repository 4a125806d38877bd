use std::fmt::Write as _;

use super::program::{FxOp, FxProgram, NodeId, OutputRole};

/// Name under which `node` is visible in the emitted C; linked inputs alias
/// their source.
fn c_name(prog: &FxProgram, node: NodeId) -> &str {
    match prog.nodes[node].op {
        FxOp::Input { link: Some(src) } => c_name(prog, src),
        _ => &prog.nodes[node].id,
    }
}

fn shr(expr: String, k: i32) -> String {
    match k {
        0 => expr,
        k if k > 0 => format!("FX_SHR({expr}, {k})"),
        k => format!("FX_SHL({expr}, {})", -k),
    }
}

fn scale_literal(m: u32) -> String {
    format!("{:.1}", 2f64.powi(m as i32))
}

/// C source for one controller step. State variables are static, every
/// intermediate is an integer annotated with its format, and right shifts
/// truncate toward zero exactly as [`FxProgram::eval_fx`] does.
pub fn emit_c_source(prog: &FxProgram, name: &str) -> String {
    let int_t = "fx_int";
    let state_inputs: Vec<NodeId> = prog.states.iter().map(|s| s.input).collect();
    let free: Vec<NodeId> = prog
        .free_inputs()
        .into_iter()
        .filter(|i| !state_inputs.contains(i))
        .collect();
    let outputs: Vec<NodeId> = prog.control_outputs().map(|o| o.node).collect();
    let state_updates: Vec<NodeId> = prog.state_outputs().map(|o| o.node).collect();
    let scalar = free.len() == 1 && outputs.len() == 1;

    let mut s = String::new();
    if prog.bit_budget > 16 {
        let _ = writeln!(s, "/* products of {}-bit words need a 64-bit fx_int */", prog.bit_budget);
    }
    let _ = writeln!(s, "#ifndef FX_WIDE");
    let _ = writeln!(s, "#define FX_WIDE long");
    let _ = writeln!(s, "#endif");
    let _ = writeln!(s, "typedef FX_WIDE fx_int;");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "#define FX_SHR(v, k) ((v) < 0 ? -((-(v)) >> (k)) : ((v) >> (k)))"
    );
    let _ = writeln!(s, "#define FX_SHL(v, k) ((v) * ((({int_t})1) << (k)))");
    let _ = writeln!(s);
    if scalar {
        let _ = writeln!(s, "float {name}(float yin)");
    } else {
        let _ = writeln!(s, "void {name}(const float *yin, float *uout)");
    }
    let _ = writeln!(s, "{{");
    for &i in &state_inputs {
        let nd = &prog.nodes[i];
        let _ = writeln!(s, "    static {int_t} {} = 0;\t/* {} */", nd.id, nd.format);
    }
    for &i in &free {
        let nd = &prog.nodes[i];
        let _ = writeln!(s, "    {int_t} {};\t/* {} */", nd.id, nd.format);
    }
    let declared_io: Vec<NodeId> = state_updates.iter().chain(&outputs).copied().collect();
    for &i in &declared_io {
        let nd = &prog.nodes[i];
        let _ = writeln!(s, "    {int_t} {};\t/* {} */", nd.id, nd.format);
    }
    let intermediates: Vec<NodeId> = (0..prog.nodes.len())
        .filter(|i| !matches!(prog.nodes[*i].op, FxOp::Input { .. }) && !declared_io.contains(i))
        .collect();
    if !intermediates.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "    /* Intermediate variables */");
        for &i in &intermediates {
            let nd = &prog.nodes[i];
            let _ = writeln!(s, "    {int_t} {};\t/* {} */", nd.id, nd.format);
        }
    }
    let _ = writeln!(s);
    for (k, &i) in free.iter().enumerate() {
        let nd = &prog.nodes[i];
        let src = if scalar {
            "yin".to_string()
        } else {
            format!("yin[{k}]")
        };
        let _ = writeln!(
            s,
            "    {} = ({int_t})({src} * {});",
            nd.id,
            scale_literal(nd.format.m)
        );
    }
    for (i, nd) in prog.nodes.iter().enumerate() {
        let k = prog.shift(i);
        let rhs = match nd.op {
            FxOp::Input { .. } => continue,
            FxOp::Constant { quantized, .. } => quantized.to_string(),
            FxOp::ConstMul {
                operand,
                quantized_coeff,
                ..
            } => shr(
                format!("{quantized_coeff} * {}", c_name(prog, operand)),
                k,
            ),
            FxOp::Add { lhs, rhs } | FxOp::Sub { lhs, rhs } => {
                let f = prog.align(lhs, rhs);
                let side = |o: NodeId| {
                    let up = f - prog.nodes[o].format.m;
                    if up == 0 {
                        c_name(prog, o).to_string()
                    } else {
                        format!("FX_SHL({}, {up})", c_name(prog, o))
                    }
                };
                let op = if matches!(nd.op, FxOp::Add { .. }) { "+" } else { "-" };
                shr(format!("{} {op} {}", side(lhs), side(rhs)), k)
            }
            FxOp::ShiftAlign { operand } => shr(c_name(prog, operand).to_string(), k),
        };
        let _ = writeln!(s, "    {} = {rhs};", nd.id);
    }
    for slot in &prog.states {
        let _ = writeln!(
            s,
            "    {} = {};",
            prog.nodes[slot.input].id,
            prog.nodes[slot.update].id
        );
    }
    let sign = if prog.negate_control { "-" } else { "" };
    let ret = |node: NodeId| {
        let nd = &prog.nodes[node];
        format!(
            "(float)({sign}(double){} / {})",
            nd.id,
            scale_literal(nd.format.m)
        )
    };
    if scalar {
        let _ = writeln!(s, "    return {};", ret(outputs[0]));
    } else {
        for o in prog.control_outputs() {
            if let OutputRole::Control(j) = o.role {
                let _ = writeln!(s, "    uout[{j}] = {};", ret(o.node));
            }
        }
    }
    let _ = writeln!(s, "}}");
    s
}

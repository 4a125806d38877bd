//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string. Failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use fxsynth::errbound::{bound_program_error, enumerate_oracle};
use fxsynth::fxcode::{emit_c_source, synthesize_gain_program, FxOp, Interval, SynthOptions};
use fxsynth::plant::{simulate_ideal, simulate_pid_ideal, simulate_quantized, Excitation, GainPair, Trajectory};
use fxsynth::problem::{analyze_gains, parse_gains, preset, Gains, Mode, PRESET_NAMES};

const PLOT_POINTS: usize = 600;
const ENUMERATION_LIMIT: u128 = 1 << 18;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Preset names with their published gains.
#[wasm_bindgen]
pub fn presets() -> String {
    let list: Vec<Value> = PRESET_NAMES
        .iter()
        .map(|name| {
            let spec = preset(name).expect("listed presets exist");
            json!({
                "name": name,
                "mode": spec.mode,
                "tau": spec.tau,
                "bits": spec.bits,
                "gains": spec.reference_gains,
            })
        })
        .collect();
    Value::Array(list).to_string()
}

/// Synthesizes `y = coeff * x` for `x` in `[lo, hi]`. `coeff_bits = 0`
/// stores the coefficient in a full word.
#[wasm_bindgen]
pub fn gain_program(coeff: f64, lo: f64, hi: f64, bits: u32, coeff_bits: u32) -> String {
    respond((|| {
        let opts = SynthOptions {
            bits,
            coeff_bits: (coeff_bits > 0).then_some(coeff_bits),
        };
        let range = Interval::new(lo, hi).map_err(|e| e.to_string())?;
        let prog = synthesize_gain_program(coeff, range, opts).map_err(|e| e.to_string())?;
        let y = prog.node_by_id("y").ok_or("program has no output node")?;
        let op = match prog.nodes[y].op {
            FxOp::ConstMul { quantized_coeff, .. } => format!("({quantized_coeff} * x) >> {}", prog.shift(y)),
            ref other => format!("{other:?}"),
        };
        let bound = bound_program_error(&prog).map_err(|e| e.to_string())?;
        let exact = enumerate_oracle(&prog, ENUMERATION_LIMIT).ok().map(|o| o.max);
        Ok(json!({
            "op": op,
            "input_format": prog.nodes[0].format.to_string(),
            "output_format": prog.nodes[y].format.to_string(),
            "bound": bound.b_e2,
            "method": bound.nodes[y].method,
            "enumerated": exact,
            "c_source": emit_c_source(&prog, "gain"),
        }))
    })())
}

fn output_trace(traj: &Trajectory) -> Vec<f64> {
    let n = traj.samples.len();
    let stride = n.div_ceil(PLOT_POINTS).max(1);
    traj.samples.iter().step_by(stride).map(|s| s.y[0]).collect()
}

/// Full analysis of a preset. `gains_json` may be empty for the published
/// gains, or a gains document such as `{"k": [[..]], "l": [[..]]}`.
#[wasm_bindgen]
pub fn analyze(preset_name: &str, gains_json: &str) -> String {
    respond((|| {
        let spec = preset(preset_name).map_err(|e| e.to_string())?;
        let gains = if gains_json.trim().is_empty() {
            spec.reference_gains.clone().ok_or("preset has no published gains")?
        } else {
            parse_gains(gains_json).map_err(|e| e.to_string())?
        };
        let (report, files) = analyze_gains(&spec, &gains).map_err(|e| e.to_string())?;
        let (quantized, ideal) = match (spec.mode, &gains) {
            (Mode::Observer, Gains::Observer { k, l }) => {
                let ctx = spec.observer_context().map_err(|e| e.to_string())?;
                let g = GainPair::new(k.clone(), l.clone());
                let x0 = spec.simulation.x0.clone().unwrap_or_else(|| vec![0.2; ctx.dp.states()]);
                let steps = spec.simulation.steps;
                let prog = ctx.program(&g).map_err(|e| e.to_string())?;
                let u0 = vec![0.0; ctx.dp.inputs()];
                let q = simulate_quantized(&ctx.dp, &prog, &x0, &u0, steps, &Excitation::Zero);
                let i = simulate_ideal(&ctx.dp, &g, &x0, None, steps, &Excitation::Zero);
                (q.map_err(|e| e.to_string())?, i.map_err(|e| e.to_string())?)
            }
            (Mode::Pid, Gains::Pid(p)) => {
                let ctx = spec.pid_context().map_err(|e| e.to_string())?;
                let prog = ctx.program(*p).map_err(|e| e.to_string())?;
                let steps = ctx.horizon_steps;
                let q = simulate_quantized(&ctx.dp, &prog, &ctx.x0, &[0.0], steps, &Excitation::Zero);
                let i = simulate_pid_ideal(&ctx.dp, &ctx.realization(*p), &ctx.x0, steps, &Excitation::Zero);
                (q.map_err(|e| e.to_string())?, i.map_err(|e| e.to_string())?)
            }
            _ => return Err("gains do not match the preset mode".into()),
        };
        let report: Value = serde_json::from_str(&report.to_json()).map_err(|e| e.to_string())?;
        Ok(json!({
            "report": report,
            "c_source": files.get("controller.c"),
            "tau": spec.tau,
            "stride": quantized.samples.len().div_ceil(PLOT_POINTS).max(1),
            "quantized": output_trace(&quantized),
            "ideal": output_trace(&ideal),
            "fault": quantized.fault.map(|f| format!("step {}: {}", f.step, f.error)),
        }))
    })())
}

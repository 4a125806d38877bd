#![allow(dead_code)]

mod c89;

#[allow(unused_imports)]
pub use c89::*;

use fxsynth::errbound::reference_values;
use fxsynth::fxcode::{FxProgram, Interval, OutputRole, ProgramBuilder};
use rand::Rng;

/// Straight-line program over one or two inputs with `ops` operation
/// nodes, all in `bits`-bit words; the last node is the output.
pub fn random_program<R: Rng>(rng: &mut R, bits: u32, ops: usize) -> FxProgram {
    loop {
        let mut b = ProgramBuilder::new(bits);
        let inputs = rng.gen_range(1..=2);
        let mut nodes = Vec::new();
        for i in 0..inputs {
            let lo = rng.gen_range(-2.0..0.5f64);
            let hi = lo + rng.gen_range(0.25..2.0f64);
            let r = Interval::new((lo * 8.0).round() / 8.0, (hi * 8.0).round() / 8.0 + 0.125).unwrap();
            nodes.push(b.input(format!("x{i}"), r).unwrap());
        }
        let mut ok = true;
        for k in 0..ops {
            let id = format!("n{k}");
            let res = match rng.gen_range(0..3) {
                0 if nodes.len() >= 2 => {
                    let l = nodes[rng.gen_range(0..nodes.len())];
                    let r = nodes[rng.gen_range(0..nodes.len())];
                    if rng.gen_bool(0.5) {
                        b.add(id, l, r, None)
                    } else {
                        b.sub(id, l, r, None)
                    }
                }
                _ => {
                    let x = nodes[rng.gen_range(0..nodes.len())];
                    let c = (rng.gen_range(-3.0..3.0f64) * 1000.0).round() / 1000.0;
                    b.const_mul(id, x, if c == 0.0 { 0.7 } else { c }, None)
                }
            };
            match res {
                Ok(n) => nodes.push(n),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let last = *nodes.last().unwrap();
            b.output(last, OutputRole::Control(0));
            return b.finish();
        }
    }
}

/// Largest ratio of observed node error to certified node bound over
/// `trials` random in-box inputs. Each free input is drawn as a real value
/// and truncated toward zero into its format.
pub fn worst_error_ratio<R: Rng>(prog: &FxProgram, bounds: &[f64], trials: usize, rng: &mut R) -> f64 {
    let free = prog.free_inputs();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let real: Vec<f64> = free
            .iter()
            .map(|&i| {
                let r = prog.nodes[i].range;
                rng.gen_range(r.lo..=r.hi)
            })
            .collect();
        let ints: Vec<i64> = free
            .iter()
            .zip(&real)
            .map(|(&i, &x)| prog.nodes[i].format.quantize(x).expect("in-box input fits") as i64)
            .collect();
        let fx = prog.eval_fx(&ints).expect("no overflow inside the box");
        let exact = reference_values(prog, &real, &fx).unwrap();
        for (k, nd) in prog.nodes.iter().enumerate() {
            let err = (exact[k] - nd.format.to_real(fx[k])).abs();
            if bounds[k] > 0.0 {
                worst = worst.max(err / bounds[k]);
            } else if err > 0.0 {
                return f64::INFINITY;
            }
        }
    }
    worst
}

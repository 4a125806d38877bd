use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DiscretePlant, GainPair, PidRealization};
use crate::error::{Error, Result};
use crate::fxcode::{FxProgram, NodeId};

/// Disturbance `d` and measurement noise `v` applied during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    Zero,
    /// Independent zero-mean Gaussian samples from a seeded generator.
    Gaussian { seed: u64, d_std: f64, v_std: f64 },
    /// Explicit sequences; steps past the end are zero.
    Sequence { d: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
}

struct ExcitationSource<'a> {
    spec: &'a Excitation,
    rng: Option<(ChaCha8Rng, Normal<f64>, Normal<f64>)>,
    q: usize,
    p: usize,
}

impl<'a> ExcitationSource<'a> {
    fn new(spec: &'a Excitation, q: usize, p: usize) -> Result<Self> {
        let rng = match spec {
            Excitation::Gaussian { seed, d_std, v_std } => {
                let nd = Normal::new(0.0, *d_std)
                    .map_err(|e| Error::Config(format!("disturbance deviation: {e}")))?;
                let nv = Normal::new(0.0, *v_std)
                    .map_err(|e| Error::Config(format!("noise deviation: {e}")))?;
                Some((ChaCha8Rng::seed_from_u64(*seed), nd, nv))
            }
            _ => None,
        };
        Ok(ExcitationSource { spec, rng, q, p })
    }

    fn next(&mut self, r: usize) -> (Vec<f64>, Vec<f64>) {
        match self.spec {
            Excitation::Zero => (vec![0.0; self.q], vec![0.0; self.p]),
            Excitation::Gaussian { .. } => {
                let (rng, nd, nv) = self.rng.as_mut().expect("generator initialized");
                let d = (0..self.q).map(|_| nd.sample(rng)).collect();
                let v = (0..self.p).map(|_| nv.sample(rng)).collect();
                (d, v)
            }
            Excitation::Sequence { d, v } => {
                let pick = |seq: &Vec<Vec<f64>>, len: usize| {
                    seq.get(r).cloned().unwrap_or_else(|| vec![0.0; len])
                };
                (pick(d, self.q), pick(v, self.p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub r: usize,
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimFault {
    pub step: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Set when the fixed-point controller overflowed; the run stops there.
    pub fault: Option<SimFault>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let Some(first) = self.samples.first() else {
            return s;
        };
        let mut header = vec!["r".to_string()];
        for (name, len) in [
            ("x", first.x.len()),
            ("xhat", first.xhat.len()),
            ("y", first.y.len()),
            ("u", first.u.len()),
        ] {
            header.extend((1..=len).map(|i| format!("{name}{i}")));
        }
        let _ = writeln!(s, "{}", header.join(","));
        for smp in &self.samples {
            let _ = write!(s, "{}", smp.r);
            for v in smp.x.iter().chain(&smp.xhat).chain(&smp.y).chain(&smp.u) {
                let _ = write!(s, ",{v:.12e}");
            }
            let _ = writeln!(s);
        }
        s
    }

    pub fn outputs(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.y.as_slice())
    }
}

/// Largest output norm over the final `fraction` of the run.
pub fn steady_state_peak(traj: &Trajectory, fraction: f64) -> f64 {
    let n = traj.samples.len();
    let start = n - ((n as f64 * fraction).round() as usize).min(n);
    traj.samples[start..]
        .iter()
        .map(|s| s.y.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn axpy(acc: &mut [f64], m: &crate::linalg::Matrix, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(m.mul_vec(v)) {
        *a += b;
    }
}

/// Observer-based loop in real arithmetic.
pub fn simulate_ideal(
    dp: &DiscretePlant,
    gains: &GainPair,
    x0: &[f64],
    xhat0: Option<&[f64]>,
    steps: usize,
    excitation: &Excitation,
) -> Result<Trajectory> {
    gains.check(dp)?;
    let n = dp.states();
    if x0.len() != n {
        return Err(Error::Dimension(format!("x0 has {} entries, plant has {n} states", x0.len())));
    }
    let mut src = ExcitationSource::new(excitation, dp.disturbances(), dp.outputs())?;
    let mut x = x0.to_vec();
    let mut xhat = xhat0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut traj = Trajectory::default();
    for r in 0..steps {
        let (d, v) = src.next(r);
        let y: Vec<f64> = dp.c.mul_vec(&x).iter().zip(&v).map(|(a, b)| a + b).collect();
        let u: Vec<f64> = gains.k.mul_vec(&xhat).iter().map(|v| -v).collect();
        traj.samples.push(Sample {
            r,
            x: x.clone(),
            xhat: xhat.clone(),
            y: y.clone(),
            u: u.clone(),
        });
        let innov: Vec<f64> = y.iter().zip(dp.c.mul_vec(&xhat)).map(|(a, b)| a - b).collect();
        let mut xn = dp.a.mul_vec(&x);
        axpy(&mut xn, &dp.b, &u);
        axpy(&mut xn, &dp.bbar, &d);
        let mut xh = dp.a.mul_vec(&xhat);
        axpy(&mut xh, &dp.b, &u);
        axpy(&mut xh, &gains.l, &innov);
        x = xn;
        xhat = xh;
    }
    Ok(traj)
}

/// PID loop in real arithmetic: controller input `-y`, plant input the PID output.
pub fn simulate_pid_ideal(
    dp: &DiscretePlant,
    pid: &PidRealization,
    x0: &[f64],
    steps: usize,
    excitation: &Excitation,
) -> Result<Trajectory> {
    if dp.inputs() != 1 || dp.outputs() != 1 {
        return Err(Error::Unsupported("PID simulation needs a SISO plant".into()));
    }
    let mut src = ExcitationSource::new(excitation, dp.disturbances(), 1)?;
    let mut x = x0.to_vec();
    let mut z = vec![0.0; 2];
    let mut traj = Trajectory::default();
    for r in 0..steps {
        let (d, v) = src.next(r);
        let y = dp.c.mul_vec(&x)[0] + v[0];
        let e = -y;
        let u = pid.c.mul_vec(&z)[0] + pid.d[(0, 0)] * e;
        traj.samples.push(Sample {
            r,
            x: x.clone(),
            xhat: z.clone(),
            y: vec![y],
            u: vec![u],
        });
        let mut xn = dp.a.mul_vec(&x);
        axpy(&mut xn, &dp.b, &[u]);
        axpy(&mut xn, &dp.bbar, &d);
        let mut zn = pid.a.mul_vec(&z);
        axpy(&mut zn, &pid.b, &[e]);
        x = xn;
        z = zn;
    }
    Ok(traj)
}

/// Plant in real arithmetic driven by the fixed-point controller program,
/// executed bit-exactly. The program's free inputs other than its states
/// receive the measured outputs; control outputs drive the plant (negated when
/// the program says so) from the next step on. The first input is `u0`.
pub fn simulate_quantized(
    dp: &DiscretePlant,
    prog: &FxProgram,
    x0: &[f64],
    u0: &[f64],
    steps: usize,
    excitation: &Excitation,
) -> Result<Trajectory> {
    let n = dp.states();
    if x0.len() != n || u0.len() != dp.inputs() {
        return Err(Error::Dimension("initial state or input size".into()));
    }
    let state_inputs: Vec<NodeId> = prog.states.iter().map(|s| s.input).collect();
    let free = prog.free_inputs();
    let external: Vec<NodeId> = free
        .iter()
        .copied()
        .filter(|i| !state_inputs.contains(i))
        .collect();
    if external.len() != dp.outputs() {
        return Err(Error::Dimension(format!(
            "program reads {} measurements, plant has {} outputs",
            external.len(),
            dp.outputs()
        )));
    }
    let controls: Vec<NodeId> = prog.control_outputs().map(|o| o.node).collect();
    if controls.len() != dp.inputs() {
        return Err(Error::Dimension("program outputs vs plant inputs".into()));
    }
    let sign = if prog.negate_control { -1.0 } else { 1.0 };
    let mut src = ExcitationSource::new(excitation, dp.disturbances(), dp.outputs())?;
    let mut x = x0.to_vec();
    let mut u = u0.to_vec();
    let mut z: Vec<i128> = vec![0; state_inputs.len()];
    let mut traj = Trajectory::default();
    for r in 0..steps {
        let (d, v) = src.next(r);
        let y: Vec<f64> = dp.c.mul_vec(&x).iter().zip(&v).map(|(a, b)| a + b).collect();
        let zreal: Vec<f64> = state_inputs
            .iter()
            .zip(&z)
            .map(|(&i, &q)| prog.nodes[i].format.to_real(q))
            .collect();
        traj.samples.push(Sample {
            r,
            x: x.clone(),
            xhat: zreal,
            y: y.clone(),
            u: u.clone(),
        });
        let mut inputs = Vec::with_capacity(free.len());
        let mut ext = 0;
        for &i in &free {
            if let Some(k) = state_inputs.iter().position(|&s| s == i) {
                inputs.push(z[k] as i64);
            } else {
                let node = &prog.nodes[external[ext]];
                let q = node.format.quantize(y[ext]).ok_or_else(|| Error::Overflow {
                    node: node.id.clone(),
                    value: (y[ext] * 2f64.powi(node.format.m as i32)) as i128,
                });
                match q {
                    Ok(q) => inputs.push(q as i64),
                    Err(error) => {
                        traj.fault = Some(SimFault { step: r, error });
                        return Ok(traj);
                    }
                }
                ext += 1;
            }
        }
        let vals = match prog.eval_fx(&inputs) {
            Ok(v) => v,
            Err(error) => {
                traj.fault = Some(SimFault { step: r, error });
                return Ok(traj);
            }
        };
        for (k, slot) in prog.states.iter().enumerate() {
            z[k] = vals[slot.update];
        }
        let u_next: Vec<f64> = controls
            .iter()
            .map(|&c| sign * prog.nodes[c].format.to_real(vals[c]))
            .collect();
        let mut xn = dp.a.mul_vec(&x);
        axpy(&mut xn, &dp.b, &u);
        axpy(&mut xn, &dp.bbar, &d);
        x = xn;
        u = u_next;
    }
    Ok(traj)
}

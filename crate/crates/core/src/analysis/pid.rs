use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gain::{is_hurwitz, l2_gain};
use crate::errbound::{bound_program_error, euclidean_norm, ProgramErrorBound};
use crate::error::{Error, Result};
use crate::fxcode::{synthesize_pid_program, FxProgram, Interval, SynthOptions};
use crate::linalg::{ComplexMatrix, Matrix};
use crate::numfmt;
use crate::plant::{
    assemble_pid_closed_loop, pid_realization, simulate_pid_ideal, DiscretePlant, Excitation,
    PidGains, PidRealization, Trajectory,
};

pub const MARGIN_GRID: usize = 4096;
const BISECTION_STEPS: usize = 60;

/// `c (e^{i theta} I - a)^{-1} b + d` for a single-input single-output system.
fn siso_response(a: &Matrix, b: &Matrix, c: &Matrix, d: f64, theta: f64) -> Result<Complex64> {
    let n = a.rows();
    let z = Complex64::from_polar(1.0, theta);
    let mut m = ComplexMatrix::from_real(&a.scale(-1.0));
    for i in 0..n {
        m[(i, i)] += z;
    }
    let x = m.solve(&ComplexMatrix::from_real(b))?;
    let mut acc = Complex64::new(d, 0.0);
    for i in 0..n {
        acc += c[(0, i)] * x[(i, 0)];
    }
    Ok(acc)
}

/// Open-loop response `PID(e^{i theta}) Plant(e^{i theta})`. Infinite at
/// `theta = 0` because of the integrator.
pub fn open_loop_response(dp: &DiscretePlant, pid: &PidRealization, theta: f64) -> Result<Complex64> {
    let plant = siso_response(&dp.a, &dp.b, &dp.c, 0.0, theta)?;
    let ctrl = siso_response(&pid.a, &pid.b, &pid.c, pid.d[(0, 0)], theta)?;
    Ok(plant * ctrl)
}

/// Disturbance-to-output response `Plant / (1 + PID Plant)`.
pub fn closed_loop_response(dp: &DiscretePlant, pid: &PidRealization, theta: f64) -> Result<Complex64> {
    let plant = siso_response(&dp.a, &dp.b, &dp.c, 0.0, theta)?;
    let ctrl = siso_response(&pid.a, &pid.b, &pid.c, pid.d[(0, 0)], theta)?;
    Ok(plant / (1.0 + plant * ctrl))
}

/// Which frequency response the margins are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MarginLoop {
    Open,
    #[default]
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// Degrees; `+inf` when `|L|` never crosses 1.
    #[serde(serialize_with = "numfmt::f64")]
    pub phase: f64,
    /// Linear factor; `+inf` when the phase never reaches -180 degrees.
    #[serde(serialize_with = "numfmt::f64")]
    pub gain: f64,
}

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let flo = f(lo)?;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Phase and gain margins of the chosen discrete response, scanned on
/// `(0, pi]` and refined by bisection at every sign change.
pub fn stability_margins(dp: &DiscretePlant, pid: &PidRealization, which: MarginLoop) -> Result<Margins> {
    let l = |t: f64| match which {
        MarginLoop::Open => open_loop_response(dp, pid, t),
        MarginLoop::Closed => closed_loop_response(dp, pid, t),
    };
    let thetas: Vec<f64> = (1..=MARGIN_GRID).map(|i| PI * i as f64 / MARGIN_GRID as f64).collect();
    let vals: Vec<Complex64> = thetas.iter().map(|&t| l(t)).collect::<Result<_>>()?;
    let mut phase = f64::INFINITY;
    let mut gain = f64::INFINITY;
    let mag = |t: f64| l(t).map(|v| v.norm() - 1.0);
    let imag = |t: f64| l(t).map(|v| v.im);
    for i in 1..thetas.len() {
        let (a, b) = (vals[i - 1], vals[i]);
        if (a.norm() - 1.0) * (b.norm() - 1.0) <= 0.0 && a.norm() != b.norm() {
            let t = bisect(&mag, thetas[i - 1], thetas[i])?;
            let v = l(t)?;
            let pm = (180.0 + v.arg().to_degrees()).rem_euclid(360.0);
            let pm = if pm > 180.0 { pm - 360.0 } else { pm };
            phase = if phase.is_infinite() || pm.abs() < phase.abs() { pm } else { phase };
        }
        if a.im * b.im <= 0.0 && a.im != b.im {
            let t = bisect(&imag, thetas[i - 1], thetas[i])?;
            let v = l(t)?;
            if v.re < 0.0 {
                gain = gain.min(1.0 / v.norm());
            }
        }
    }
    Ok(Margins { phase, gain })
}

/// Time after which `|y|` stays within `band` times its peak, and the peak.
pub fn settling_and_peak(traj: &Trajectory, tau: f64, band: f64) -> (f64, f64) {
    let ys: Vec<f64> = traj.outputs().map(|y| y[0].abs()).collect();
    let peak = ys.iter().copied().fold(0.0, f64::max);
    let last_out = ys.iter().rposition(|&y| y > band * peak);
    let settle = match last_out {
        Some(r) if r + 1 == ys.len() => f64::INFINITY,
        Some(r) => (r + 1) as f64 * tau,
        None => 0.0,
    };
    (settle, peak)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PidReport {
    pub stable: bool,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub phase_margin: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub gain_margin: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub gamma: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub b_eq1: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub b_eq2: Option<f64>,
    /// `gamma (b(e_q1) + b(e_q2))`.
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub radius: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub settling_time: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub deviation: Option<f64>,
    #[serde(serialize_with = "numfmt::f64")]
    pub cost: f64,
}

impl PidReport {
    fn unstable() -> Self {
        PidReport {
            stable: false,
            phase_margin: None,
            gain_margin: None,
            gamma: None,
            b_eq1: None,
            b_eq2: None,
            radius: None,
            settling_time: None,
            deviation: None,
            cost: f64::INFINITY,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// PID tuning problem: weights `(w1, w2, w3)` on `1/PM`, `1/GM` and the
/// quantization radius, with the response to an impulse disturbance
/// (initial state `x0`) constrained in settling time and peak deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PidCostContext {
    pub dp: DiscretePlant,
    pub weights: [f64; 3],
    pub margin_loop: MarginLoop,
    pub settling_limit: f64,
    pub deviation_limit: f64,
    pub settling_band: f64,
    pub horizon_steps: usize,
    pub x0: Vec<f64>,
    pub y_box: Interval,
    pub z_box: [Interval; 2],
    pub synth: SynthOptions,
}

impl PidCostContext {
    pub fn realization(&self, gains: PidGains) -> PidRealization {
        pid_realization(gains, self.dp.tau)
    }

    pub fn program(&self, gains: PidGains) -> Result<FxProgram> {
        synthesize_pid_program(&self.realization(gains), self.y_box, self.z_box, self.synth)
    }

    pub fn impulse_response(&self, gains: PidGains) -> Result<Trajectory> {
        simulate_pid_ideal(
            &self.dp,
            &self.realization(gains),
            &self.x0,
            self.horizon_steps,
            &Excitation::Zero,
        )
    }

    /// Error bounds split into the controller state part and the output part.
    pub fn quantization_bounds(&self, gains: PidGains) -> Result<(f64, f64, ProgramErrorBound)> {
        let prog = self.program(gains)?;
        let eb = bound_program_error(&prog)?;
        let b1 = euclidean_norm(&eb.state_bounds(&prog));
        let b2 = euclidean_norm(&eb.control_bounds(&prog));
        Ok((b1, b2, eb))
    }

    pub fn evaluate(&self, gains: PidGains) -> Result<PidReport> {
        let pid = self.realization(gains);
        let lp = assemble_pid_closed_loop(&self.dp, &pid)?;
        if !is_hurwitz(&lp.g)? {
            return Ok(PidReport::unstable());
        }
        let margins = stability_margins(&self.dp, &pid, self.margin_loop)?;
        let gamma = l2_gain(&lp.g, &lp.h, &lp.c_out)?;
        let (b1, b2, _) = self.quantization_bounds(gains)?;
        let radius = gamma * (b1 + b2);
        let traj = self.impulse_response(gains)?;
        let (settle, peak) = settling_and_peak(&traj, self.dp.tau, self.settling_band);
        let [w1, w2, w3] = self.weights;
        let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
        let feasible = settle <= self.settling_limit && peak <= self.deviation_limit;
        let cost = if feasible {
            w1 * inv(margins.phase) + w2 * inv(margins.gain) + w3 * radius
        } else {
            f64::INFINITY
        };
        Ok(PidReport {
            stable: true,
            phase_margin: Some(margins.phase),
            gain_margin: Some(margins.gain),
            gamma: Some(gamma),
            b_eq1: Some(b1),
            b_eq2: Some(b2),
            radius: Some(radius),
            settling_time: Some(settle),
            deviation: Some(peak),
            cost,
        })
    }

    /// Cost of `[kp, ki, kd]`; failures score `+inf`.
    pub fn cost_of(&self, position: &[f64]) -> f64 {
        PidGains::from_slice(position)
            .and_then(|g| self.evaluate(g))
            .map(|r| r.cost)
            .unwrap_or(f64::INFINITY)
    }
}

impl PidCostContext {
    pub fn check(&self) -> Result<()> {
        if self.dp.inputs() != 1 || self.dp.outputs() != 1 {
            return Err(Error::Unsupported("PID tuning needs a SISO plant".into()));
        }
        if self.x0.len() != self.dp.states() {
            return Err(Error::Dimension(format!(
                "impulse state has {} entries, expected {}",
                self.x0.len(),
                self.dp.states()
            )));
        }
        Ok(())
    }
}

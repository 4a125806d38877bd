//! Problem files, benchmark presets and the end-to-end synthesis and
//! analysis pipelines with their output artifacts.

mod presets;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use presets::{preset, PRESET_NAMES};

use crate::analysis::{
    lqg_cost_norm, lqr_cost_norm, AnalysisReport, CostContext, CostWeights, MarginLoop,
    PidCostContext, PidReport,
};
use crate::error::{Error, Result};
use crate::fxcode::{emit_c_source, FxProgram, Interval, SynthOptions};
use crate::linalg::{solve_dare, solve_dual_dare, Matrix};
use crate::numfmt;
use crate::plant::{
    controllable_canonical, discretize, simulate_quantized, ContinuousPlant, DiscretePlant,
    Excitation, GainPair, PidGains, TransferFunction, Trajectory,
};
use crate::pso::{run, SwarmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Observer,
    Pid,
}

/// Continuous plant; `bbar` defaults to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbar: Option<Matrix>,
    pub c: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantModel {
    StateSpace(StateSpace),
    TransferFunction(TransferFunction),
}

impl Default for PlantModel {
    fn default() -> Self {
        PlantModel::StateSpace(StateSpace {
            a: Matrix::filled(1, 1, 0.5),
            b: Matrix::filled(1, 1, 1.0),
            bbar: None,
            c: Matrix::filled(1, 1, 1.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub steps: usize,
    /// Initial plant state; defaults to 0.2 in every coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec { steps: 1000, x0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidSpec {
    pub settling_limit: f64,
    pub deviation_limit: f64,
    pub settling_band: f64,
    /// Simulated horizon of the impulse response, in seconds.
    pub horizon: f64,
    pub z_box: [[f64; 2]; 2],
    pub margin_loop: MarginLoop,
    /// State right after the disturbance impulse; defaults to the
    /// continuous disturbance input column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impulse: Option<Vec<f64>>,
    /// Swarm starting point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<PidGains>,
}

impl Default for PidSpec {
    fn default() -> Self {
        PidSpec {
            settling_limit: 5.0,
            deviation_limit: 0.05,
            settling_band: 0.02,
            horizon: 10.0,
            z_box: [[-1.0, 1.0]; 2],
            margin_loop: MarginLoop::Closed,
            impulse: None,
            start: None,
        }
    }
}

/// Gains in a gains file: `{"k": [[..]], "l": [[..]]}` or
/// `{"kp": .., "ki": .., "kd": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gains {
    Observer { k: Matrix, l: Matrix },
    Pid(PidGains),
}

impl Gains {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gains serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub mode: Mode,
    pub plant: PlantModel,
    pub tau: f64,
    pub bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeff_bits: Option<u32>,
    /// Four weights in observer mode, three in PID mode.
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qhat: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhat: Option<Matrix>,
    /// Per-output measurement box; defaults to `[-1, 1]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_box: Option<Vec<[f64; 2]>>,
    /// Per-state observer box; defaults to `[-1, 1]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xhat_box: Option<Vec<[f64; 2]>>,
    pub swarm: SwarmConfig,
    pub simulation: SimulationSpec,
    pub pid: PidSpec,
    /// Published gains used by `bench` for deterministic analysis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_gains: Option<Gains>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            name: "problem".into(),
            mode: Mode::Observer,
            plant: PlantModel::default(),
            tau: 0.01,
            bits: 16,
            coeff_bits: None,
            weights: vec![1.0, 1.0, 1.0, 5.0],
            q: None,
            r: None,
            qhat: None,
            rhat: None,
            y_box: None,
            xhat_box: None,
            swarm: SwarmConfig::default(),
            simulation: SimulationSpec::default(),
            pid: PidSpec::default(),
            reference_gains: None,
        }
    }
}

fn intervals(boxes: &Option<Vec<[f64; 2]>>, len: usize, what: &str) -> Result<Vec<Interval>> {
    match boxes {
        None => Ok(vec![Interval::symmetric(1.0); len]),
        Some(b) if b.len() == len => b.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect(),
        Some(b) => Err(Error::Dimension(format!("{what} has {} entries, expected {len}", b.len()))),
    }
}

impl ProblemSpec {
    pub fn continuous_plant(&self) -> Result<ContinuousPlant> {
        match &self.plant {
            PlantModel::StateSpace(ss) => ContinuousPlant::new(
                ss.a.clone(),
                ss.b.clone(),
                ss.bbar.clone().unwrap_or_else(|| ss.b.clone()),
                ss.c.clone(),
            ),
            PlantModel::TransferFunction(tf) => controllable_canonical(tf),
        }
    }

    pub fn discrete_plant(&self) -> Result<DiscretePlant> {
        discretize(&self.continuous_plant()?, self.tau)
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            bits: self.bits,
            coeff_bits: self.coeff_bits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.bits, 16 | 32) {
            return Err(Error::Config(format!("bit budget must be 16 or 32, got {}", self.bits)));
        }
        if let Some(cb) = self.coeff_bits {
            if !(2..=self.bits).contains(&cb) {
                return Err(Error::Config(format!("coefficient bits {cb} outside 2..={}", self.bits)));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        let cp = self.continuous_plant()?;
        let (n, m, p, q) = (cp.states(), cp.inputs(), cp.outputs(), cp.bbar.cols());
        let want = match self.mode {
            Mode::Observer => 4,
            Mode::Pid => 3,
        };
        if self.weights.len() != want {
            return Err(Error::Config(format!(
                "{} weights given, {want} expected in {:?} mode",
                self.weights.len(),
                self.mode
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.weights.iter().all(|w| *w == 0.0)
        {
            return Err(Error::Config("weights must be nonnegative with one positive".into()));
        }
        for (name, mat, dim) in [("q", &self.q, n), ("r", &self.r, m), ("qhat", &self.qhat, q), ("rhat", &self.rhat, p)] {
            if let Some(mat) = mat {
                if mat.shape() != (dim, dim) {
                    return Err(Error::Dimension(format!(
                        "{name} is {:?}, expected ({dim}, {dim})",
                        mat.shape()
                    )));
                }
            }
        }
        intervals(&self.y_box, p, "y_box")?;
        intervals(&self.xhat_box, n, "xhat_box")?;
        if let Some(x0) = &self.simulation.x0 {
            if x0.len() != n {
                return Err(Error::Dimension(format!("x0 has {} entries, expected {n}", x0.len())));
            }
        }
        if self.mode == Mode::Pid && (m != 1 || p != 1) {
            return Err(Error::Config("PID mode needs a single-input single-output plant".into()));
        }
        self.swarm.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    fn x0(&self, n: usize) -> Vec<f64> {
        self.simulation.x0.clone().unwrap_or_else(|| vec![0.2; n])
    }

    pub fn observer_context(&self) -> Result<CostContext> {
        let dp = self.discrete_plant()?;
        let w: [f64; 4] = self.weights.clone().try_into().map_err(|_| {
            Error::Config("observer mode needs four weights".into())
        })?;
        let (n, p) = (dp.states(), dp.outputs());
        CostContext::new(
            dp,
            CostWeights::new(w)?,
            self.q.clone(),
            self.r.clone(),
            self.qhat.clone(),
            self.rhat.clone(),
            intervals(&self.y_box, p, "y_box")?,
            intervals(&self.xhat_box, n, "xhat_box")?,
            self.synth_options(),
        )
    }

    pub fn pid_context(&self) -> Result<PidCostContext> {
        let cp = self.continuous_plant()?;
        let dp = discretize(&cp, self.tau)?;
        let w: [f64; 3] = self.weights.clone().try_into().map_err(|_| {
            Error::Config("PID mode needs three weights".into())
        })?;
        let pid = &self.pid;
        let z = |i: usize| Interval::new(pid.z_box[i][0], pid.z_box[i][1]);
        let ctx = PidCostContext {
            x0: pid.impulse.clone().unwrap_or_else(|| cp.bbar.col_vec(0)),
            dp,
            weights: w,
            margin_loop: pid.margin_loop,
            settling_limit: pid.settling_limit,
            deviation_limit: pid.deviation_limit,
            settling_band: pid.settling_band,
            horizon_steps: (pid.horizon / self.tau).round() as usize,
            y_box: intervals(&self.y_box, 1, "y_box")?[0],
            z_box: [z(0)?, z(1)?],
            synth: self.synth_options(),
        };
        ctx.check()?;
        Ok(ctx)
    }
}

/// Parses a problem document, reporting the line and column of any error.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Reads a problem file, or returns the preset when `path` names one and no
/// such file exists.
pub fn load_problem(path: &str) -> Result<ProblemSpec> {
    if !Path::new(path).exists() && PRESET_NAMES.contains(&path) {
        return preset(path);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    parse_problem(&text)
}

pub fn parse_gains(text: &str) -> Result<Gains> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub const TAU_CANDIDATES: [f64; 6] = [0.1, 0.05, 0.02, 0.01, 0.005, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauCandidate {
    #[serde(serialize_with = "numfmt::f64")]
    pub tau: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub s_norm: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub p_norm: f64,
    /// Larger of the two relative errors against the targets.
    #[serde(serialize_with = "numfmt::f64")]
    pub error: f64,
}

/// Sweeps `candidates` and picks the sampling time whose LQR and LQG
/// baseline costs `||S*||`, `||P*||` are closest to the targets.
pub fn calibrate_tau(
    spec: &ProblemSpec,
    s_target: f64,
    p_target: f64,
    candidates: &[f64],
) -> Result<(f64, Vec<TauCandidate>)> {
    let cp = spec.continuous_plant()?;
    let mut table = Vec::new();
    for &tau in candidates {
        let dp = discretize(&cp, tau)?;
        let q = spec.q.clone().unwrap_or_else(|| Matrix::identity(dp.states()));
        let r = spec.r.clone().unwrap_or_else(|| Matrix::identity(dp.inputs()));
        let qh = spec.qhat.clone().unwrap_or_else(|| Matrix::identity(dp.disturbances()));
        let rh = spec.rhat.clone().unwrap_or_else(|| Matrix::identity(dp.outputs()));
        let row = (|| -> Result<TauCandidate> {
            let k = solve_dare(&dp.a, &dp.b, &q, &r)?.gain;
            let l = solve_dual_dare(&dp.a, &dp.c, &dp.bbar, &qh, &rh)?.gain;
            let s = lqr_cost_norm(&dp, &k, &q, &r)?;
            let p = lqg_cost_norm(&dp, &l, &qh, &rh)?;
            let error = ((s - s_target) / s_target).abs().max(((p - p_target) / p_target).abs());
            Ok(TauCandidate { tau, s_norm: s, p_norm: p, error })
        })();
        if let Ok(row) = row {
            table.push(row);
        }
    }
    let best = table
        .iter()
        .min_by(|a, b| a.error.total_cmp(&b.error))
        .ok_or_else(|| Error::Infeasible("no candidate sampling time admits LQR/LQG gains".into()))?;
    Ok((best.tau, table))
}

/// Named text outputs, written in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, t)| t.as_str())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.files {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metrics {
    Observer(AnalysisReport),
    Pid(PidReport),
}

impl Metrics {
    pub fn cost(&self) -> f64 {
        match self {
            Metrics::Observer(r) => r.cost,
            Metrics::Pid(r) => r.cost,
        }
    }

    /// Quantization part of the practical-stability radius.
    pub fn quantization_radius(&self) -> Option<f64> {
        match self {
            Metrics::Observer(r) => r.radius_coeffs.map(|(_, b)| b),
            Metrics::Pid(r) => r.radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub gains: Gains,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwarmSummary {
    pub seed: u64,
    pub iterations: usize,
    pub stalled: bool,
    #[serde(serialize_with = "numfmt::f64")]
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub mode: Mode,
    #[serde(serialize_with = "numfmt::f64")]
    pub tau: f64,
    pub bits: u32,
    pub baseline: GainReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesized: Option<GainReport>,
    /// Baseline quantization radius over the synthesized one.
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub improvement_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swarm: Option<SwarmSummary>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Analysis of one gain set with its program, C source and simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub metrics: Metrics,
    pub program: FxProgram,
    pub trajectory: Trajectory,
}

impl Analysis {
    fn artifacts(&self) -> Vec<(String, String)> {
        vec![
            ("controller.c".into(), emit_c_source(&self.program, "controller")),
            ("program.json".into(), self.program.to_json()),
            ("trajectory.csv".into(), self.trajectory.to_csv()),
        ]
    }
}

fn to_gain_pair(g: &Gains) -> Result<GainPair> {
    match g {
        Gains::Observer { k, l } => Ok(GainPair::new(k.clone(), l.clone())),
        Gains::Pid(_) => Err(Error::Config("PID gains given for an observer problem".into())),
    }
}

fn to_pid(g: &Gains) -> Result<PidGains> {
    match g {
        Gains::Pid(p) => Ok(*p),
        Gains::Observer { .. } => Err(Error::Config("observer gains given for a PID problem".into())),
    }
}

fn analyze_observer(spec: &ProblemSpec, ctx: &CostContext, gains: &GainPair) -> Result<Analysis> {
    let report = ctx.total_cost(gains)?;
    let program = ctx.program(gains)?;
    let dp = &ctx.dp;
    let trajectory = simulate_quantized(
        dp,
        &program,
        &spec.x0(dp.states()),
        &vec![0.0; dp.inputs()],
        spec.simulation.steps,
        &Excitation::Zero,
    )?;
    Ok(Analysis {
        metrics: Metrics::Observer(report),
        program,
        trajectory,
    })
}

fn analyze_pid(spec: &ProblemSpec, ctx: &PidCostContext, gains: PidGains) -> Result<Analysis> {
    let report = ctx.evaluate(gains)?;
    let program = ctx.program(gains)?;
    let steps = spec.simulation.steps.max(ctx.horizon_steps);
    let trajectory = simulate_quantized(&ctx.dp, &program, &ctx.x0, &[0.0], steps, &Excitation::Zero)?;
    Ok(Analysis {
        metrics: Metrics::Pid(report),
        program,
        trajectory,
    })
}

/// Deterministic metrics for given gains, with `report.json`,
/// `controller.c`, `program.json` and `trajectory.csv`.
pub fn analyze_gains(spec: &ProblemSpec, gains: &Gains) -> Result<(RunReport, Artifacts)> {
    spec.validate()?;
    let analysis = match spec.mode {
        Mode::Observer => {
            let ctx = spec.observer_context()?;
            analyze_observer(spec, &ctx, &to_gain_pair(gains)?)?
        }
        Mode::Pid => {
            let ctx = spec.pid_context()?;
            analyze_pid(spec, &ctx, to_pid(gains)?)?
        }
    };
    let mut files = analysis.artifacts();
    let report = RunReport {
        name: spec.name.clone(),
        mode: spec.mode,
        tau: spec.tau,
        bits: spec.bits,
        baseline: GainReport {
            gains: gains.clone(),
            metrics: analysis.metrics,
        },
        synthesized: None,
        improvement_factor: None,
        swarm: None,
        artifacts: std::iter::once("report.json".to_string())
            .chain(files.iter().map(|(n, _)| n.clone()))
            .collect(),
    };
    files.insert(0, ("report.json".into(), report.to_json()));
    Ok((report, Artifacts { files }))
}

/// Baseline gains, swarm search and analysis of the best particle. The
/// controller artifacts describe the synthesized gains.
pub fn run_synthesis(spec: &ProblemSpec) -> Result<(RunReport, Artifacts)> {
    spec.validate()?;
    let (baseline, best, outcome) = match spec.mode {
        Mode::Observer => {
            let ctx = spec.observer_context()?;
            let (n, m, p) = (ctx.dp.states(), ctx.dp.inputs(), ctx.dp.outputs());
            let base = ctx.baseline.gains();
            let outcome = run(&spec.swarm, &base.flatten(), &|x: &[f64]| ctx.cost_of(x))?;
            let best = GainPair::unflatten(&outcome.best_position, n, m, p)?;
            let base_an = analyze_observer(spec, &ctx, &base)?;
            let best_an = analyze_observer(spec, &ctx, &best)?;
            (
                GainReport {
                    gains: Gains::Observer { k: base.k, l: base.l },
                    metrics: base_an.metrics,
                },
                (Gains::Observer { k: best.k, l: best.l }, best_an),
                outcome,
            )
        }
        Mode::Pid => {
            let ctx = spec.pid_context()?;
            let start = spec
                .pid
                .start
                .ok_or_else(|| Error::Config("PID mode needs `pid.start` gains".into()))?;
            let outcome = run(&spec.swarm, &start.to_vec(), &|x: &[f64]| ctx.cost_of(x))?;
            let best = PidGains::from_slice(&outcome.best_position)?;
            let base_an = analyze_pid(spec, &ctx, start)?;
            let best_an = analyze_pid(spec, &ctx, best)?;
            (
                GainReport {
                    gains: Gains::Pid(start),
                    metrics: base_an.metrics,
                },
                (Gains::Pid(best), best_an),
                outcome,
            )
        }
    };
    let (best_gains, best_an) = best;
    let improvement = match (baseline.metrics.quantization_radius(), best_an.metrics.quantization_radius()) {
        (Some(b), Some(s)) if s > 0.0 => Some(b / s),
        _ => None,
    };
    let mut files = best_an.artifacts();
    files.push(("pso_history.csv".into(), outcome.state.history_csv()));
    let report = RunReport {
        name: spec.name.clone(),
        mode: spec.mode,
        tau: spec.tau,
        bits: spec.bits,
        baseline,
        synthesized: Some(GainReport {
            gains: best_gains,
            metrics: best_an.metrics,
        }),
        improvement_factor: improvement,
        swarm: Some(SwarmSummary {
            seed: spec.swarm.seed,
            iterations: outcome.state.iteration,
            stalled: outcome.state.stalled(&spec.swarm),
            best_cost: outcome.best_cost,
        }),
        artifacts: std::iter::once("report.json".to_string())
            .chain(files.iter().map(|(n, _)| n.clone()))
            .collect(),
    };
    files.insert(0, ("report.json".into(), report.to_json()));
    Ok((report, Artifacts { files }))
}

use serde::{Deserialize, Serialize};

use super::gain::{is_hurwitz, l2_gain};
use crate::errbound::{bound_program_error, ProgramErrorBound};
use crate::error::{Error, Result};
use crate::fxcode::{synthesize_controller_program, FxProgram, Interval, SynthOptions};
use crate::linalg::{solve_dare, solve_discrete_lyapunov, solve_dual_dare, symmetric_eigenvalues, Matrix};
use crate::numfmt;
use crate::plant::{
    assemble_closed_loop, feedback_matrix, observer_error_matrix, ClosedLoop, DiscretePlant,
    GainPair,
};

/// `S(K)` solving `(A - B K)^T S (A - B K) - S + Q + K^T R K = 0`.
pub fn lqr_cost_matrix(dp: &DiscretePlant, k: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let m = feedback_matrix(dp, k);
    let w = q + &(&(&k.transpose() * r) * k);
    solve_discrete_lyapunov(&m, &w)
}

/// `P(L)` solving `(A - L C) P (A - L C)^T - P + Bbar Qhat Bbar^T + L Rhat L^T = 0`.
pub fn lqg_cost_matrix(
    dp: &DiscretePlant,
    l: &Matrix,
    qhat: &Matrix,
    rhat: &Matrix,
) -> Result<Matrix> {
    let m = observer_error_matrix(dp, l);
    let w = &(&(&dp.bbar * qhat) * &dp.bbar.transpose()) + &(&(l * rhat) * &l.transpose());
    solve_discrete_lyapunov(&m.transpose(), &w)
}

fn largest_eigenvalue(s: &Matrix) -> f64 {
    symmetric_eigenvalues(s).last().copied().unwrap_or(0.0)
}

/// `||S(K)||`, the largest eigenvalue of the LQR cost matrix.
pub fn lqr_cost_norm(dp: &DiscretePlant, k: &Matrix, q: &Matrix, r: &Matrix) -> Result<f64> {
    Ok(largest_eigenvalue(&lqr_cost_matrix(dp, k, q, r)?))
}

/// `||P(L)||`, the largest eigenvalue of the estimation error covariance.
pub fn lqg_cost_norm(dp: &DiscretePlant, l: &Matrix, qhat: &Matrix, rhat: &Matrix) -> Result<f64> {
    Ok(largest_eigenvalue(&lqg_cost_matrix(dp, l, qhat, rhat)?))
}

/// `(gamma_1y, gamma_2y)`: gains from `e1 = [d; v]` and from the
/// quantization error `e2` to the plant output.
pub fn output_gains(cl: &ClosedLoop) -> Result<(f64, f64)> {
    Ok((
        l2_gain(&cl.g, &cl.h1, &cl.c_out)?,
        l2_gain(&cl.g, &cl.h2, &cl.c_out)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights(pub [f64; 4]);

impl CostWeights {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().all(|x| *x == 0.0) {
            return Err(Error::Config(format!("invalid cost weights {w:?}")));
        }
        Ok(CostWeights(w))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights([1.0, 1.0, 1.0, 5.0])
    }
}

/// LQR/LQG-optimal gains and the metrics every candidate is normalized by.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    #[serde(serialize_with = "numfmt::matrix")]
    pub k_lqr: Matrix,
    #[serde(serialize_with = "numfmt::matrix")]
    pub l_lqg: Matrix,
    #[serde(serialize_with = "numfmt::f64")]
    pub s_star_norm: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub p_star_norm: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub gamma1y_star: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub gamma2y_star: f64,
    #[serde(serialize_with = "numfmt::f64")]
    pub b_e2_star: f64,
}

impl Baseline {
    pub fn gains(&self) -> GainPair {
        GainPair::new(self.k_lqr.clone(), self.l_lqg.clone())
    }
}

/// Metrics for one gain pair. All metric fields are `None` when either
/// loop matrix fails the Hurwitz test, and then `cost` is infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub stable: bool,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub s_norm: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub p_norm: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub gamma1y: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub gamma2y: Option<f64>,
    #[serde(serialize_with = "numfmt::opt_f64")]
    pub b_e2: Option<f64>,
    /// `(gamma_1y, gamma_2y b(e2))`: the output converges to a ball of
    /// radius `gamma_1y b(e1) + gamma_2y b(e2)`.
    #[serde(serialize_with = "numfmt::opt_pair")]
    pub radius_coeffs: Option<(f64, f64)>,
    #[serde(serialize_with = "numfmt::f64")]
    pub cost: f64,
}

impl AnalysisReport {
    pub fn unstable() -> Self {
        AnalysisReport {
            stable: false,
            s_norm: None,
            p_norm: None,
            gamma1y: None,
            gamma2y: None,
            b_e2: None,
            radius_coeffs: None,
            cost: f64::INFINITY,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything needed to score a gain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostContext {
    pub dp: DiscretePlant,
    pub weights: CostWeights,
    pub q: Matrix,
    pub r: Matrix,
    pub qhat: Matrix,
    pub rhat: Matrix,
    pub y_box: Vec<Interval>,
    pub xhat_box: Vec<Interval>,
    pub synth: SynthOptions,
    pub baseline: Baseline,
}

/// Unnormalized metrics of a stabilizing gain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub s_norm: f64,
    pub p_norm: f64,
    pub gamma1y: f64,
    pub gamma2y: f64,
    pub program: FxProgram,
    pub errors: ProgramErrorBound,
}

impl CostContext {
    /// Identity weights `Q = I_n`, `R = I_m`, `Qhat = I_q`, `Rhat = I_p` and
    /// LQR/LQG baseline gains from the Riccati equations.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dp: DiscretePlant,
        weights: CostWeights,
        q: Option<Matrix>,
        r: Option<Matrix>,
        qhat: Option<Matrix>,
        rhat: Option<Matrix>,
        y_box: Vec<Interval>,
        xhat_box: Vec<Interval>,
        synth: SynthOptions,
    ) -> Result<Self> {
        let q = q.unwrap_or_else(|| Matrix::identity(dp.states()));
        let r = r.unwrap_or_else(|| Matrix::identity(dp.inputs()));
        let qhat = qhat.unwrap_or_else(|| Matrix::identity(dp.disturbances()));
        let rhat = rhat.unwrap_or_else(|| Matrix::identity(dp.outputs()));
        let k = solve_dare(&dp.a, &dp.b, &q, &r)
            .map_err(|e| Error::Infeasible(format!("LQR baseline: {e}")))?
            .gain;
        let l = solve_dual_dare(&dp.a, &dp.c, &dp.bbar, &qhat, &rhat)
            .map_err(|e| Error::Infeasible(format!("LQG baseline: {e}")))?
            .gain;
        let mut ctx = CostContext {
            dp,
            weights,
            q,
            r,
            qhat,
            rhat,
            y_box,
            xhat_box,
            synth,
            baseline: Baseline {
                k_lqr: k.clone(),
                l_lqg: l.clone(),
                s_star_norm: f64::NAN,
                p_star_norm: f64::NAN,
                gamma1y_star: f64::NAN,
                gamma2y_star: f64::NAN,
                b_e2_star: f64::NAN,
            },
        };
        let met = ctx
            .metrics(&GainPair::new(k, l))?
            .ok_or_else(|| Error::Infeasible("baseline gains do not stabilize the plant".into()))?;
        let b = &mut ctx.baseline;
        b.s_star_norm = met.s_norm;
        b.p_star_norm = met.p_norm;
        b.gamma1y_star = met.gamma1y;
        b.gamma2y_star = met.gamma2y;
        b.b_e2_star = met.errors.b_e2;
        Ok(ctx)
    }

    pub fn program(&self, gains: &GainPair) -> Result<FxProgram> {
        synthesize_controller_program(&self.dp, gains, &self.y_box, &self.xhat_box, self.synth)
    }

    /// Metrics of `gains`, or `None` when either loop is not Hurwitz.
    pub fn metrics(&self, gains: &GainPair) -> Result<Option<Metrics>> {
        gains.check(&self.dp)?;
        let fb = feedback_matrix(&self.dp, &gains.k);
        let ob = observer_error_matrix(&self.dp, &gains.l);
        if !is_hurwitz(&fb)? || !is_hurwitz(&ob)? {
            return Ok(None);
        }
        let s_norm = lqr_cost_norm(&self.dp, &gains.k, &self.q, &self.r)?;
        let p_norm = lqg_cost_norm(&self.dp, &gains.l, &self.qhat, &self.rhat)?;
        let cl = assemble_closed_loop(&self.dp, gains)?;
        let (gamma1y, gamma2y) = output_gains(&cl)?;
        let program = self.program(gains)?;
        let errors = bound_program_error(&program)?;
        Ok(Some(Metrics {
            s_norm,
            p_norm,
            gamma1y,
            gamma2y,
            program,
            errors,
        }))
    }

    /// Weighted cost `w1 ||S||/||S*|| + w2 ||P||/||P*|| + w3 gamma_1y/gamma_1y*
    /// + w4 gamma_2y b(e2) / (gamma_2y* b*(e2))`, infinite for unstable gains.
    pub fn total_cost(&self, gains: &GainPair) -> Result<AnalysisReport> {
        let Some(m) = self.metrics(gains)? else {
            return Ok(AnalysisReport::unstable());
        };
        let b = &self.baseline;
        let w = self.weights.0;
        let radius = m.gamma2y * m.errors.b_e2;
        let cost = w[0] * m.s_norm / b.s_star_norm
            + w[1] * m.p_norm / b.p_star_norm
            + w[2] * m.gamma1y / b.gamma1y_star
            + w[3] * radius / (b.gamma2y_star * b.b_e2_star);
        Ok(AnalysisReport {
            stable: true,
            s_norm: Some(m.s_norm),
            p_norm: Some(m.p_norm),
            gamma1y: Some(m.gamma1y),
            gamma2y: Some(m.gamma2y),
            b_e2: Some(m.errors.b_e2),
            radius_coeffs: Some((m.gamma1y, radius)),
            cost,
        })
    }

    /// Cost of a flattened particle position; failures score `+inf`.
    pub fn cost_of(&self, position: &[f64]) -> f64 {
        let (n, m, p) = (self.dp.states(), self.dp.inputs(), self.dp.outputs());
        GainPair::unflatten(position, n, m, p)
            .and_then(|g| self.total_cost(&g))
            .map(|r| r.cost)
            .unwrap_or(f64::INFINITY)
    }
}

use super::{Gains, Mode, PidSpec, PlantModel, ProblemSpec, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::plant::PidGains;

pub const PRESET_NAMES: [&str; 6] = [
    "bicycle",
    "dc_motor",
    "pitch",
    "inverted_pendulum",
    "batch_reactor",
    "pid_pendulum",
];

fn m<R: AsRef<[f64]>>(rows: &[R]) -> Matrix {
    Matrix::from_rows(rows).expect("preset matrices are rectangular")
}

fn observer(name: &str, plant: StateSpace, tau: f64, bits: u32, weights: [f64; 4], gains: Gains) -> ProblemSpec {
    ProblemSpec {
        name: name.into(),
        mode: Mode::Observer,
        plant: PlantModel::StateSpace(plant),
        tau,
        bits,
        weights: weights.to_vec(),
        reference_gains: Some(gains),
        ..ProblemSpec::default()
    }
}

fn observer_gains(k: Matrix, l: Matrix) -> Gains {
    Gains::Observer { k, l }
}

fn bicycle() -> ProblemSpec {
    let (g, h, v0, a, b) = (9.8, 1.5, 2.0, 0.5, 1.0);
    let bu = m(&[[1.0], [0.0]]);
    let plant = StateSpace {
        a: m(&[[0.0, g / h], [1.0, 0.0]]),
        b: bu.clone(),
        bbar: Some(bu),
        c: m(&[[a * v0 / (b * h), v0 * v0 / (b * h)]]),
    };
    let mut spec = observer(
        "bicycle",
        plant,
        0.01,
        16,
        [1.0, 1.0, 1.0, 5.0],
        observer_gains(m(&[[3.0253, 12.6089]]), m(&[[0.0132], [0.1021]])),
    );
    spec.simulation.x0 = Some(vec![0.2, 0.2]);
    spec
}

fn dc_motor() -> ProblemSpec {
    let (b, j, k, r, l) = (3.508e-6, 3.228e-6, 0.027, 4.0, 2.75e-6);
    let bu = m(&[[0.0], [0.0], [1.0 / l]]);
    let plant = StateSpace {
        a: m(&[[0.0, 1.0, 0.0], [0.0, -b / j, k / j], [0.0, -k / l, -r / l]]),
        b: bu.clone(),
        bbar: Some(bu),
        c: m(&[[1.0, 0.0, 0.0]]),
    };
    observer(
        "dc_motor",
        plant,
        0.001,
        16,
        [1.0, 1.0, 1.0, 5.0],
        observer_gains(m(&[[0.1129, 0.0211, 0.0093]]), m(&[[0.0390], [0.3700], [-0.0175]])),
    )
}

fn pitch() -> ProblemSpec {
    let bu = m(&[[0.232], [0.0203], [0.0]]);
    let plant = StateSpace {
        a: m(&[[-0.313, 56.7, 0.0], [-0.0139, -0.426, 0.0], [0.0, 56.7, 0.0]]),
        b: bu.clone(),
        bbar: Some(bu),
        c: m(&[[0.0, 0.0, 1.0]]),
    };
    observer(
        "pitch",
        plant,
        0.001,
        32,
        [1.0, 1.0, 1.0, 5.0],
        observer_gains(m(&[[-0.1202, 42.5655, 1.0001]]), m(&[[0.0001], [0.0], [0.0017]])),
    )
}

fn inverted_pendulum() -> ProblemSpec {
    let (mm, mc, b, i, g, l) = (0.2, 0.5, 0.1, 0.006, 9.8, 0.3);
    let p = i * (mc + mm) + mc * mm * l * l;
    let plant = StateSpace {
        a: m(&[
            [0.0, 1.0, 0.0, 0.0],
            [0.0, -(i + mm * l * l) * b / p, mm * mm * g * l * l / p, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, -mm * l * b / p, mm * g * l * (mc + mm) / p, 0.0],
        ]),
        b: m(&[[0.0], [(i + mm * l * l) / p], [0.0], [mm * l / p]]),
        bbar: Some(m(&[[1.0], [1.0], [1.0], [1.0]])),
        c: m(&[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]),
    };
    observer(
        "inverted_pendulum",
        plant,
        0.001,
        32,
        [1.0, 1.0, 1.0, 5.0],
        observer_gains(
            m(&[[-1.5362, -2.0254, 16.5192, 2.7358]]),
            m(&[[0.0017, 0.0001], [0.0021, 0.0018], [0.0012, 0.0122], [0.0, 0.0770]]),
        ),
    )
}

fn batch_reactor() -> ProblemSpec {
    let plant = StateSpace {
        a: m(&[
            [1.38, -0.2077, 6.715, -5.676],
            [-0.5814, -4.29, 0.0, 0.675],
            [1.067, 4.273, -6.654, 5.893],
            [0.048, 4.273, 1.343, -2.104],
        ]),
        b: m(&[[0.0, 0.0], [5.679, 0.0], [1.136, -3.146], [1.136, 0.0]]),
        bbar: Some(m(&[[1.0], [1.0], [1.0], [1.0]])),
        c: m(&[[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]]),
    };
    observer(
        "batch_reactor",
        plant,
        0.01,
        16,
        [1.0, 2.0, 1.0, 5.0],
        observer_gains(
            m(&[[0.0583, 0.9093, 0.3258, 0.8721], [-2.4638, -0.0504, -1.7099, 1.1653]]),
            m(&[[0.0774, -0.0103], [-0.0022, 0.0227], [0.0267, 0.0398], [0.0356, 0.0001]]),
        ),
    )
}

/// The printed realization of the pendulum angle transfer function
/// `(ml/q) s / (s^3 + b(I+ml^2)/q s^2 - (M+m)mgl/q s - bmgl/q)`.
fn pid_pendulum() -> ProblemSpec {
    let bu = m(&[[1.0], [0.0], [0.0]]);
    let plant = StateSpace {
        a: m(&[[-0.1818, 3.8977, 0.5568], [8.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        b: bu.clone(),
        bbar: Some(bu),
        c: m(&[[0.0, 0.5682, 1.0]]),
    };
    ProblemSpec {
        name: "pid_pendulum".into(),
        mode: Mode::Pid,
        plant: PlantModel::StateSpace(plant),
        tau: 0.001,
        bits: 32,
        weights: vec![1.0, 1.0, 1.0],
        reference_gains: Some(Gains::Pid(PidGains::new(109.032, 1.2268, 13.9945))),
        pid: PidSpec {
            start: Some(PidGains::new(100.0, 1.0, 20.0)),
            ..PidSpec::default()
        },
        ..ProblemSpec::default()
    }
}

pub fn preset(name: &str) -> Result<ProblemSpec> {
    match name {
        "bicycle" => Ok(bicycle()),
        "dc_motor" => Ok(dc_motor()),
        "pitch" => Ok(pitch()),
        "inverted_pendulum" => Ok(inverted_pendulum()),
        "batch_reactor" => Ok(batch_reactor()),
        "pid_pendulum" => Ok(pid_pendulum()),
        _ => Err(Error::Config(format!(
            "unknown preset `{name}` (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

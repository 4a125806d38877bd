use fxsynth::linalg::Matrix;
use fxsynth::plant::PidGains;
use fxsynth::problem::*;
use fxsynth::pso::SwarmConfig;
use fxsynth::Error;

fn small_problem() -> ProblemSpec {
    let mut spec: ProblemSpec = parse_problem(
        r#"{
            "name": "scalar",
            "plant": {"state_space": {"a": [[0.3]], "b": [[1.0]], "c": [[1.0]]}},
            "tau": 0.1,
            "swarm": {"particles": 6, "max_iterations": 8, "y_min": -5, "y_max": 5, "seed": 3},
            "simulation": {"steps": 50}
        }"#,
    )
    .unwrap();
    spec.swarm.stall_window = 100;
    spec
}

#[test]
fn bicycle_preset_plant() {
    let spec = preset("bicycle").unwrap();
    let cp = spec.continuous_plant().unwrap();
    let want = Matrix::from_rows(&[[0.0, 9.8 / 1.5], [1.0, 0.0]]).unwrap();
    assert_eq!(cp.a, want);
    assert!((cp.a[(0, 1)] - 6.5333).abs() < 1e-4);
    assert_eq!(cp.c, Matrix::row(&[2.0 / 3.0, 8.0 / 3.0]));
    assert_eq!(spec.tau, 0.01);
    assert_eq!(spec.bits, 16);
}

#[test]
fn every_preset_validates_and_round_trips() {
    for name in PRESET_NAMES {
        let spec = preset(name).unwrap();
        spec.validate().unwrap();
        let back = parse_problem(&spec.to_json()).unwrap();
        assert_eq!(back, spec, "{name}");
    }
    assert!(matches!(preset("nope"), Err(Error::Config(_))));
}

#[test]
fn malformed_document_reports_position() {
    let err = parse_problem("{\n  \"tau\": 0.01,\n  \"bits\": }").unwrap_err();
    match err {
        Error::Parse(msg) => assert!(msg.starts_with("line 3, column"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_problem(r#"{"taux": 1}"#), Err(Error::Parse(_))));
}

#[test]
fn validation_errors() {
    let bad_bits = r#"{"bits": 24}"#;
    assert!(matches!(parse_problem(bad_bits), Err(Error::Config(_))));
    let bad_q = r#"{"q": [[1, 0], [0, 1]]}"#;
    assert!(matches!(parse_problem(bad_q), Err(Error::Dimension(_))));
    let bad_plant = r#"{"plant": {"state_space": {"a": [[1, 0], [0, 1]], "b": [[1]], "c": [[1, 0]]}}}"#;
    assert!(matches!(parse_problem(bad_plant), Err(Error::Dimension(_))));
    let bad_weights = r#"{"weights": [1, 1, 1]}"#;
    assert!(matches!(parse_problem(bad_weights), Err(Error::Config(_))));
    let mimo_pid = r#"{"mode": "pid", "weights": [1, 1, 1],
        "plant": {"state_space": {"a": [[0, 1], [0, 0]], "b": [[0], [1]], "c": [[1, 0], [0, 1]]}}}"#;
    assert!(matches!(parse_problem(mimo_pid), Err(Error::Config(_))));
    let bad_box = r#"{"y_box": [[-1, 1], [-1, 1]]}"#;
    assert!(matches!(parse_problem(bad_box), Err(Error::Dimension(_))));
    let bad_tau = r#"{"tau": 0}"#;
    assert!(matches!(parse_problem(bad_tau), Err(Error::Config(_))));
}

#[test]
fn transfer_function_plant() {
    let spec = parse_problem(
        r#"{"plant": {"transfer_function": {"num": [1.0], "den": [1.0, 3.0, 2.0]}}, "tau": 0.05}"#,
    )
    .unwrap();
    let dp = spec.discrete_plant().unwrap();
    assert_eq!(dp.states(), 2);
    assert_eq!(dp.outputs(), 1);
}

#[test]
fn load_problem_sources() {
    assert_eq!(load_problem("dc_motor").unwrap(), preset("dc_motor").unwrap());
    assert!(matches!(load_problem("/nonexistent/problem.json"), Err(Error::Io(_))));
    let dir = std::env::temp_dir().join(format!("fxsynth-problem-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("p.json");
    std::fs::write(&path, preset("pitch").unwrap().to_json()).unwrap();
    assert_eq!(load_problem(path.to_str().unwrap()).unwrap(), preset("pitch").unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gains_documents() {
    let g = parse_gains(r#"{"k": [[1, 2]], "l": [[3], [4]]}"#).unwrap();
    assert_eq!(
        g,
        Gains::Observer {
            k: Matrix::row(&[1.0, 2.0]),
            l: Matrix::column(&[3.0, 4.0])
        }
    );
    let p = parse_gains(r#"{"kp": 1.5, "ki": 0.5, "kd": 2}"#).unwrap();
    assert_eq!(p, Gains::Pid(PidGains::new(1.5, 0.5, 2.0)));
    assert_eq!(parse_gains(&p.to_json()).unwrap(), p);
    assert!(matches!(parse_gains("{\"k\": [[1]]"), Err(Error::Parse(_))));
}

#[test]
fn calibration_recovers_preset_sampling_times() {
    let targets = [
        ("bicycle", 3956.3, 0.0229),
        ("dc_motor", 1001.6, 36.6315),
        ("pitch", 2.9732e6, 0.0013),
        ("inverted_pendulum", 4.2988e4, 0.3600),
        ("batch_reactor", 223.1773, 0.0731),
    ];
    for (name, s, p) in targets {
        let spec = preset(name).unwrap();
        let (tau, table) = calibrate_tau(&spec, s, p, &TAU_CANDIDATES).unwrap();
        assert_eq!(tau, spec.tau, "{name}: {table:?}");
        assert!(table.iter().all(|row| row.error >= 0.0));
    }
}

#[test]
fn analysis_artifacts_are_deterministic() {
    let spec = preset("bicycle").unwrap();
    let gains = spec.reference_gains.clone().unwrap();
    let (report, files) = analyze_gains(&spec, &gains).unwrap();
    assert_eq!(
        files.names(),
        ["report.json", "controller.c", "program.json", "trajectory.csv"]
    );
    assert_eq!(report.artifacts, files.names());
    assert!(report.synthesized.is_none());
    assert_eq!(files.get("report.json").unwrap(), report.to_json());
    let (_, again) = analyze_gains(&spec, &gains).unwrap();
    assert_eq!(files, again);
    let doc: serde_json::Value = serde_json::from_str(files.get("report.json").unwrap()).unwrap();
    assert_eq!(doc["baseline"]["metrics"]["stable"], true);
    assert_eq!(doc["mode"], "observer");
}

#[test]
fn mismatched_gains_are_config_errors() {
    let spec = preset("bicycle").unwrap();
    let pid = Gains::Pid(PidGains::new(1.0, 0.0, 0.0));
    assert!(matches!(analyze_gains(&spec, &pid), Err(Error::Config(_))));
    let wrong = Gains::Observer { k: Matrix::row(&[1.0]), l: Matrix::column(&[1.0]) };
    assert!(matches!(analyze_gains(&spec, &wrong), Err(Error::Dimension(_))));
}

#[test]
fn synthesis_on_a_scalar_plant() {
    let spec = small_problem();
    let (report, files) = run_synthesis(&spec).unwrap();
    let summary = report.swarm.as_ref().unwrap();
    assert_eq!(summary.iterations, 8);
    assert!(summary.best_cost <= spec.weights.iter().sum::<f64>() + 1e-9);
    assert_eq!(files.names().last().unwrap(), "pso_history.csv");
    assert_eq!(files.get("pso_history.csv").unwrap().lines().count(), 10);
    let synth = report.synthesized.as_ref().unwrap();
    let expected = report.baseline.metrics.quantization_radius().unwrap()
        / synth.metrics.quantization_radius().unwrap();
    assert_eq!(report.improvement_factor, Some(expected));
    let (_, again) = run_synthesis(&spec).unwrap();
    assert_eq!(files, again);
    let other = ProblemSpec {
        swarm: SwarmConfig { seed: 4, ..spec.swarm.clone() },
        ..spec.clone()
    };
    let (_, other_files) = run_synthesis(&other).unwrap();
    assert_ne!(files.get("pso_history.csv"), other_files.get("pso_history.csv"));
}

#[test]
fn artifacts_write_to_directory() {
    let spec = small_problem();
    let (_, files) = analyze_gains(
        &spec,
        &Gains::Observer { k: Matrix::row(&[0.2]), l: Matrix::column(&[0.1]) },
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("fxsynth-artifacts-{}", std::process::id()));
    files.write_to(&dir).unwrap();
    for (name, text) in &files.files {
        assert_eq!(&std::fs::read_to_string(dir.join(name)).unwrap(), text);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

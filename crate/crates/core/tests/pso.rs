use fxsynth::pso::*;
use fxsynth::Error;
use proptest::prelude::*;

fn sphere(target: &'static [f64]) -> impl Fn(&[f64]) -> f64 + Sync {
    move |y: &[f64]| y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn config(seed: u64) -> SwarmConfig {
    SwarmConfig {
        particles: 20,
        max_iterations: 200,
        y_min: -10.0,
        y_max: 10.0,
        seed,
        ..SwarmConfig::default()
    }
}

#[test]
fn inertia_schedule() {
    let c = SwarmConfig { max_iterations: 100, ..SwarmConfig::default() };
    assert_eq!(c.w_min(), -0.25);
    assert_eq!(inertia_weight(1, &c), 1.0);
    assert!((inertia_weight(51, &c) - (1.0 - 1.25 * 0.5)).abs() < 1e-15);
    assert_eq!(inertia_weight(101, &c), -0.25);
    assert_eq!(inertia_weight(500, &c), -0.25);
    for l in 1..200 {
        assert!(inertia_weight(l + 1, &c) <= inertia_weight(l, &c));
    }
}

#[test]
fn finds_minimum_of_a_quadratic() {
    let f = sphere(&[3.0, -2.0, 0.5]);
    let out = run(&config(1), &[0.0, 0.0, 0.0], &f).unwrap();
    assert!(out.best_cost < 1e-3, "{}", out.best_cost);
    assert!((out.best_position[0] - 3.0).abs() < 0.05);
    assert_eq!(f(&out.best_position), out.best_cost);
}

#[test]
fn best_cost_never_increases() {
    let f = |y: &[f64]| (y[0] * 3.0).sin() + (y[1] - 1.0).powi(2) + 2.0;
    for seed in 0..5 {
        let out = run(&config(seed), &[0.0, 0.0], &f).unwrap();
        let h = &out.state.best_cost_history;
        assert_eq!(h.len(), out.state.iteration + 1);
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*h.last().unwrap(), out.best_cost);
    }
}

#[test]
fn stall_rule_stops_a_flat_search() {
    let c = SwarmConfig { stall_window: 7, ..config(0) };
    let out = run(&c, &[1.0], &|_: &[f64]| 4.0).unwrap();
    assert_eq!(out.state.iteration, 8);
    assert!(out.state.stalled(&c));
}

#[test]
fn runs_are_reproducible_per_seed() {
    let f = sphere(&[1.0, 1.0]);
    let a = run(&config(42), &[0.0, 0.0], &f).unwrap();
    let b = run(&config(42), &[0.0, 0.0], &f).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.state.history_csv(), b.state.history_csv());
    let c = run(&config(43), &[0.0, 0.0], &f).unwrap();
    assert_ne!(a.state.best_cost_history, c.state.best_cost_history);
}

#[test]
fn per_dimension_draws_change_the_path() {
    let f = sphere(&[1.0, 1.0]);
    let a = run(&config(3), &[0.0, 0.0], &f).unwrap();
    let c = SwarmConfig { per_dimension_draws: true, ..config(3) };
    let b = run(&c, &[0.0, 0.0], &f).unwrap();
    assert_ne!(a.state.best_cost_history, b.state.best_cost_history);
}

#[test]
fn infinite_start_is_rejected() {
    let err = run(&config(0), &[0.0], &|_: &[f64]| f64::INFINITY).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)));
}

#[test]
fn nan_costs_count_as_infinite() {
    let f = |y: &[f64]| if y[0] > 0.5 { f64::NAN } else { y[0] * y[0] };
    let out = run(&config(9), &[0.0], &f).unwrap();
    assert!(out.best_cost.is_finite());
    assert!(out.state.infinite_count_history.iter().any(|&n| n > 0));
    assert!(out.state.mean_cost_history.iter().all(|m| !m.is_nan()));
}

#[test]
fn history_csv_layout() {
    let c = SwarmConfig { max_iterations: 3, ..config(0) };
    let out = run(&c, &[2.0], &sphere(&[0.0])).unwrap();
    let csv = out.state.history_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,best_cost,mean_cost");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1], "0,4.00000000000000e0,4.00000000000000e0");
}

#[test]
fn config_validation() {
    assert!(SwarmConfig::default().validate().is_ok());
    assert!(SwarmConfig { particles: 0, ..SwarmConfig::default() }.validate().is_err());
    assert!(SwarmConfig { y_min: 1.0, y_max: 1.0, ..SwarmConfig::default() }.validate().is_err());
    assert!(SwarmConfig { c1: -1.0, ..SwarmConfig::default() }.validate().is_err());
    assert!(SwarmConfig { v_max: Some(0.0), ..SwarmConfig::default() }.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn particles_stay_in_the_box(seed in 0u64..1000, vmax in 0.5f64..30.0, start in -20.0f64..20.0) {
        let c = SwarmConfig { max_iterations: 20, v_max: Some(vmax), ..config(seed) };
        let f = |y: &[f64]| (y[0] - 7.0).abs() + y[1].abs();
        let mut state = SwarmState::initialize(&c, &[start, -start], &f).unwrap();
        for _ in 0..20 {
            state.step(&c, &f);
            for p in &state.particles {
                for (&y, &v) in p.position.iter().zip(&p.velocity) {
                    prop_assert!((c.y_min..=c.y_max).contains(&y));
                    prop_assert!(v.abs() <= vmax);
                }
                prop_assert!(p.best_cost >= state.global_best_cost);
            }
        }
    }
}

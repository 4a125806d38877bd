mod common;

use std::collections::HashMap;

use fxsynth::fxcode::*;
use fxsynth::linalg::Matrix;
use fxsynth::plant::{discretize, ContinuousPlant, DiscretePlant, GainPair};
use fxsynth::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn bicycle() -> DiscretePlant {
    let cp = ContinuousPlant::new(
        Matrix::from_rows(&[[0.0, 9.8 / 1.5], [1.0, 0.0]]).unwrap(),
        Matrix::column(&[1.0, 0.0]),
        Matrix::column(&[1.0, 0.0]),
        Matrix::row(&[0.5 * 2.0 / 1.5, 4.0 / 1.5]),
    )
    .unwrap();
    discretize(&cp, 0.01).unwrap()
}

fn bicycle_program(k: [f64; 2], l: [f64; 2], bits: u32) -> FxProgram {
    let g = GainPair::new(Matrix::row(&k), Matrix::column(&l));
    synthesize_controller_program(
        &bicycle(),
        &g,
        &[Interval::symmetric(1.0)],
        &[Interval::symmetric(1.0); 2],
        SynthOptions::new(bits),
    )
    .unwrap()
}

fn worked_example() -> FxProgram {
    let opts = SynthOptions { bits: 16, coeff_bits: Some(8) };
    synthesize_gain_program(-7.2479, Interval::symmetric(1.0), opts).unwrap()
}

fn const_mul_parts(prog: &FxProgram, id: &str) -> (i64, u32) {
    match prog.nodes[prog.node_by_id(id).unwrap()].op {
        FxOp::ConstMul { quantized_coeff, coeff_shift, .. } => (quantized_coeff, coeff_shift),
        ref op => panic!("{id} is {op:?}"),
    }
}

#[test]
fn allocate_format_examples() {
    assert_eq!(allocate_format(iv(-35.55, 48.72), true, 16).unwrap(), FxFormat::new(true, 16, 9).unwrap());
    assert_eq!(allocate_format(iv(-1.0, 1.0), true, 16).unwrap(), FxFormat::new(true, 16, 14).unwrap());
    assert_eq!(allocate_format(iv(0.0, 0.0), true, 8).unwrap(), FxFormat::new(true, 8, 7).unwrap());
}

#[test]
fn unit_box_needs_an_integer_bit() {
    let f15 = FxFormat::new(true, 16, 15).unwrap();
    assert!(!f15.holds(1.0));
    let f14 = FxFormat::new(true, 16, 14).unwrap();
    for k in -(1i64 << 14)..=(1 << 14) {
        assert!(f14.holds(k as f64 / 16384.0));
    }
}

#[test]
fn allocate_format_reports_budget_exceeded() {
    let err = allocate_format(iv(-40000.0, 40000.0), true, 16).unwrap_err();
    assert!(matches!(err, Error::BudgetExceeded { needed: 16, available: 15, .. }), "{err:?}");
}

#[test]
fn format_rejects_impossible_fraction_width() {
    assert!(FxFormat::new(true, 16, 16).is_err());
    assert!(FxFormat::new(false, 16, 16).is_ok());
    assert!(FxFormat::new(true, 65, 3).is_err());
}

#[test]
fn range_analysis_examples() {
    let prog = worked_example();
    let y = prog.node_by_id("y").unwrap();
    assert_eq!(prog.range_analysis()[y], iv(-7.2479, 7.2479));

    let mut b = ProgramBuilder::new(16);
    let x = b.input("b", iv(0.0, 1.0)).unwrap();
    let c = b.input("c", iv(-2.0, 0.0)).unwrap();
    let a = b.add("a", x, c, None).unwrap();
    let p = b.finish();
    assert_eq!(p.range_analysis()[a], iv(-2.0, 1.0));

    let mut b = ProgramBuilder::new(16);
    let x = b.input("b", Interval::symmetric(1.0)).unwrap();
    let a = b.sub("a", x, x, None).unwrap();
    let p = b.finish();
    assert_eq!(p.range_analysis()[a], iv(0.0, 0.0));
}

#[test]
fn worked_example_op_and_format() {
    let prog = worked_example();
    let y = prog.node_by_id("y").unwrap();
    assert_eq!(const_mul_parts(&prog, "y").0, -115);
    assert_eq!(prog.shift(y), 6);
    assert_eq!(prog.nodes[y].format, FxFormat::new(true, 16, 12).unwrap());
    assert_eq!(prog.nodes[0].format, FxFormat::new(true, 16, 14).unwrap());
    let c = emit_c_source(&prog, "output");
    assert!(c.contains("y = FX_SHR(-115 * x, 6);"), "{c}");
}

#[test]
fn worked_example_evaluation() {
    let prog = worked_example();
    let y = prog.node_by_id("y").unwrap();
    let fmt = prog.nodes[y].format;
    let at = |v: i64| prog.eval_fx(&[v]).unwrap()[y];
    assert_eq!(at(1 << 14), -29440);
    assert_eq!(fmt.to_real(at(1 << 14)), -7.1875);
    assert_eq!(at(0), 0);
    assert_eq!(at(-(1 << 14)), 29440);
}

#[test]
fn bicycle_coefficients_track_the_reference_listing() {
    let prog = bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16);
    // Reference coefficients; the first, second and fifth differ by one unit
    // because they come from the rounded discretized matrix.
    let reference = [
        ("Gain1", 31499),
        ("Gain2", -3145),
        ("Gain3", 432),
        ("Gain4", -1907),
        ("Gain5", 23835),
        ("Gain6", 3345),
        ("Gain7", 24783),
        ("Gain8", 25823),
    ];
    for (id, want) in reference {
        let got = const_mul_parts(&prog, id).0;
        assert!((got - want).abs() <= 1, "{id}: {got} vs {want}");
    }
    for (id, want) in [("Gain3", 432), ("Gain4", -1907), ("Gain6", 3345), ("Gain7", 24783), ("Gain8", 25823)] {
        assert_eq!(const_mul_parts(&prog, id).0, want, "{id}");
    }
    let gain7 = prog.node_by_id("Gain7").unwrap();
    assert_eq!(prog.nodes[gain7].format, FxFormat::new(true, 16, 13).unwrap());
    let x2_new = prog.node_by_id("x2_new").unwrap();
    assert_eq!(prog.nodes[x2_new].format, FxFormat::new(true, 16, 14).unwrap());
    assert!(prog.negate_control);
}

#[test]
fn zero_gains_give_free_observer_and_zero_control() {
    let prog = bicycle_program([0.0, 0.0], [0.0, 0.0], 16);
    let u = prog.node_by_id("u").unwrap();
    assert!(matches!(prog.nodes[u].op, FxOp::Constant { quantized: 0, .. }));
    let dp = bicycle();
    let mut live = 0;
    for n in &prog.nodes {
        if let FxOp::ConstMul { coeff, .. } = n.op {
            assert_ne!(coeff, 0.0);
            live += 1;
        }
    }
    let nonzero = dp.a.as_slice().iter().filter(|v| **v != 0.0).count();
    assert_eq!(live, nonzero);
    let prog_real = prog.eval_real(&[0.3, -0.4, 0.9, 0.0, 0.0]).unwrap();
    let want = dp.a.mul_vec(&[0.3, -0.4]);
    let x1n = prog.node_by_id("x1_new").unwrap();
    let x2n = prog.node_by_id("x2_new").unwrap();
    assert!((prog_real[x1n] - want[0]).abs() < 1e-15);
    assert!((prog_real[x2n] - want[1]).abs() < 1e-15);
}

#[test]
fn every_node_gets_a_maximal_fraction_width() {
    for prog in [
        bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16),
        bicycle_program([5.1538, 12.9724], [0.0317, 0.0118], 32),
    ] {
        let ranges = prog.range_analysis();
        for (node, r) in prog.nodes.iter().zip(&ranges) {
            let f = node.format;
            assert!(f.holds(r.lo) && f.holds(r.hi), "{} {r:?} {f}", node.id);
            if matches!(node.op, FxOp::Input { .. }) || prog.states.iter().any(|s| s.update == prog.node_by_id(&node.id).unwrap()) {
                continue;
            }
            if f.m + 1 < f.n {
                let finer = FxFormat::new(f.signed, f.n, f.m + 1).unwrap();
                assert!(!(finer.holds(r.lo) && finer.holds(r.hi)), "{} could use {finer}", node.id);
            }
        }
    }
}

#[test]
fn range_analysis_is_sound_and_attained_on_vertices() {
    let prog = bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16);
    let ranges = prog.range_analysis();
    let inputs = prog.input_nodes();
    let boxes: Vec<Interval> = inputs.iter().map(|&i| prog.nodes[i].range).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let x: Vec<f64> = boxes.iter().map(|b| rng.gen_range(b.lo..=b.hi)).collect();
        let vals = prog.eval_real(&x).unwrap();
        for (v, r) in vals.iter().zip(&ranges) {
            assert!(r.lo - 1e-12 <= *v && *v <= r.hi + 1e-12);
        }
    }
    let d = boxes.len();
    let mut lo = vec![f64::INFINITY; prog.nodes.len()];
    let mut hi = vec![f64::NEG_INFINITY; prog.nodes.len()];
    for mask in 0..(1u32 << d) {
        let x: Vec<f64> = (0..d)
            .map(|j| if mask >> j & 1 == 1 { boxes[j].hi } else { boxes[j].lo })
            .collect();
        for (k, v) in prog.eval_real(&x).unwrap().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    for (k, r) in ranges.iter().enumerate() {
        assert!((r.lo - lo[k]).abs() <= 1e-12 && (r.hi - hi[k]).abs() <= 1e-12, "{}", prog.nodes[k].id);
    }
}

#[test]
fn power_of_two_coefficients_are_exact() {
    let mut b = ProgramBuilder::new(16);
    let x = b.input("x", Interval::symmetric(0.2)).unwrap();
    let y = b.input("y", Interval::symmetric(0.05)).unwrap();
    let g1 = b.const_mul("g1", x, 2.0, None).unwrap();
    let g2 = b.const_mul("g2", y, -4.0, None).unwrap();
    let s = b.sub("s", g1, g2, None).unwrap();
    b.output(s, OutputRole::Control(0));
    let prog = b.finish();
    let (fx, fy) = (prog.nodes[x].format, prog.nodes[y].format);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        let xi = rng.gen_range(fx.quantize(-0.2).unwrap()..=fx.quantize(0.2).unwrap()) as i64;
        let yi = rng.gen_range(fy.quantize(-0.05).unwrap()..=fy.quantize(0.05).unwrap()) as i64;
        let vals = prog.eval_fx(&[xi, yi]).unwrap();
        let real = prog.eval_real(&[fx.to_real(xi as i128), fy.to_real(yi as i128)]).unwrap();
        assert_eq!(prog.nodes[s].format.to_real(vals[s]), real[s]);
    }
}

#[test]
fn eval_fx_faults_on_overflow() {
    let mut b = ProgramBuilder::new(8);
    let x = b.input_with_format("x", Interval::symmetric(1.0), Some(FxFormat::new(true, 8, 6).unwrap())).unwrap();
    let f = FxFormat::new(true, 8, 6).unwrap();
    let _ = b.const_mul("y", x, 1.5, Some(f)).unwrap();
    let prog = b.finish();
    assert!(prog.eval_fx(&[32]).is_ok());
    let err = prog.eval_fx(&[127]).unwrap_err();
    assert!(matches!(err, Error::Overflow { ref node, .. } if node == "y"), "{err:?}");
}

#[test]
fn program_json_round_trip() {
    let prog = bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16);
    let back = FxProgram::from_json(&prog.to_json()).unwrap();
    assert_eq!(back, prog);
    assert_eq!(back.to_json(), prog.to_json());
    assert!(matches!(FxProgram::from_json("{\"nodes\": 3}"), Err(Error::Parse(_))));
}

#[test]
fn emitted_c_is_c89() {
    let programs = [
        worked_example(),
        bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16),
        bicycle_program([5.1538, 12.9724], [0.0317, 0.0118], 32),
        bicycle_program([0.0, 0.0], [0.0, 0.0], 16),
    ];
    for prog in &programs {
        let c = emit_c_source(prog, "output");
        common::check_c89(&c).unwrap_or_else(|e| panic!("{e}\n{c}"));
        assert!(c.contains("fixdt(1,16,") || c.contains("fixdt(1,32,"));
    }
    assert!(common::check_c89("int f(void) { int a; a = 1; int b; return a; }").is_err());
    assert!(common::check_c89("int f(void) { return 0; } // x").is_err());
    assert!(common::check_c89("long long x;").is_err());
}

#[test]
fn zero_coefficient_program_returns_zero() {
    let prog = synthesize_gain_program(0.0, Interval::symmetric(1.0), SynthOptions::new(16)).unwrap();
    let y = prog.node_by_id("y").unwrap();
    for v in [-16384, -1, 0, 7, 16384] {
        assert_eq!(prog.eval_fx(&[v]).unwrap()[y], 0);
    }
}

/// Feeds random inputs through both `eval_fx` and an interpreter of the
/// emitted statements.
fn cross_check_emitted(prog: &FxProgram, trials: usize, seed: u64) {
    let c = emit_c_source(prog, "step");
    let free = prog.free_inputs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let ints: Vec<i64> = free
            .iter()
            .map(|&i| {
                let nd = &prog.nodes[i];
                let lo = nd.format.quantize(nd.range.lo).unwrap();
                let hi = nd.format.quantize(nd.range.hi).unwrap();
                rng.gen_range(lo..=hi) as i64
            })
            .collect();
        let vals = prog.eval_fx(&ints).unwrap();
        let mut env: HashMap<String, i128> = free
            .iter()
            .zip(&ints)
            .map(|(&i, &v)| (prog.nodes[i].id.clone(), v as i128))
            .collect();
        common::interpret_c_assignments(&c, &mut env);
        for (k, nd) in prog.nodes.iter().enumerate() {
            if let Some(v) = env.get(&nd.id) {
                assert_eq!(*v, vals[k], "node {}", nd.id);
            }
        }
    }
}

#[test]
fn emitted_c_matches_eval_fx() {
    cross_check_emitted(&worked_example(), 1000, 1);
    cross_check_emitted(&bicycle_program([3.0253, 12.6089], [0.0132, 0.1021], 16), 1000, 2);
    cross_check_emitted(&bicycle_program([5.1538, 12.9724], [0.0317, 0.0118], 32), 1000, 3);
}

proptest! {
    #[test]
    fn allocated_format_is_best(lo in -1e4f64..1e4, width in 0.0f64..2e4, n in prop::sample::select(vec![8u32, 16, 32])) {
        let r = Interval::new(lo, lo + width).unwrap();
        match allocate_format(r, true, n) {
            Ok(f) => {
                prop_assert!(f.holds(r.lo) && f.holds(r.hi));
                if f.m + 1 < n {
                    let finer = FxFormat::new(true, n, f.m + 1).unwrap();
                    prop_assert!(!(finer.holds(r.lo) && finer.holds(r.hi)));
                }
            }
            Err(Error::BudgetExceeded { .. }) => {
                let widest = FxFormat::new(true, n, 0).unwrap();
                prop_assert!(!(widest.holds(r.lo) && widest.holds(r.hi)));
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn const_mul_evaluation_is_odd(coeff in -100.0f64..100.0, v in 0i64..(1 << 14)) {
        let prog = synthesize_gain_program(coeff, Interval::symmetric(1.0), SynthOptions::new(16)).unwrap();
        let y = prog.node_by_id("y").unwrap();
        let pos = prog.eval_fx(&[v]).unwrap()[y];
        let neg = prog.eval_fx(&[-v]).unwrap()[y];
        prop_assert_eq!(pos, -neg);
    }

    #[test]
    fn shr_toward_zero_matches_division(v in -(1i128 << 60)..(1i128 << 60), k in 0i32..40) {
        prop_assert_eq!(shr_toward_zero(v, k), v / (1i128 << k));
        prop_assert_eq!(shr_toward_zero(v, -3), v * 8);
    }
}

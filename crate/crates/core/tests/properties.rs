//! Structural and numerical invariants on randomly generated circuits.

use khsim::cli::{preset, simulate, RunConfig, RunMethod, TimeStep, RESONATOR_PERIOD};
use khsim::eom::{build_system, default_time_step, eigenfrequencies, integrate_classical, rk4_step, ClassicalState};
use khsim::netlist::{parse_netlist, parse_value};
use khsim::quantum::PhysicalConstants;
use khsim::topology::{assemble_matrices, capacitance_inverse, regularize, CircuitModel};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn k_j() -> f64 {
    PhysicalConstants::default().josephson_constant()
}

/// Grounded LC resonators on every node plus optional couplings and losses.
fn arb_netlist(lossy: bool) -> impl Strategy<Value = String> {
    (1usize..=3).prop_flat_map(move |n| {
        let node = (0.5f64..2.0, 0.5f64..2.0, proptest::option::of(1.0f64..100.0));
        let pair = (proptest::option::of(5.0f64..50.0), proptest::option::of(2.0f64..20.0), proptest::option::of(0.5f64..10.0));
        (proptest::collection::vec(node, n), proptest::collection::vec(pair, n * (n - 1) / 2)).prop_map(move |(nodes, pairs)| {
            let mut text = String::new();
            for (i, (c, l, r)) in nodes.iter().enumerate() {
                let k = i + 1;
                text += &format!("C C{k} {k} 0 {c}p\nL L{k} {k} 0 {l}n\n");
                if let (true, Some(r)) = (lossy, r) {
                    text += &format!("R R{k} {k} 0 {r}k\n");
                }
            }
            let mut idx = 0;
            for a in 1..=n {
                for b in a + 1..=n {
                    let (c, l, r) = pairs[idx];
                    idx += 1;
                    if let Some(c) = c {
                        text += &format!("C C{a}{b} {a} {b} {c}f\n");
                    }
                    if let Some(l) = l {
                        text += &format!("L L{a}{b} {a} {b} {l}n\n");
                    }
                    if let (true, Some(r)) = (lossy, r) {
                        text += &format!("R R{a}{b} {a} {b} {r}k\n");
                    }
                }
            }
            text
        })
    })
}

fn model(text: &str) -> CircuitModel {
    assemble_matrices(&parse_netlist(text).unwrap()).unwrap()
}

fn symmetric_psd(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-15 * scale {
        return false;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().all(|&l| l >= -1e-12 * scale)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn suffix_is_multiplicative(mantissa in 1u32..100_000, digits in 0u32..4) {
        let lit = format!("{}", mantissa as f64 / 10f64.powi(digits as i32));
        let base = parse_value(&lit).unwrap();
        let kilo = parse_value(&format!("{lit}k")).unwrap();
        let want: f64 = format!("{lit}e3").parse().unwrap();
        prop_assert_eq!(kilo, want);
        prop_assert!((kilo / (1000.0 * base) - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn matrices_are_symmetric_psd(text in arb_netlist(true)) {
        let m = model(&text);
        prop_assert!(symmetric_psd(&m.cmat));
        prop_assert!(symmetric_psd(&m.linv));
        prop_assert!(symmetric_psd(&m.rinv));
        prop_assert!(capacitance_inverse(&m).is_ok());
    }

    #[test]
    fn flux_rows_hold_only_inverse_capacitance(text in arb_netlist(true)) {
        let m = model(&text);
        let sys = build_system(&m, k_j()).unwrap();
        let n = m.n_dof;
        let cinv = capacitance_inverse(&m).unwrap();
        prop_assert!((sys.m.view((n, 0), (n, n)) - &cinv).amax() <= 1e-12 * cinv.amax());
        prop_assert_eq!(sys.m.view((n, n), (n, n)).amax(), 0.0);
    }

    #[test]
    fn trace_identity(text in arb_netlist(true)) {
        let m = model(&text);
        let sys = build_system(&m, k_j()).unwrap();
        let want = -(&m.rinv * capacitance_inverse(&m).unwrap()).trace();
        prop_assert!(want <= 0.0);
        prop_assert!((sys.m.trace() - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn lossless_spectrum_is_imaginary(text in arb_netlist(false)) {
        let sys = build_system(&model(&text), k_j()).unwrap();
        let eig = eigenfrequencies(&sys).unwrap();
        let re = eig.eigenvalues.iter().map(|s| s.re.abs()).fold(0.0, f64::max);
        let im = eig.eigenvalues.iter().map(|s| s.im.abs()).fold(0.0, f64::max);
        prop_assert!(re < 1e-9 * im, "re {re:e} im {im:e}");
    }

    #[test]
    fn power_balance(text in arb_netlist(true), q0 in 0.1f64..1.0, p0 in -1.0f64..1.0) {
        let m = model(&text);
        let sys = build_system(&m, k_j()).unwrap();
        let n = m.n_dof;
        let mut x0 = ClassicalState::zeros(n);
        x0.q[0] = q0 * 1e-18;
        x0.phi[n - 1] = p0 * 3e-17;
        let omega = eigenfrequencies(&sys).unwrap().modes.iter().map(|m| m.angular_frequency).fold(0.0, f64::max);
        let dt = 0.01 / omega;
        let traj = integrate_classical(&sys, &x0, dt, 2000.0 * dt).unwrap();
        let v: Vec<DVector<f64>> = traj.iter().map(|s| s.to_vector()).collect();
        let e: Vec<f64> = v.iter().map(|x| sys.energy(x)).collect();
        let d: Vec<f64> = v.iter().map(|x| 2.0 * sys.dissipation(x)).collect();
        // rate scale below which the relative error is meaningless
        let floor = (1e-3 * d.iter().cloned().fold(0.0, f64::max)).max(1e-6 * omega * e[0]);
        for i in 2..e.len() - 2 {
            let de = (-e[i + 2] + 8.0 * e[i + 1] - 8.0 * e[i - 1] + e[i - 2]) / (12.0 * dt);
            prop_assert!((de + d[i]).abs() / de.abs().max(floor) < 1e-4, "step {i}: {de:e} vs {:e}", -d[i]);
        }
    }
}

#[test]
fn second_order_form_matches() {
    // KCL at both nodes of the bare resistive coupling, integrated in (φ, φ̇)
    let (c1, l1, c2, l2, r12) = (1.01e-12, 1e-9, 0.99e-12, 1e-9, 4e3);
    let text = format!("C C1 1 0 {c1:e}\nL L1 1 0 {l1:e}\nR R12 1 2 {r12:e}\nC C2 2 0 {c2:e}\nL L2 2 0 {l2:e}\n");
    let sys = build_system(&model(&text), k_j()).unwrap();
    let dt = 1e-12;
    let x0 = ClassicalState::new(vec![1e-18, -4e-19], vec![2e-17, 0.0]);
    let steps = 20_000;
    let first = integrate_classical(&sys, &x0, dt, steps as f64 * dt).unwrap();

    let f = |y: &DVector<f64>| {
        let (p1, p2, v1, v2) = (y[0], y[1], y[2], y[3]);
        let a1 = (-(l1 / r12) * v1 - p1 + (l1 / r12) * v2) / (l1 * c1);
        let a2 = ((l2 / r12) * v1 - (l2 / r12) * v2 - p2) / (l2 * c2);
        DVector::from_vec(vec![v1, v2, a1, a2])
    };
    let mut y = DVector::from_vec(vec![2e-17, 0.0, 1e-18 / c1, -4e-19 / c2]);
    let scale = 2e-17;
    for state in first.iter().skip(1) {
        y = rk4_step(f, &y, dt);
        assert!((state.phi[0] - y[0]).abs() < 1e-8 * scale);
        assert!((state.phi[1] - y[1]).abs() < 1e-8 * scale);
    }
}

#[test]
fn quantum_methods_agree_on_linear_presets() {
    for name in ["regime1", "regime2", "pathological-a", "pathological-c", "pathological-e"] {
        let p = preset(name).unwrap();
        let mut cfg = p.config.clone();
        // half the default step: at T/200 the fourth-order phase error of RK4
        // alone reaches 2e-6 over a hundred periods
        let (spec, _) = regularize(&parse_netlist(&p.netlist).unwrap(), cfg.aux_value).unwrap();
        let dt = default_time_step(&assemble_matrices(&spec).unwrap(), k_j()).unwrap();
        cfg.dt = TimeStep::Fixed(dt / 2.0);
        cfg.sample_every = (cfg.sample_every * 2).max(1);
        cfg.t_end = cfg.t_end.min(100.0 * RESONATOR_PERIOD);
        cfg.method = RunMethod::Rk4Full;
        let rk4 = simulate(&p.netlist, &cfg).unwrap();
        cfg.method = RunMethod::LinearPropagator;
        let prop = simulate(&p.netlist, &cfg).unwrap();
        let mut worst = 0.0f64;
        for k in 0..rk4.series.n_dof() {
            for (a, b) in rk4.series.charge[k].iter().zip(&prop.series.charge[k]) {
                worst = worst.max((a - b).abs());
            }
        }
        println!("{name}: rk4-full vs linear-propagator {worst:e}");
        assert!(worst < 1e-6, "{name}: {worst:e}");
    }
}

#[test]
fn evolved_operators_stay_hermitian() {
    let p = preset("transmons").unwrap();
    let mut cfg = p.config.clone();
    cfg.diagnostics = true;
    cfg.t_end /= 4.0;
    let sim = simulate(&p.netlist, &cfg).unwrap();
    let worst = sim.series.hermiticity_defect.iter().cloned().fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn single_mode_commutator_is_invariant() {
    // full truncated matrix, corner included
    for (c, l) in [("1.01p", "1n"), ("77.5f", "13n"), ("2p", "0.5n")] {
        let mut cfg = RunConfig::new(1e-8).with_initial(1, 1.0, 1.0);
        cfg.dims = vec![4];
        cfg.diagnostics = true;
        cfg.method = RunMethod::LinearPropagator;
        let sim = simulate(&format!("C C1 1 0 {c}\nL L1 1 0 {l}\n"), &cfg).unwrap();
        let worst = sim.series.commutator_deviation.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-8, "{c} {l}: {worst:e}");
    }
}

use torus_control::saturation::{lattice_span, FrequencySet};
use torus_control::solver::{
    endpoint, mode_support, resolve, stability_probe, Integrator, NonlinearitySpec, Perturbation, Segment, SimInput,
    SolverConfig, SolverError, Status,
};
use torus_control::spectral::{Frequency, SobolevIndex, TrigField};

fn s1() -> SobolevIndex {
    SobolevIndex::new(1.0).unwrap()
}

fn cubic() -> NonlinearitySpec {
    NonlinearitySpec::monomial(3, 1.0).unwrap()
}

fn config(cutoff: i64, dt: f64) -> SolverConfig {
    SolverConfig {
        cutoff,
        dt,
        ..SolverConfig::default()
    }
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let nl = NonlinearitySpec::new(vec![0.0, 0.5, 0.0, 1.0], "tanh").unwrap();
    let input = SimInput::free(TrigField::zero(2), 0.5).unwrap();
    let traj = resolve(&input, &nl, &config(4, 1e-2)).unwrap();
    assert_eq!(traj.status, Status::Completed);
    assert!(traj.states.iter().all(TrigField::is_zero));
    assert_eq!(traj.final_time(), 0.5);
    assert!(mode_support(&traj, 1e-10).is_empty());
}

#[test]
fn stationary_state_is_preserved() {
    let nu = 1.0;
    let u1 = TrigField::cos([1], 1.0);
    let h = (&u1.laplacian().scale(-nu) + &u1.power(3)).project_box(8);
    for integrator in [Integrator::ExponentialRk2, Integrator::ImexEuler, Integrator::ImexBdf2] {
        let cfg = SolverConfig {
            integrator,
            ..config(8, 1e-3)
        };
        let input = SimInput::new(u1.clone(), vec![Segment::coast(1, 1.0).with_h(h.clone())]).unwrap();
        let traj = resolve(&input, &cubic(), &cfg).unwrap();
        let worst = traj.states.iter().map(|u| (u - &u1).sobolev_norm(s1())).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{integrator:?}: {worst}");
    }
}

#[test]
fn constant_mode_blows_up_near_exact_time() {
    // a' = a^3, a(0) = 2 blows up at 1/(2*4) = 0.125.
    let nl = NonlinearitySpec::monomial(3, -1.0).unwrap();
    let cfg = SolverConfig {
        blowup_threshold: 1e3,
        dt: 1e-5,
        ..config(2, 1e-5)
    };
    let input = SimInput::free(TrigField::constant(1, 2.0), 0.5).unwrap();
    let traj = resolve(&input, &nl, &cfg).unwrap();
    match traj.status {
        Status::BlownUpAt(t) => assert!((t - 0.125).abs() < 0.2 * 0.125, "t* = {t}"),
        Status::Completed => panic!("no blow-up detected"),
    }
    assert!(*traj.norms.last().unwrap() > 1e3);
    assert!(matches!(traj.endpoint(), Err(SolverError::BlownUpAt { .. })));
    assert!(matches!(endpoint(&input, &nl, &cfg), Err(SolverError::BlownUpAt { .. })));
}

#[test]
fn raising_threshold_keeps_prefix() {
    let nl = NonlinearitySpec::monomial(3, -1.0).unwrap();
    let input = SimInput::free(&TrigField::constant(1, 1.5) + &TrigField::cos([1], 0.3), 1.0).unwrap();
    let low = SolverConfig {
        blowup_threshold: 1e2,
        record_stride: 1,
        ..config(4, 1e-4)
    };
    let high = SolverConfig {
        blowup_threshold: 1e4,
        ..low.clone()
    };
    let a = resolve(&input, &nl, &low).unwrap();
    let b = resolve(&input, &nl, &high).unwrap();
    let (Status::BlownUpAt(ta), Status::BlownUpAt(tb)) = (a.status, b.status) else {
        panic!("both runs should blow up");
    };
    assert!(tb >= ta);
    let n = a.times.len();
    assert_eq!(a.times[..n], b.times[..n]);
    assert_eq!(a.states[..n], b.states[..n]);
}

#[test]
fn heat_modes_decay_exactly() {
    let nu = 0.7;
    let u0 = TrigField::from_terms(
        2,
        [
            (Frequency::from([0, 0]), 0.5, 0.0),
            (Frequency::from([1, 0]), 1.0, -0.5),
            (Frequency::from([2, -1]), 0.25, 0.75),
        ],
    )
    .unwrap();
    let cfg = SolverConfig {
        nu,
        ..config(3, 1e-2)
    };
    let t = 0.8;
    let out = endpoint(&SimInput::free(u0.clone(), t).unwrap(), &NonlinearitySpec::linear(), &cfg).unwrap();
    for (k, m) in u0.iter() {
        let factor = (-nu * k.norm_sq() as f64 * t).exp();
        let got = out.coefficient(k);
        for (g, e) in [(got.cos, m.cos), (got.sin, m.sin)] {
            assert!((g - factor * e).abs() <= 1e-8 * (factor * e).abs().max(1e-300), "{k}");
        }
    }
}

fn convergence_ratio(integrator: Integrator) -> f64 {
    // Smooth forced cubic run; errors against a fine reference.
    let nl = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], "tanh").unwrap();
    let u0 = &TrigField::cos([1], 0.8) + &TrigField::sin([2], 0.4);
    let input = SimInput::new(
        u0,
        vec![Segment::coast(1, 0.5).with_h(TrigField::sin([1], 1.0)).with_zeta(TrigField::cos([1], 0.3))],
    )
    .unwrap();
    let run = |dt: f64| {
        let cfg = SolverConfig {
            integrator,
            min_segment_steps: 1,
            nu: 0.2,
            ..config(12, dt)
        };
        endpoint(&input, &nl, &cfg).unwrap()
    };
    let reference = run(1e-5);
    let coarse = (&run(2e-3) - &reference).sobolev_norm(s1());
    let fine = (&run(1e-3) - &reference).sobolev_norm(s1());
    coarse / fine
}

#[test]
fn self_convergence_orders() {
    let euler = convergence_ratio(Integrator::ImexEuler);
    assert!(euler >= 1.9, "imex_euler ratio {euler}");
    for integrator in [Integrator::ImexBdf2, Integrator::ExponentialRk2] {
        let r = convergence_ratio(integrator);
        assert!(r >= 3.8, "{integrator:?} ratio {r}");
    }
}

#[test]
fn resolve_is_deterministic() {
    let nl = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], "gaussian").unwrap();
    let input = SimInput::new(
        TrigField::sin([1, 1], 0.5),
        vec![
            Segment::coast(2, 0.1).with_eta(TrigField::cos([0, 1], 2.0)),
            Segment::coast(2, 0.2).with_zeta(TrigField::cos([1, 0], 1.0)),
        ],
    )
    .unwrap();
    let cfg = config(4, 1e-3);
    assert_eq!(resolve(&input, &nl, &cfg).unwrap(), resolve(&input, &nl, &cfg).unwrap());
}

#[test]
fn polynomial_dynamics_stay_on_the_control_lattice() {
    let i = FrequencySet::symmetric(1, [Frequency::from([2])]).unwrap();
    let input = SimInput::new(
        TrigField::cos([2], 0.5),
        vec![
            Segment::coast(1, 0.5)
                .with_h(TrigField::sin([2], 1.0))
                .with_eta(TrigField::constant(1, 0.3)),
            Segment::coast(1, 0.5).with_zeta(TrigField::cos([2], 0.7)),
        ],
    )
    .unwrap();
    let cfg = SolverConfig {
        record_stride: 1,
        ..config(16, 1e-3)
    };
    let traj = resolve(&input, &cubic(), &cfg).unwrap();
    let lattice = lattice_span(&i);
    let support = mode_support(&traj, 1e-10);
    assert!(support.len() > 3);
    assert!(support.iter().all(|k| lattice.contains(k)));
    // A non-polynomial perturbation breaks the invariance.
    let tanh = NonlinearitySpec::new(vec![0.0, 0.0, 0.0, 1.0], "tanh").unwrap();
    let traj = resolve(&input, &tanh, &cfg).unwrap();
    assert!(mode_support(&traj, 1e-10).iter().all(|k| lattice.contains(k)));
    let shifted = SimInput::new(TrigField::cos([1], 0.01), input.segments.clone()).unwrap();
    let traj = resolve(&shifted, &cubic(), &cfg).unwrap();
    assert!(mode_support(&traj, 1e-10).iter().any(|k| !lattice.contains(k)));
}

#[test]
fn controls_beyond_cutoff_are_rejected() {
    let input = SimInput::new(TrigField::zero(1), vec![Segment::coast(1, 0.1).with_eta(TrigField::cos([9], 1.0))]).unwrap();
    assert!(matches!(resolve(&input, &cubic(), &config(8, 1e-3)), Err(SolverError::Config(_))));
}

#[test]
fn heat_probe_ratio_is_constant() {
    let cfg = config(4, 1e-2);
    let base = SimInput::free(TrigField::zero(1), 1.0).unwrap();
    let perturbations: Vec<Perturbation> =
        [1e-2, 1e-3].iter().map(|&e| Perturbation::initial(TrigField::cos([1], e))).collect();
    let report = stability_probe(&base, &NonlinearitySpec::linear(), &cfg, &perturbations).unwrap();
    for row in &report.rows {
        assert!((row.ratio - 1.0).abs() < 1e-12, "{row:?}");
    }
    assert!(report.stabilized);
    let zero = stability_probe(&base, &NonlinearitySpec::linear(), &cfg, &[Perturbation::initial(TrigField::zero(1))]).unwrap();
    assert_eq!(zero.rows[0].deviation, 0.0);
}

#[test]
fn cubic_probe_ratios_stabilize() {
    let cfg = config(8, 1e-3);
    let base = SimInput::free(TrigField::cos([1], 0.1), 1.0).unwrap();
    let direction = Perturbation {
        du0: &TrigField::cos([1], 1.0) + &TrigField::sin([2], 0.5),
        dzeta: TrigField::cos([1], 0.2),
        dphi: TrigField::sin([1], 1.0),
    };
    let perturbations: Vec<Perturbation> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&e| direction.scale(e)).collect();
    let report = stability_probe(&base, &cubic(), &cfg, &perturbations).unwrap();
    assert!(report.stabilized, "{report:?}");
    assert!(report.lambda > 0.0);
}

#[test]
fn csv_export_layout() {
    let input = SimInput::free(TrigField::cos([1], 1.0), 0.01).unwrap();
    let cfg = SolverConfig {
        min_segment_steps: 2,
        ..config(2, 5e-3)
    };
    let traj = resolve(&input, &cubic(), &cfg).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, 1).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,norm,cos(0),cos(1),sin(1)");
    assert_eq!(lines.count(), traj.times.len());
    let summary = serde_json::to_value(traj.summary()).unwrap();
    assert_eq!(summary["status"], "completed");
}

use dischelm_core::fdeop::{direct_discretize, eval_fde, jacobian};
use dischelm_core::integrate::{compare, run, step, InitialGuess, StepConfig};
use dischelm_core::{ContinuousOp, Partition, SecondOrderOp};
use proptest::prelude::*;

fn op(text: &str) -> SecondOrderOp {
    SecondOrderOp::parse(text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn complete_trajectories_solve_the_scheme(
        which in 0usize..4,
        q0 in -1.0f64..1.0,
        q1 in -1.0f64..1.0,
        h in prop_oneof![Just(0.05), Just(0.1), Just(0.5)],
        previous in any::<bool>(),
    ) {
        let ops = ["x + w", "x + (vm+vp)/2 + w", "x^3 + w + sin(vm)", "x + w + vp^3"];
        let o = op(ops[which]);
        let cfg = StepConfig {
            initial_guess: if previous { InitialGuess::PreviousValue } else { InitialGuess::LinearExtrapolation },
            ..StepConfig::default()
        };
        let tr = run(&o, q0, q1, Partition::new(0.0, h, 40).unwrap(), &cfg).unwrap();
        prop_assume!(tr.is_complete());
        let q = tr.grid_fn().unwrap();
        let max_q = q.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = eval_fde(&o, &q).unwrap();
        let jac = jacobian(&o, &q).unwrap();
        for (p, r) in residual.iter() {
            // rounding floor of the stencil evaluation for stiff rows
            let sensitivity: f64 = (p - 1..=p + 1).map(|c| jac.entry(p, c).abs()).sum();
            let floor = 8.0 * f64::EPSILON * sensitivity * (1.0 + max_q);
            prop_assert!(r.abs() <= cfg.newton_tol * (1.0 + max_q) + floor, "{}: p={p} {r}", ops[which]);
            if which < 3 {
                prop_assert!(r.abs() <= cfg.newton_tol * (1.0 + max_q), "{}: p={p} {r}", ops[which]);
            }
        }
    }

    #[test]
    fn affine_schemes_take_one_newton_update(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.5f64..2.0, q0 in -1.0f64..1.0, q1 in -1.0f64..1.0
    ) {
        let o = op(&format!("{a:?}*x + {b:?}*vm + {c:?}*vp + w + 0.25"));
        let tr = run(&o, q0, q1, Partition::new(0.0, 0.1, 20).unwrap(), &StepConfig::default()).unwrap();
        prop_assert!(tr.is_complete());
        prop_assert!(tr.iterations()[2..].iter().all(|&k| k <= 1), "{:?}", tr.iterations());
    }
}

#[test]
fn oscillator_over_a_thousand_steps() {
    let h = 0.1;
    let tr = run(
        &op("x + w"),
        1.0,
        0.1f64.cos(),
        Partition::new(0.0, h, 1000).unwrap(),
        &StepConfig::default(),
    )
    .unwrap();
    let (mut a, mut b) = (1.0, 0.1f64.cos());
    for &q in &tr.values()[2..] {
        let c = (2.0 - h * h) * b - a;
        assert!((q - c).abs() <= 1e-12);
        (a, b) = (b, c);
    }
    assert!(tr.values().iter().all(|q| q.abs() <= 1.01));
}

#[test]
fn step_accepts_nonlinear_schemes() {
    let out = step(&op("x + w + vp^3"), 0.5, 0.5, 0.0, 0.1, &StepConfig::default()).unwrap();
    let phi = |y: f64| 0.5 + (y - 0.5) / 0.01 + ((y - 0.5) / 0.1).powi(3);
    assert!(phi(out.q_next).abs() <= 1e-12 * 1.5);
}

#[test]
fn blends_of_the_sine_scheme_diverge() {
    let sine = ContinuousOp::parse("x + sin(v)*w").unwrap();
    let (a, b) = (
        direct_discretize(&sine, 0.0).unwrap(),
        direct_discretize(&sine, 1.0).unwrap(),
    );
    let part = Partition::new(0.0, 0.1, 50).unwrap();
    let cmp = compare(&a, &b, 0.3, 0.5, part, &StepConfig::default()).unwrap();
    assert!(cmp.max_deviation > 1e-6);
    assert_eq!(
        compare(&a, &a, 0.3, 0.5, part, &StepConfig::default())
            .unwrap()
            .max_deviation,
        0.0
    );
}

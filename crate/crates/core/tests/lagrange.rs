use dischelm_core::helmholtz::{check_helmholtz, check_selfadjoint};
use dischelm_core::lagrange::{
    directional_derivative, el_residual, null_check, synthesize, verify_synthesis, ElOperator, DEFAULT_QUAD_ORDER,
};
use dischelm_core::sampling::Sampler;
use dischelm_core::{
    BoundaryClass, Expr, Func, GridFn, LagrangianCouple, LagrangianFn, Node, NullVerdict, Partition, SamplingConfig,
    SecondOrderOp, Verdict, Vocabulary,
};
use proptest::prelude::*;

fn couple(m: &str, p: &str) -> LagrangianCouple {
    LagrangianCouple::parse(m, p).unwrap()
}

fn couple_corpus() -> Vec<LagrangianCouple> {
    vec![
        couple("(x^2 - v^2)/2", "0"),
        couple("v", "0"),
        couple("(x - xi*v/2)*v", "0"),
        couple("x*v + xi*v^2/2", "sin(x)*v^2"),
        couple("exp(x/3)*v^2 + cos(t)*x", "x^2*v - v^4/12"),
        couple("0", "(1 + x^2)*v^2/2 - cos(x)"),
    ]
}

/// Smooth Lagrangians on `x, v ∈ [-2, 2]`, `|v|` up to 40 on fine grids.
fn lagrangian() -> impl Strategy<Value = LagrangianFn> {
    let leaf = prop_oneof![
        (0usize..4).prop_map(Node::Var),
        (1u32..200).prop_map(|k| Node::Const(k as f64 / 100.0)),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::sub(a, b)),
            (inner.clone(), 0u32..3).prop_map(|(a, n)| Node::pow(a, n)),
            inner.clone().prop_map(|a| Node::call(Func::Sin, a)),
            inner.prop_map(|a| Node::call(Func::Tanh, a)),
        ]
    })
    .prop_map(|n| LagrangianFn::from_expr(Expr::from_node(n, Vocabulary::lagrangian())).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euler_lagrange_is_the_gradient_of_the_action(
        lm in lagrangian(), lp in lagrangian(), seed in any::<u64>()
    ) {
        let c = LagrangianCouple::new(lm, lp);
        let mut s = Sampler::new(seed);
        let q = s.grid(&SamplingConfig::default());
        let w = s.direction(*q.partition(), BoundaryClass::Zero1);
        let h = q.step();
        let el = el_residual(&c, &q).unwrap();
        let (sum, mag) = el.iter().fold((0.0, 0.0), |(s, m), (p, r)| (s + r * w[p], m + (r * w[p]).abs()));
        let dd = directional_derivative(&c, &q, &w).unwrap();
        prop_assert!((dd - h * sum).abs() <= 1e-10 * (1.0 + h * mag + dd.abs()), "{dd} vs {}", h * sum);
    }
}

#[test]
fn directional_derivative_needs_pinned_ends() {
    let c = couple("(x^2 - v^2)/2", "0");
    let q = GridFn::zeros(Partition::new(0.0, 0.1, 6).unwrap());
    let w = GridFn::from_fn(*q.partition(), |_, _| 1.0);
    assert!(directional_derivative(&c, &q, &w).is_err());
}

#[test]
fn euler_lagrange_schemes_are_self_adjoint() {
    let cfg = SamplingConfig::default();
    for c in couple_corpus() {
        let op = ElOperator(&c);
        let s = check_selfadjoint(&op, &cfg).unwrap();
        let h = check_helmholtz(&op, &cfg).unwrap();
        assert_eq!(s.verdict, Verdict::Satisfied, "{}: {}", c.l_minus(), s.max_residual);
        assert_eq!(h.verdict, Verdict::Satisfied, "{}: {}", c.l_minus(), h.max_residual);
    }
}

#[test]
fn euler_lagrange_operator_matches_el_residual() {
    let mut s = Sampler::new(2);
    for c in couple_corpus() {
        let q = s.grid(&SamplingConfig::default());
        let via_op = dischelm_core::fdeop::eval_fde(&ElOperator(&c), &q).unwrap();
        let direct = el_residual(&c, &q).unwrap();
        for (p, r) in direct.iter() {
            assert!(
                (via_op[p] - r).abs() <= 1e-9 * (1.0 + r.abs()),
                "{p}: {} vs {r}",
                via_op[p]
            );
        }
    }
}

#[test]
fn synthesis_is_sound_on_variational_schemes() {
    let cfg = SamplingConfig::default();
    let ops = [
        "x + w",
        "-w",
        "x + w + sin(t)",
        "x^2*w + x*vm^2 - xi*vm^3/3 + sin(x)",
        "tanh(x) + w + cos(t)",
    ];
    for text in ops {
        let op = SecondOrderOp::parse(text).unwrap();
        assert_eq!(
            check_helmholtz(&op, &cfg).unwrap().verdict,
            Verdict::Satisfied,
            "{text}"
        );
        let c = synthesize(&op, DEFAULT_QUAD_ORDER).unwrap();
        let r = verify_synthesis(&op, &c, &cfg).unwrap();
        assert_eq!(r.samples, 100);
        assert!(r.max_residual <= 1e-8, "{text}: {}", r.max_residual);
    }
}

#[test]
fn synthesized_couples_of_euler_lagrange_schemes_reproduce_them() {
    let cfg = SamplingConfig::default();
    let source = couple("exp(x/3)*v^2 + cos(t)*x", "x^2*v - v^4/12");
    let el = ElOperator(&source);
    let c = synthesize(&SecondOrderOp::parse("x + w").unwrap(), DEFAULT_QUAD_ORDER).unwrap();
    assert_eq!(
        verify_synthesis(&el, &source, &cfg).unwrap().verdict,
        Verdict::Satisfied
    );
    assert_eq!(verify_synthesis(&el, &c, &cfg).unwrap().verdict, Verdict::Violated);
}

#[test]
fn quadrature_is_exact_for_polynomial_bodies() {
    let mut s = Sampler::new(12);
    // ℓ = x^2·y gives L₋ = x^3·v/4; ℓ = x^2·z^3 gives L₊ = x^3·v^3/6
    type Closed = fn(f64, f64) -> f64;
    let cases: [(&str, usize, Closed, Closed); 2] = [
        ("x^2*vm", 2, |x, v| x.powi(3) * v / 4.0, |_, _| 0.0),
        ("x^2*vp^3", 3, |_, _| 0.0, |x, v| x.powi(3) * v.powi(3) / 6.0),
    ];
    for (text, order, minus, plus) in cases {
        let c = synthesize(&SecondOrderOp::parse(text).unwrap(), order).unwrap();
        for _ in 0..50 {
            let (x, v, t, xi) = (
                s.uniform(-2.0, 2.0),
                s.uniform(-3.0, 3.0),
                s.uniform(-1.0, 1.0),
                s.uniform(0.05, 0.5),
            );
            let (m, p) = (
                c.l_minus().value(x, v, t, xi).unwrap(),
                c.l_plus().value(x, v, t, xi).unwrap(),
            );
            assert!(
                (m - minus(x, v)).abs() <= 1e-12 * (1.0 + minus(x, v).abs()),
                "{text}: {m}"
            );
            assert!(
                (p - plus(x, v)).abs() <= 1e-12 * (1.0 + plus(x, v).abs()),
                "{text}: {p}"
            );
        }
    }
    // total degree 7 in (x, y, z, w): order 4 already matches order 32
    let op = SecondOrderOp::parse("x^3*vm^2*vp^2 - w*x^4*vp + vm^5 + 2*x").unwrap();
    let (low, high) = (synthesize(&op, 4).unwrap(), synthesize(&op, 32).unwrap());
    for _ in 0..50 {
        let (x, v, t, xi) = (
            s.uniform(-2.0, 2.0),
            s.uniform(-3.0, 3.0),
            s.uniform(-1.0, 1.0),
            s.uniform(0.05, 0.5),
        );
        for (a, b) in [(low.l_minus(), high.l_minus()), (a_plus(&low), a_plus(&high))] {
            let (u, w) = (a.value(x, v, t, xi).unwrap(), b.value(x, v, t, xi).unwrap());
            assert!((u - w).abs() <= 1e-12 * (1.0 + w.abs()), "{u} vs {w}");
        }
    }
}

fn a_plus(c: &LagrangianCouple) -> &LagrangianFn {
    c.l_plus()
}

#[test]
fn equivalent_couples_differ_by_a_null_couple() {
    let cfg = SamplingConfig::default();
    let hand = couple("(x^2 - v^2)/2", "0");
    let synth = synthesize(&SecondOrderOp::parse("x + w").unwrap(), DEFAULT_QUAD_ORDER).unwrap();
    assert_eq!(null_check(&hand.sub(&synth), &cfg).unwrap().verdict, NullVerdict::Null);
    assert_eq!(null_check(&synth.sub(&hand), &cfg).unwrap().verdict, NullVerdict::Null);
    let other = couple("(x^2 - v^2)/2 + x^3", "0");
    assert_eq!(
        null_check(&other.sub(&synth), &cfg).unwrap().verdict,
        NullVerdict::NotNull
    );
}

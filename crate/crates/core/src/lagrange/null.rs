use alloc::vec::Vec;

use super::{el_terms, LagrangianCouple};
use crate::error::{Error, EvalError, Result};
use crate::sampling::{self, Report, SampleOutcome, SamplingConfig, Verdict};
use crate::scalar::HyperDual;

/// Abscissae at which the time-only term is required not to depend on `x`.
pub const GAMMA_PROBES: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
/// Abscissa at which the time-only term is evaluated.
pub const GAMMA_PROBE_POINT: f64 = 1.0;

const SPLIT_TIMES: [f64; 3] = [-1.0, 0.0, 1.0];
const SPLIT_STEPS: [f64; 3] = [0.05, 0.1, 0.5];
const SPLIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullVerdict {
    Null,
    NotNull,
    Inconclusive,
}

impl NullVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            NullVerdict::Null => "Null",
            NullVerdict::NotNull => "NotNull",
            NullVerdict::Inconclusive => "Inconclusive",
        }
    }
}

impl From<Verdict> for NullVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Satisfied => NullVerdict::Null,
            Verdict::Violated => NullVerdict::NotNull,
            Verdict::Inconclusive => NullVerdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullReport {
    pub verdict: NullVerdict,
    /// Sampling of `|EL|` itself.
    pub report: Report,
}

/// Samples the Euler-Lagrange residual; a null couple has none.
pub fn null_check(c: &LagrangianCouple, cfg: &SamplingConfig) -> Result<NullReport> {
    let report = sampling::run(cfg, |q, _| {
        let rows = el_terms(c, q)?;
        Ok(SampleOutcome::from_rows(
            rows.into_iter().enumerate().map(|(i, (r, s))| (i + 1, r, s)),
        ))
    })?;
    Ok(NullReport {
        verdict: report.verdict.into(),
        report,
    })
}

/// The pair `(f, g)` of a null couple:
///
/// ```text
/// L₋(Q_p, (Δ₋Q)_p, t_p, h) + L₊(Q_{p-1}, (-Δ₊Q)_{p-1}, t_{p-1}, h)
///     = (f(Q_p, t_p, h) - f(Q_{p-1}, t_{p-1}, h))/h + g(t_p, h)
/// ```
pub trait NullPotential {
    fn f(&self, x: f64, t: f64, xi: f64) -> Result<f64, EvalError>;
    fn g(&self, t: f64, xi: f64) -> Result<f64, EvalError>;
}

/// `(f, g)` extracted from the two-point sum `s(x, y, t, ξ)` of a couple.
///
/// With `A(x, t) = s(x, 0, t) - s(0, 0, t)` and `B(y, t) = s(0, y, t)`, a
/// null couple has `s = A(x) + B(y)` and `γ(t) = A(x, t) + B(x, t + ξ)`
/// independent of `x`; then `f = ξ·A` and `g(t) = γ(t - ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDecomposition {
    couple: LagrangianCouple,
    residual_bound: f64,
}

impl NullDecomposition {
    pub fn couple(&self) -> &LagrangianCouple {
        &self.couple
    }

    /// Largest separability or `x`-dependence defect seen while building.
    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    pub fn a(&self, x: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
        Ok(self.couple.two_point(x, 0.0, t, xi)? - self.couple.two_point(0.0, 0.0, t, xi)?)
    }

    pub fn b(&self, y: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
        self.couple.two_point(0.0, y, t, xi)
    }

    /// `A(x, t) + B(x, t + ξ)`; constant in `x` for a null couple.
    pub fn gamma_at(&self, x: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
        Ok(self.a(x, t, xi)? + self.b(x, t + xi, xi)?)
    }

    pub fn gamma(&self, t: f64, xi: f64) -> Result<f64, EvalError> {
        self.gamma_at(GAMMA_PROBE_POINT, t, xi)
    }
}

impl NullPotential for NullDecomposition {
    fn f(&self, x: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
        Ok(xi * self.a(x, t, xi)?)
    }

    fn g(&self, t: f64, xi: f64) -> Result<f64, EvalError> {
        self.gamma(t - xi, xi)
    }
}

fn second_partials(c: &LagrangianCouple, x: f64, y: f64, t: f64, xi: f64) -> Result<[f64; 3], EvalError> {
    let at = |sx: [f64; 2], sy: [f64; 2]| {
        c.two_point(
            HyperDual::new(x, sx[0], sx[1], 0.0),
            HyperDual::new(y, sy[0], sy[1], 0.0),
            t,
            xi,
        )
        .map(|d| d.e12)
    };
    let xy = at([1.0, 0.0], [0.0, 1.0])?;
    let xx = at([1.0, 1.0], [0.0, 0.0])?;
    let yy = at([0.0, 0.0], [1.0, 1.0])?;
    Ok([xy, xx, yy])
}

/// Builds `(f, g)` for a null couple, checking on a fixed probe set that the
/// two-point sum separates and that `γ` does not depend on `x`.
pub fn null_decompose(c: &LagrangianCouple) -> Result<NullDecomposition> {
    let d = NullDecomposition {
        couple: c.clone(),
        residual_bound: 0.0,
    };
    let mut worst = 0.0f64;
    for &xi in &SPLIT_STEPS {
        for &t in &SPLIT_TIMES {
            for &x in &GAMMA_PROBES {
                for &y in &GAMMA_PROBES {
                    let [xy, xx, yy] = second_partials(c, x, y, t, xi)?;
                    if xy.abs() > SPLIT_TOL * (1.0 + xx.abs() + yy.abs()) {
                        return Err(Error::NotSeparable { residual: xy });
                    }
                    worst = worst.max(xy.abs());
                }
            }
            let reference = d.gamma(t, xi)?;
            for &x in &GAMMA_PROBES {
                let (a, b) = (d.a(x, t, xi)?, d.b(x, t + xi, xi)?);
                let deviation = (a + b - reference).abs();
                if deviation > SPLIT_TOL * (1.0 + a.abs() + b.abs()) {
                    return Err(Error::GammaDependsOnX { deviation });
                }
                worst = worst.max(deviation);
            }
        }
    }
    Ok(NullDecomposition {
        residual_bound: worst,
        ..d
    })
}

/// Checks the telescoping identity at `p = 1..=n`.
pub fn verify_null_decomposition<D: NullPotential + ?Sized>(
    c: &LagrangianCouple,
    d: &D,
    cfg: &SamplingConfig,
) -> Result<Report> {
    sampling::run(cfg, |q, _| {
        let (h, v, part) = (q.step(), q.values(), q.partition());
        let rows = (1..=q.steps())
            .map(|p| {
                let row = || -> Result<(usize, f64, f64), EvalError> {
                    let (t, t_prev) = (part.time(p), part.time(p - 1));
                    let vel = (v[p] - v[p - 1]) / h;
                    let lm = c.l_minus().value(v[p], vel, t, h)?;
                    let lp = c.l_plus().value(v[p - 1], vel, t_prev, h)?;
                    let (f, f_prev) = (d.f(v[p], t, h)?, d.f(v[p - 1], t_prev, h)?);
                    let g = d.g(t, h)?;
                    let lhs = lm + lp;
                    let rhs = (f - f_prev) / h + g;
                    let scale = lm.abs() + lp.abs() + (f.abs() + f_prev.abs()) / h + g.abs();
                    Ok((p, lhs - rhs, scale))
                };
                row().map_err(|e| Error::from(e).at(p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleOutcome::from_rows(rows))
    })
}

#[cfg(test)]
mod tests {
    use super::super::action;
    use super::*;
    use crate::sampling::Sampler;

    fn couple(m: &str, p: &str) -> LagrangianCouple {
        LagrangianCouple::parse(m, p).unwrap()
    }

    fn null_examples() -> [LagrangianCouple; 3] {
        [couple("v", "0"), couple("(x - xi*v/2)*v", "0"), couple("v + 1", "0")]
    }

    struct Perturbed<'a>(&'a NullDecomposition);

    impl NullPotential for Perturbed<'_> {
        fn f(&self, x: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
            Ok(self.0.f(x, t, xi)? + x * x * x)
        }
        fn g(&self, t: f64, xi: f64) -> Result<f64, EvalError> {
            self.0.g(t, xi)
        }
    }

    #[test]
    fn null_check_examples() {
        let cfg = SamplingConfig::default();
        for c in null_examples() {
            assert_eq!(
                null_check(&c, &cfg).unwrap().verdict,
                NullVerdict::Null,
                "{}",
                c.l_minus()
            );
        }
        let r = null_check(&couple("(x^2 - v^2)/2", "0"), &cfg).unwrap();
        assert_eq!(r.verdict, NullVerdict::NotNull);
        assert!(r.report.witness.is_some());
    }

    #[test]
    fn decompositions_match_hand_results() {
        let expected_f: [fn(f64) -> f64; 3] = [|x| x, |x| x * x / 2.0, |x| x];
        let expected_g = [0.0, 0.0, 1.0];
        let mut s = Sampler::new(3);
        for ((c, f), g) in null_examples().iter().zip(expected_f).zip(expected_g) {
            let d = null_decompose(c).unwrap();
            for _ in 0..20 {
                let (x, t, xi) = (s.uniform(-3.0, 3.0), s.uniform(-1.0, 1.0), s.uniform(0.05, 0.5));
                assert!((d.f(x, t, xi).unwrap() - f(x)).abs() < 1e-12);
                assert!((d.g(t, xi).unwrap() - g).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decompositions_verify_and_perturbation_fails() {
        let cfg = SamplingConfig::default();
        for c in null_examples() {
            let d = null_decompose(&c).unwrap();
            let r = verify_null_decomposition(&c, &d, &cfg).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied);
            assert!(r.max_residual <= 1e-10);
            let bad = verify_null_decomposition(&c, &Perturbed(&d), &cfg).unwrap();
            assert_eq!(bad.verdict, Verdict::Violated);
        }
    }

    #[test]
    fn identity_sums_to_the_action() {
        let c = couple("(x - xi*v/2)*v + sin(t)", "x*v + xi*v^2/2");
        let d = null_decompose(&c).unwrap();
        let q = Sampler::new(8).grid(&SamplingConfig::default());
        let (n, h) = (q.steps(), q.step());
        let part = q.partition();
        let g_sum: f64 = (1..=n).map(|p| d.g(part.time(p), h).unwrap()).sum();
        let expected = d.f(q[n], part.time(n), h).unwrap() - d.f(q[0], part.time(0), h).unwrap() + h * g_sum;
        let got = action(&c, &q).unwrap();
        assert!(
            (got - expected).abs() < 1e-10 * (1.0 + got.abs()),
            "{got} vs {expected}"
        );
    }

    #[test]
    fn non_null_couples_are_refused() {
        assert!(matches!(
            null_decompose(&couple("(x^2 - v^2)/2", "0")),
            Err(Error::NotSeparable { .. })
        ));
        // separable, but γ drifts with x
        assert!(matches!(
            null_decompose(&couple("x^2", "0")),
            Err(Error::GammaDependsOnX { .. })
        ));
    }
}

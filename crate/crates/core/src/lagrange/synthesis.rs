use alloc::sync::Arc;

use super::{LagrangianCouple, LagrangianFn, Provenance, Side};
use crate::error::{EvalError, Result};
use crate::fdeop::{SecondOrderOp, StencilOperator};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

pub const DEFAULT_QUAD_ORDER: usize = 32;

/// Couple built from a scheme by λ-integration of its reduced map
/// `ℓ(x, y, z, t, ξ) = P̄(x, y, z, (z - y)/ξ, t, ξ)`.
///
/// With anchors `(y₀, z₀)`, `ℓ` is split as `α(x, y) = ℓ(x, y, z₀)` and
/// `β(x, z) = ℓ(x, y₀, z) - ℓ(x, y₀, z₀)`, and
///
/// ```text
/// L₋(x, v) = x·∫₀¹ α(λx, λv) dλ,    L₊(x, v) = x·∫₀¹ β(λx, λv) dλ
/// ```
///
/// The integrals use a fixed Gauss-Legendre rule, so evaluation is generic
/// over the scalar type and derivatives pass through the quadrature sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedLagrangian {
    source: SecondOrderOp,
    rule: GaussLegendre,
    anchors: (f64, f64),
}

impl SynthesizedLagrangian {
    pub fn new(source: SecondOrderOp, quad_order: usize) -> Result<Self> {
        Ok(Self {
            source,
            rule: GaussLegendre::new(quad_order)?,
            anchors: (0.0, 0.0),
        })
    }

    pub fn with_anchors(mut self, y0: f64, z0: f64) -> Self {
        self.anchors = (y0, z0);
        self
    }

    pub fn source(&self) -> &SecondOrderOp {
        &self.source
    }

    pub fn quad_order(&self) -> usize {
        self.rule.order()
    }

    pub fn anchors(&self) -> (f64, f64) {
        self.anchors
    }

    pub fn reduced<S: Scalar>(&self, x: S, y: S, z: S, t: S, xi: S) -> Result<S, EvalError> {
        let w = (z.clone() - y.clone()) / xi.clone();
        self.source.apply(&[x, y, z, w, t, xi])
    }

    pub fn alpha<S: Scalar>(&self, x: S, y: S, t: S, xi: S) -> Result<S, EvalError> {
        self.reduced(x, y, S::constant(self.anchors.1), t, xi)
    }

    pub fn beta<S: Scalar>(&self, x: S, z: S, t: S, xi: S) -> Result<S, EvalError> {
        let y0 = S::constant(self.anchors.0);
        let z0 = S::constant(self.anchors.1);
        let full = self.reduced(x.clone(), y0.clone(), z, t.clone(), xi.clone())?;
        Ok(full - self.reduced(x, y0, z0, t, xi)?)
    }

    /// `L₋` or `L₊` at `[x, v, t, xi]`.
    pub fn eval<S: Scalar>(&self, side: Side, args: &[S; 4]) -> Result<S, EvalError> {
        let [x, v, t, xi] = args.clone();
        let mut acc = S::constant(0.0);
        for (node, weight) in self.rule.pairs() {
            let (xs, vs) = (x.scale(node), v.scale(node));
            let term = match side {
                Side::Minus => self.alpha(xs, vs, t.clone(), xi.clone())?,
                Side::Plus => self.beta(xs, vs, t.clone(), xi.clone())?,
            };
            acc = acc + term.scale(weight);
        }
        Ok(x * acc)
    }

    pub fn into_couple(self) -> LagrangianCouple {
        let shared = Arc::new(self);
        LagrangianCouple {
            l_minus: LagrangianFn::Synthesized(shared.clone(), Side::Minus),
            l_plus: LagrangianFn::Synthesized(shared.clone(), Side::Plus),
            provenance: Provenance::Synthesized(shared),
        }
    }
}

/// Couple whose Euler-Lagrange equation is `op`, provided `op` satisfies the
/// Helmholtz condition. Otherwise a couple is still returned but it generates
/// a different scheme.
pub fn synthesize(op: &SecondOrderOp, quad_order: usize) -> Result<LagrangianCouple> {
    Ok(SynthesizedLagrangian::new(op.clone(), quad_order)?.into_couple())
}

#[cfg(test)]
mod tests {
    use super::super::{el_residual, verify_synthesis};
    use super::*;
    use crate::error::Error;
    use crate::fdeop::eval_fde;
    use crate::sampling::{Sampler, SamplingConfig, Verdict};

    fn op(text: &str) -> SecondOrderOp {
        SecondOrderOp::parse(text).unwrap()
    }

    fn points() -> impl Iterator<Item = [f64; 4]> {
        let mut s = Sampler::new(11);
        (0..50).map(move |_| {
            [
                s.uniform(-2.0, 2.0),
                s.uniform(-40.0, 40.0),
                s.uniform(-1.0, 2.0),
                s.uniform(0.05, 0.5),
            ]
        })
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn rejects_order_zero() {
        assert_eq!(synthesize(&op("x + w"), 0), Err(Error::InvalidQuadOrder(0)));
    }

    #[test]
    fn oscillator_closed_forms() {
        let c = synthesize(&op("x + w"), DEFAULT_QUAD_ORDER).unwrap();
        for [x, v, t, xi] in points() {
            let m = c.l_minus().value(x, v, t, xi).unwrap();
            let p = c.l_plus().value(x, v, t, xi).unwrap();
            assert!(close(m, x * x / 2.0 - x * v / (2.0 * xi)), "{m}");
            assert!(close(p, x * v / (2.0 * xi)), "{p}");
        }
    }

    #[test]
    fn pure_second_difference_closed_forms() {
        let c = synthesize(&op("-w"), DEFAULT_QUAD_ORDER).unwrap();
        for [x, v, t, xi] in points() {
            assert!(close(c.l_minus().value(x, v, t, xi).unwrap(), x * v / (2.0 * xi)));
            assert!(close(c.l_plus().value(x, v, t, xi).unwrap(), -x * v / (2.0 * xi)));
        }
    }

    #[test]
    fn time_forcing_lands_in_the_minus_half() {
        let c = synthesize(&op("x + w + sin(t)"), DEFAULT_QUAD_ORDER).unwrap();
        for [x, v, t, xi] in points() {
            let m = x * x / 2.0 - x * v / (2.0 * xi) + x * libm::sin(t);
            assert!(close(c.l_minus().value(x, v, t, xi).unwrap(), m));
            assert!(close(c.l_plus().value(x, v, t, xi).unwrap(), x * v / (2.0 * xi)));
        }
    }

    #[test]
    fn round_trip_covers_boundary_indices() {
        for text in ["x + w", "-w", "x + w + sin(t)", "x^2*w + x*vm^2 - xi*vm^3/3 + sin(x)"] {
            let o = op(text);
            let c = synthesize(&o, DEFAULT_QUAD_ORDER).unwrap();
            let q = Sampler::new(5).grid(&SamplingConfig::default());
            let el = el_residual(&c, &q).unwrap();
            let scheme = eval_fde(&o, &q).unwrap();
            assert_eq!((el.first(), el.last()), (scheme.first(), scheme.last()));
            let r = verify_synthesis(&o, &c, &SamplingConfig::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{text}: {}", r.max_residual);
        }
    }

    #[test]
    fn non_variational_scheme_is_not_reproduced() {
        let o = op("x + (vm+vp)/2 + w");
        let c = synthesize(&o, DEFAULT_QUAD_ORDER).unwrap();
        let r = verify_synthesis(&o, &c, &SamplingConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn anchors_do_not_change_the_scheme() {
        let o = op("x^2*w + x*vm^2 - xi*vm^3/3");
        let shifted = SynthesizedLagrangian::new(o.clone(), 16)
            .unwrap()
            .with_anchors(0.7, -1.3)
            .into_couple();
        assert_eq!(shifted.synthesized().unwrap().anchors(), (0.7, -1.3));
        let r = verify_synthesis(&o, &shifted, &SamplingConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied);
    }
}

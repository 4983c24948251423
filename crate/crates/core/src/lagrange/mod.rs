//! Discrete Lagrangian couples `(L₋, L₊)`, their action and Euler-Lagrange
//! residual, synthesis from variational schemes, and null couples.
//!
//! Both halves are functions of `(x, v, t, ξ)`. The action over a grid is
//!
//! ```text
//! h·Σ_{p=1..n} L₋(Q_p, (Δ₋Q)_p, t_p, h) + h·Σ_{p=0..n-1} L₊(Q_p, (-Δ₊Q)_p, t_p, h)
//! ```

mod null;
mod synthesis;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, EvalError, ParseError, Result};
use crate::expr::{Expr, Vocabulary};
use crate::fdeop::{check_vocabulary, eval_fde, StencilOperator};
use crate::grid::{BoundaryClass, GridFn, IndexedSeq, Partition};
use crate::sampling::{self, Report, SampleOutcome, SamplingConfig};
use crate::scalar::{Dual, Jet, Scalar};

pub use null::{
    null_check, null_decompose, verify_null_decomposition, NullDecomposition, NullPotential, NullReport, NullVerdict,
    GAMMA_PROBES, GAMMA_PROBE_POINT,
};
pub use synthesis::{synthesize, SynthesizedLagrangian, DEFAULT_QUAD_ORDER};

/// Which half of a couple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

/// One half of a couple, evaluable in any [`Scalar`].
#[derive(Debug, Clone, PartialEq)]
pub enum LagrangianFn {
    Zero,
    /// Expression over `x, v, t, xi`.
    Expr(Expr),
    Synthesized(Arc<SynthesizedLagrangian>, Side),
    /// `Σ cᵢ·Lᵢ`.
    Combination(Vec<(f64, LagrangianFn)>),
}

impl LagrangianFn {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(LagrangianFn::Expr(Expr::parse(text, &Vocabulary::lagrangian())?))
    }

    pub fn from_expr(e: Expr) -> Result<Self> {
        check_vocabulary(&e, &Vocabulary::lagrangian())?;
        Ok(LagrangianFn::Expr(e))
    }

    /// Evaluates at `[x, v, t, xi]`.
    pub fn eval<S: Scalar>(&self, args: &[S; 4]) -> Result<S, EvalError> {
        match self {
            LagrangianFn::Zero => Ok(S::constant(0.0)),
            LagrangianFn::Expr(e) => e.eval_slots(args),
            LagrangianFn::Synthesized(l, side) => l.eval(*side, args),
            LagrangianFn::Combination(terms) => {
                let mut acc = S::constant(0.0);
                for (c, f) in terms {
                    acc = acc + f.eval(args)?.scale(*c);
                }
                Ok(acc)
            }
        }
    }

    pub fn value(&self, x: f64, v: f64, t: f64, xi: f64) -> Result<f64, EvalError> {
        self.eval(&[x, v, t, xi])
    }

    /// `(L, ∂L/∂x, ∂L/∂v)`.
    pub fn partials(&self, x: f64, v: f64, t: f64, xi: f64) -> Result<[f64; 3], EvalError> {
        let d = self.eval(&[
            Dual::<2>::variable(x, 0),
            Dual::variable(v, 1),
            Dual::constant(t),
            Dual::constant(xi),
        ])?;
        Ok([d.value, d.partials[0], d.partials[1]])
    }

    fn is_zero(&self) -> bool {
        matches!(self, LagrangianFn::Zero)
    }
}

impl fmt::Display for LagrangianFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagrangianFn::Zero => f.write_str("0"),
            LagrangianFn::Expr(e) => write!(f, "{e}"),
            LagrangianFn::Synthesized(l, side) => {
                let half = match side {
                    Side::Minus => "minus",
                    Side::Plus => "plus",
                };
                write!(f, "synthesized {half} half of `{}`", l.source().label())
            }
            LagrangianFn::Combination(terms) => {
                for (i, (c, t)) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{c:?}*({t})")?;
                }
                Ok(())
            }
        }
    }
}

/// How a couple came to be.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Explicit,
    Synthesized(Arc<SynthesizedLagrangian>),
    Combination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianCouple {
    l_minus: LagrangianFn,
    l_plus: LagrangianFn,
    provenance: Provenance,
}

impl LagrangianCouple {
    pub fn new(l_minus: LagrangianFn, l_plus: LagrangianFn) -> Self {
        Self {
            l_minus,
            l_plus,
            provenance: Provenance::Explicit,
        }
    }

    pub fn parse(l_minus: &str, l_plus: &str) -> Result<Self, ParseError> {
        Ok(Self::new(LagrangianFn::parse(l_minus)?, LagrangianFn::parse(l_plus)?))
    }

    pub fn zero() -> Self {
        Self::new(LagrangianFn::Zero, LagrangianFn::Zero)
    }

    pub fn l_minus(&self) -> &LagrangianFn {
        &self.l_minus
    }

    pub fn l_plus(&self) -> &LagrangianFn {
        &self.l_plus
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The source of a synthesized couple.
    pub fn synthesized(&self) -> Option<&SynthesizedLagrangian> {
        match &self.provenance {
            Provenance::Synthesized(s) => Some(s),
            _ => None,
        }
    }

    /// `self - other`, half by half.
    pub fn sub(&self, other: &LagrangianCouple) -> LagrangianCouple {
        let diff = |a: &LagrangianFn, b: &LagrangianFn| {
            LagrangianFn::Combination(alloc::vec![(1.0, a.clone()), (-1.0, b.clone())])
        };
        LagrangianCouple {
            l_minus: diff(&self.l_minus, &other.l_minus),
            l_plus: diff(&self.l_plus, &other.l_plus),
            provenance: Provenance::Combination,
        }
    }

    /// `L₋(x, (x-y)/ξ, t, ξ) + L₊(y, (x-y)/ξ, t-ξ, ξ)`: both halves evaluated on
    /// one grid step from `y` (at `t-ξ`) to `x` (at `t`).
    pub fn two_point<S: Scalar>(&self, x: S, y: S, t: f64, xi: f64) -> Result<S, EvalError> {
        let v = (x.clone() - y.clone()) / S::constant(xi);
        let m = self.l_minus.eval(&[x, v.clone(), S::constant(t), S::constant(xi)])?;
        let p = self.l_plus.eval(&[y, v, S::constant(t - xi), S::constant(xi)])?;
        Ok(m + p)
    }
}

fn action_generic<S: Scalar>(c: &LagrangianCouple, q: &[S], part: &Partition) -> Result<S> {
    let n = part.steps();
    let h = part.step();
    let hs = S::constant(h);
    let mut sum = S::constant(0.0);
    if !c.l_minus.is_zero() {
        for p in 1..=n {
            let v = (q[p].clone() - q[p - 1].clone()) / hs.clone();
            let args = [q[p].clone(), v, S::constant(part.time(p)), hs.clone()];
            sum = sum + c.l_minus.eval(&args).map_err(|e| Error::from(e).at(p))?;
        }
    }
    if !c.l_plus.is_zero() {
        for p in 0..n {
            let v = (q[p + 1].clone() - q[p].clone()) / hs.clone();
            let args = [q[p].clone(), v, S::constant(part.time(p)), hs.clone()];
            sum = sum + c.l_plus.eval(&args).map_err(|e| Error::from(e).at(p))?;
        }
    }
    Ok(sum * hs)
}

/// Discrete action of `c` along `q`.
pub fn action(c: &LagrangianCouple, q: &GridFn) -> Result<f64> {
    action_generic(c, q.values(), q.partition())
}

/// `D𝓛(Q)(W)` by seeding every `Q_p` along `W`.
pub fn directional_derivative(c: &LagrangianCouple, q: &GridFn, w: &GridFn) -> Result<f64> {
    q.check_same_partition(w)?;
    if !BoundaryClass::Zero1.contains(w) {
        return Err(Error::NotInBoundaryClass);
    }
    let seeded: Vec<Dual<1>> = q
        .values()
        .iter()
        .zip(w.values())
        .map(|(&a, &b)| Dual::with_partials(a, [b]))
        .collect();
    Ok(action_generic(c, &seeded, q.partition())?.partials[0])
}

/// Euler-Lagrange residual and the sum of magnitudes of its terms at
/// `p = 1..=n-1`.
pub fn el_terms(c: &LagrangianCouple, q: &GridFn) -> Result<Vec<(f64, f64)>> {
    let n = q.steps();
    let h = q.step();
    let v = q.values();
    let part = q.partition();
    let minus = (1..=n)
        .map(|p| {
            c.l_minus
                .partials(v[p], (v[p] - v[p - 1]) / h, part.time(p), h)
                .map_err(|e| Error::from(e).at(p))
        })
        .collect::<Result<Vec<_>>>()?;
    let plus = (0..n)
        .map(|p| {
            c.l_plus
                .partials(v[p], (v[p + 1] - v[p]) / h, part.time(p), h)
                .map_err(|e| Error::from(e).at(p))
        })
        .collect::<Result<Vec<_>>>()?;
    // minus[i] sits at p = i + 1, plus[i] at p = i
    Ok((1..n)
        .map(|p| {
            let (m, m_next) = (minus[p - 1], minus[p]);
            let (l, l_prev) = (plus[p], plus[p - 1]);
            let terms = [m[1], l[1], m[2] / h, -m_next[2] / h, -l[2] / h, l_prev[2] / h];
            let residual = m[1] + l[1] + (m[2] - m_next[2]) / h - (l[2] - l_prev[2]) / h;
            (residual, terms.iter().map(|t| t.abs()).sum())
        })
        .collect())
}

pub fn el_residual(c: &LagrangianCouple, q: &GridFn) -> Result<IndexedSeq> {
    Ok(IndexedSeq::new(
        1,
        el_terms(c, q)?.into_iter().map(|(r, _)| r).collect(),
    ))
}

/// Compares the scheme with the Euler-Lagrange residual of `c` at every
/// `p = 1..=n-1`, boundary indices included.
pub fn verify_synthesis<O: StencilOperator + ?Sized>(
    op: &O,
    c: &LagrangianCouple,
    cfg: &SamplingConfig,
) -> Result<Report> {
    sampling::run(cfg, |q, _| {
        let scheme = eval_fde(op, q)?;
        let el = el_terms(c, q)?;
        Ok(SampleOutcome::from_rows(
            scheme
                .iter()
                .zip(el)
                .map(|((p, s), (r, scale))| (p, s - r, s.abs() + scale)),
        ))
    })
}

/// The Euler-Lagrange equation of a couple as a stencil operator.
///
/// Neighbor values are recovered from the stencil as `x - ξ·vm` and
/// `x + ξ·vp`; the `w` slot is ignored.
#[derive(Debug, Clone, Copy)]
pub struct ElOperator<'a>(pub &'a LagrangianCouple);

impl ElOperator<'_> {
    fn partials_xv<S: Scalar>(f: &LagrangianFn, x: &S, v: &S, t: &S, xi: &S) -> Result<(S, S), EvalError> {
        let c = |s: &S| Jet::constant(s.clone());
        let var = |s: &S| Jet::variable(s.clone());
        let dx = f.eval(&[var(x), c(v), c(t), c(xi)])?.tangent;
        let dv = f.eval(&[c(x), var(v), c(t), c(xi)])?.tangent;
        Ok((dx, dv))
    }
}

impl StencilOperator for ElOperator<'_> {
    fn apply<S: Scalar>(&self, args: &[S; 6]) -> Result<S, EvalError> {
        let [x, vm, vp, _, t, xi] = args.clone();
        let q_prev = x.clone() - xi.clone() * vm.clone();
        let q_next = x.clone() + xi.clone() * vp.clone();
        let (t_prev, t_next) = (t.clone() - xi.clone(), t.clone() + xi.clone());
        let lm = &self.0.l_minus;
        let lp = &self.0.l_plus;
        let (mx, mv) = Self::partials_xv(lm, &x, &vm, &t, &xi)?;
        let (_, mv_next) = Self::partials_xv(lm, &q_next, &vp, &t_next, &xi)?;
        let (px, pv) = Self::partials_xv(lp, &x, &vp, &t, &xi)?;
        let (_, pv_prev) = Self::partials_xv(lp, &q_prev, &vm, &t_prev, &xi)?;
        Ok(mx + px + (mv - mv_next) / xi.clone() - (pv - pv_prev) / xi)
    }
}

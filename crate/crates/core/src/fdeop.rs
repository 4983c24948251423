//! Second-order finite-difference operators.
//!
//! An operator is a map `P̄(x, vm, vp, w, t, xi)`; on a grid it is applied at
//! every interior index `p = 1..=n-1` to the stencil
//! `(Q_p, (Δ₋Q)_p, (-Δ₊Q)_p, (-Δ₊∘Δ₋Q)_p, t_p, h)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, EvalError, ParseError, Result};
use crate::expr::{Expr, Node, Vocabulary};
use crate::grid::{GridFn, IndexedSeq};
use crate::scalar::{Dual, Scalar};

pub const X: usize = 0;
pub const VM: usize = 1;
pub const VP: usize = 2;
pub const W: usize = 3;
pub const T: usize = 4;
pub const XI: usize = 5;

/// Anything that can be evaluated on a stencil tuple `[x, vm, vp, w, t, xi]`.
pub trait StencilOperator {
    fn apply<S: Scalar>(&self, args: &[S; 6]) -> Result<S, EvalError>;
}

impl<O: StencilOperator + ?Sized> StencilOperator for &O {
    fn apply<S: Scalar>(&self, args: &[S; 6]) -> Result<S, EvalError> {
        (**self).apply(args)
    }
}

/// Expression-backed operator `P̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderOp {
    body: Expr,
    label: String,
}

impl SecondOrderOp {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let body = Expr::parse(text, &Vocabulary::scheme())?;
        Ok(Self {
            label: body.to_string(),
            body,
        })
    }

    pub fn from_expr(body: Expr) -> Result<Self> {
        check_vocabulary(&body, &Vocabulary::scheme())?;
        Ok(Self {
            label: body.to_string(),
            body,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl StencilOperator for SecondOrderOp {
    fn apply<S: Scalar>(&self, args: &[S; 6]) -> Result<S, EvalError> {
        self.body.eval_slots(args)
    }
}

/// Expression-backed continuous operator `Ō(x, v, w, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousOp {
    body: Expr,
}

impl ContinuousOp {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(Self {
            body: Expr::parse(text, &Vocabulary::continuous())?,
        })
    }

    pub fn from_expr(body: Expr) -> Result<Self> {
        check_vocabulary(&body, &Vocabulary::continuous())?;
        Ok(Self { body })
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }
}

pub(crate) fn check_vocabulary(e: &Expr, expected: &Vocabulary) -> Result<()> {
    if e.vocabulary() == expected {
        Ok(())
    } else {
        Err(Error::WrongVocabulary {
            expected: match expected.label() {
                "scheme" => "scheme",
                "continuous" => "continuous",
                "lagrangian" => "lagrangian",
                _ => "custom",
            },
            found: e.vocabulary().label().to_string(),
        })
    }
}

/// Arguments of `P̄` at one grid index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilArgs {
    pub x: f64,
    pub vm: f64,
    pub vp: f64,
    pub w: f64,
    pub t: f64,
    pub xi: f64,
}

impl StencilArgs {
    /// Builds the stencil from three consecutive grid values.
    pub fn from_values(q_prev: f64, q_curr: f64, q_next: f64, t: f64, h: f64) -> Self {
        let [x, vm, vp, w, t, xi] = stencil_scalars(q_prev, q_curr, q_next, t, h);
        Self { x, vm, vp, w, t, xi }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.vm, self.vp, self.w, self.t, self.xi]
    }

    pub fn eval<O: StencilOperator + ?Sized>(&self, op: &O) -> Result<f64, EvalError> {
        op.apply(&self.to_array())
    }
}

/// Stencil tuple in any scalar type. The formulas are exactly those of the
/// grid difference operators, so a seeded evaluation reproduces the plain
/// one bit for bit in its real part.
pub fn stencil_scalars<S: Scalar>(q_prev: S, q_curr: S, q_next: S, t: f64, h: f64) -> [S; 6] {
    let hs = S::constant(h);
    let vm = (q_curr.clone() - q_prev.clone()) / hs.clone();
    let vp = (q_next.clone() - q_curr.clone()) / hs.clone();
    let w = (q_next - S::constant(2.0) * q_curr.clone() + q_prev) / S::constant(h * h);
    [q_curr, vm, vp, w, S::constant(t), hs]
}

fn check_interior(q: &GridFn, p: usize, lo: usize, hi_from_end: usize) -> Result<()> {
    let n = q.steps();
    let hi = n - hi_from_end;
    if p < lo || p > hi {
        Err(Error::IndexOutOfRange {
            index: p,
            min: lo,
            max: hi,
        })
    } else {
        Ok(())
    }
}

pub fn stencil_args(q: &GridFn, p: usize) -> Result<StencilArgs> {
    check_interior(q, p, 1, 1)?;
    Ok(stencil_at(q, p))
}

pub(crate) fn stencil_at(q: &GridFn, p: usize) -> StencilArgs {
    let v = q.values();
    StencilArgs::from_values(v[p - 1], v[p], v[p + 1], q.partition().time(p), q.step())
}

/// `P^T(Q)` for `p = 1..=n-1`.
pub fn eval_fde<O: StencilOperator + ?Sized>(op: &O, q: &GridFn) -> Result<IndexedSeq> {
    let values = (1..q.steps())
        .map(|p| stencil_at(q, p).eval(op).map_err(|e| Error::from(e).at(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexedSeq::new(1, values))
}

/// Value and first partials of `P̄` in its four state slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub x: f64,
    pub vm: f64,
    pub vp: f64,
    pub w: f64,
}

pub fn partials_at<O: StencilOperator + ?Sized>(op: &O, args: &StencilArgs) -> Result<Partials, EvalError> {
    let a = args.to_array();
    let seeded: [Dual<4>; 6] = core::array::from_fn(|s| {
        if s < 4 {
            Dual::variable(a[s], s)
        } else {
            Dual::constant(a[s])
        }
    });
    let d = op.apply(&seeded)?;
    Ok(Partials {
        value: d.value,
        x: d.partials[X],
        vm: d.partials[VM],
        vp: d.partials[VP],
        w: d.partials[W],
    })
}

/// Partials of `P̄` at every interior stencil, indexed `1..=n-1`.
pub fn stencil_partials<O: StencilOperator + ?Sized>(op: &O, q: &GridFn) -> Result<Vec<Partials>> {
    (1..q.steps())
        .map(|p| partials_at(op, &stencil_at(q, p)).map_err(|e| Error::from(e).at(p)))
        .collect()
}

pub fn direct_discretize(o: &ContinuousOp, blend: f64) -> Result<SecondOrderOp> {
    if !(0.0..=1.0).contains(&blend) {
        return Err(Error::InvalidBlend(blend));
    }
    let velocity = Node::add(
        Node::mul(Node::Const(1.0 - blend), Node::Var(VM)),
        Node::mul(Node::Const(blend), Node::Var(VP)),
    );
    // continuous slots: x, v, w, t
    let body = o.body().substitute(Vocabulary::scheme(), |s| match s {
        0 => Node::Var(X),
        1 => velocity.clone(),
        2 => Node::Var(W),
        _ => Node::Var(T),
    });
    let label = format!("{} [blend {}]", o.body(), blend);
    Ok(SecondOrderOp { body, label })
}

pub(crate) fn frechet_from(part: &Partials, dir: &GridFn, p: usize) -> f64 {
    let h = dir.step();
    let w = dir.values();
    let dm = (w[p] - w[p - 1]) / h;
    let dp = (w[p + 1] - w[p]) / h;
    let dd = (w[p + 1] - 2.0 * w[p] + w[p - 1]) / (h * h);
    part.x * w[p] + part.vm * dm + part.vp * dp + part.w * dd
}

/// `DP_p(Q)(W)`: the directional derivative of row `p` of the scheme.
pub fn frechet_row<O: StencilOperator + ?Sized>(op: &O, q: &GridFn, p: usize, dir: &GridFn) -> Result<f64> {
    check_interior(q, p, 1, 1)?;
    q.check_same_partition(dir)?;
    let part = partials_at(op, &stencil_at(q, p)).map_err(|e| Error::from(e).at(p))?;
    Ok(frechet_from(&part, dir, p))
}

/// Closed-form adjoint row built from the partials at `p-1`, `p`, `p+1`.
pub(crate) fn adjoint_explicit_from(around: [&Partials; 3], z: &GridFn, p: usize) -> f64 {
    let h = z.step();
    let [prev, cur, next] = around;
    let zv = z.values();
    let dm_z = (zv[p] - zv[p - 1]) / h;
    let dp_z = (zv[p + 1] - zv[p]) / h;
    let dd_z = (zv[p + 1] - 2.0 * zv[p] + zv[p - 1]) / (h * h);

    // finite differences of the partial sequences at p
    let fwd_vm = (next.vm - cur.vm) / h;
    let bwd_vp = (cur.vp - prev.vp) / h;
    let dd_w = (next.w - 2.0 * cur.w + prev.w) / (h * h);
    let bwd_w = (cur.w - prev.w) / h;
    let fwd_w = (next.w - cur.w) / h;

    (cur.x - fwd_vm - bwd_vp + dd_w) * zv[p] + (bwd_w - prev.vp) * dm_z + (fwd_w - next.vm) * dp_z + cur.w * dd_z
}

/// `DP_p(Q)*(Z)` from the closed-form adjoint, `p = 2..=n-2`.
pub fn adjoint_row_explicit<O: StencilOperator + ?Sized>(op: &O, q: &GridFn, p: usize, z: &GridFn) -> Result<f64> {
    check_interior(q, p, 2, 2)?;
    q.check_same_partition(z)?;
    let part = |i: usize| partials_at(op, &stencil_at(q, i)).map_err(|e| Error::from(e).at(i));
    let (prev, cur, next) = (part(p - 1)?, part(p)?, part(p + 1)?);
    Ok(adjoint_explicit_from([&prev, &cur, &next], z, p))
}

/// Tridiagonal Jacobian of `Q ↦ P^T(Q)`: row `p = 1..=n-1` has nonzeros in
/// columns `p-1, p, p+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: Vec<[f64; 3]>,
}

impl Jacobian {
    /// Number of rows, `n - 1`.
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Entry `∂P_row/∂Q_col`; zero off the band. Rows are `1..=n-1`,
    /// columns `0..=n`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == 0 || row > self.rows.len() || col + 1 < row || col > row + 1 {
            return 0.0;
        }
        self.rows[row - 1][col + 1 - row]
    }

    /// Row `p` applied to `w`.
    pub fn apply_row(&self, p: usize, w: &[f64]) -> f64 {
        let r = &self.rows[p - 1];
        r[0] * w[p - 1] + r[1] * w[p] + r[2] * w[p + 1]
    }

    /// Column `p` of the transpose applied to `z`, summing over rows `1..=n-1`.
    pub fn apply_transpose_row(&self, p: usize, z: &[f64]) -> f64 {
        let lo = p.saturating_sub(1).max(1);
        let hi = (p + 1).min(self.rows.len());
        (lo..=hi).map(|r| self.entry(r, p) * z[r]).sum()
    }
}

/// Assembles the Jacobian by seeding the three stencil values of each row.
pub fn jacobian<O: StencilOperator + ?Sized>(op: &O, q: &GridFn) -> Result<Jacobian> {
    let v = q.values();
    let h = q.step();
    let rows = (1..q.steps())
        .map(|p| {
            let args = stencil_scalars(
                Dual::<3>::variable(v[p - 1], 0),
                Dual::variable(v[p], 1),
                Dual::variable(v[p + 1], 2),
                q.partition().time(p),
                h,
            );
            op.apply(&args).map(|d| d.partials).map_err(|e| Error::from(e).at(p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Jacobian { rows })
}

/// `DP_p(Q)*(Z)` as the transpose action of the assembled Jacobian,
/// `p = 2..=n-2`.
pub fn adjoint_row_oracle<O: StencilOperator + ?Sized>(op: &O, q: &GridFn, p: usize, z: &GridFn) -> Result<f64> {
    check_interior(q, p, 2, 2)?;
    q.check_same_partition(z)?;
    let jac = jacobian(op, q)?;
    Ok(jac.apply_transpose_row(p, z.values()))
}

//! The discrete Helmholtz condition, decided by sampling.
//!
//! A scheme is variational exactly when, at every interior `p`,
//!
//! ```text
//! [∂P̄/∂w(★_p) - ∂P̄/∂w(★_{p-1})]/h = ∂P̄/∂vm(★_p) + ∂P̄/∂vp(★_{p-1})
//! ```
//!
//! which is also equivalent to the Jacobian of `Q ↦ P^T(Q)` being symmetric
//! on its interior block. Both forms are checked here, plus the mixed partial
//! of the reduced map `ℓ(x, y, z) = P̄(x, y, z, (z - y)/ξ)` that makes the
//! synthesized Lagrangian split into backward and forward halves.

use alloc::vec::Vec;

use crate::error::{Error, EvalError, Result};
use crate::fdeop::{frechet_from, jacobian, stencil_at, stencil_partials, Partials, StencilArgs, StencilOperator};
use crate::grid::{BoundaryClass, GridFn, IndexedSeq};
use crate::sampling::{self, Report, SampleOutcome, SamplingConfig};
use crate::scalar::HyperDual;

fn residual_from(prev: &Partials, cur: &Partials, h: f64) -> f64 {
    (cur.w - prev.w) / h - cur.vm - prev.vp
}

fn residual_scale(prev: &Partials, cur: &Partials, h: f64) -> f64 {
    (cur.w.abs() + prev.w.abs()) / h + cur.vm.abs() + prev.vp.abs()
}

/// Defect of the Helmholtz identity at `p = 2..=n-1`.
pub fn helmholtz_residual<O: StencilOperator + ?Sized>(op: &O, q: &GridFn) -> Result<IndexedSeq> {
    let parts = stencil_partials(op, q)?;
    let h = q.step();
    let values = parts.windows(2).map(|w| residual_from(&w[0], &w[1], h)).collect();
    Ok(IndexedSeq::new(2, values))
}

pub fn check_helmholtz<O: StencilOperator + ?Sized>(op: &O, cfg: &SamplingConfig) -> Result<Report> {
    sampling::run(cfg, |q, _| {
        let parts = stencil_partials(op, q)?;
        let h = q.step();
        Ok(SampleOutcome::from_rows(parts.windows(2).enumerate().map(|(i, w)| {
            (i + 2, residual_from(&w[0], &w[1], h), residual_scale(&w[0], &w[1], h))
        })))
    })
}

/// Compares each Fréchet row with the transpose action of the Jacobian on a
/// random probe, rows `p = 2..=n-2`.
pub fn check_selfadjoint<O: StencilOperator + ?Sized>(op: &O, cfg: &SamplingConfig) -> Result<Report> {
    sampling::run(cfg, |q, sampler| {
        let z = sampler.direction(*q.partition(), BoundaryClass::Free);
        let rows = selfadjoint_rows(op, q, &z)?;
        Ok(SampleOutcome::from_rows(rows).map(|o| o.with_probe(z)))
    })
}

/// `(p, frechet_row - oracle, scale)` for `p = 2..=n-2`.
pub fn selfadjoint_rows<O: StencilOperator + ?Sized>(op: &O, q: &GridFn, z: &GridFn) -> Result<Vec<(usize, f64, f64)>> {
    q.check_same_partition(z)?;
    let parts = stencil_partials(op, q)?;
    let jac = jacobian(op, q)?;
    let n = q.steps();
    let zv = z.values();
    Ok((2..=n - 2)
        .map(|p| {
            let forward = frechet_from(&parts[p - 1], z, p);
            let adjoint = jac.apply_transpose_row(p, zv);
            let scale: f64 = (p - 1..=p + 1)
                .map(|r| (jac.entry(p, r) * zv[r]).abs() + (jac.entry(r, p) * zv[r]).abs())
                .sum();
            (p, forward - adjoint, scale)
        })
        .collect())
}

/// `∂²ℓ/∂y∂z` at `(x, vm, vp)`; the `w` of `args` is ignored and replaced by
/// its on-manifold value `(vp - vm)/ξ`.
pub fn separability_residual<O: StencilOperator + ?Sized>(op: &O, args: &StencilArgs) -> Result<f64, EvalError> {
    let xi = HyperDual::constant(args.xi);
    let y = HyperDual::new(args.vm, 1.0, 0.0, 0.0);
    let z = HyperDual::new(args.vp, 0.0, 1.0, 0.0);
    let w = (z - y) / xi;
    let out = op.apply(&[HyperDual::constant(args.x), y, z, w, HyperDual::constant(args.t), xi])?;
    Ok(out.e12)
}

/// Separability residual at every interior stencil of `q`.
pub fn separability_along<O: StencilOperator + ?Sized>(op: &O, q: &GridFn) -> Result<IndexedSeq> {
    let values = (1..q.steps())
        .map(|p| separability_residual(op, &stencil_at(q, p)).map_err(|e| Error::from(e).at(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexedSeq::new(1, values))
}

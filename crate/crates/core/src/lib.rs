//! Discrete Helmholtz toolkit for second-order finite-difference equations.
//!
//! Given a scheme `P̄(Q_p, Δ₋Q, -Δ₊Q, -Δ₊Δ₋Q, t_p, h) = 0` on a uniform grid,
//! this crate decides whether it is a discrete Euler-Lagrange equation,
//! builds a Lagrangian couple `(L₋, L₊)` generating it when it is, analyzes
//! null couples, and steps schemes forward in time.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod error;
pub mod expr;
pub mod fdeop;
pub mod grid;
pub mod helmholtz;
pub mod integrate;
pub mod lagrange;
pub mod quadrature;
pub mod sampling;
pub mod scalar;

pub use error::{Error, EvalError, ParseError, ParseErrorKind, Result};
pub use expr::{Expr, Func, Node, Vocabulary};
pub use fdeop::{ContinuousOp, SecondOrderOp, StencilArgs, StencilOperator};
pub use grid::{BoundaryClass, GridFn, IndexedSeq, Partition};
pub use lagrange::{LagrangianCouple, LagrangianFn, NullDecomposition, NullVerdict};
pub use sampling::{Report, SamplingConfig, Verdict, Witness};
pub use scalar::{Dual, HyperDual, Jet, Scalar};

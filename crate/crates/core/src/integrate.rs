//! Time stepping: solve `P̄(★_p) = 0` for `Q_{p+1}` given `Q_{p-1}, Q_p`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, EvalError, Result};
use crate::fdeop::{stencil_scalars, StencilOperator};
use crate::grid::{GridFn, Partition};
use crate::scalar::Dual;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitialGuess {
    /// `2·Q_p - Q_{p-1}`.
    #[default]
    LinearExtrapolation,
    /// `Q_p`.
    PreviousValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub initial_guess: InitialGuess,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            newton_max_iter: 50,
            initial_guess: InitialGuess::LinearExtrapolation,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig("newton tolerance must be positive"));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig("newton iteration cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("scheme does not determine the next value (d/dQ_next = {derivative:e})")]
    DerivativeVanishes { derivative: f64 },
    #[error("newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("non-finite value during newton iteration")]
    NonFinite,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub q_next: f64,
    /// Newton updates applied.
    pub iterations: usize,
    /// `|P̄|` at the returned value.
    pub residual: f64,
}

/// Relative size of the rounding floor on the residual.
const ROUNDING: f64 = 4.0 * f64::EPSILON;
const VANISHING: f64 = 1e-14;

/// Newton solve for `Q_{p+1}`.
///
/// Converges when `|P̄| ≤ tol·(1 + |Q_p|)` or, for badly scaled schemes, when
/// `|P̄|` is within the rounding floor of the stencil evaluation.
pub fn step<O: StencilOperator + ?Sized>(
    op: &O,
    q_prev: f64,
    q_curr: f64,
    t: f64,
    h: f64,
    cfg: &StepConfig,
) -> Result<StepOutcome, StepError> {
    let mut y = match cfg.initial_guess {
        InitialGuess::LinearExtrapolation => 2.0 * q_curr - q_prev,
        InitialGuess::PreviousValue => q_curr,
    };
    let mut iterations = 0;
    loop {
        let args = stencil_scalars(
            Dual::<3>::variable(q_prev, 0),
            Dual::variable(q_curr, 1),
            Dual::variable(y, 2),
            t,
            h,
        );
        let phi = op.apply(&args)?;
        let [d_prev, d_curr, d_next] = phi.partials;
        if !(phi.value.is_finite() && d_prev.is_finite() && d_curr.is_finite() && d_next.is_finite()) {
            return Err(StepError::NonFinite);
        }
        let scale = d_prev.abs() + d_curr.abs() + d_next.abs();
        if d_next.abs() <= VANISHING * scale {
            return Err(StepError::DerivativeVanishes { derivative: d_next });
        }
        let residual = phi.value.abs();
        let magnitude = 1.0 + q_prev.abs().max(q_curr.abs()).max(y.abs());
        if residual <= cfg.newton_tol * (1.0 + q_curr.abs()) || residual <= ROUNDING * scale * magnitude {
            return Ok(StepOutcome {
                q_next: y,
                iterations,
                residual,
            });
        }
        if iterations == cfg.newton_max_iter {
            return Err(StepError::MaxIterExceeded { iterations, residual });
        }
        y -= phi.value / d_next;
        if !y.is_finite() {
            return Err(StepError::NonFinite);
        }
        iterations += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStatus {
    Complete,
    /// Solving for `Q_{p+1}` failed.
    FailedAtStep(usize, StepError),
}

impl fmt::Display for TrajectoryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryStatus::Complete => f.write_str("Complete"),
            TrajectoryStatus::FailedAtStep(p, e) => write!(f, "FailedAtStep({p}): {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    partition: Partition,
    values: Vec<f64>,
    iterations: Vec<usize>,
    status: TrajectoryStatus,
}

impl Trajectory {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// `Q_0..=Q_k` for the last computed `k`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Newton updates per grid index; `0` for the two initial values.
    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn status(&self) -> &TrajectoryStatus {
        &self.status
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Complete
    }

    /// The full grid function, if every value was computed.
    pub fn grid_fn(&self) -> Result<GridFn> {
        GridFn::new(self.partition, self.values.clone())
    }
}

/// Steps `Q_0 = q0`, `Q_1 = q1` across `part`, stopping at the first failure.
pub fn run<O: StencilOperator + ?Sized>(
    op: &O,
    q0: f64,
    q1: f64,
    part: Partition,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = part.steps();
    let h = part.step();
    let mut values = Vec::with_capacity(n + 1);
    values.extend([q0, q1]);
    let mut iterations = vec![0, 0];
    let mut status = TrajectoryStatus::Complete;
    for p in 1..n {
        match step(op, values[p - 1], values[p], part.time(p), h, cfg) {
            Ok(s) => {
                values.push(s.q_next);
                iterations.push(s.iterations);
            }
            Err(e) => {
                status = TrajectoryStatus::FailedAtStep(p, e);
                break;
            }
        }
    }
    Ok(Trajectory {
        partition: part,
        values,
        iterations,
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: Trajectory,
    pub b: Trajectory,
    /// `|Q^A_p - Q^B_p|` over the indices both runs reached.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

pub fn compare<A: StencilOperator + ?Sized, B: StencilOperator + ?Sized>(
    op_a: &A,
    op_b: &B,
    q0: f64,
    q1: f64,
    part: Partition,
    cfg: &StepConfig,
) -> Result<Comparison> {
    let a = run(op_a, q0, q1, part, cfg)?;
    let b = run(op_b, q0, q1, part, cfg)?;
    let deviations: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(Comparison {
        a,
        b,
        deviations,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdeop::{direct_discretize, eval_fde, ContinuousOp, SecondOrderOp};

    fn op(text: &str) -> SecondOrderOp {
        SecondOrderOp::parse(text).unwrap()
    }

    fn cfg() -> StepConfig {
        StepConfig::default()
    }

    #[test]
    fn oscillator_step_closed_form() {
        let s = step(&op("x + w"), 1.0, 1.0, 0.0, 0.1, &cfg()).unwrap();
        assert!((s.q_next - 0.99).abs() < 1e-14);
        assert!(s.iterations <= 1);
    }

    #[test]
    fn unknown_not_determined() {
        for text in ["x", "0", "t*vm"] {
            let e = step(&op(text), 1.0, 0.5, 0.0, 0.1, &cfg()).unwrap_err();
            assert!(matches!(e, StepError::DerivativeVanishes { .. }), "{text}: {e:?}");
        }
        let t = run(&op("0"), 0.0, 1.0, Partition::new(0.0, 0.1, 10).unwrap(), &cfg()).unwrap();
        assert!(matches!(
            t.status(),
            TrajectoryStatus::FailedAtStep(1, StepError::DerivativeVanishes { .. })
        ));
        assert_eq!(t.values().len(), 2);
        assert!(t.grid_fn().is_err());
    }

    #[test]
    fn nonlinear_step_matches_bisection() {
        let o = op("x + w + vp^3");
        let (qp, qc, h) = (0.5, 0.5, 0.1);
        let phi = |y: f64| {
            let vp = (y - qc) / h;
            qc + (y - 2.0 * qc + qp) / (h * h) + vp * vp * vp
        };
        let (mut lo, mut hi) = (-10.0, 10.0);
        assert!(phi(lo) < 0.0 && phi(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let s = step(&o, qp, qc, 0.0, h, &cfg()).unwrap();
        assert!((s.q_next - 0.5 * (lo + hi)).abs() < 1e-10);
        let s = step(
            &o,
            qp,
            qc,
            0.0,
            h,
            &StepConfig {
                initial_guess: InitialGuess::PreviousValue,
                ..cfg()
            },
        )
        .unwrap();
        assert!((s.q_next - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let c = StepConfig {
            newton_max_iter: 1,
            ..cfg()
        };
        let e = step(&op("x + w + vp^3"), 0.5, 2.0, 0.0, 0.1, &c).unwrap_err();
        assert!(matches!(e, StepError::MaxIterExceeded { iterations: 1, .. }));
        assert!(StepConfig {
            newton_tol: 0.0,
            ..cfg()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn oscillator_trajectory_matches_recurrence() {
        let h = 0.1;
        let part = Partition::new(0.0, h, 100).unwrap();
        let t = run(&op("x + w"), 1.0, 1.0, part, &cfg()).unwrap();
        assert!(t.is_complete());
        let mut q = vec![1.0, 1.0];
        for p in 1..100 {
            q.push((2.0 - h * h) * q[p] - q[p - 1]);
        }
        for (a, b) in t.values().iter().zip(&q) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(t.iterations()[2..].iter().all(|&k| k <= 1));
    }

    #[test]
    fn friction_scheme_by_hand() {
        let o = direct_discretize(&ContinuousOp::parse("x + v + w").unwrap(), 0.5).unwrap();
        let h = 0.1;
        let part = Partition::new(0.0, h, 5).unwrap();
        let t = run(&o, 1.0, 0.9, part, &cfg()).unwrap();
        // Q_{p+1}(1/h² + 1/(2h)) = -Q_p + 2Q_p/h² - Q_{p-1}/h² + Q_{p-1}/(2h)
        let mut q = vec![1.0, 0.9];
        for p in 1..5 {
            let rhs = -q[p] + 2.0 * q[p] / (h * h) - q[p - 1] / (h * h) + q[p - 1] / (2.0 * h);
            q.push(rhs / (1.0 / (h * h) + 1.0 / (2.0 * h)));
        }
        for (a, b) in t.values().iter().zip(&q) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        let residual = eval_fde(&o, &t.grid_fn().unwrap()).unwrap();
        assert!(residual.max_abs() <= 1e-12 * (1.0 + 1.0));
    }

    #[test]
    fn compare_examples() {
        let part = Partition::new(0.0, 0.1, 50).unwrap();
        let c = compare(&op("x + w"), &op("x + w"), 1.0, 0.99, part, &cfg()).unwrap();
        assert_eq!(c.max_deviation, 0.0);
        assert_eq!(c.deviations.len(), 51);
        let sine = ContinuousOp::parse("x + sin(v)*w").unwrap();
        let b0 = direct_discretize(&sine, 0.0).unwrap();
        let b1 = direct_discretize(&sine, 1.0).unwrap();
        let c = compare(&b0, &b1, 1.0, 0.9, part, &cfg()).unwrap();
        assert!(c.max_deviation > 1e-3, "{}", c.max_deviation);
    }
}

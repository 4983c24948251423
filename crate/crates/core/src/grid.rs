//! Uniform partitions, grid functions and the backward/forward difference
//! operators.
//!
//! Sign convention: `delta_plus` is `(Q_p - Q_{p+1})/h`, so the usual forward
//! quotient is its negation. The centered second difference is
//! `-Δ₊∘Δ₋`.

use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};

/// Smallest admissible number of steps.
pub const MIN_STEPS: usize = 4;

/// Uniform time grid `t_p = t0 + p·h`, `p = 0..=n`. Times are derived, never
/// stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    t0: f64,
    h: f64,
    n: usize,
}

impl Partition {
    pub fn new(t0: f64, h: f64, n: usize) -> Result<Self> {
        if n < MIN_STEPS {
            return Err(Error::InvalidPartition("at least 4 steps are required"));
        }
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::InvalidPartition("step must be positive and finite"));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidPartition("start time must be finite"));
        }
        Ok(Self { t0, h, n })
    }

    /// The partition of `[a, b]` into `n` equal steps.
    pub fn cover(a: f64, b: f64, n: usize) -> Result<Self> {
        if a >= b || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidPartition("interval is empty"));
        }
        Self::new(a, (b - a) / n as f64, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Number of steps (the grid has `n + 1` points).
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn time(&self, p: usize) -> f64 {
        self.t0 + p as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|p| self.time(p))
    }

    /// Same grid started one step later.
    pub fn shift(&self) -> Partition {
        Partition {
            t0: self.time(1),
            ..*self
        }
    }
}

/// Real values `Q_0..=Q_n` on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    partition: Partition,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(partition: Partition, values: Vec<f64>) -> Result<Self> {
        let expected = partition.steps() + 1;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { partition, values })
    }

    pub fn from_fn(partition: Partition, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let values = (0..=partition.steps()).map(|p| f(p, partition.time(p))).collect();
        Self { partition, values }
    }

    pub fn zeros(partition: Partition) -> Self {
        Self::from_fn(partition, |_, _| 0.0)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn step(&self) -> f64 {
        self.partition.step()
    }

    pub fn steps(&self) -> usize {
        self.partition.steps()
    }

    /// `Q + s·D` on the shared partition.
    pub fn axpy(&self, s: f64, dir: &GridFn) -> Result<GridFn> {
        self.check_same_partition(dir)?;
        let values = self.values.iter().zip(&dir.values).map(|(a, b)| a + s * b).collect();
        Ok(GridFn {
            partition: self.partition,
            values,
        })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFn) -> Result<GridFn> {
        self.check_same_partition(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(GridFn {
            partition: self.partition,
            values,
        })
    }

    pub fn check_same_partition(&self, other: &GridFn) -> Result<()> {
        if self.partition == other.partition {
            Ok(())
        } else {
            Err(Error::PartitionMismatch)
        }
    }

    /// Drops `Q_0`, appends a zero and moves the partition one step forward.
    pub fn shift(&self) -> GridFn {
        let mut values: Vec<f64> = self.values[1..].to_vec();
        values.push(0.0);
        GridFn {
            partition: self.partition.shift(),
            values,
        }
    }

    pub fn is_in(&self, class: BoundaryClass) -> bool {
        class.contains(self)
    }
}

impl Index<usize> for GridFn {
    type Output = f64;
    fn index(&self, p: usize) -> &f64 {
        &self.values[p]
    }
}

/// Boundary conditions on variations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Free,
    /// `W_0 = W_n = 0`.
    Zero1,
    /// `W_0 = W_1 = W_{n-1} = W_n = 0`.
    Zero2,
}

impl BoundaryClass {
    pub fn contains(self, w: &GridFn) -> bool {
        let v = w.values();
        let n = w.steps();
        match self {
            BoundaryClass::Free => true,
            BoundaryClass::Zero1 => v[0] == 0.0 && v[n] == 0.0,
            BoundaryClass::Zero2 => v[0] == 0.0 && v[1] == 0.0 && v[n - 1] == 0.0 && v[n] == 0.0,
        }
    }

    /// Zeroes the entries this class pins.
    pub fn project(self, w: &mut [f64]) {
        let n = w.len() - 1;
        match self {
            BoundaryClass::Free => {}
            BoundaryClass::Zero1 => {
                w[0] = 0.0;
                w[n] = 0.0;
            }
            BoundaryClass::Zero2 => {
                w[0] = 0.0;
                w[1] = 0.0;
                w[n - 1] = 0.0;
                w[n] = 0.0;
            }
        }
    }
}

/// A sequence that knows its index range: entries `first..first+len`.
///
/// Difference operators map `ℝ^{n+1}` onto sequences with shifted ranges; the
/// sequence is indexed by the grid index, never by vector position.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedSeq {
    first: usize,
    values: Vec<f64>,
}

impl IndexedSeq {
    pub fn new(first: usize, values: Vec<f64>) -> Self {
        Self { first, values }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    /// Last valid index. Panics on an empty sequence.
    pub fn last(&self) -> usize {
        self.first + self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, p: usize) -> Option<f64> {
        p.checked_sub(self.first).and_then(|i| self.values.get(i)).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> core::ops::Range<usize> {
        self.first..self.first + self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices().zip(self.values.iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for IndexedSeq {
    type Output = f64;
    fn index(&self, p: usize) -> &f64 {
        assert!(
            p >= self.first && p < self.first + self.values.len(),
            "index {p} outside {:?}",
            self.indices()
        );
        &self.values[p - self.first]
    }
}

/// `(Q_p - Q_{p-1})/h` for `p = 1..=n`.
pub fn delta_minus(q: &GridFn) -> IndexedSeq {
    let h = q.step();
    let v = q.values();
    IndexedSeq::new(1, v.windows(2).map(|w| (w[1] - w[0]) / h).collect())
}

/// `(Q_p - Q_{p+1})/h` for `p = 0..=n-1`.
pub fn delta_plus(q: &GridFn) -> IndexedSeq {
    let h = q.step();
    let v = q.values();
    IndexedSeq::new(0, v.windows(2).map(|w| (w[0] - w[1]) / h).collect())
}

/// `(Q_{p+1} - 2Q_p + Q_{p-1})/h²` for `p = 1..=n-1`.
pub fn second_diff(q: &GridFn) -> IndexedSeq {
    let h = q.step();
    let v = q.values();
    IndexedSeq::new(1, v.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]) / (h * h)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(h: f64, values: &[f64]) -> GridFn {
        GridFn::new(Partition::new(0.0, h, values.len() - 1).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn cover_unit_interval() {
        let p = Partition::cover(0.0, 1.0, 4).unwrap();
        assert_eq!(p.t0(), 0.0);
        assert_eq!(p.step(), 0.25);
        assert_eq!(p.times().collect::<Vec<_>>(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(p.time(4) <= 1.0 && 1.0 - p.time(4) < p.step());
    }

    #[test]
    fn cover_rejects_bad_input() {
        assert!(Partition::cover(0.0, 1.0, 3).is_err());
        assert!(Partition::cover(2.0, 2.0, 10).is_err());
        assert!(Partition::cover(3.0, 2.0, 10).is_err());
        assert!(Partition::new(0.0, 0.0, 10).is_err());
        assert!(Partition::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn grid_length_must_match() {
        let p = Partition::new(0.0, 1.0, 4).unwrap();
        assert_eq!(
            GridFn::new(p, vec![0.0; 4]).unwrap_err(),
            Error::LengthMismatch { expected: 5, found: 4 }
        );
    }

    #[test]
    fn backward_differences() {
        let d = delta_minus(&grid(1.0, &[0.0, 1.0, 2.0, 3.0, 4.0]));
        assert_eq!((d.first(), d.values()), (1, &[1.0, 1.0, 1.0, 1.0][..]));
        assert!(delta_minus(&grid(0.3, &[2.0; 6])).values().iter().all(|&v| v == 0.0));
        let d = delta_minus(&grid(0.5, &[0.0, 1.0, 3.0, 6.0, 10.0]));
        assert_eq!(d.values(), &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(d[4], 8.0);
        assert_eq!(d.get(0), None);
    }

    #[test]
    fn forward_differences_carry_the_sign() {
        let d = delta_plus(&grid(1.0, &[0.0, 1.0, 2.0, 3.0, 4.0]));
        assert_eq!((d.first(), d.values()), (0, &[-1.0, -1.0, -1.0, -1.0][..]));
        assert!(delta_plus(&grid(0.3, &[2.0; 6])).values().iter().all(|&v| v == 0.0));
        let d = delta_plus(&grid(0.5, &[0.0, 1.0, 3.0, 6.0, 10.0]));
        assert_eq!(d.values(), &[-2.0, -4.0, -6.0, -8.0]);
        assert_eq!(d.get(4), None);
    }

    #[test]
    fn centered_second_difference() {
        let lin = grid(0.5, &[1.0, 1.5, 2.0, 2.5, 3.0]);
        assert!(second_diff(&lin).values().iter().all(|&v| v == 0.0));
        let d = second_diff(&grid(1.0, &[0.0, 0.0, 1.0, 0.0, 0.0]));
        assert_eq!((d.first(), d.values()), (1, &[1.0, -2.0, 1.0][..]));
    }

    #[test]
    fn second_difference_is_minus_forward_of_backward() {
        let q = grid(0.2, &[0.3, -1.2, 0.7, 2.2, -0.4, 0.9]);
        let dm = delta_minus(&q);
        let h = q.step();
        let composed: Vec<f64> = (1..q.steps()).map(|p| -((dm[p] - dm[p + 1]) / h)).collect();
        for (a, b) in composed.iter().zip(second_diff(&q).values()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn shifting() {
        let q = grid(1.0, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let s = q.shift();
        assert_eq!(s.values(), &[2.0, 3.0, 4.0, 5.0, 0.0]);
        assert_eq!(s.partition(), &Partition::new(1.0, 1.0, 4).unwrap());
        assert_eq!(s.shift().values(), &[3.0, 4.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn boundary_classes() {
        let w = grid(1.0, &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(w.is_in(BoundaryClass::Zero1) && w.is_in(BoundaryClass::Zero2));
        let w = grid(1.0, &[0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(w.is_in(BoundaryClass::Zero1) && !w.is_in(BoundaryClass::Zero2));
        let mut v = vec![1.0; 6];
        BoundaryClass::Zero2.project(&mut v);
        assert_eq!(v, [0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }
}

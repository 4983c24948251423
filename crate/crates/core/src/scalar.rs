//! Number types the expression evaluator runs over.
//!
//! `f64` gives plain values, [`Dual`] carries exact first partials along up to
//! `N` seeded directions, and [`HyperDual`] carries two first-order slots plus
//! the mixed second-order slot.

use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the expression evaluator.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether the type propagates derivatives (affects domain checks at
    /// points where a function is finite but not differentiable).
    const DIFFERENTIATES: bool;

    fn constant(c: f64) -> Self;
    /// The real part.
    fn value(&self) -> f64;

    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn tanh(&self) -> Self;

    /// Non-negative integer power by repeated squaring.
    fn powi(&self, n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(1.0);
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn scale(&self, c: f64) -> Self {
        self.clone() * Self::constant(c)
    }
}

impl Scalar for f64 {
    const DIFFERENTIATES: bool = false;

    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        libm::sin(*self)
    }
    fn cos(&self) -> Self {
        libm::cos(*self)
    }
    fn tan(&self) -> Self {
        libm::tan(*self)
    }
    fn exp(&self) -> Self {
        libm::exp(*self)
    }
    fn ln(&self) -> Self {
        libm::log(*self)
    }
    fn sqrt(&self) -> Self {
        libm::sqrt(*self)
    }
    fn tanh(&self) -> Self {
        libm::tanh(*self)
    }
}

/// Forward-mode dual number with `N` infinitesimal directions.
#[derive(Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub value: f64,
    pub partials: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            partials: [0.0; N],
        }
    }

    /// A variable seeded with unit derivative along direction `dir`.
    pub fn variable(value: f64, dir: usize) -> Self {
        let mut partials = [0.0; N];
        partials[dir] = 1.0;
        Self { value, partials }
    }

    pub fn with_partials(value: f64, partials: [f64; N]) -> Self {
        Self { value, partials }
    }

    /// Applies a scalar function with value `f` and derivative `df` at the
    /// real part.
    #[inline]
    fn chain(&self, f: f64, df: f64) -> Self {
        let mut partials = self.partials;
        for d in partials.iter_mut() {
            *d *= df;
        }
        Self { value: f, partials }
    }
}

impl<const N: usize> fmt::Debug for Dual<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({:?}, {:?})", self.value, self.partials)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for (a, b) in self.partials.iter_mut().zip(rhs.partials) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut partials = [0.0; N];
        for (i, d) in partials.iter_mut().enumerate() {
            *d = self.partials[i] * rhs.value + self.value * rhs.partials[i];
        }
        Self {
            value: self.value * rhs.value,
            partials,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        let mut partials = [0.0; N];
        for (i, d) in partials.iter_mut().enumerate() {
            *d = (self.partials[i] - value * rhs.partials[i]) / rhs.value;
        }
        Self { value, partials }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.value = -self.value;
        for d in self.partials.iter_mut() {
            *d = -*d;
        }
        self
    }
}

impl<const N: usize> Scalar for Dual<N> {
    const DIFFERENTIATES: bool = true;

    fn constant(c: f64) -> Self {
        Dual::constant(c)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn sin(&self) -> Self {
        self.chain(libm::sin(self.value), libm::cos(self.value))
    }
    fn cos(&self) -> Self {
        self.chain(libm::cos(self.value), -libm::sin(self.value))
    }
    fn tan(&self) -> Self {
        let t = libm::tan(self.value);
        self.chain(t, 1.0 + t * t)
    }
    fn exp(&self) -> Self {
        let e = libm::exp(self.value);
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(libm::log(self.value), 1.0 / self.value)
    }
    fn sqrt(&self) -> Self {
        let s = libm::sqrt(self.value);
        self.chain(s, 0.5 / s)
    }
    fn tanh(&self) -> Self {
        let t = libm::tanh(self.value);
        self.chain(t, 1.0 - t * t)
    }
    fn scale(&self, c: f64) -> Self {
        self.chain(self.value * c, c)
    }
}

/// Hyper-dual number `v + a·e1 + b·e2 + m·e1e2` with `e1² = e2² = 0`.
///
/// Seeding `e1` on one variable and `e2` on another yields the exact mixed
/// second partial in `m`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct HyperDual {
    pub value: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            e1: 0.0,
            e2: 0.0,
            e12: 0.0,
        }
    }

    pub fn new(value: f64, e1: f64, e2: f64, e12: f64) -> Self {
        Self { value, e1, e2, e12 }
    }

    /// `f(v + ...)` given `f(v)`, `f'(v)` and `f''(v)`.
    #[inline]
    fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        Self {
            value: f,
            e1: df * self.e1,
            e2: df * self.e2,
            e12: df * self.e12 + d2f * self.e1 * self.e2,
        }
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self::new(self.value + r.value, self.e1 + r.e1, self.e2 + r.e2, self.e12 + r.e12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self::new(self.value - r.value, self.e1 - r.e1, self.e2 - r.e2, self.e12 - r.e12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.value * r.value,
            self.e1 * r.value + self.value * r.e1,
            self.e2 * r.value + self.value * r.e2,
            self.e12 * r.value + self.e1 * r.e2 + self.e2 * r.e1 + self.value * r.e12,
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        // self * (1/r), with 1/x having derivatives -1/x², 2/x³
        let inv = 1.0 / r.value;
        let recip = r.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.e1, -self.e2, -self.e12)
    }
}

impl Scalar for HyperDual {
    const DIFFERENTIATES: bool = true;

    fn constant(c: f64) -> Self {
        HyperDual::constant(c)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn sin(&self) -> Self {
        let (s, c) = (libm::sin(self.value), libm::cos(self.value));
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = (libm::sin(self.value), libm::cos(self.value));
        self.chain(c, -s, -c)
    }
    fn tan(&self) -> Self {
        let t = libm::tan(self.value);
        let d = 1.0 + t * t;
        self.chain(t, d, 2.0 * t * d)
    }
    fn exp(&self) -> Self {
        let e = libm::exp(self.value);
        self.chain(e, e, e)
    }
    fn ln(&self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(libm::log(self.value), inv, -inv * inv)
    }
    fn sqrt(&self) -> Self {
        let s = libm::sqrt(self.value);
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }
    fn tanh(&self) -> Self {
        let t = libm::tanh(self.value);
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }
    fn scale(&self, c: f64) -> Self {
        Self::new(self.value * c, self.e1 * c, self.e2 * c, self.e12 * c)
    }
}

/// First-order jet over another scalar: `value + tangent·ε`.
///
/// Nesting lets a derivative be taken inside a computation that is itself
/// being differentiated, e.g. `Jet<Dual<3>>`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Jet<S> {
    pub value: S,
    pub tangent: S,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(value: S) -> Self {
        Self {
            value,
            tangent: S::constant(0.0),
        }
    }

    pub fn variable(value: S) -> Self {
        Self {
            value,
            tangent: S::constant(1.0),
        }
    }

    #[inline]
    fn chain(&self, f: S, df: S) -> Self {
        Self {
            value: f,
            tangent: df * self.tangent.clone(),
        }
    }
}

impl<S: Scalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            tangent: self.tangent + o.tangent,
        }
    }
}

impl<S: Scalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            value: self.value - o.value,
            tangent: self.tangent - o.tangent,
        }
    }
}

impl<S: Scalar> Mul for Jet<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            tangent: self.tangent * o.value.clone() + self.value.clone() * o.tangent,
            value: self.value * o.value,
        }
    }
}

impl<S: Scalar> Div for Jet<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let value = self.value / o.value.clone();
        Self {
            tangent: (self.tangent - value.clone() * o.tangent) / o.value,
            value,
        }
    }
}

impl<S: Scalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: -self.value,
            tangent: -self.tangent,
        }
    }
}

impl<S: Scalar> Scalar for Jet<S> {
    const DIFFERENTIATES: bool = true;

    fn constant(c: f64) -> Self {
        Jet::constant(S::constant(c))
    }
    fn value(&self) -> f64 {
        self.value.value()
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn tan(&self) -> Self {
        let t = self.value.tan();
        self.chain(t.clone(), S::constant(1.0) + t.clone() * t)
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), S::constant(1.0) / self.value.clone())
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s.clone(), S::constant(0.5) / s)
    }
    fn tanh(&self) -> Self {
        let t = self.value.tanh();
        self.chain(t.clone(), S::constant(1.0) - t.clone() * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn dual_unary_derivatives_match_central_differences() {
        let x = 0.7;
        let d = Dual::<1>::variable(x, 0);
        type Case = (Dual<1>, fn(f64) -> f64);
        let cases: [Case; 7] = [
            (d.sin(), libm::sin),
            (d.cos(), libm::cos),
            (d.tan(), libm::tan),
            (d.exp(), libm::exp),
            (d.ln(), libm::log),
            (d.sqrt(), libm::sqrt),
            (d.tanh(), libm::tanh),
        ];
        for (got, f) in cases {
            assert!((got.partials[0] - fd(f, x)).abs() < 1e-8);
            assert_eq!(got.value, f(x));
        }
    }

    #[test]
    fn hyperdual_second_derivative_of_unary() {
        // seeding both slots on the same variable gives f''
        let x = 0.4;
        let h = HyperDual::new(x, 1.0, 1.0, 0.0);
        let s = h.sin();
        assert!((s.e12 + libm::sin(x)).abs() < 1e-15);
        let q = h / (h * h + HyperDual::constant(1.0));
        // d²/dx² x/(x²+1) = 2x(x²-3)/(x²+1)³
        let exact = 2.0 * x * (x * x - 3.0) / libm::pow(x * x + 1.0, 3.0);
        assert!((q.e12 - exact).abs() < 1e-13);
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let d = Dual::<1>::variable(1.3, 0);
        let p = d.powi(5);
        assert!((p.value - libm::pow(1.3, 5.0)).abs() < 1e-12);
        assert!((p.partials[0] - 5.0 * libm::pow(1.3, 4.0)).abs() < 1e-12);
        assert_eq!(d.powi(0).value, 1.0);
        assert_eq!(d.powi(0).partials[0], 0.0);
    }

    #[test]
    fn nested_jet_gives_second_derivatives() {
        // f(x, y) = sin(x)·y²; inner Dual on y, outer jet on x
        let (x, y) = (0.8, -1.3);
        let f = |a: Jet<Dual<1>>, b: Jet<Dual<1>>| a.sin() * b * b;
        let out = f(Jet::variable(Dual::constant(x)), Jet::constant(Dual::variable(y, 0)));
        assert!((out.tangent.value - libm::cos(x) * y * y).abs() < 1e-15);
        assert!((out.tangent.partials[0] - 2.0 * libm::cos(x) * y).abs() < 1e-15);
        let q = Jet::variable(0.5f64) / (Jet::variable(0.5f64).exp() + Jet::constant(1.0));
        let exact = (libm::exp(0.5) + 1.0 - 0.5 * libm::exp(0.5)) / libm::pow(libm::exp(0.5) + 1.0, 2.0);
        assert!((q.tangent - exact).abs() < 1e-15);
        for (got, want) in [
            (
                Jet::variable(0.3f64).tan().tangent,
                1.0 / libm::pow(libm::cos(0.3), 2.0),
            ),
            (Jet::variable(0.3f64).ln().tangent, 1.0 / 0.3),
            (Jet::variable(0.3f64).sqrt().tangent, 0.5 / libm::sqrt(0.3)),
            (
                Jet::variable(0.3f64).tanh().tangent,
                1.0 - libm::pow(libm::tanh(0.3), 2.0),
            ),
            (Jet::variable(0.3f64).cos().tangent, -libm::sin(0.3)),
        ] {
            assert!((got - want).abs() < 1e-14);
        }
    }
}

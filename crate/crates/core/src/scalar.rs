//! Generic scalar arithmetic: plain `f64` and fixed-width dual numbers.
//!
//! Every numerical kernel in this crate is written against the [`Scalar`]
//! trait. Instantiated with `f64` it is an ordinary simulation; instantiated
//! with [`Dual<N>`] it propagates `N` directional derivatives (tangents)
//! through the identical sequence of operations, which is how gradients are
//! obtained through the adaptive integrator (step-size decisions read only
//! the value lane, so the dual sweep follows the exact primal step sequence).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Scalar abstraction over `f64` and dual numbers.
///
/// The `*_f64` mixed operators let generic code combine state variables with
/// plain parameter constants without lifting them first.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    fn from_f64(x: f64) -> Self;
    /// Value lane (the primal part for duals).
    fn value(self) -> f64;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn asinh(self) -> Self;
    fn tanh(self) -> Self;
    fn erf(self) -> Self;
    /// Real power `self^p`; assumes a positive base in generic code.
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    /// `max(self, floor)` with a hard zero tangent on the clamped branch.
    fn max_f64(self, floor: f64) -> Self {
        if self.value() >= floor {
            self
        } else {
            Self::from_f64(floor)
        }
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn asinh(self) -> Self {
        f64::asinh(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Forward-mode dual number with `N` tangent lanes.
#[derive(Clone, Copy)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub dx: [f64; N],
}

/// Default tangent width used by the gradient driver.
pub const LANES: usize = 8;
pub type Dual8 = Dual<LANES>;

impl<const N: usize> Dual<N> {
    #[inline]
    pub fn constant(re: f64) -> Self {
        Dual { re, dx: [0.0; N] }
    }

    /// Variable seeded with a unit tangent in `lane`.
    #[inline]
    pub fn seeded(re: f64, lane: usize) -> Self {
        let mut dx = [0.0; N];
        dx[lane] = 1.0;
        Dual { re, dx }
    }

    /// Chain rule helper: value `v`, scale all tangents by `d`.
    #[inline]
    fn lift(self, v: f64, d: f64) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = d * self.dx[i];
        }
        Dual { re: v, dx }
    }
}

impl<const N: usize> fmt::Debug for Dual<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+eps{:?}", self.re, &self.dx[..])
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] + rhs.dx[i];
        }
        Dual { re: self.re + rhs.re, dx }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] - rhs.dx[i];
        }
        Dual { re: self.re - rhs.re, dx }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] * rhs.re + self.re * rhs.dx[i];
        }
        Dual { re: self.re * rhs.re, dx }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let v = self.re * inv;
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = (self.dx[i] - v * rhs.dx[i]) * inv;
        }
        Dual { re: v, dx }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = -self.dx[i];
        }
        Dual { re: -self.re, dx }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Dual { re: self.re + rhs, dx: self.dx }
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Dual { re: self.re - rhs, dx: self.dx }
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] * rhs;
        }
        Dual { re: self.re * rhs, dx }
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        for i in 0..N {
            self.dx[i] += rhs.dx[i];
        }
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.re -= rhs.re;
        for i in 0..N {
            self.dx[i] -= rhs.dx[i];
        }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        let v = self.re.sqrt();
        self.lift(v, 0.5 / v)
    }
    #[inline]
    fn exp(self) -> Self {
        let v = self.re.exp();
        self.lift(v, v)
    }
    #[inline]
    fn ln(self) -> Self {
        self.lift(self.re.ln(), 1.0 / self.re)
    }
    #[inline]
    fn sinh(self) -> Self {
        self.lift(self.re.sinh(), self.re.cosh())
    }
    #[inline]
    fn cosh(self) -> Self {
        self.lift(self.re.cosh(), self.re.sinh())
    }
    #[inline]
    fn asinh(self) -> Self {
        self.lift(self.re.asinh(), 1.0 / (1.0 + self.re * self.re).sqrt())
    }
    #[inline]
    fn tanh(self) -> Self {
        let v = self.re.tanh();
        self.lift(v, 1.0 - v * v)
    }
    #[inline]
    fn erf(self) -> Self {
        const TWO_OVER_SQRT_PI: f64 = 1.128379167095512573896;
        let v = libm::erf(self.re);
        self.lift(v, TWO_OVER_SQRT_PI * (-self.re * self.re).exp())
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let v = self.re.powf(p);
        self.lift(v, p * self.re.powf(p - 1.0))
    }
    #[inline]
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.dx.iter().all(|d| d.is_finite())
    }
}

/// Guarded primitives with well-defined one-sided tangents.
pub mod safe_ops {
    use super::Scalar;

    /// `sqrt(max(0, x))`; tangent is zero on the clamped branch.
    #[inline]
    pub fn rectified_sqrt<S: Scalar>(x: S) -> S {
        if x.value() <= 0.0 {
            S::zero()
        } else {
            x.sqrt()
        }
    }

    /// `max(x, floor)`; tangent is zero on the clamped branch.
    #[inline]
    pub fn clamp_floor<S: Scalar>(x: S, floor: f64) -> S {
        x.max_f64(floor)
    }
}

/// Exact-form Gaussian error linear unit, `x * Phi(x)` via `erf`.
#[inline]
pub fn gelu<S: Scalar>(x: S) -> S {
    const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let phi = ((x * INV_SQRT_2).erf() + 1.0) * 0.5;
    x * phi
}

#[cfg(test)]
mod tests {
    use super::safe_ops::{clamp_floor, rectified_sqrt};
    use super::*;

    type D2 = Dual<2>;

    fn d(re: f64, d0: f64, d1: f64) -> D2 {
        D2 { re, dx: [d0, d1] }
    }

    #[test]
    fn dual_arithmetic_matches_hand_derivatives() {
        let x = D2::seeded(1.3, 0);
        let y = D2::seeded(0.7, 1);
        let z = (x * y + x) / y;
        // z = x + x/y, dz/dx = 1 + 1/y, dz/dy = -x/y^2
        assert!((z.re - (1.3 + 1.3 / 0.7)).abs() < 1e-15);
        assert!((z.dx[0] - (1.0 + 1.0 / 0.7)).abs() < 1e-15);
        assert!((z.dx[1] - (-1.3 / 0.49)).abs() < 1e-14);
    }

    #[test]
    fn dual_transcendentals_match_finite_differences() {
        let fns: Vec<(fn(D2) -> D2, fn(f64) -> f64)> = vec![
            (|x| x.sqrt(), |x| x.sqrt()),
            (|x| x.exp(), |x| x.exp()),
            (|x| x.ln(), |x| x.ln()),
            (|x| x.sinh(), |x| x.sinh()),
            (|x| x.cosh(), |x| x.cosh()),
            (|x| x.asinh(), |x| x.asinh()),
            (|x| x.tanh(), |x| x.tanh()),
            (|x| x.erf(), libm::erf),
            (|x| x.powf(1.7), |x| x.powf(1.7)),
        ];
        let h = 1e-6;
        for (fd, ff) in fns {
            for &x0 in &[0.3, 0.9, 1.7] {
                let out = fd(D2::seeded(x0, 0));
                let num = (ff(x0 + h) - ff(x0 - h)) / (2.0 * h);
                assert!(
                    (out.dx[0] - num).abs() <= 1e-8 * (1.0 + num.abs()),
                    "tangent mismatch at {x0}: {} vs {num}",
                    out.dx[0]
                );
                assert!((out.re - ff(x0)).abs() < 1e-14 * (1.0 + ff(x0).abs()));
            }
        }
    }

    #[test]
    fn rectified_sqrt_cases() {
        assert_eq!(rectified_sqrt(-1.0f64), 0.0);
        assert_eq!(rectified_sqrt(4.0f64), 2.0);
        // tangent on the clamped branch is zero
        let t = rectified_sqrt(d(-0.5, 1.0, 2.0));
        assert_eq!(t.re, 0.0);
        assert_eq!(t.dx, [0.0, 0.0]);
        // positive branch propagates 1/(2 sqrt x)
        let t = rectified_sqrt(D2::seeded(4.0, 0));
        assert!((t.dx[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn clamp_floor_tangents() {
        let below = clamp_floor(d(0.5, 1.0, 1.0), 1.0);
        assert_eq!(below.re, 1.0);
        assert_eq!(below.dx, [0.0, 0.0]);
        let above = clamp_floor(d(2.0, 3.0, 4.0), 1.0);
        assert_eq!(above.re, 2.0);
        assert_eq!(above.dx, [3.0, 4.0]);
    }

    #[test]
    fn gelu_matches_reference_values() {
        // gelu(0) = 0, gelu(large) ~ x, gelu(-large) ~ 0
        assert_eq!(gelu(0.0f64), 0.0);
        assert!((gelu(10.0f64) - 10.0).abs() < 1e-12);
        assert!(gelu(-10.0f64).abs() < 1e-12);
        // value at 1.0: 1 * 0.5*(1+erf(1/sqrt2)) = 0.841344746...
        assert!((gelu(1.0f64) - 0.8413447460685429).abs() < 1e-12);
    }
}

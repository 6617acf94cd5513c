use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by `f64` and forward-mode [`Dual`] numbers so
/// the box-overlap code can produce exact derivatives without duplicating it.
///
/// Comparisons go through [`Real::value`]; branch decisions are therefore
/// taken on the primal value and derivatives are one-sided at kinks.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Forward-mode dual number carrying `N` partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub eps: [f64; N],
}

impl<const N: usize> Dual<N> {
    /// The `i`-th independent variable with value `re`.
    pub fn variable(re: f64, i: usize) -> Self {
        let mut eps = [0.0; N];
        eps[i] = 1.0;
        Dual { re, eps }
    }

    fn scale_eps(&self, k: f64) -> [f64; N] {
        let mut out = self.eps;
        out.iter_mut().for_each(|e| *e *= k);
        out
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e += r;
        }
        Dual {
            re: self.re + rhs.re,
            eps,
        }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e -= r;
        }
        Dual {
            re: self.re - rhs.re,
            eps,
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; N];
        for (i, e) in eps.iter_mut().enumerate() {
            *e = self.eps[i] * rhs.re + self.re * rhs.eps[i];
        }
        Dual {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let mut eps = [0.0; N];
        for (i, e) in eps.iter_mut().enumerate() {
            *e = (self.eps[i] * rhs.re - self.re * rhs.eps[i]) * inv * inv;
        }
        Dual { re: self.re * inv, eps }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: self.scale_eps(-1.0),
        }
    }
}

impl<const N: usize> Real for Dual<N> {
    fn constant(v: f64) -> Self {
        Dual { re: v, eps: [0.0; N] }
    }
    fn value(self) -> f64 {
        self.re
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        let k = if r > 0.0 { 0.5 / r } else { 0.0 };
        Dual {
            re: r,
            eps: self.scale_eps(k),
        }
    }
    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.scale_eps(self.re.cos()),
        }
    }
    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: self.scale_eps(-self.re.sin()),
        }
    }
}

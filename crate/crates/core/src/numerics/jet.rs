//! Truncated Taylor arithmetic.
//!
//! A `Jet<N>` stores the normalized Taylor coefficients `f^(k)(x0) / k!` for
//! `k < N`. Arithmetic on jets propagates exact derivatives through smooth
//! expressions, which is how the seed profiles expose derivatives up to order
//! four without hand-written chain rules.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c }
    }

    /// The identity function expanded at `x`.
    pub fn var(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c[k] * fact
    }

    /// All derivatives `[f, f', f'', ...]`.
    pub fn derivatives(&self) -> [f64; N] {
        let mut out = [0.0; N];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative(k);
        }
        out
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Self { c }
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }

    pub fn exp(self) -> Self {
        let mut b = [0.0; N];
        b[0] = self.c[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Self { c: b }
    }

    pub fn ln(self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; N];
        b[0] = a0.ln();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * b[j] * self.c[k - j];
            }
            b[k] = (self.c[k] - s / k as f64) / a0;
        }
        Self { c: b }
    }

    pub fn powf(self, p: f64) -> Self {
        (self.ln().scale(p)).exp()
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()).scale(0.5)
    }

    pub fn sinh(self) -> Self {
        let e = self.exp();
        (e - e.recip()).scale(0.5)
    }

    /// Compose a scalar function with known derivatives `g, g', g'', ...` at
    /// `self.value()` with this jet.
    pub fn compose(self, g: [f64; N]) -> Self {
        let mut delta = self;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(g[0]);
        let mut power = Jet::constant(1.0);
        let mut fact = 1.0;
        for (k, gk) in g.iter().enumerate().skip(1) {
            power = power * delta;
            fact *= k as f64;
            out = out + power.scale(gk / fact);
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Self { c }
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a -= b;
        }
        Self { c }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for (k, ck) in c.iter_mut().enumerate() {
            for j in 0..=k {
                *ck += self.c[j] * o.c[k - j];
            }
        }
        Self { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let b0 = o.c[0];
        let mut c = [0.0; N];
        for k in 0..N {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= o.c[j] * c[k - j];
            }
            c[k] = s / b0;
        }
        Self { c }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] += o;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.c[0] -= o;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.scale(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let x = Jet::<5>::var(2.0);
        let p = x * x * x - x * 4.0 + 1.0;
        assert_eq!(p.derivatives(), [1.0, 8.0, 12.0, 6.0, 0.0]);
    }

    #[test]
    fn exp_ln_sinh_match_closed_forms() {
        let x = Jet::<4>::var(0.3);
        let e = x.exp();
        for k in 0..4 {
            assert!((e.derivative(k) - 0.3f64.exp()).abs() < 1e-14);
        }
        let l = x.ln();
        assert!((l.derivative(1) - 1.0 / 0.3).abs() < 1e-12);
        assert!((l.derivative(3) - 2.0 / 0.027).abs() < 1e-9);
        let s = x.sinh();
        assert!((s.derivative(1) - 0.3f64.cosh()).abs() < 1e-14);
        assert!((s.derivative(2) - 0.3f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn quotient_and_compose() {
        let x = Jet::<4>::var(0.5);
        let q = Jet::constant(1.0) / (x + 1.0);
        assert!((q.derivative(2) - 2.0 / 1.5f64.powi(3)).abs() < 1e-13);
        let s = x.compose([0.5f64.sin(), 0.5f64.cos(), -0.5f64.sin(), -0.5f64.cos()]);
        assert!((s.derivative(3) + 0.5f64.cos()).abs() < 1e-14);
    }
}

//! Truncated Taylor arithmetic to order four.
//!
//! A [`Jet`] stores the Taylor coefficients `c[k] = f^(k)(x0) / k!` of a
//! function at a point. Arithmetic and the elementary functions propagate
//! those coefficients exactly, so composite warping profiles get analytic
//! derivatives up to order four without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const N: usize = ORDER + 1;
const FACT: [f64; N] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; N],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// The identity function at `x`.
    pub fn var(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    /// Builds a jet from derivative values `f, f', f'', ...` (missing orders are zero).
    pub fn from_derivs(d: &[f64]) -> Self {
        let mut c = [0.0; N];
        for (k, v) in d.iter().take(N).enumerate() {
            c[k] = v / FACT[k];
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative, `k <= 4`.
    pub fn deriv(&self, k: usize) -> f64 {
        self.c[k] * FACT[k]
    }

    pub fn d1(&self) -> f64 {
        self.deriv(1)
    }

    pub fn d2(&self) -> f64 {
        self.deriv(2)
    }

    pub fn derivs(&self) -> [f64; N] {
        let mut d = [0.0; N];
        for k in 0..N {
            d[k] = self.deriv(k);
        }
        d
    }

    pub fn scale(self, a: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= a);
        Jet { c }
    }

    pub fn add_const(mut self, a: f64) -> Self {
        self.c[0] += a;
        self
    }

    pub fn recip(self) -> Self {
        let a = &self.c;
        let mut b = [0.0; N];
        b[0] = 1.0 / a[0];
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += a[j] * b[k - j];
            }
            b[k] = -s * b[0];
        }
        Jet { c: b }
    }

    pub fn exp(self) -> Self {
        let a = &self.c;
        let mut e = [0.0; N];
        e[0] = a[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn sin_cos(self) -> (Self, Self) {
        let a = &self.c;
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..N {
            let (mut ss, mut cc) = (0.0, 0.0);
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn sin(self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(self) -> Self {
        self.sin_cos().1
    }

    pub fn sqrt(self) -> Self {
        let a = &self.c;
        let mut r = [0.0; N];
        r[0] = a[0].sqrt();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += r[j] * r[k - j];
            }
            r[k] = (a[k] - s) / (2.0 * r[0]);
        }
        Jet { c: r }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut out = Jet::constant(1.0);
        for _ in 0..n {
            out = out * self;
        }
        out
    }

    /// `f ∘ g`, where `self` is the jet of `f` taken at `g.value()`.
    pub fn compose(self, g: Jet) -> Self {
        let mut delta = g;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(self.c[ORDER]);
        for k in (0..ORDER).rev() {
            out = out * delta;
            out.c[0] += self.c[k];
        }
        out
    }

    /// Jet of the inverse function at `self.value()`, expanded around the
    /// point whose image is `self.value()`; `x0` is that preimage.
    pub fn inverse(self, x0: f64) -> Self {
        let a1 = self.c[1];
        let a2 = self.c[2];
        let a3 = self.c[3];
        let a4 = self.c[4];
        let b1 = 1.0 / a1;
        let b2 = -a2 / a1.powi(3);
        let b3 = (2.0 * a2 * a2 - a1 * a3) / a1.powi(5);
        let b4 = (5.0 * a1 * a2 * a3 - a1 * a1 * a4 - 5.0 * a2.powi(3)) / a1.powi(7);
        Jet { c: [x0, b1, b2, b3, b4] }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for k in 0..N {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for k in 0..N {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let b = &o.c;
        let mut q = [0.0; N];
        for k in 0..N {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= b[j] * q[k - j];
            }
            q[k] = s / b[0];
        }
        Jet { c: q }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, a: f64) -> Jet {
        self.scale(a)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, a: f64) -> Jet {
        self.add_const(a)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, a: f64) -> Jet {
        self.add_const(-a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn sine_derivatives_cycle() {
        let x = 0.7;
        let d = Jet::var(x).sin().derivs();
        let want = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        for k in 0..N {
            assert!(close(d[k], want[k], 1e-14), "order {k}");
        }
    }

    #[test]
    fn quotient_and_exp_match_closed_forms() {
        // exp(-1/x): derivatives by hand
        let x = 0.4;
        let j = Jet::var(x).recip().neg().exp();
        let f = (-1.0 / x).exp();
        assert!(close(j.d1(), f / (x * x), 1e-13));
        assert!(close(j.d2(), f * (1.0 - 2.0 * x) / x.powi(4), 1e-13));
    }

    #[test]
    fn compose_then_inverse_roundtrip() {
        let x0 = 0.3;
        let g = Jet::var(x0).sin() * 2.0 + Jet::var(x0);
        let inv = g.inverse(x0);
        let id = inv.compose(g);
        assert!(close(id.value(), x0, 1e-15));
        assert!(close(id.d1(), 1.0, 1e-13));
        for k in 2..N {
            assert!(id.deriv(k).abs() < 1e-11, "order {k}: {}", id.deriv(k));
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let j = Jet::var(1.3).exp() + 1.0;
        let r = j.sqrt();
        let back = r * r;
        for k in 0..N {
            assert!(close(back.deriv(k), j.deriv(k), 1e-13));
        }
    }
}

//! Scalar types the symbolic machinery evaluates over.
//!
//! Every evaluator in the crate (expressions, prolongation, brackets, flows)
//! is written once against [`Scalar`]. Plain `f32`/`f64` give values,
//! [`Dual`] gives exact first derivatives by forward mode (nest it for
//! second derivatives), and [`Taylor`] gives truncated power series along a
//! curve, which is how total derivatives D_x are taken.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

/// A real-like number the evaluators can run on.
///
/// Elementary functions follow the usual real-valued semantics. Domain
/// checks (log of a non-positive value, division by zero) are done by the
/// callers on [`Scalar::value`], so implementations may return non-finite
/// values outside the domain.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;

    /// The primal (real) part, used for domain checks and comparisons.
    fn value(self) -> f64;

    /// True when every component (primal and derivative parts) is finite.
    fn is_finite(self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
}

macro_rules! impl_scalar_float {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn value(self) -> f64 {
                self as f64
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn powf(self, e: Self) -> Self {
                <$t>::powf(self, e)
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: S) -> Self {
        Dual { re, eps: S::zero() }
    }

    /// Seeds `re` as the differentiation variable.
    pub fn variable(re: S) -> Self {
        Dual { re, eps: S::one() }
    }
}

impl<S: Scalar> Zero for Dual<S> {
    fn zero() -> Self {
        Dual::constant(S::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    fn one() -> Self {
        Dual::constant(S::one())
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar> SubAssign for Dual<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Scalar> MulAssign for Dual<S> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(S::from_f64(v))
    }

    fn value(self) -> f64 {
        self.re.value()
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }

    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (S::from_f64(2.0) * r))
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::one();
        }
        Dual::new(
            self.re.powi(n),
            S::from_f64(n as f64) * self.re.powi(n - 1) * self.eps,
        )
    }

    fn powf(self, e: Self) -> Self {
        let v = self.re.powf(e.re);
        // d(a^b) = b a^(b-1) da + a^b ln(a) db; the log term only when b varies
        let mut d = e.re * self.re.powf(e.re - S::one()) * self.eps;
        if !e.eps.is_zero() {
            d += v * self.re.ln() * e.eps;
        }
        Dual::new(v, d)
    }
}

/// Truncated Taylor series `Σ c[k] t^k`, `k < N`, with `c[k] = f^(k)(0)/k!`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<S, const N: usize> {
    pub c: [S; N],
}

impl<S: Scalar, const N: usize> Taylor<S, N> {
    pub fn constant(v: S) -> Self {
        let mut c = [S::zero(); N];
        c[0] = v;
        Taylor { c }
    }

    /// The series of `t ↦ v + t`.
    pub fn identity_at(v: S) -> Self {
        let mut s = Self::constant(v);
        if N > 1 {
            s.c[1] = S::one();
        }
        s
    }

    /// Builds the series of a curve from its derivative values
    /// `[f(0), f'(0), f''(0), ...]`; missing orders are zero.
    pub fn from_derivatives(d: &[S]) -> Self {
        let mut c = [S::zero(); N];
        let mut fact = S::one();
        for (k, slot) in c.iter_mut().enumerate() {
            if k > 0 {
                fact *= S::from_usize(k);
            }
            if let Some(&dk) = d.get(k) {
                *slot = dk / fact;
            }
        }
        Taylor { c }
    }

    /// d/dt of the series. The top coefficient becomes zero, i.e. one order
    /// of validity is lost.
    pub fn derivative(&self) -> Self {
        let mut c = [S::zero(); N];
        for k in 0..N.saturating_sub(1) {
            c[k] = S::from_usize(k + 1) * self.c[k + 1];
        }
        Taylor { c }
    }

    /// The k-th derivative at t = 0.
    pub fn derivative_value(&self, k: usize) -> S {
        let mut fact = S::one();
        for j in 1..=k {
            fact *= S::from_usize(j);
        }
        self.c[k] * fact
    }

    fn is_const(&self) -> bool {
        self.c[1..].iter().all(|c| c.is_zero())
    }

    fn scaled(&self, s: S) -> Self {
        let mut c = self.c;
        for v in c.iter_mut() {
            *v *= s;
        }
        Taylor { c }
    }

    fn powf_const(&self, r: S) -> Self {
        let a = &self.c;
        let mut b = [S::zero(); N];
        b[0] = a[0].powf(r);
        for k in 1..N {
            let mut acc = S::zero();
            for j in 1..=k {
                let w = (r + S::one()) * S::from_usize(j) - S::from_usize(k);
                acc += w * a[j] * b[k - j];
            }
            b[k] = acc / (S::from_usize(k) * a[0]);
        }
        Taylor { c: b }
    }
}

impl<S: Scalar, const N: usize> Zero for Taylor<S, N> {
    fn zero() -> Self {
        Taylor::constant(S::zero())
    }
    fn is_zero(&self) -> bool {
        self.c.iter().all(|c| c.is_zero())
    }
}

impl<S: Scalar, const N: usize> One for Taylor<S, N> {
    fn one() -> Self {
        Taylor::constant(S::one())
    }
}

impl<S: Scalar, const N: usize> Add for Taylor<S, N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Taylor { c }
    }
}

impl<S: Scalar, const N: usize> Sub for Taylor<S, N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a -= b;
        }
        Taylor { c }
    }
}

impl<S: Scalar, const N: usize> Mul for Taylor<S, N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [S::zero(); N];
        for k in 0..N {
            let mut acc = S::zero();
            for j in 0..=k {
                acc += self.c[j] * o.c[k - j];
            }
            c[k] = acc;
        }
        Taylor { c }
    }
}

impl<S: Scalar, const N: usize> Div for Taylor<S, N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [S::zero(); N];
        for k in 0..N {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= o.c[j] * q[k - j];
            }
            q[k] = acc / o.c[0];
        }
        Taylor { c: q }
    }
}

impl<S: Scalar, const N: usize> Neg for Taylor<S, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-S::one())
    }
}

impl<S: Scalar, const N: usize> AddAssign for Taylor<S, N> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar, const N: usize> SubAssign for Taylor<S, N> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Scalar, const N: usize> MulAssign for Taylor<S, N> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Scalar, const N: usize> Scalar for Taylor<S, N> {
    fn from_f64(v: f64) -> Self {
        Taylor::constant(S::from_f64(v))
    }

    fn value(self) -> f64 {
        self.c[0].value()
    }

    fn is_finite(self) -> bool {
        self.c.iter().all(|c| c.is_finite())
    }

    fn sin(self) -> Self {
        sin_cos(&self).0
    }

    fn cos(self) -> Self {
        sin_cos(&self).1
    }

    fn exp(self) -> Self {
        let a = &self.c;
        let mut b = [S::zero(); N];
        b[0] = a[0].exp();
        for k in 1..N {
            let mut acc = S::zero();
            for j in 1..=k {
                acc += S::from_usize(j) * a[j] * b[k - j];
            }
            b[k] = acc / S::from_usize(k);
        }
        Taylor { c: b }
    }

    fn ln(self) -> Self {
        let a = &self.c;
        let mut b = [S::zero(); N];
        b[0] = a[0].ln();
        for k in 1..N {
            let mut acc = S::zero();
            for j in 1..k {
                acc += S::from_usize(j) * b[j] * a[k - j];
            }
            b[k] = (a[k] - acc / S::from_usize(k)) / a[0];
        }
        Taylor { c: b }
    }

    fn sqrt(self) -> Self {
        let a = &self.c;
        let mut b = [S::zero(); N];
        b[0] = a[0].sqrt();
        for k in 1..N {
            let mut acc = S::zero();
            for j in 1..k {
                acc += b[j] * b[k - j];
            }
            b[k] = (a[k] - acc) / (S::from_f64(2.0) * b[0]);
        }
        Taylor { c: b }
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn powf(self, e: Self) -> Self {
        if e.is_const() {
            self.powf_const(e.c[0])
        } else {
            (e * self.ln()).exp()
        }
    }
}

fn sin_cos<S: Scalar, const N: usize>(a: &Taylor<S, N>) -> (Taylor<S, N>, Taylor<S, N>) {
    let a = &a.c;
    let mut s = [S::zero(); N];
    let mut c = [S::zero(); N];
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..N {
        let mut sa = S::zero();
        let mut ca = S::zero();
        for j in 1..=k {
            let w = S::from_usize(j) * a[j];
            sa += w * c[k - j];
            ca += w * s[k - j];
        }
        s[k] = sa / S::from_usize(k);
        c[k] = -ca / S::from_usize(k);
    }
    (Taylor { c: s }, Taylor { c })
}

#[cfg(test)]
mod tests {
    use super::*;

    type T5 = Taylor<f64, 5>;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn dual_product_rule() {
        let x = Dual::variable(3.0_f64);
        let y = x * x * x;
        assert_eq!(y.re, 27.0);
        assert_eq!(y.eps, 27.0);
    }

    #[test]
    fn dual_powf_constant_exponent_on_negative_base() {
        // no ln term when the exponent does not vary
        let x = Dual::variable(-2.0_f64);
        let y = x.powf(Dual::constant(2.0));
        assert!(close(y.re, 4.0));
        assert!(close(y.eps, -4.0));
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        // f = sin(x) at 0.7: f'' = -sin
        let x0 = 0.7_f64;
        let x = Dual::new(Dual::variable(x0), Dual::constant(1.0));
        let y = x.sin();
        assert!(close(y.eps.eps, -x0.sin()));
    }

    #[test]
    fn taylor_exp_matches_factorials() {
        let t = T5::identity_at(0.0);
        let e = t.exp();
        for k in 0..5 {
            assert!(close(e.derivative_value(k), 1.0));
        }
    }

    #[test]
    fn taylor_sin_cos_derivatives() {
        let x0 = 0.3;
        let t = T5::identity_at(x0);
        let s = t.sin();
        let expect = [x0.sin(), x0.cos(), -x0.sin(), -x0.cos(), x0.sin()];
        for (k, e) in expect.iter().enumerate() {
            assert!(close(s.derivative_value(k), *e), "k={k}");
        }
    }

    #[test]
    fn taylor_ln_and_sqrt_invert_exp_and_square() {
        let t = T5::identity_at(1.3);
        let back = t.exp().ln();
        let sq = (t * t).sqrt();
        for k in 0..5 {
            assert!(close(back.c[k], t.c[k]));
            assert!(close(sq.c[k], t.c[k]));
        }
    }

    #[test]
    fn taylor_division_and_powers() {
        let t = T5::identity_at(2.0);
        let inv = T5::one() / t;
        let p = t.powi(-1);
        let f = t.powf(T5::constant(-1.0));
        for k in 0..5 {
            let e = (-1.0f64).powi(k as i32) / 2f64.powi(k as i32 + 1);
            assert!(close(inv.c[k], e));
            assert!(close(p.c[k], e));
            assert!(close(f.c[k], e));
        }
    }

    #[test]
    fn taylor_from_derivatives_roundtrip() {
        let d = [1.0, 2.0, 6.0, 24.0];
        let s = T5::from_derivatives(&d);
        for (k, v) in d.iter().enumerate() {
            assert!(close(s.derivative_value(k), *v));
        }
        assert_eq!(s.c[4], 0.0);
    }
}

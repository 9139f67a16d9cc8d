//! Scalar abstraction over double precision and arbitrary-precision floats.
//!
//! Every numerical kernel in this crate is generic over [`Real`], with two
//! implementations: native `f64` (precision reported as 53 bits, `prec`
//! arguments ignored) and `rug::Float` (MPFR, per-value precision). Complex
//! values are the in-crate [`Cplx`] pair since the arbitrary-precision float
//! is not `Copy` and cannot back `num_complex`.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Real scalar with explicit construction precision.
///
/// Arithmetic inherits precision from the left operand; all values inside one
/// computation are constructed at the same precision.
pub trait Real:
    Sized
    + Clone
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + Add<Self, Output = Self>
    + Sub<Self, Output = Self>
    + Mul<Self, Output = Self>
    + Div<Self, Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign<Self>
    + SubAssign<Self>
    + MulAssign<Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// True for the native `f64` implementation.
    const NATIVE: bool;

    fn from_f64(x: f64, prec: u32) -> Self;
    fn from_i64(x: i64, prec: u32) -> Self;
    fn from_u64(x: u64, prec: u32) -> Self;
    /// Round an arbitrary-precision value to this type at the given precision.
    fn from_mp(x: &Float, prec: u32) -> Self;
    fn zero(prec: u32) -> Self;
    fn one(prec: u32) -> Self;
    /// 2^e at the given precision (exact).
    fn exp2i(e: i64, prec: u32) -> Self;
    fn pi(prec: u32) -> Self;

    /// Working precision of this value in bits (53 for `f64`).
    fn prec(&self) -> u32;
    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn is_zero(&self) -> bool;
    /// log2(|x|) as a rough magnitude; −inf for zero.
    fn log2_magnitude(&self) -> f64;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn atan2(self, x: &Self) -> Self;
    fn hypot(self, other: &Self) -> Self;
    fn recip(self) -> Self;
    fn pow(self, e: &Self) -> Self;
    fn powi(self, e: i32) -> Self;
    fn gamma(self) -> Self;
    /// Riemann zeta at this argument.
    fn zeta(self) -> Self;

    /// Decimal string that round-trips at this value's precision.
    fn to_decimal_string(&self) -> String;
}

impl Real for f64 {
    const NATIVE: bool = true;

    fn from_f64(x: f64, _prec: u32) -> Self {
        x
    }
    fn from_i64(x: i64, _prec: u32) -> Self {
        x as f64
    }
    fn from_u64(x: u64, _prec: u32) -> Self {
        x as f64
    }
    fn from_mp(x: &Float, _prec: u32) -> Self {
        x.to_f64()
    }
    fn zero(_prec: u32) -> Self {
        0.0
    }
    fn one(_prec: u32) -> Self {
        1.0
    }
    fn exp2i(e: i64, _prec: u32) -> Self {
        (e as f64).exp2()
    }
    fn pi(_prec: u32) -> Self {
        std::f64::consts::PI
    }

    fn prec(&self) -> u32 {
        53
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn log2_magnitude(&self) -> f64 {
        f64::abs(*self).log2()
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn atan2(self, x: &Self) -> Self {
        f64::atan2(self, *x)
    }
    fn hypot(self, other: &Self) -> Self {
        f64::hypot(self, *other)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
    fn pow(self, e: &Self) -> Self {
        f64::powf(self, *e)
    }
    fn powi(self, e: i32) -> Self {
        f64::powi(self, e)
    }
    fn gamma(self) -> Self {
        // Correctly rounded via MPFR; only used off the hot path.
        Float::with_val(64, self).gamma().to_f64()
    }
    fn zeta(self) -> Self {
        Float::with_val(64, self).zeta().to_f64()
    }

    fn to_decimal_string(&self) -> String {
        format!("{self}")
    }
}

impl Real for Float {
    const NATIVE: bool = false;

    fn from_f64(x: f64, prec: u32) -> Self {
        Float::with_val(prec, x)
    }
    fn from_i64(x: i64, prec: u32) -> Self {
        Float::with_val(prec, x)
    }
    fn from_u64(x: u64, prec: u32) -> Self {
        Float::with_val(prec, x)
    }
    fn from_mp(x: &Float, prec: u32) -> Self {
        Float::with_val(prec, x)
    }
    fn zero(prec: u32) -> Self {
        Float::new(prec)
    }
    fn one(prec: u32) -> Self {
        Float::with_val(prec, 1)
    }
    fn exp2i(e: i64, prec: u32) -> Self {
        let mut x = Float::with_val(prec, 1);
        x <<= e as i32;
        x
    }
    fn pi(prec: u32) -> Self {
        Float::with_val(prec, Constant::Pi)
    }

    fn prec(&self) -> u32 {
        Float::prec(self)
    }
    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }
    fn is_finite(&self) -> bool {
        Float::is_finite(self)
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn log2_magnitude(&self) -> f64 {
        if Float::is_zero(self) {
            f64::NEG_INFINITY
        } else {
            let (m, e) = self.to_f64_exp();
            m.abs().log2() + e as f64
        }
    }

    fn abs(self) -> Self {
        Float::abs(self)
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn sin(self) -> Self {
        Float::sin(self)
    }
    fn cos(self) -> Self {
        Float::cos(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        let prec = Float::prec(&self);
        Float::sin_cos(self, Float::new(prec))
    }
    fn atan2(self, x: &Self) -> Self {
        Float::atan2(self, x)
    }
    fn hypot(self, other: &Self) -> Self {
        Float::hypot(self, other)
    }
    fn recip(self) -> Self {
        Float::recip(self)
    }
    fn pow(self, e: &Self) -> Self {
        Pow::pow(self, e)
    }
    fn powi(self, e: i32) -> Self {
        Pow::pow(self, e)
    }
    fn gamma(self) -> Self {
        Float::gamma(self)
    }
    fn zeta(self) -> Self {
        Float::zeta(self)
    }

    fn to_decimal_string(&self) -> String {
        self.to_string_radix(10, None)
    }
}

/// Complex scalar over any [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cplx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cplx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cplx { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Cplx::new(R::zero(prec), R::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Cplx::new(R::one(prec), R::zero(prec))
    }

    pub fn real(re: R) -> Self {
        let prec = re.prec();
        Cplx::new(re, R::zero(prec))
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        Cplx::new(R::from_f64(re, prec), R::from_f64(im, prec))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn conj(&self) -> Self {
        Cplx::new(self.re.clone(), -self.im.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> R {
        self.re.clone() * &self.re + self.im.clone() * &self.im
    }

    pub fn abs(&self) -> R {
        self.re.clone().hypot(&self.im)
    }

    pub fn scale(&self, s: &R) -> Self {
        Cplx::new(self.re.clone() * s, self.im.clone() * s)
    }

    pub fn unscale(&self, s: &R) -> Self {
        Cplx::new(self.re.clone() / s, self.im.clone() / s)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Cplx::new(
            self.re.clone() * &o.re - self.im.clone() * &o.im,
            self.re.clone() * &o.im + self.im.clone() * &o.re,
        )
    }

    /// self * conj(o).
    pub fn mul_conj(&self, o: &Self) -> Self {
        Cplx::new(
            self.re.clone() * &o.re + self.im.clone() * &o.im,
            self.im.clone() * &o.re - self.re.clone() * &o.im,
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Cplx::new(self.re.clone() + &o.re, self.im.clone() + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Cplx::new(self.re.clone() - &o.re, self.im.clone() - &o.im)
    }

    pub fn neg(&self) -> Self {
        Cplx::new(-self.re.clone(), -self.im.clone())
    }

    pub fn add_assign(&mut self, o: &Self) {
        self.re += &o.re;
        self.im += &o.im;
    }

    pub fn sub_assign(&mut self, o: &Self) {
        self.re -= &o.re;
        self.im -= &o.im;
    }

    /// self += a * b.
    pub fn add_mul(&mut self, a: &Self, b: &Self) {
        self.re += a.re.clone() * &b.re - a.im.clone() * &b.im;
        self.im += a.re.clone() * &b.im + a.im.clone() * &b.re;
    }

    /// self += a * conj(b).
    pub fn add_mul_conj(&mut self, a: &Self, b: &Self) {
        self.re += a.re.clone() * &b.re + a.im.clone() * &b.im;
        self.im += a.im.clone() * &b.re - a.re.clone() * &b.im;
    }

    /// self += a * s for real s.
    pub fn add_scaled(&mut self, a: &Self, s: &R) {
        self.re += a.re.clone() * s;
        self.im += a.im.clone() * s;
    }

    pub fn to_f64c(&self) -> Cplx<f64> {
        Cplx::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn convert<R2: Real>(&self, prec: u32) -> Cplx<R2> {
        Cplx::new(
            R2::from_f64(self.re.to_f64(), prec),
            R2::from_f64(self.im.to_f64(), prec),
        )
    }
}

/// Zero-filled complex vector.
pub fn cvec_zero<R: Real>(n: usize, prec: u32) -> Vec<Cplx<R>> {
    (0..n).map(|_| Cplx::zero(prec)).collect()
}

/// Inner product Σ aᵢ·conj(bᵢ), linear in the first argument.
pub fn inner<R: Real>(a: &[Cplx<R>], b: &[Cplx<R>]) -> Cplx<R> {
    assert_eq!(a.len(), b.len());
    let prec = if a.is_empty() { 53 } else { a[0].prec() };
    let mut acc = Cplx::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc.add_mul_conj(x, y);
    }
    acc
}

/// Euclidean norm of a complex vector.
pub fn norm2<R: Real>(a: &[Cplx<R>]) -> R {
    let prec = if a.is_empty() { 53 } else { a[0].prec() };
    let mut acc = R::zero(prec);
    for x in a {
        acc += x.norm_sqr();
    }
    acc.sqrt()
}

/// Dense column-major complex matrix.
///
/// Column-major so factorization kernels can rotate contiguous columns.
#[derive(Clone, Debug)]
pub struct CMat<R> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Cplx<R>>,
}

impl<R: Real> CMat<R> {
    pub fn zero(rows: usize, cols: usize, prec: u32) -> Self {
        CMat {
            rows,
            cols,
            data: cvec_zero(rows * cols, prec),
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = CMat::zero(n, n, prec);
        for i in 0..n {
            *m.at_mut(i, i) = Cplx::one(prec);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Cplx<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Cplx<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }

    pub fn col(&self, j: usize) -> &[Cplx<R>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Cplx<R>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Borrow two distinct columns mutably.
    pub fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [Cplx<R>], &mut [Cplx<R>]) {
        assert!(p != q);
        let (lo, hi) = (p.min(q), p.max(q));
        let (left, right) = self.data.split_at_mut(hi * self.rows);
        let a = &mut left[lo * self.rows..(lo + 1) * self.rows];
        let b = &mut right[..self.rows];
        if p < q {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn prec(&self) -> u32 {
        if self.data.is_empty() {
            53
        } else {
            self.data[0].prec()
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im.is_zero())
    }

    /// Replace with (A + A*)/2. Square only.
    pub fn hermitize(&mut self) {
        assert!(self.is_square());
        let prec = self.prec();
        let half = R::from_f64(0.5, prec);
        for i in 0..self.rows {
            let d = self.at(i, i).clone();
            *self.at_mut(i, i) = Cplx::new(d.re, R::zero(prec));
            for j in (i + 1)..self.cols {
                let a = self.at(i, j).clone();
                let b = self.at(j, i).clone();
                let avg = a.add(&b.conj()).scale(&half);
                *self.at_mut(j, i) = avg.conj();
                *self.at_mut(i, j) = avg;
            }
        }
    }

    pub fn mul_vec(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        assert_eq!(self.cols, x.len());
        let prec = self.prec();
        let mut y = cvec_zero(self.rows, prec);
        for (j, xj) in x.iter().enumerate() {
            let col = self.col(j);
            for i in 0..self.rows {
                y[i].add_mul(&col[i], xj);
            }
        }
        y
    }

    pub fn conj_transpose(&self) -> CMat<R> {
        CMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    /// A* · A (for factorization cross-checks).
    pub fn gram_of_columns(&self) -> CMat<R> {
        let prec = self.prec();
        let mut g = CMat::zero(self.cols, self.cols, prec);
        for i in 0..self.cols {
            for j in 0..self.cols {
                *g.at_mut(i, j) = inner(self.col(j), self.col(i));
            }
        }
        g
    }

    pub fn max_abs(&self) -> R {
        let prec = self.prec();
        let mut m = R::zero(prec);
        for z in &self.data {
            let a = z.abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn convert<R2: Real>(&self, prec: u32) -> CMat<R2> {
        CMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).convert(prec))
    }
}

/// Dense column-major real matrix (fast path for real-symmetric systems).
#[derive(Clone, Debug)]
pub struct RMat<R> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<R>,
}

impl<R: Real> RMat<R> {
    pub fn zero(rows: usize, cols: usize, prec: u32) -> Self {
        RMat {
            rows,
            cols,
            data: (0..rows * cols).map(|_| R::zero(prec)).collect(),
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = RMat::zero(n, n, prec);
        for i in 0..n {
            *m.at_mut(i, i) = R::one(prec);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &R {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut R {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }

    pub fn col(&self, j: usize) -> &[R] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [R], &mut [R]) {
        assert!(p != q);
        let (lo, hi) = (p.min(q), p.max(q));
        let (left, right) = self.data.split_at_mut(hi * self.rows);
        let a = &mut left[lo * self.rows..(lo + 1) * self.rows];
        let b = &mut right[..self.rows];
        if p < q {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn prec(&self) -> u32 {
        if self.data.is_empty() {
            53
        } else {
            self.data[0].prec()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip_and_constants() {
        assert_eq!(f64::pi(53), std::f64::consts::PI);
        assert_eq!(f64::exp2i(-10, 53), 1.0 / 1024.0);
        assert_eq!(2.0f64.log2_magnitude(), 1.0);
    }

    #[test]
    fn mp_precision_carries_through() {
        let x = Float::from_f64(1.5, 256);
        assert_eq!(x.prec(), 256);
        let y = x.clone() * &x;
        assert_eq!(Real::prec(&y), 256);
        assert_eq!(y.to_f64(), 2.25);
    }

    #[test]
    fn mp_exp2i_is_exact() {
        let x = Float::exp2i(-200, 128);
        assert_eq!(x.log2_magnitude(), -200.0);
    }

    #[test]
    fn complex_mul_matches_f64() {
        let a = Cplx::<f64>::from_f64(1.0, 2.0, 53);
        let b = Cplx::<f64>::from_f64(-0.5, 3.0, 53);
        let p = a.mul(&b);
        assert_eq!((p.re, p.im), (-6.5, 2.0));
        let q = a.mul_conj(&b);
        assert_eq!((q.re, q.im), (5.5, -4.0));
    }

    #[test]
    fn hermitize_produces_conjugate_symmetry() {
        let mut m = CMat::<f64>::zero(2, 2, 53);
        *m.at_mut(0, 1) = Cplx::from_f64(1.0, 2.0, 53);
        *m.at_mut(1, 0) = Cplx::from_f64(3.0, 4.0, 53);
        m.hermitize();
        assert_eq!(m.at(0, 1).re, 2.0);
        assert_eq!(m.at(0, 1).im, -1.0);
        assert_eq!(m.at(1, 0).re, 2.0);
        assert_eq!(m.at(1, 0).im, 1.0);
    }

    #[test]
    fn inner_is_linear_in_first_argument() {
        let a = vec![Cplx::<f64>::from_f64(0.0, 1.0, 53)];
        let b = vec![Cplx::<f64>::from_f64(0.0, 1.0, 53)];
        let ip = inner(&a, &b);
        assert_eq!((ip.re, ip.im), (1.0, 0.0));
    }
}

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use twofloat::TwoFloat;

/// Element type tag stored in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    F32 = 1,
    F64 = 2,
    /// Double-double: an unevaluated `hi + lo` pair of `f64`.
    F64x2 = 3,
}

impl DType {
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            3 => Some(DType::F64x2),
            _ => None,
        }
    }
}

/// Floating-point element type for all model arithmetic.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    const DTYPE: DType;
    /// Encoded width in bytes.
    const WIDTH: usize;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `WIDTH` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    // Elementary functions used by the model; the defaults forward to `Float`.

    #[inline]
    fn exp_fn(self) -> Self {
        self.exp()
    }

    #[inline]
    fn ln_fn(self) -> Self {
        self.ln()
    }

    #[inline]
    fn tanh_fn(self) -> Self {
        self.tanh()
    }

    #[inline]
    fn div_fn(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Scalar for f32 {
    const DTYPE: DType = DType::F32;
    const WIDTH: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Scalar for f64 {
    const DTYPE: DType = DType::F64;
    const WIDTH: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

impl Scalar for TwoFloat {
    const DTYPE: DType = DType::F64x2;
    const WIDTH: usize = 16;

    // `FromPrimitive::from_f64` in twofloat drops values below one.
    #[inline]
    fn lit(value: f64) -> Self {
        TwoFloat::from(value)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.hi().to_le_bytes());
        out.extend_from_slice(&self.lo().to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let hi = f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"));
        let lo = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        TwoFloat::try_from((hi, lo)).unwrap_or_else(|_| TwoFloat::from(hi + lo))
    }

    // twofloat's own exp/ln/tanh and division are accurate to roughly 1e-17,
    // which is not enough for the finite-difference oracle.

    fn exp_fn(self) -> Self {
        dd::exp(self)
    }

    fn ln_fn(self) -> Self {
        dd::ln(self)
    }

    fn tanh_fn(self) -> Self {
        dd::tanh(self)
    }

    fn div_fn(self, rhs: Self) -> Self {
        dd::div(self, rhs)
    }
}

/// Double-double elementary functions with errors near 1e-30.
mod dd {
    use twofloat::TwoFloat;

    const LN_2_HI: f64 = std::f64::consts::LN_2;
    const LN_2_LO: f64 = 2.319_046_813_846_299_6e-17;
    const SQUARINGS: i32 = 10;

    /// Quotient refined by one Newton step on the exact residual.
    pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
        let q = a / b;
        if !q.hi().is_finite() || q.hi() == 0.0 {
            return q;
        }
        q + (a - q * b) / b
    }

    fn pow2(k: i32) -> TwoFloat {
        TwoFloat::from(2f64.powi(k))
    }

    pub fn exp(x: TwoFloat) -> TwoFloat {
        let hi = x.hi();
        if hi.is_nan() {
            return x;
        }
        if hi > 709.0 {
            return TwoFloat::from(f64::INFINITY);
        }
        if hi < -745.0 {
            return TwoFloat::from(0.0);
        }
        // x = k ln 2 + r with |r| <= ln 2 / 2, then exp(r) = exp(r / 2^10)^(2^10)
        let k = (hi / LN_2_HI).round();
        let ln2 = TwoFloat::new_add(LN_2_HI, LN_2_LO);
        let r = (x - ln2 * k) * pow2(-SQUARINGS);
        let mut term = TwoFloat::from(1.0);
        let mut sum = TwoFloat::from(1.0);
        for n in 1..=12 {
            term = div(term * r, TwoFloat::from(n as f64));
            sum += term;
        }
        for _ in 0..SQUARINGS {
            sum = sum * sum;
        }
        let k = k as i32;
        let half = k / 2;
        sum * pow2(half) * pow2(k - half)
    }

    pub fn ln(x: TwoFloat) -> TwoFloat {
        let hi = x.hi();
        if !(hi > 0.0) || hi.is_infinite() {
            return TwoFloat::from(hi.ln());
        }
        // Newton on exp(y) = x; each step doubles the correct digits.
        let mut y = TwoFloat::from(hi.ln());
        for _ in 0..2 {
            y += x * exp(-y) - 1.0;
        }
        y
    }

    pub fn tanh(x: TwoFloat) -> TwoFloat {
        let hi = x.hi();
        if hi.is_nan() {
            return x;
        }
        if hi.abs() > 40.0 {
            return TwoFloat::from(hi.signum());
        }
        let e = exp(x.abs() * -2.0);
        let t = div(TwoFloat::from(1.0) - e, TwoFloat::from(1.0) + e);
        if hi < 0.0 {
            -t
        } else {
            t
        }
    }
}

/// Sum of a sequence of scalars.
#[inline]
pub(crate) fn sum<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one().div_fn(T::one() + (-x).exp_fn())
    } else {
        let e = x.exp_fn();
        e.div_fn(T::one() + e)
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&l| (l - max).exp_fn()).collect();
    let sum: T = sum(out.iter().copied());
    for p in &mut out {
        *p = p.div_fn(sum);
    }
    out
}

/// `log(sum(exp(logits)))`, shifted by the maximum.
pub(crate) fn log_sum_exp<T: Scalar>(logits: &[T]) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = sum(logits.iter().map(|&l| (l - max).exp_fn()));
    max + sum.ln_fn()
}

/// Index of the largest element; ties go to the lowest index.
pub(crate) fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

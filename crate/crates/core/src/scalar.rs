//! Scalar traits shared by the exact and floating-point layers.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_integer::Integer;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Anything a dense [`Matrix`](crate::Matrix) can hold and do arithmetic with.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive
{
    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialEq
        + PartialOrd
        + Num
        + Neg<Output = T>
        + FromPrimitive
        + ToPrimitive
{
}

/// Scalars with exact arithmetic: every comparison with zero is meaningful.
pub trait Exact: Scalar {
    /// Rescale a vector to a canonical representative of its span: integer
    /// entries with unit content and a positive leading entry where possible.
    fn primitive(v: &[Self]) -> Vec<Self> {
        v.to_vec()
    }
}

fn primitive_ratio<I>(v: &[Ratio<I>]) -> Vec<Ratio<I>>
where
    I: Integer + Signed + Clone,
{
    let l = v.iter().fold(I::one(), |acc, x| acc.lcm(x.denom()));
    let scale = Ratio::from_integer(l);
    let ints: Vec<I> = v.iter().map(|x| (x.clone() * scale.clone()).to_integer()).collect();
    let g = ints.iter().fold(I::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let negate = ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    ints.into_iter()
        .map(|x| {
            let y = x / g.clone();
            Ratio::from_integer(if negate { -y } else { y })
        })
        .collect()
}

impl Exact for Ratio<BigInt> {
    fn primitive(v: &[Self]) -> Vec<Self> {
        primitive_ratio(v)
    }
}

impl Exact for Ratio<i64> {
    fn primitive(v: &[Self]) -> Vec<Self> {
        primitive_ratio(v)
    }
}

impl Exact for Ratio<i128> {
    fn primitive(v: &[Self]) -> Vec<Self> {
        primitive_ratio(v)
    }
}

/// Floating-point scalars (`f32`, `f64`).
pub trait Real: Scalar + Float + Display + Send + Sync + 'static {
    fn from_rational(r: &Ratio<BigInt>) -> Self {
        Self::from_f64(r.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(Self::nan)
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}

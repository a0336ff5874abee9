//! Real values extended with the two starred sentinels `1*` and `0*`.
//!
//! Under addition and subtraction `1*` absorbs everything and `0*` masks any
//! real operand. Under multiplication and division they act like `1` and `0`,
//! except that a product involving `0*` and no `1*` is a true real zero.
//! Both sentinels are fixed by negation and by the square root.
//!
//! The set is commutative and associative for `+` and `*`, but not
//! distributive: `1 * (1* + 1*) = 1` while `1*1* + 1*1* = 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scalar {
    Real(f64),
    StarOne,
    StarZero,
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::Real(0.0)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Real(x)
    }
}

#[allow(clippy::should_implement_trait)]
impl Scalar {
    pub const ZERO: Scalar = Scalar::Real(0.0);
    pub const ONE: Scalar = Scalar::Real(1.0);

    pub fn is_starred(self) -> bool {
        !matches!(self, Scalar::Real(_))
    }

    pub fn as_real(self) -> Option<f64> {
        match self {
            Scalar::Real(x) => Some(x),
            _ => None,
        }
    }

    pub fn neg(self) -> Scalar {
        match self {
            Scalar::Real(x) => Scalar::Real(-x),
            s => s,
        }
    }

    /// Shared table for `+` and `-`; `op` is only applied to two reals.
    fn additive(self, rhs: Scalar, op: impl FnOnce(f64, f64) -> f64) -> Scalar {
        use Scalar::*;
        match (self, rhs) {
            (StarOne, _) | (_, StarOne) => StarOne,
            (StarZero, _) | (_, StarZero) => StarZero,
            (Real(x), Real(y)) => Real(op(x, y)),
        }
    }

    pub fn add(self, rhs: Scalar) -> Scalar {
        self.additive(rhs, |x, y| x + y)
    }

    pub fn sub(self, rhs: Scalar) -> Scalar {
        self.additive(rhs, |x, y| x - y)
    }

    pub fn mul(self, rhs: Scalar) -> Scalar {
        use Scalar::*;
        match (self, rhs) {
            (StarOne, y) | (y, StarOne) => y,
            (StarZero, _) | (_, StarZero) => Real(0.0),
            (Real(x), Real(y)) => Real(x * y),
        }
    }

    pub fn div(self, rhs: Scalar) -> Result<Scalar> {
        use Scalar::*;
        match (self, rhs) {
            (_, StarZero) => Err(Error::DivisionByStarZero),
            (x, StarOne) => Ok(x),
            (_, Real(0.0)) => Err(Error::DivisionByZero),
            (StarOne, Real(y)) => Ok(Real(1.0 / y)),
            (StarZero, Real(_)) => Ok(Real(0.0)),
            (Real(x), Real(y)) => Ok(Real(x / y)),
        }
    }

    pub fn sqrt(self) -> Result<Scalar> {
        match self {
            Scalar::Real(x) if x < 0.0 => Err(Error::NegativeSqrt(x)),
            Scalar::Real(x) => Ok(Scalar::Real(x.sqrt())),
            s => Ok(s),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Real(x) => write!(f, "{x}"),
            Scalar::StarOne => f.write_str("1*"),
            Scalar::StarZero => f.write_str("0*"),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1*" => Ok(Scalar::StarOne),
            "0*" => Ok(Scalar::StarZero),
            t => t
                .parse::<f64>()
                .map(Scalar::Real)
                .map_err(|e| Error::Parse(format!("bad scalar {t:?}: {e}"))),
        }
    }
}

/// Per-run arithmetic tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCounter {
    pub adds: u64,
    pub subs: u64,
    pub muls: u64,
    pub divs: u64,
    pub sqrts: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.adds + self.subs + self.muls + self.divs + self.sqrts
    }

    pub fn add(&mut self, a: Scalar, b: Scalar) -> Scalar {
        self.adds += 1;
        a.add(b)
    }

    pub fn sub(&mut self, a: Scalar, b: Scalar) -> Scalar {
        self.subs += 1;
        a.sub(b)
    }

    pub fn mul(&mut self, a: Scalar, b: Scalar) -> Scalar {
        self.muls += 1;
        a.mul(b)
    }

    pub fn div(&mut self, a: Scalar, b: Scalar) -> Result<Scalar> {
        self.divs += 1;
        a.div(b)
    }

    pub fn sqrt(&mut self, a: Scalar) -> Result<Scalar> {
        self.sqrts += 1;
        a.sqrt()
    }

    /// `acc - a*b`, the update step every Cholesky variant is built from.
    #[inline]
    pub fn sub_mul(&mut self, acc: Scalar, a: Scalar, b: Scalar) -> Scalar {
        let p = self.mul(a, b);
        self.sub(acc, p)
    }

    /// Square root of a pivot; a real pivot must be strictly positive.
    pub fn pivot_sqrt(&mut self, pivot: Scalar, column: usize) -> Result<Scalar> {
        if let Scalar::Real(x) = pivot {
            if x <= 0.0 || x.is_nan() {
                return Err(Error::NonPositivePivot { column, value: x });
            }
        }
        self.sqrt(pivot)
    }
}

impl std::ops::AddAssign for FlopCounter {
    fn add_assign(&mut self, o: Self) {
        self.adds += o.adds;
        self.subs += o.subs;
        self.muls += o.muls;
        self.divs += o.divs;
        self.sqrts += o.sqrts;
    }
}

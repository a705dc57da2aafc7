//! Coefficient domains for Novikov series.
//!
//! Two modes are supported behind the [`Coeff`] trait:
//!
//! * [`GaussQ`] — complex numbers with exact rational real/imaginary parts.
//!   Every operation is exact; transcendental constants are rejected.
//! * [`C64`] — double-precision complex numbers, used when leading
//!   coefficients are algebraic numbers (roots of unity and friends) that
//!   have no exact rational representation.
//!
//! Which mode a computation ran in is visible through [`Coeff::MODE`].

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::Neg;

use crate::error::{Error, Result};

pub type Rat = BigRational;
/// Exact complex rationals (Gaussian rationals).
pub type GaussQ = Complex<Rat>;
/// Floating complex numbers.
pub type C64 = Complex<f64>;

/// Coefficients below this magnitude are treated as numerical dust in float
/// mode and dropped from series. Well below every comparison tolerance used
/// by the solvers (1e-7 .. 1e-9).
pub const FLOAT_DUST: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CoeffMode {
    Exact,
    Float,
}

impl CoeffMode {
    pub fn label(self) -> &'static str {
        match self {
            CoeffMode::Exact => "exact",
            CoeffMode::Float => "float",
        }
    }
}

/// Scalar domain of a Novikov series.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Num
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const MODE: CoeffMode;

    fn from_rat(q: &Rat) -> Self;
    fn from_int(n: i64) -> Self {
        Self::from_rat(&Rat::from_integer(BigInt::from(n)))
    }
    /// Multiplicative inverse; `None` for zero.
    fn coeff_inv(&self) -> Option<Self>;
    /// True when the value should be dropped as a zero coefficient.
    fn is_negligible(&self) -> bool;
    /// Float shadow of the value, for diagnostics and tolerance checks.
    fn approx(&self) -> C64;
    /// Principal logarithm of a constant; exact mode only knows log 1 = 0.
    fn ln_principal(&self) -> Result<Self>;
    /// Exponential of a constant; exact mode only knows exp 0 = 1.
    fn exp_principal(&self) -> Result<Self>;
    fn fmt_coeff(&self) -> String;
}

impl Coeff for GaussQ {
    const MODE: CoeffMode = CoeffMode::Exact;

    fn from_rat(q: &Rat) -> Self {
        Complex::new(q.clone(), Rat::zero())
    }

    fn coeff_inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Self::one() / self.clone())
        }
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn approx(&self) -> C64 {
        Complex::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn ln_principal(&self) -> Result<Self> {
        if self.is_one() {
            Ok(Self::zero())
        } else {
            Err(Error::ExactConstant("log of a constant other than 1"))
        }
    }

    fn exp_principal(&self) -> Result<Self> {
        if self.is_zero() {
            Ok(Self::one())
        } else {
            Err(Error::ExactConstant("exp of a constant other than 0"))
        }
    }

    fn fmt_coeff(&self) -> String {
        if self.im.is_zero() {
            fmt_rat(&self.re)
        } else if self.re.is_zero() {
            format!("{}i", fmt_rat(&self.im))
        } else if self.im.is_negative() {
            format!("({}{}i)", fmt_rat(&self.re), fmt_rat(&self.im))
        } else {
            format!("({}+{}i)", fmt_rat(&self.re), fmt_rat(&self.im))
        }
    }
}

impl Coeff for C64 {
    const MODE: CoeffMode = CoeffMode::Float;

    fn from_rat(q: &Rat) -> Self {
        Complex::new(rat_to_f64(q), 0.0)
    }

    fn coeff_inv(&self) -> Option<Self> {
        if self.is_negligible() {
            None
        } else {
            Some(Self::one() / self)
        }
    }

    fn is_negligible(&self) -> bool {
        self.norm_sqr() < FLOAT_DUST * FLOAT_DUST
    }

    fn approx(&self) -> C64 {
        *self
    }

    fn ln_principal(&self) -> Result<Self> {
        if self.is_negligible() {
            return Err(Error::NotAUnit("0".into()));
        }
        Ok(self.ln())
    }

    fn exp_principal(&self) -> Result<Self> {
        Ok(self.exp())
    }

    fn fmt_coeff(&self) -> String {
        if self.im.abs() < FLOAT_DUST {
            format!("{:.12}", self.re)
        } else {
            format!("[{:.12}, {:.12}]", self.re, self.im)
        }
    }
}

pub fn rat_to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
    })
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses "p/q" or a bare integer "p".
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    s.parse::<Rat>()
        .map_err(|_| Error::Malformed(format!("cannot parse rational from {s:?}")))
}

pub fn fmt_rat(q: &Rat) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Reconstructs a nearby rational with small denominator, if one exists
/// within `tol`. Used to recognize exact leading coefficients in float data.
pub fn recognize_rat(x: f64, max_den: u64, tol: f64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    // Stern-Brocot / continued fraction expansion.
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if !a.is_finite() {
            return None;
        }
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > BigInt::from(max_den) {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1.is_zero() {
        return None;
    }
    let cand = Rat::new(p1, q1);
    if (rat_to_f64(&cand) - x).abs() <= tol {
        Some(cand)
    } else {
        None
    }
}

/// Recognizes a float complex number as a Gaussian rational with bounded
/// denominator, e.g. solver output `1.0000000000 - 0.5i` ↦ `1 - (1/2)i`.
pub fn recognize_gauss(z: C64, max_den: u64, tol: f64) -> Option<GaussQ> {
    let re = recognize_rat(z.re, max_den, tol)?;
    let im = recognize_rat(z.im, max_den, tol)?;
    Some(Complex::new(re, im))
}

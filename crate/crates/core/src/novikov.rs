//! Truncated Novikov series with exact rational exponents.
//!
//! A series is a finite sum Σ aᵢ T^{λᵢ} with λᵢ ∈ ℚ strictly below an
//! explicit truncation order; exponents at or beyond the order are unknown
//! and silently discarded. The zero series keeps its truncation order, so
//! "vanishes mod T^N" is a first-class statement.
//!
//! Values are immutable after construction and freely shareable.

use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{fmt_rat, rat_int, rat_to_f64, Coeff, Rat};

/// Exact rational exponent of the formal parameter T.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Exponent(Rat);

impl Exponent {
    pub fn new(q: Rat) -> Self {
        Exponent(q)
    }

    pub fn from_int(n: i64) -> Self {
        Exponent(rat_int(n))
    }

    pub fn zero() -> Self {
        Exponent(Rat::zero())
    }

    pub fn rat(&self) -> &Rat {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.0)
    }

    pub fn scaled(&self, k: i64) -> Self {
        Exponent(&self.0 * rat_int(k))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_rat(&self.0))
    }
}

impl Add for &Exponent {
    type Output = Exponent;
    fn add(self, rhs: &Exponent) -> Exponent {
        Exponent(&self.0 + &rhs.0)
    }
}

impl Sub for &Exponent {
    type Output = Exponent;
    fn sub(self, rhs: &Exponent) -> Exponent {
        Exponent(&self.0 - &rhs.0)
    }
}

impl Neg for &Exponent {
    type Output = Exponent;
    fn neg(self) -> Exponent {
        Exponent(-self.0.clone())
    }
}

/// Truncation order: every exponent ≥ the order is unknown. `Infinite`
/// marks exactly-known polynomial data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Order {
    Finite(Exponent),
    Infinite,
}

impl Order {
    pub fn finite(q: Rat) -> Self {
        Order::Finite(Exponent::new(q))
    }

    pub fn min(self, other: Order) -> Order {
        match (self, other) {
            (Order::Infinite, b) => b,
            (a, Order::Infinite) => a,
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a.min(b)),
        }
    }

    pub fn shift(&self, by: &Exponent) -> Order {
        match self {
            Order::Infinite => Order::Infinite,
            Order::Finite(e) => Order::Finite(e + by),
        }
    }

    /// True when a term T^e is representable below the order.
    pub fn admits(&self, e: &Exponent) -> bool {
        match self {
            Order::Infinite => true,
            Order::Finite(o) => e < o,
        }
    }

    /// True when precision λ is guaranteed: order ≥ λ.
    pub fn covers(&self, lambda: &Exponent) -> bool {
        match self {
            Order::Infinite => true,
            Order::Finite(o) => o >= lambda,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Infinite => write!(f, "+inf"),
            Order::Finite(e) => write!(f, "{e}"),
        }
    }
}

/// Valuation of a series: the smallest exponent present, or +∞ for a series
/// that vanishes to its truncation order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Valuation {
    Finite(Exponent),
    /// Zero at least to this order.
    InfiniteToOrder(Order),
}

impl Valuation {
    pub fn finite(&self) -> Option<&Exponent> {
        match self {
            Valuation::Finite(e) => Some(e),
            Valuation::InfiniteToOrder(_) => None,
        }
    }

    /// True when the valuation is ≥ λ, counting "zero to order N" as passing.
    pub fn at_least(&self, lambda: &Exponent) -> bool {
        match self {
            Valuation::Finite(e) => e >= lambda,
            Valuation::InfiniteToOrder(_) => true,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(e) => write!(f, "{e}"),
            Valuation::InfiniteToOrder(o) => write!(f, "+inf (zero to order {o})"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct NovikovSeries<C: Coeff> {
    terms: BTreeMap<Exponent, C>,
    trunc: Order,
}

impl<C: Coeff> NovikovSeries<C> {
    pub fn zero(trunc: Order) -> Self {
        NovikovSeries {
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(c, Exponent::zero())
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn monomial(c: C, e: Exponent) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_negligible() {
            terms.insert(e, c);
        }
        NovikovSeries {
            terms,
            trunc: Order::Infinite,
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, C)>>(iter: I, trunc: Order) -> Self {
        let mut terms: BTreeMap<Exponent, C> = BTreeMap::new();
        for (e, c) in iter {
            if !trunc.admits(&e) {
                continue;
            }
            let cur = match terms.remove(&e) {
                Some(prev) => prev + c,
                None => c,
            };
            if !cur.is_negligible() {
                terms.insert(e, cur);
            }
        }
        NovikovSeries { terms, trunc }
    }

    pub fn trunc(&self) -> &Order {
        &self.trunc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &Exponent) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    /// True when no term is stored; the series is zero to its truncation.
    pub fn is_zero_series(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn valuation(&self) -> Valuation {
        match self.terms.keys().next() {
            Some(e) => Valuation::Finite(e.clone()),
            None => Valuation::InfiniteToOrder(self.trunc.clone()),
        }
    }

    /// Leading (lowest-exponent) term.
    pub fn leading(&self) -> Option<(&Exponent, &C)> {
        self.terms.iter().next()
    }

    /// Lower bound for the valuation usable in truncation bookkeeping:
    /// the smallest stored exponent, or the truncation order if none.
    fn valuation_bound(&self) -> Order {
        match self.terms.keys().next() {
            Some(e) => Order::Finite(e.clone()),
            None => self.trunc.clone(),
        }
    }

    /// Lies in Λ₀ (all exponents ≥ 0)?
    pub fn in_lambda0(&self) -> bool {
        self.terms.keys().all(|e| !e.is_negative())
    }

    /// Lies in Λ₊ (valuation > 0)?
    pub fn in_lambda_plus(&self) -> bool {
        self.terms.keys().all(|e| e.is_positive())
    }

    /// Unit of Λ₀: valuation exactly 0.
    pub fn is_unit(&self) -> bool {
        matches!(self.leading(), Some((e, _)) if *e == Exponent::zero())
    }

    pub fn truncate_to(&self, order: Order) -> Self {
        let trunc = self.trunc.clone().min(order);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| trunc.admits(e))
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        NovikovSeries { terms, trunc }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(e, a)| (e.clone(), a.clone() * c.clone())),
            self.trunc.clone(),
        )
    }

    /// Multiplies by the monomial c·T^e.
    pub fn mul_monomial(&self, c: &C, e: &Exponent) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(d, a)| (d + e, a.clone() * c.clone())),
            self.trunc.shift(e),
        )
    }

    pub fn add_ref(&self, rhs: &Self) -> Self {
        let trunc = self.trunc.clone().min(rhs.trunc.clone());
        Self::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(e, c)| (e.clone(), c.clone())),
            trunc,
        )
    }

    pub fn sub_ref(&self, rhs: &Self) -> Self {
        self.add_ref(&rhs.neg_ref())
    }

    pub fn neg_ref(&self) -> Self {
        NovikovSeries {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
            trunc: self.trunc.clone(),
        }
    }

    /// Cauchy product. The result is valid modulo
    /// min(trunc_a + 𝔳(b), trunc_b + 𝔳(a)), where 𝔳 is the valuation lower
    /// bound (truncation order for a zero series): the unknown tail of one
    /// factor multiplies the smallest known term of the other.
    pub fn mul_ref(&self, rhs: &Self) -> Self {
        let trunc = product_trunc(self, rhs);
        let mut acc: BTreeMap<Exponent, C> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea + eb;
                if !trunc.admits(&e) {
                    break; // rhs terms ascend; later ones only larger
                }
                let prod = ca.clone() * cb.clone();
                match acc.remove(&e) {
                    Some(prev) => {
                        let s = prev + prod;
                        if !s.is_negligible() {
                            acc.insert(e, s);
                        }
                    }
                    None => {
                        if !prod.is_negligible() {
                            acc.insert(e, prod);
                        }
                    }
                }
            }
        }
        NovikovSeries { terms: acc, trunc }
    }

    pub fn pow_i64(&self, n: i64) -> Result<Self> {
        if n == 0 {
            return Ok(Self::one().truncate_to(self.trunc.clone()));
        }
        let base = if n < 0 { self.invert_unit()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut result: Option<Self> = None;
        let mut power = base;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    Some(r) => r.mul_ref(&power),
                    None => power.clone(),
                });
            }
            e >>= 1;
            if e > 0 {
                power = power.mul_ref(&power);
            }
        }
        Ok(result.unwrap())
    }

    /// Inverse of a unit of Λ₀, to the series' own truncation order.
    ///
    /// A bare constant inverts exactly; anything with more terms and an
    /// infinite truncation order must be truncated first.
    pub fn invert_unit(&self) -> Result<Self> {
        match (&self.trunc, self.num_terms()) {
            (Order::Infinite, n) if n > 1 => Err(Error::InfinitePrecision),
            (order, _) => self.invert_unit_to(order.clone()),
        }
    }

    /// Inverse of a unit of Λ₀ modulo T^order, by geometric series on the
    /// Λ₊ part: (c(1+ε))⁻¹ = c⁻¹ Σ (−ε)^k.
    pub fn invert_unit_to(&self, order: Order) -> Result<Self> {
        let (e0, c0) = match self.leading() {
            Some((e, c)) => (e.clone(), c.clone()),
            None => return Err(Error::NotAUnit(format!("{}", self.valuation()))),
        };
        if e0 != Exponent::zero() {
            return Err(Error::NotAUnit(e0.to_string()));
        }
        let c0_inv = c0.coeff_inv().ok_or_else(|| Error::NotAUnit("zero lead".into()))?;
        let order = order.min(self.trunc.clone());
        // ε = c₀⁻¹·self − 1, valuation > 0
        let eps = self
            .scale(&c0_inv)
            .sub_ref(&Self::one())
            .truncate_to(order.clone());
        let mut sum = Self::one().truncate_to(order.clone());
        let mut term = Self::one().truncate_to(order.clone());
        loop {
            term = term.mul_ref(&eps).neg_ref().truncate_to(order.clone());
            if term.is_zero_series() {
                break;
            }
            sum = sum.add_ref(&term);
        }
        Ok(sum.scale(&c0_inv))
    }

    /// exp of an element of Λ₀ modulo T^order. In exact mode the constant
    /// term must vanish.
    pub fn exp_to(&self, order: Order) -> Result<Self> {
        if self.terms.keys().any(|e| e.is_negative()) {
            return Err(Error::NotAUnit("negative valuation in exp".into()));
        }
        let order = order.min(self.trunc.clone());
        let c = self.coeff(&Exponent::zero());
        let base = c.exp_principal()?;
        let pos = self.sub_ref(&Self::constant(c)).truncate_to(order.clone());
        if pos.is_zero_series() {
            return Ok(Self::constant(base).truncate_to(order));
        }
        if order == Order::Infinite {
            return Err(Error::InfinitePrecision);
        }
        let mut sum = Self::one().truncate_to(order.clone());
        let mut term = Self::one().truncate_to(order.clone());
        let mut k: i64 = 1;
        loop {
            term = term
                .mul_ref(&pos)
                .scale(&C::from_rat(&Rat::new(1.into(), k.into())))
                .truncate_to(order.clone());
            if term.is_zero_series() {
                break;
            }
            sum = sum.add_ref(&term);
            k += 1;
        }
        Ok(sum.scale(&base))
    }

    pub fn exp_series(&self) -> Result<Self> {
        self.exp_to(self.trunc.clone())
    }

    /// log of a unit of Λ₀ modulo T^order: log c₀ + log(1+ε) with the
    /// principal branch on the constant. Exact mode requires c₀ = 1.
    pub fn log_to(&self, order: Order) -> Result<Self> {
        let (e0, c0) = match self.leading() {
            Some((e, c)) => (e.clone(), c.clone()),
            None => return Err(Error::NotAUnit(format!("{}", self.valuation()))),
        };
        if e0 != Exponent::zero() {
            return Err(Error::NotAUnit(e0.to_string()));
        }
        let lnc = c0.ln_principal()?;
        let order = order.min(self.trunc.clone());
        let c0_inv = c0.coeff_inv().ok_or_else(|| Error::NotAUnit("zero lead".into()))?;
        let eps = self
            .scale(&c0_inv)
            .sub_ref(&Self::one())
            .truncate_to(order.clone());
        if eps.is_zero_series() {
            return Ok(Self::constant(lnc).truncate_to(order));
        }
        if order == Order::Infinite {
            return Err(Error::InfinitePrecision);
        }
        // log(1+ε) = Σ (−1)^{k+1} ε^k / k
        let mut sum = Self::zero(order.clone());
        let mut pow = Self::one().truncate_to(order.clone());
        let mut k: i64 = 1;
        loop {
            pow = pow.mul_ref(&eps).truncate_to(order.clone());
            if pow.is_zero_series() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            sum = sum.add_ref(&pow.scale(&C::from_rat(&Rat::new(sign.into(), k.into()))));
            k += 1;
        }
        Ok(sum.add_ref(&Self::constant(lnc)))
    }

    pub fn log_series(&self) -> Result<Self> {
        self.log_to(self.trunc.clone())
    }

    /// Congruence mod T^λ: the difference vanishes below λ.
    pub fn equal_mod(&self, rhs: &Self, lambda: &Exponent) -> bool {
        self.sub_ref(rhs).valuation().at_least(lambda)
    }

    pub fn to_float(&self) -> NovikovSeries<crate::scalar::C64> {
        NovikovSeries {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.approx()))
                .collect(),
            trunc: self.trunc.clone(),
        }
    }
}

fn product_trunc<C: Coeff>(a: &NovikovSeries<C>, b: &NovikovSeries<C>) -> Order {
    let ta_vb = match (&a.trunc, b.valuation_bound()) {
        (Order::Finite(t), Order::Finite(v)) => Order::Finite(t + &v),
        _ => Order::Infinite,
    };
    let tb_va = match (&b.trunc, a.valuation_bound()) {
        (Order::Finite(t), Order::Finite(v)) => Order::Finite(t + &v),
        _ => Order::Infinite,
    };
    ta_vb.min(tb_va)
}

impl<C: Coeff> fmt::Display for NovikovSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        } else {
            for (i, (e, c)) in self.terms.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                if e == &Exponent::zero() {
                    write!(f, "{}", c.fmt_coeff())?;
                } else {
                    write!(f, "{}*T^({})", c.fmt_coeff(), e)?;
                }
            }
        }
        if let Order::Finite(o) = &self.trunc {
            write!(f, " + O(T^{o})")?;
        }
        Ok(())
    }
}

impl<C: Coeff> Add for &NovikovSeries<C> {
    type Output = NovikovSeries<C>;
    fn add(self, rhs: Self) -> NovikovSeries<C> {
        self.add_ref(rhs)
    }
}

impl<C: Coeff> Sub for &NovikovSeries<C> {
    type Output = NovikovSeries<C>;
    fn sub(self, rhs: Self) -> NovikovSeries<C> {
        self.sub_ref(rhs)
    }
}

impl<C: Coeff> Mul for &NovikovSeries<C> {
    type Output = NovikovSeries<C>;
    fn mul(self, rhs: Self) -> NovikovSeries<C> {
        self.mul_ref(rhs)
    }
}

/// Evaluates a dense polynomial (ascending coefficients) at a series.
pub fn poly_eval<C: Coeff>(coeffs: &[NovikovSeries<C>], x: &NovikovSeries<C>) -> NovikovSeries<C> {
    let mut acc = NovikovSeries::zero(x.trunc.clone());
    for c in coeffs.iter().rev() {
        acc = acc.mul_ref(x).add_ref(c);
    }
    acc
}

/// Formal derivative of a dense polynomial.
pub fn poly_derivative<C: Coeff>(coeffs: &[NovikovSeries<C>]) -> Vec<NovikovSeries<C>> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c.scale(&C::from_int(i as i64)))
        .collect()
}

/// Lifts a simple root of the Λ₊-reduction of `poly` to a root modulo
/// T^order, by Newton iteration. The residual valuation at least doubles
/// per step once the correction enters Λ₊.
pub fn hensel_root<C: Coeff>(
    poly: &[NovikovSeries<C>],
    seed: C,
    order: &Exponent,
) -> Result<NovikovSeries<C>> {
    let order = Order::Finite(order.clone());
    // Reduction mod Λ₊: constant coefficients only.
    let reduced: Vec<C> = poly.iter().map(|c| c.coeff(&Exponent::zero())).collect();
    let p0 = horner(&reduced, &seed);
    if !p0.is_negligible() && p0.approx().norm() > 1e-9 {
        return Err(Error::SeedNotRoot(p0.approx().norm()));
    }
    let dreduced: Vec<C> = reduced
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c.clone() * C::from_int(i as i64))
        .collect();
    let d0 = horner(&dreduced, &seed);
    if d0.is_negligible() || d0.approx().norm() < 1e-9 {
        return Err(Error::DegenerateSeed(d0.approx().norm()));
    }

    let poly_t: Vec<_> = poly.iter().map(|c| c.truncate_to(order.clone())).collect();
    let dpoly = poly_derivative(&poly_t);
    let mut x = NovikovSeries::constant(seed).truncate_to(order.clone());
    let mut last_val: Option<Exponent> = None;
    for _ in 0..64 {
        let r = poly_eval(&poly_t, &x);
        match r.valuation() {
            Valuation::InfiniteToOrder(_) => return Ok(x),
            Valuation::Finite(v) => {
                if let Some(prev) = &last_val {
                    if v <= *prev {
                        return Err(Error::Internal(
                            "hensel iteration stalled; seed may be degenerate".into(),
                        ));
                    }
                }
                last_val = Some(v);
            }
        }
        let d = poly_eval(&dpoly, &x).invert_unit_to(order.clone())?;
        x = x.sub_ref(&r.mul_ref(&d)).truncate_to(order.clone());
    }
    let r = poly_eval(&poly_t, &x);
    if matches!(r.valuation(), Valuation::InfiniteToOrder(_)) {
        Ok(x)
    } else {
        Err(Error::Internal("hensel iteration did not converge".into()))
    }
}

fn horner<C: Coeff>(coeffs: &[C], x: &C) -> C {
    let mut acc = C::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x.clone() + c.clone();
    }
    acc
}

//! Scalar arithmetic shared by every other module.
//!
//! Two backends implement [`Coefficient`]:
//!
//! - [`ExactScalar`]: a polynomial in the real coupling `ε` and the fugacity
//!   `z = e^{μ/2}` with Gaussian-integer coefficients. The complex-rotated
//!   coupling `η = iε` is never stored as a variable; it appears as the
//!   monomial `i·ε`, which makes complex conjugation purely coefficient-wise.
//! - [`NumericScalar`]: an ordinary `Complex64`.
//!
//! Identities of the construction are checked in the exact backend, physical
//! observables are computed in the numeric one, and [`poly_eval`] bridges the
//! two.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub type NumericScalar = Complex64;

/// Gaussian integer `re + i·im` with arbitrary-precision parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: im.into() }
    }

    pub fn zero() -> Self {
        GaussInt::default()
    }

    pub fn one() -> Self {
        GaussInt::new(1, 0)
    }

    pub fn i() -> Self {
        GaussInt::new(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussInt { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        GaussInt { re: &self.re * k, im: &self.im * k }
    }

    /// Both parts as `i64`, or an overflow error.
    pub fn to_i64_pair(&self) -> Result<(i64, i64)> {
        match (self.re.to_i64(), self.im.to_i64()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Overflow(format!("{self} does not fit in 64 bits"))),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Sum of absolute values of both parts (a cheap norm, zero iff zero).
    pub fn l1_norm(&self) -> f64 {
        self.re.abs().to_f64().unwrap_or(f64::INFINITY) + self.im.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "({}-{}i)", self.re, -&self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn add(self, rhs: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl<'a> Sub<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn sub(self, rhs: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl<'a> Mul<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn mul(self, rhs: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for &GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt { re: -&self.re, im: -&self.im }
    }
}

/// Exponents of `ε^eps · z^z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub eps: u32,
    pub z: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { eps: 0, z: 0 };

    pub fn new(eps: u32, z: u32) -> Self {
        Monomial { eps, z }
    }

    fn times(self, other: Monomial) -> Monomial {
        Monomial { eps: self.eps + other.eps, z: self.z + other.z }
    }
}

/// Polynomial in `ε` and `z` with Gaussian-integer coefficients.
///
/// Zero coefficients are never stored, so structural equality is equality of
/// polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    terms: BTreeMap<Monomial, GaussInt>,
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar::default()
    }

    pub fn one() -> Self {
        ExactScalar::integer(1)
    }

    pub fn integer(c: i64) -> Self {
        ExactScalar::gauss(c, 0)
    }

    pub fn gauss(re: i64, im: i64) -> Self {
        ExactScalar::monomial(Monomial::ONE, GaussInt::new(re, im))
    }

    pub fn monomial(m: Monomial, c: GaussInt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        ExactScalar { terms }
    }

    /// The real coupling `ε`.
    pub fn epsilon() -> Self {
        ExactScalar::monomial(Monomial::new(1, 0), GaussInt::one())
    }

    /// `η = iε`.
    pub fn eta() -> Self {
        ExactScalar::monomial(Monomial::new(1, 0), GaussInt::i())
    }

    /// Fugacity `z = e^{μ/2}`.
    pub fn fugacity() -> Self {
        ExactScalar::monomial(Monomial::new(0, 1), GaussInt::one())
    }

    /// Builds from arbitrary (possibly repeated or zero) terms.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, GaussInt)>,
    {
        let mut out = ExactScalar::zero();
        for (m, c) in terms {
            out.add_term(m, &c);
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: Monomial) -> GaussInt {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    /// Highest power of `ε` present (0 for the zero polynomial).
    pub fn eps_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.eps).max().unwrap_or(0)
    }

    pub fn z_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.z).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: &GaussInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                let sum = &*slot + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn add_assign_ref(&mut self, rhs: &ExactScalar) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c);
        }
    }

    /// Drops zero coefficients. Values built through the public API are
    /// already canonical; this exists for the idempotence property.
    pub fn normalize(&self) -> ExactScalar {
        ExactScalar::from_terms(self.terms.iter().map(|(m, c)| (*m, c.clone())))
    }

    /// Collects the `z^b` coefficient as a polynomial in `ε` alone.
    pub fn z_component(&self, b: u32) -> ExactScalar {
        ExactScalar {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.z == b)
                .map(|(m, c)| (Monomial::new(m.eps, 0), c.clone()))
                .collect(),
        }
    }

    /// Substitutes `ε = num/den` and multiplies by `den^scale`, keeping `z`
    /// formal. The result has integer coefficients as long as `scale` is at
    /// least the `ε`-degree.
    pub fn substitute_epsilon(&self, num: i64, den: i64, scale: u32) -> Result<ExactScalar> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        if self.eps_degree() > scale {
            return Err(Error::InvalidArgument(format!(
                "scale {scale} below epsilon degree {}",
                self.eps_degree()
            )));
        }
        let num = BigInt::from(num);
        let den = BigInt::from(den);
        let mut out = ExactScalar::zero();
        for (m, c) in &self.terms {
            let k = num_traits::pow(num.clone(), m.eps as usize)
                * num_traits::pow(den.clone(), (scale - m.eps) as usize);
            out.add_term(Monomial::new(0, m.z), &c.scale(&k));
        }
        Ok(out)
    }

    /// Sum of coefficient magnitudes (zero iff the polynomial is zero).
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(GaussInt::l1_norm).sum()
    }

    /// `(re+imi)·ε^a·z^b + ...`, or `0`.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(m, c)| format!("{c}·ε^{}·z^{}", m.eps, m.z))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// `[[a, b, re, im], ...]`. Parts that do not fit in `i64` are written as
    /// decimal strings.
    pub fn to_json(&self) -> Value {
        fn int(v: &BigInt) -> Value {
            match v.to_i64() {
                Some(x) => Value::from(x),
                None => Value::String(v.to_string()),
            }
        }
        Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| Value::Array(vec![m.eps.into(), m.z.into(), int(&c.re), int(&c.im)]))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<ExactScalar> {
        fn int(v: &Value) -> Result<BigInt> {
            match v {
                Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| Error::InvalidArgument(format!("non-integer coefficient {n}"))),
                Value::String(s) => s
                    .parse::<BigInt>()
                    .map_err(|e| Error::InvalidArgument(format!("coefficient {s}: {e}"))),
                other => Err(Error::InvalidArgument(format!("bad coefficient {other}"))),
            }
        }
        fn exp(v: &Value) -> Result<u32> {
            v.as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| Error::InvalidArgument(format!("bad exponent {v}")))
        }
        let arr = v
            .as_array()
            .ok_or_else(|| Error::InvalidArgument("expected an array of terms".into()))?;
        let mut terms = Vec::with_capacity(arr.len());
        for t in arr {
            match t.as_array().map(Vec::as_slice) {
                Some([a, b, re, im]) => {
                    terms.push((Monomial::new(exp(a)?, exp(b)?), GaussInt { re: int(re)?, im: int(im)? }))
                }
                _ => return Err(Error::InvalidArgument(format!("bad term {t}"))),
            }
        }
        Ok(ExactScalar::from_terms(terms))
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Exact product of two polynomials.
pub fn poly_mul(a: &ExactScalar, b: &ExactScalar) -> ExactScalar {
    let mut out = ExactScalar::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            out.add_term(ma.times(*mb), &(ca * cb));
        }
    }
    out
}

/// Coefficient-wise Gaussian conjugation (`ε`, `z` real).
pub fn poly_conj(a: &ExactScalar) -> ExactScalar {
    ExactScalar {
        terms: a.terms.iter().map(|(m, c)| (*m, c.conj())).collect(),
    }
}

/// Evaluates at real `ε` and `z = e^{μ/2}`.
pub fn poly_eval(a: &ExactScalar, epsilon: f64, mu: f64) -> Result<Complex64> {
    if !epsilon.is_finite() || !mu.is_finite() {
        return Err(Error::NonFinite("evaluating at a non-finite point".into()));
    }
    let z = (mu / 2.0).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, c) in &a.terms {
        acc += c.to_complex() * epsilon.powi(m.eps as i32) * z.powi(m.z as i32);
    }
    if acc.re.is_finite() && acc.im.is_finite() {
        Ok(acc)
    } else {
        Err(Error::NonFinite(format!("evaluating {a} at ε={epsilon}, μ={mu}")))
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, &-c);
        }
        out
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        poly_mul(self, rhs)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

/// Ring interface implemented by both scalar backends.
///
/// Method names avoid the `std::ops` names so that generic code never
/// resolves to an operator trait by accident.
pub trait Coefficient: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Whether arithmetic is exact (identities must hold with zero residual).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_gauss(re: i64, im: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    fn times(&self, rhs: &Self) -> Self;
    fn negated(&self) -> Self;
    fn conjugate(&self) -> Self;

    fn accumulate(&mut self, rhs: &Self) {
        *self = self.plus(rhs);
    }

    /// Realizes an exact polynomial in this backend. Exact scalars keep `ε`
    /// and `z` formal; numeric scalars evaluate at `(epsilon, mu)`.
    fn from_exact(x: &ExactScalar, epsilon: f64, mu: f64) -> Result<Self>;

    /// Numeric values have no exact counterpart in general.
    fn from_complex(z: Complex64) -> Option<Self>;

    /// The fugacity `e^{μ/2}` (formal `z` in exact mode).
    fn fugacity(mu: f64) -> Self;

    /// The coupling `ε` (formal in exact mode).
    fn coupling(epsilon: f64) -> Self;

    /// Size of a residual: zero iff the value is zero.
    fn residual(&self) -> f64;

    fn to_complex(&self, epsilon: f64, mu: f64) -> Result<Complex64>;

    /// Machine-exchange form: the term array for exact values, `[re, im]`
    /// for numeric ones.
    fn to_json(&self) -> Value;

    fn to_text(&self) -> String;
}

impl Coefficient for ExactScalar {
    const EXACT: bool = true;

    fn zero() -> Self {
        ExactScalar::zero()
    }
    fn one() -> Self {
        ExactScalar::one()
    }
    fn from_gauss(re: i64, im: i64) -> Self {
        ExactScalar::gauss(re, im)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        poly_mul(self, rhs)
    }
    fn negated(&self) -> Self {
        -self
    }
    fn conjugate(&self) -> Self {
        poly_conj(self)
    }
    fn accumulate(&mut self, rhs: &Self) {
        self.add_assign_ref(rhs);
    }
    fn from_exact(x: &ExactScalar, _epsilon: f64, _mu: f64) -> Result<Self> {
        Ok(x.clone())
    }
    fn from_complex(_z: Complex64) -> Option<Self> {
        None
    }
    fn fugacity(_mu: f64) -> Self {
        ExactScalar::fugacity()
    }
    fn coupling(_epsilon: f64) -> Self {
        ExactScalar::epsilon()
    }
    fn residual(&self) -> f64 {
        self.l1_norm()
    }
    fn to_complex(&self, epsilon: f64, mu: f64) -> Result<Complex64> {
        poly_eval(self, epsilon, mu)
    }
    fn to_json(&self) -> Value {
        ExactScalar::to_json(self)
    }
    fn to_text(&self) -> String {
        ExactScalar::to_text(self)
    }
}

impl Coefficient for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_gauss(re: i64, im: i64) -> Self {
        Complex64::new(re as f64, im as f64)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negated(&self) -> Self {
        -self
    }
    fn conjugate(&self) -> Self {
        self.conj()
    }
    fn accumulate(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn from_exact(x: &ExactScalar, epsilon: f64, mu: f64) -> Result<Self> {
        poly_eval(x, epsilon, mu)
    }
    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn fugacity(mu: f64) -> Self {
        Complex64::new((mu / 2.0).exp(), 0.0)
    }
    fn coupling(epsilon: f64) -> Self {
        Complex64::new(epsilon, 0.0)
    }
    fn residual(&self) -> f64 {
        self.norm()
    }
    fn to_complex(&self, _epsilon: f64, _mu: f64) -> Result<Complex64> {
        Ok(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }
    fn to_text(&self) -> String {
        format!("{:e}{:+e}i", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eta() -> ExactScalar {
        ExactScalar::eta()
    }

    #[test]
    fn eta_squared_is_minus_eps_squared() {
        let sq = poly_mul(&eta(), &eta());
        let expected = ExactScalar::monomial(Monomial::new(2, 0), GaussInt::new(-1, 0));
        assert_eq!(sq, expected);
    }

    #[test]
    fn spin_composite_at_vacuum_level() {
        // η·(2p − l) with p = 1/2 − 1/η and l = 0 is η − 2.
        let composite = &eta() - &ExactScalar::integer(2);
        assert_eq!(composite.coefficient(Monomial::new(1, 0)), GaussInt::new(0, 1));
        assert_eq!(composite.coefficient(Monomial::ONE), GaussInt::new(-2, 0));
        assert_eq!(composite.num_terms(), 2);
    }

    #[test]
    fn multiplicative_identity() {
        let a = ExactScalar::from_terms([
            (Monomial::new(0, 0), GaussInt::new(2, 0)),
            (Monomial::new(1, 1), GaussInt::new(0, 3)),
        ]);
        assert_eq!(poly_mul(&a, &ExactScalar::one()), a);
    }

    #[test]
    fn conjugation_examples() {
        assert_eq!(poly_conj(&eta()), -&eta());
        // 2 − iε + 3iε·z  →  2 + iε − 3iε·z
        let a = ExactScalar::from_terms([
            (Monomial::new(0, 0), GaussInt::new(2, 0)),
            (Monomial::new(1, 0), GaussInt::new(0, -1)),
            (Monomial::new(1, 1), GaussInt::new(0, 3)),
        ]);
        let b = ExactScalar::from_terms([
            (Monomial::new(0, 0), GaussInt::new(2, 0)),
            (Monomial::new(1, 0), GaussInt::new(0, 1)),
            (Monomial::new(1, 1), GaussInt::new(0, -3)),
        ]);
        assert_eq!(poly_conj(&a), b);
        assert_eq!(poly_conj(&poly_conj(&a)), a);
    }

    #[test]
    fn evaluation_examples() {
        let v = poly_eval(&eta(), 1.0, 0.0).unwrap();
        assert_eq!(v, Complex64::new(0.0, 1.0));
        let z2 = ExactScalar::monomial(Monomial::new(0, 2), GaussInt::one());
        let v = poly_eval(&z2, 0.0, 2.0 * 2f64.ln()).unwrap();
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        let neg_sq = poly_mul(&eta(), &eta());
        assert_eq!(poly_eval(&neg_sq, 0.5, 0.0).unwrap(), Complex64::new(-0.25, 0.0));
    }

    #[test]
    fn evaluation_overflow_is_an_error() {
        let big = ExactScalar::monomial(Monomial::new(400, 0), GaussInt::one());
        assert!(matches!(poly_eval(&big, 1e10, 0.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let a = &eta() - &eta();
        assert!(a.is_zero());
        assert_eq!(a.num_terms(), 0);
        assert_eq!(a.to_text(), "0");
    }

    #[test]
    fn text_and_json_forms() {
        let a = ExactScalar::from_terms([
            (Monomial::new(0, 0), GaussInt::new(2, 0)),
            (Monomial::new(1, 2), GaussInt::new(0, -1)),
        ]);
        assert_eq!(a.to_text(), "(2+0i)·ε^0·z^0 + (0-1i)·ε^1·z^2");
        let j = a.to_json();
        assert_eq!(j.to_string(), "[[0,0,2,0],[1,2,0,-1]]");
        assert_eq!(ExactScalar::from_json(&j).unwrap(), a);
    }

    #[test]
    fn big_coefficients_survive_json() {
        let huge = BigInt::from(i64::MAX) * BigInt::from(1000);
        let a = ExactScalar::monomial(Monomial::ONE, GaussInt { re: huge, im: BigInt::from(1) });
        assert_eq!(ExactScalar::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn rational_substitution() {
        // (1 + iε)(1 + iε) at ε = 1/2, scaled by 2²: (2 + i)² = 3 + 4i
        let p = poly_mul(&(&ExactScalar::one() + &eta()), &(&ExactScalar::one() + &eta()));
        let s = p.substitute_epsilon(1, 2, 2).unwrap();
        assert_eq!(s, ExactScalar::gauss(3, 4));
        assert!(p.substitute_epsilon(1, 2, 1).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = ExactScalar> {
        prop::collection::vec((0u32..4, 0u32..3, -20i64..20, -20i64..20), 0..6).prop_map(|ts| {
            ExactScalar::from_terms(ts.into_iter().map(|(a, b, re, im)| (Monomial::new(a, b), GaussInt::new(re, im))))
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn eval_commutes_with_conjugation(a in arb_poly(), eps in -2.0f64..2.0, mu in -2.0f64..2.0) {
            let lhs = poly_eval(&poly_conj(&a), eps, mu).unwrap();
            let rhs = poly_eval(&a, eps, mu).unwrap().conj();
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }

        #[test]
        fn eval_is_a_ring_homomorphism(a in arb_poly(), b in arb_poly(), eps in -2.0f64..2.0, mu in -2.0f64..2.0) {
            let lhs = poly_eval(&poly_mul(&a, &b), eps, mu).unwrap();
            let rhs = poly_eval(&a, eps, mu).unwrap() * poly_eval(&b, eps, mu).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
        }

        #[test]
        fn normalize_is_idempotent(a in arb_poly()) {
            prop_assert_eq!(a.normalize().normalize(), a.normalize());
            prop_assert_eq!(a.normalize(), a.clone());
        }
    }
}

//! Exact arithmetic over sums of rational multiples of square roots.
//!
//! A [`RadicalScalar`] stores a number of the form `q₁·√d₁ + … + q_k·√d_k`
//! with rational coefficients and distinct square-free positive integer
//! radicands; the rational part uses radicand 1. Square roots of distinct
//! square-free integers are linearly independent over the rationals, so two
//! values are equal exactly when their canonical term maps coincide.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Trial-division limit used when reducing a radicand to square-free form.
///
/// Radicands whose square factors are all beyond this bound are stored
/// as-is; equality testing only needs a consistent canonical form, and every
/// radicand produced by the constructions in this crate comes from small
/// user-supplied rationals.
pub const DEFAULT_FACTOR_BOUND: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("cannot take a real square root of the negative rational {0}")]
    NegativeRadicand(BigRational),
    #[error("invalid scalar encoding: {0}")]
    Encoding(String),
}

/// An exact number `Σ qᵢ·√dᵢ`.
///
/// Invariants: no stored coefficient is zero, radicands are positive and
/// square-free (up to the factoring bound), and the rational part is keyed
/// by radicand 1.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RadicalScalar {
    terms: BTreeMap<BigUint, BigRational>,
}

fn zero_scalar() -> &'static RadicalScalar {
    static ZERO: OnceLock<RadicalScalar> = OnceLock::new();
    ZERO.get_or_init(RadicalScalar::zero)
}

impl RadicalScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(BigUint::one(), q);
        }
        RadicalScalar { terms }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Convenience constructor for a plain rational `p/q`.
    pub fn rational(p: i64, q: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// Builds `coeff·√radicand`, canonicalizing the radicand square-free.
    pub fn radical_term(coeff: BigRational, radicand: BigUint) -> Result<Self, ExactError> {
        if radicand.is_zero() {
            return Err(ExactError::Encoding("radicand must be positive".into()));
        }
        let mut terms = BTreeMap::new();
        insert_term(&mut terms, radicand, coeff, DEFAULT_FACTOR_BOUND);
        Ok(RadicalScalar { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the value as a rational if it has no radical part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (rad, q) = self.terms.iter().next().unwrap();
                rad.is_one().then(|| q.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Floating-point evaluation, for reports and numeric cross-checks only.
    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(rad, q)| {
                let r = rad.to_f64().unwrap_or(f64::INFINITY).sqrt();
                q.to_f64().unwrap_or(f64::NAN) * r
            })
            .sum()
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(rad, q)| (rad.clone(), q * k))
            .collect();
        RadicalScalar { terms }
    }

    fn add_assign_ref(&mut self, rhs: &RadicalScalar) {
        for (rad, q) in &rhs.terms {
            let entry = self
                .terms
                .entry(rad.clone())
                .or_insert_with(BigRational::zero);
            *entry += q;
            if entry.is_zero() {
                self.terms.remove(rad);
            }
        }
    }

    fn mul_ref(&self, rhs: &RadicalScalar) -> RadicalScalar {
        let mut terms: BTreeMap<BigUint, BigRational> = BTreeMap::new();
        for (d1, q1) in &self.terms {
            for (d2, q2) in &rhs.terms {
                // √d₁·√d₂ = g·√(d₁/g · d₂/g) with g = gcd(d₁,d₂); the new
                // radicand is square-free whenever the inputs are.
                let g = d1.gcd(d2);
                let rad = (d1 / &g) * (d2 / &g);
                let coeff = q1 * q2 * BigRational::from_integer(BigInt::from(g));
                let entry = terms.entry(rad.clone()).or_insert_with(BigRational::zero);
                *entry += coeff;
                if entry.is_zero() {
                    terms.remove(&rad);
                }
            }
        }
        RadicalScalar { terms }
    }
}

fn insert_term(
    terms: &mut BTreeMap<BigUint, BigRational>,
    radicand: BigUint,
    coeff: BigRational,
    bound: u64,
) {
    if coeff.is_zero() {
        return;
    }
    let (outside, rad) = extract_square_free(&radicand, bound);
    let coeff = coeff * BigRational::from_integer(BigInt::from(outside));
    let entry = terms.entry(rad.clone()).or_insert_with(BigRational::zero);
    *entry += coeff;
    if entry.is_zero() {
        terms.remove(&rad);
    }
}

/// Splits `n = s²·d` with `d` square-free, by trial division up to `bound`
/// followed by a perfect-square check on the remaining cofactor. Returns
/// `(s, d)`.
fn extract_square_free(n: &BigUint, bound: u64) -> (BigUint, BigUint) {
    debug_assert!(!n.is_zero());
    if let Some(small) = n.to_u128() {
        let (s, d) = extract_square_free_u128(small, bound);
        return (BigUint::from(s), BigUint::from(d));
    }
    let mut m = n.clone();
    let mut outside = BigUint::one();
    let mut rad = BigUint::one();
    let mut p: u64 = 2;
    while p <= bound {
        let pp = BigUint::from(p) * BigUint::from(p);
        if &pp > &m {
            break;
        }
        if (&m % p).is_zero() {
            let mut e = 0u32;
            while (&m % p).is_zero() {
                m /= p;
                e += 1;
            }
            outside *= BigUint::from(p).pow(e / 2);
            if e % 2 == 1 {
                rad *= p;
            }
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    let r = m.sqrt();
    if &r * &r == m {
        outside *= r;
    } else {
        rad *= m;
    }
    (outside, rad)
}

fn extract_square_free_u128(n: u128, bound: u64) -> (u128, u128) {
    let mut m = n;
    let mut outside: u128 = 1;
    let mut rad: u128 = 1;
    let mut p: u128 = 2;
    while p <= bound as u128 && p.checked_mul(p).is_some_and(|pp| pp <= m) {
        if m % p == 0 {
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            outside *= p.pow(e / 2);
            if e % 2 == 1 {
                rad *= p;
            }
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    let r = m.sqrt();
    if r * r == m {
        outside *= r;
    } else {
        rad *= m;
    }
    (outside, rad)
}

/// Exact square root of a nonnegative rational, as a single radical term.
///
/// `√(p/q)` is normalised as `√(pq)/q`, and the radicand `pq` is reduced to
/// square-free form, so `radical_sqrt(r)² = r` holds exactly.
pub fn radical_sqrt(r: &BigRational) -> Result<RadicalScalar, ExactError> {
    radical_sqrt_with_bound(r, DEFAULT_FACTOR_BOUND)
}

/// [`radical_sqrt`] with an explicit trial-division bound.
pub fn radical_sqrt_with_bound(r: &BigRational, bound: u64) -> Result<RadicalScalar, ExactError> {
    if r.is_negative() {
        return Err(ExactError::NegativeRadicand(r.clone()));
    }
    if r.is_zero() {
        return Ok(RadicalScalar::zero());
    }
    let p = r.numer().magnitude();
    let q = r.denom().magnitude();
    let n = p * q;
    let (s, d) = extract_square_free(&n, bound);
    let coeff = BigRational::new(BigInt::from(s), BigInt::from(q.clone()));
    let mut terms = BTreeMap::new();
    terms.insert(d, coeff);
    Ok(RadicalScalar { terms })
}

/// Exact squared Euclidean distance `Σ (pᵢ−qᵢ)²`.
///
/// The shorter vector is implicitly padded with zeros, matching the usual
/// embedding of a lower-dimensional space into a higher one.
pub fn sq_norm_diff(p: &[RadicalScalar], q: &[RadicalScalar]) -> RadicalScalar {
    let n = p.len().max(q.len());
    let mut acc = RadicalScalar::zero();
    for i in 0..n {
        let a = p.get(i).unwrap_or_else(|| zero_scalar());
        let b = q.get(i).unwrap_or_else(|| zero_scalar());
        if a.is_zero() && b.is_zero() {
            continue;
        }
        let d = a - b;
        acc += &(&d * &d);
    }
    acc
}

impl Add for &RadicalScalar {
    type Output = RadicalScalar;
    fn add(self, rhs: &RadicalScalar) -> RadicalScalar {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Sub for &RadicalScalar {
    type Output = RadicalScalar;
    fn sub(self, rhs: &RadicalScalar) -> RadicalScalar {
        let mut out = self.clone();
        out.add_assign_ref(&(-rhs));
        out
    }
}

impl Mul for &RadicalScalar {
    type Output = RadicalScalar;
    fn mul(self, rhs: &RadicalScalar) -> RadicalScalar {
        self.mul_ref(rhs)
    }
}

impl Neg for &RadicalScalar {
    type Output = RadicalScalar;
    fn neg(self) -> RadicalScalar {
        let terms = self
            .terms
            .iter()
            .map(|(rad, q)| (rad.clone(), -q))
            .collect();
        RadicalScalar { terms }
    }
}

impl Add for RadicalScalar {
    type Output = RadicalScalar;
    fn add(self, rhs: RadicalScalar) -> RadicalScalar {
        &self + &rhs
    }
}

impl Sub for RadicalScalar {
    type Output = RadicalScalar;
    fn sub(self, rhs: RadicalScalar) -> RadicalScalar {
        &self - &rhs
    }
}

impl Mul for RadicalScalar {
    type Output = RadicalScalar;
    fn mul(self, rhs: RadicalScalar) -> RadicalScalar {
        &self * &rhs
    }
}

impl Neg for RadicalScalar {
    type Output = RadicalScalar;
    fn neg(self) -> RadicalScalar {
        -&self
    }
}

impl AddAssign<&RadicalScalar> for RadicalScalar {
    fn add_assign(&mut self, rhs: &RadicalScalar) {
        self.add_assign_ref(rhs);
    }
}

impl fmt::Display for RadicalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (rad, q)) in self.terms.iter().enumerate() {
            let (sign, mag) = if q.is_negative() {
                ("-", -q)
            } else {
                ("+", q.clone())
            };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if rad.is_one() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "√{}", rad)?;
            } else {
                write!(f, "{}·√{}", mag, rad)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RadicalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[derive(Serialize, Deserialize)]
struct TermDto {
    num: String,
    den: String,
    rad: String,
}

impl Serialize for RadicalScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (rad, q) in &self.terms {
            seq.serialize_element(&TermDto {
                num: q.numer().to_string(),
                den: q.denom().to_string(),
                rad: rad.to_string(),
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RadicalScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<TermDto>::deserialize(deserializer)?;
        let mut terms = BTreeMap::new();
        for t in raw {
            let num: BigInt = t
                .num
                .parse()
                .map_err(|_| D::Error::custom(format!("bad numerator {:?}", t.num)))?;
            let den: BigInt = t
                .den
                .parse()
                .map_err(|_| D::Error::custom(format!("bad denominator {:?}", t.den)))?;
            let rad: BigUint = t
                .rad
                .parse()
                .map_err(|_| D::Error::custom(format!("bad radicand {:?}", t.rad)))?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            if rad.is_zero() {
                return Err(D::Error::custom("radicand must be positive"));
            }
            insert_term(
                &mut terms,
                rad,
                BigRational::new(num, den),
                DEFAULT_FACTOR_BOUND,
            );
        }
        Ok(RadicalScalar { terms })
    }
}

/// Serde adaptors for big rationals and big integers as decimal strings.
pub mod ratio_serde {
    use super::*;

    pub fn rational_to_string(r: &BigRational) -> String {
        if r.denom().is_one() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        }
    }

    pub fn rational_from_str(s: &str) -> Result<BigRational, String> {
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num: BigInt = num.trim().parse().map_err(|_| format!("bad numerator in {:?}", s))?;
        let den: BigInt = den.trim().parse().map_err(|_| format!("bad denominator in {:?}", s))?;
        if den.is_zero() {
            return Err(format!("zero denominator in {:?}", s));
        }
        Ok(BigRational::new(num, den))
    }

    pub mod rational {
        use super::*;

        pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&rational_to_string(r))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
            let raw = String::deserialize(d)?;
            rational_from_str(&raw).map_err(DeError::custom)
        }
    }

    pub mod rational_vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            let strings: Vec<String> = v.iter().map(rational_to_string).collect();
            strings.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| rational_from_str(s).map_err(DeError::custom))
                .collect()
        }
    }

    pub mod biguint {
        use super::*;

        pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&v.to_string())
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
            let raw = String::deserialize(d)?;
            raw.parse().map_err(|_| DeError::custom("bad integer"))
        }
    }

    pub mod biguint_vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
            let strings: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            strings.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| s.parse().map_err(|_| DeError::custom("bad integer")))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn sqrt_term(p: i64, q: i64, rad: u64) -> RadicalScalar {
        RadicalScalar::radical_term(rat(p, q), BigUint::from(rad)).unwrap()
    }

    #[test]
    fn sqrt_of_eight_is_two_root_two() {
        let got = radical_sqrt(&rat(8, 1)).unwrap();
        assert_eq!(got, sqrt_term(2, 1, 2));
    }

    #[test]
    fn sqrt_of_zero_is_zero() {
        assert!(radical_sqrt(&rat(0, 1)).unwrap().is_zero());
    }

    #[test]
    fn sqrt_of_one_half() {
        let got = radical_sqrt(&rat(1, 2)).unwrap();
        assert_eq!(got, sqrt_term(1, 2, 2));
    }

    #[test]
    fn sqrt_rejects_negative() {
        assert!(matches!(
            radical_sqrt(&rat(-1, 4)),
            Err(ExactError::NegativeRadicand(_))
        ));
    }

    #[test]
    fn root_two_squared_is_two() {
        let r2 = sqrt_term(1, 1, 2);
        assert_eq!(&r2 * &r2, RadicalScalar::from_integer(2));
    }

    #[test]
    fn cancellation_yields_zero() {
        let a = sqrt_term(3, 1, 2);
        let b = sqrt_term(-3, 1, 2);
        assert!((&a + &b).is_zero());
    }

    #[test]
    fn one_plus_root_two_squared() {
        // (1+√2)² expands to 3 + 2√2.
        let x = &RadicalScalar::one() + &sqrt_term(1, 1, 2);
        let sq = &x * &x;
        let expected = &RadicalScalar::from_integer(3) + &sqrt_term(2, 1, 2);
        assert_eq!(sq, expected);
        let float = x.to_f64() * x.to_f64();
        assert!((sq.to_f64() - float).abs() < 1e-9 * float.abs());
    }

    #[test]
    fn sq_norm_diff_examples() {
        let half_r2 = sqrt_term(1, 2, 2);
        let zero = RadicalScalar::zero();
        let p = vec![half_r2.clone(), zero.clone()];
        let q = vec![zero.clone(), half_r2.clone()];
        assert_eq!(sq_norm_diff(&p, &q), RadicalScalar::one());
        assert!(sq_norm_diff(&p, &p).is_zero());

        let p = vec![sqrt_term(1, 1, 2), sqrt_term(1, 1, 3)];
        let origin: Vec<RadicalScalar> = vec![];
        assert_eq!(sq_norm_diff(&p, &origin), RadicalScalar::from_integer(5));
    }

    #[test]
    fn mixed_radicand_product() {
        // √6·√10 = 2√15
        let got = &sqrt_term(1, 1, 6) * &sqrt_term(1, 1, 10);
        assert_eq!(got, sqrt_term(2, 1, 15));
    }

    #[test]
    fn serde_roundtrip_canonicalizes() {
        let x = &sqrt_term(3, 4, 18) + &RadicalScalar::rational(-7, 5);
        let json = serde_json::to_string(&x).unwrap();
        let back: RadicalScalar = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
        // A non-canonical encoding (radicand 18 = 3²·2) parses to the same
        // value as its canonical form 3·√2·(3/4) = 9/4·√2.
        let raw = r#"[{"num":"3","den":"4","rad":"18"}]"#;
        let parsed: RadicalScalar = serde_json::from_str(raw).unwrap();
        assert_eq!(parsed, sqrt_term(9, 4, 2));
    }

    #[test]
    fn large_prime_square_detected() {
        // 1 000 003 is prime and exceeds the default bound; its square is
        // still recognised by the perfect-square check.
        let p = BigUint::from(1_000_003u64);
        let (s, d) = extract_square_free(&(&p * &p), DEFAULT_FACTOR_BOUND);
        assert_eq!(s, p);
        assert_eq!(d, BigUint::one());
    }

    fn arb_rational() -> impl Strategy<Value = BigRational> {
        (-40i64..=40, 1i64..=12).prop_map(|(p, q)| rat(p, q))
    }

    fn arb_nonneg_rational() -> impl Strategy<Value = BigRational> {
        (0i64..=5000, 1i64..=60).prop_map(|(p, q)| rat(p, q))
    }

    fn arb_scalar() -> impl Strategy<Value = RadicalScalar> {
        let rads = prop::sample::subsequence(vec![1u64, 2, 3, 5, 6, 7, 10, 15], 0..=3);
        (rads, prop::collection::vec(arb_rational(), 3)).prop_map(|(rads, coeffs)| {
            let mut acc = RadicalScalar::zero();
            for (rad, c) in rads.into_iter().zip(coeffs) {
                acc += &RadicalScalar::radical_term(c, BigUint::from(rad)).unwrap();
            }
            acc
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn sqrt_squares_back(r in arb_nonneg_rational()) {
            let s = radical_sqrt(&r).unwrap();
            prop_assert_eq!(&s * &s, RadicalScalar::from_rational(r));
        }
    }

    proptest! {
        #[test]
        fn field_axioms(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            let ab_c = &(&a + &b) + &c;
            let a_bc = &a + &(&b + &c);
            prop_assert_eq!(ab_c, a_bc);

            let abc1 = &(&a * &b) * &c;
            let abc2 = &a * &(&b * &c);
            prop_assert_eq!(abc1, abc2);

            let dist1 = &a * &(&b + &c);
            let dist2 = &(&a * &b) + &(&a * &c);
            prop_assert_eq!(dist1, dist2);

            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn product_matches_float(a in arb_scalar(), b in arb_scalar()) {
            let exact = (&a * &b).to_f64();
            let approx = a.to_f64() * b.to_f64();
            let scale = exact.abs().max(approx.abs()).max(1.0);
            prop_assert!((exact - approx).abs() <= 1e-9 * scale);
        }

        #[test]
        fn serde_roundtrip(a in arb_scalar()) {
            let json = serde_json::to_string(&a).unwrap();
            let back: RadicalScalar = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}

//! Coefficient rings for the engine.
//!
//! Group construction and differential evaluation are generic over a small
//! ring interface.  Three instantiations are supported:
//!
//! - [`num_rational::BigRational`] — exact arithmetic for degenerate-fiber
//!   data and invariant comparisons;
//! - [`num_complex::Complex64`] — numeric instances used for contour
//!   integration and period matrices;
//! - [`TruncatedSeries`] — multivariate power series in the gluing
//!   parameters `y_e`, truncated at a fixed total degree, with exact
//!   rational coefficients.
//!
//! Equality is exact on exact rings; floating rings compare within an
//! explicit absolute tolerance through [`Ring::close_to`].

mod bernoulli;
mod nc;
mod series;

pub use bernoulli::{bernoulli_expansion, bernoulli_numbers};
pub use nc::{nc_ad_series, shuffle_words, NcAlphabet, NcCoeff, NcSeries, NcWord};
pub use series::{SeriesContext, SeriesData, TermData, TruncatedSeries};

use crate::error::RingError;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Commutative coefficient ring used by Möbius maps and the group engine.
///
/// `order` is the valuation with respect to the ideal generated by the
/// series variables: it is `Some(0)` for nonzero elements of a field,
/// the minimal total degree for a nonzero truncated series, and `None`
/// for zero (infinite order).
pub trait Ring: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// Whether the element has a multiplicative inverse in the ring.
    fn is_unit(&self) -> bool;
    fn inv(&self) -> Result<Self, RingError>;
    fn from_i64(n: i64) -> Self;
    fn order(&self) -> Option<usize>;
    /// Exact equality on exact rings; absolute-`tol` closeness on floats.
    fn close_to(&self, other: &Self, tol: f64) -> bool;

    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    fn div(&self, rhs: &Self) -> Result<Self, RingError> {
        Ok(self.mul(&rhs.inv()?))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i64(num)
            .div(&Self::from_i64(den))
            .expect("nonzero integer denominator")
    }
}

impl Ring for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_unit(&self) -> bool {
        !Zero::is_zero(self)
    }

    fn inv(&self) -> Result<Self, RingError> {
        if Zero::is_zero(self) {
            return Err(RingError::NotAUnit("rational zero".into()));
        }
        Ok(self.recip())
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }

    fn order(&self) -> Option<usize> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(0)
        }
    }

    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn is_unit(&self) -> bool {
        !Ring::is_zero(self) && self.norm().is_finite()
    }

    fn inv(&self) -> Result<Self, RingError> {
        if !self.is_unit() {
            return Err(RingError::NotAUnit(format!("complex {self}")));
        }
        Ok(Complex64::new(1.0, 0.0) / self)
    }

    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn order(&self) -> Option<usize> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(0)
        }
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol
    }
}

/// Renders a rational as `num` or `num/den`, the form used in JSON output.
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom() == &num_bigint::BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `num`, `num/den`, or a decimal such as `-0.25` into a rational.
pub fn rational_from_str(s: &str) -> Result<BigRational, RingError> {
    let s = s.trim();
    let bad = |_| RingError::NotDivisible(format!("cannot parse rational `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: num_bigint::BigInt = n.trim().parse().map_err(bad)?;
        let d: num_bigint::BigInt = d.trim().parse().map_err(bad)?;
        if Zero::is_zero(&d) {
            return Err(RingError::NotAUnit(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int: num_bigint::BigInt = if int.is_empty() || int == "-" {
            Zero::zero()
        } else {
            int.parse().map_err(bad)?
        };
        let frac_digits = frac.len() as u32;
        let frac_num: num_bigint::BigInt = if frac.is_empty() {
            Zero::zero()
        } else {
            frac.parse().map_err(bad)?
        };
        let den = num_bigint::BigInt::from(10u32).pow(frac_digits);
        let frac_part = BigRational::new(frac_num, den);
        let int_part = BigRational::from_integer(int);
        return Ok(if negative {
            int_part - frac_part.abs()
        } else {
            int_part + frac_part
        });
    }
    let n: num_bigint::BigInt = s.parse().map_err(bad)?;
    Ok(BigRational::from_integer(n))
}

/// Best-effort conversion of an exact rational to `f64`.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        // Out-of-range numerator/denominator: divide leading approximations.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ring_basics() {
        let a = BigRational::from_ratio(3, 4);
        let b = BigRational::from_ratio(-1, 2);
        assert_eq!(a.add(&b), BigRational::from_ratio(1, 4));
        assert_eq!(a.mul(&b), BigRational::from_ratio(-3, 8));
        assert_eq!(a.inv().unwrap(), BigRational::from_ratio(4, 3));
        assert!(<BigRational as Ring>::zero().inv().is_err());
        assert_eq!(a.order(), Some(0));
        assert_eq!(<BigRational as Ring>::zero().order(), None);
    }

    #[test]
    fn complex_ring_basics() {
        let i = Complex64::new(0.0, 1.0);
        assert!(i.is_unit());
        assert!(i.mul(&i).close_to(&Complex64::from_i64(-1), 1e-15));
        assert!(Ring::inv(&i).unwrap().close_to(&Complex64::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn rational_strings_round_trip() {
        for s in ["3", "-7/2", "0", "22/7"] {
            let q = rational_from_str(s).unwrap();
            assert_eq!(rational_to_string(&q), s);
        }
        assert_eq!(
            rational_from_str("-0.25").unwrap(),
            BigRational::from_ratio(-1, 4)
        );
        assert_eq!(
            rational_from_str("1.5").unwrap(),
            BigRational::from_ratio(3, 2)
        );
        assert!(rational_from_str("x").is_err());
        assert!(rational_from_str("1/0").is_err());
    }
}

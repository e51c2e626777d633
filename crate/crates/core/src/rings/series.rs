//! Multivariate truncated power series with exact rational coefficients.
//!
//! A [`TruncatedSeries`] lives in `Q[y_1, ..., y_n] / (total degree > D)`.
//! Every arithmetic operation truncates at total degree `D`, so products of
//! elements of positive order eventually vanish: the variable ideal is
//! nilpotent, which is what makes constant-term units invertible by a finite
//! geometric series and makes fixed-point iterations terminate exactly.
//!
//! Elements created through [`Ring::zero`] / [`Ring::one`] / [`Ring::from_i64`]
//! carry no variable context and behave as scalars; they pick up the context
//! of the first contextful operand they are combined with.  Combining two
//! series from different contexts (different variable lists or cutoffs) is a
//! hard error rather than a silent coercion.

use super::{rational_from_str, rational_to_f64, rational_to_string, Ring};
use crate::error::RingError;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Shared descriptor: variable names (one per gluing parameter) and the
/// total-degree cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesContext {
    pub vars: Vec<String>,
    pub cutoff: usize,
}

/// An element of the truncated polynomial ring.  Terms map an exponent
/// vector (same length as `vars`) to a nonzero rational coefficient.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    ctx: Option<Arc<SeriesContext>>,
    terms: BTreeMap<Vec<u16>, BigRational>,
}

impl TruncatedSeries {
    /// Builds the context shared by all series of one computation.
    pub fn context(vars: Vec<String>, cutoff: usize) -> Arc<SeriesContext> {
        Arc::new(SeriesContext { vars, cutoff })
    }

    /// The zero series in an explicit context.
    pub fn zero_in(ctx: &Arc<SeriesContext>) -> Self {
        TruncatedSeries {
            ctx: Some(ctx.clone()),
            terms: BTreeMap::new(),
        }
    }

    /// The `i`-th variable as a series (or zero if the cutoff is 0).
    pub fn var(ctx: &Arc<SeriesContext>, i: usize) -> Self {
        assert!(i < ctx.vars.len(), "variable index out of range");
        let mut terms = BTreeMap::new();
        if ctx.cutoff >= 1 {
            let mut exp = vec![0u16; ctx.vars.len()];
            exp[i] = 1;
            terms.insert(exp, BigRational::from_integer(1.into()));
        }
        TruncatedSeries {
            ctx: Some(ctx.clone()),
            terms,
        }
    }

    /// A constant series in an explicit context.
    pub fn constant_in(ctx: &Arc<SeriesContext>, value: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(vec![0u16; ctx.vars.len()], value);
        }
        TruncatedSeries {
            ctx: Some(ctx.clone()),
            terms,
        }
    }

    /// A context-free scalar; unifies with any context on first contact.
    pub fn scalar(value: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(Vec::new(), value);
        }
        TruncatedSeries { ctx: None, terms }
    }

    pub fn ctx(&self) -> Option<&Arc<SeriesContext>> {
        self.ctx.as_ref()
    }

    fn cutoff(&self) -> Option<usize> {
        self.ctx.as_ref().map(|c| c.cutoff)
    }

    /// Re-keys a context-free scalar into `ctx`.
    fn promoted(&self, ctx: &Arc<SeriesContext>) -> Self {
        match &self.ctx {
            Some(own) => {
                debug_assert!(own.as_ref() == ctx.as_ref());
                self.clone()
            }
            None => {
                let mut terms = BTreeMap::new();
                if let Some(c) = self.terms.get(&Vec::new()) {
                    terms.insert(vec![0u16; ctx.vars.len()], c.clone());
                }
                TruncatedSeries {
                    ctx: Some(ctx.clone()),
                    terms,
                }
            }
        }
    }

    /// Common context of two operands, or an error if they disagree.
    fn unified(&self, other: &Self) -> Result<Option<Arc<SeriesContext>>, RingError> {
        match (&self.ctx, &other.ctx) {
            (None, None) => Ok(None),
            (Some(c), None) => Ok(Some(c.clone())),
            (None, Some(c)) => Ok(Some(c.clone())),
            (Some(a), Some(b)) => {
                if Arc::ptr_eq(a, b) || a.as_ref() == b.as_ref() {
                    Ok(Some(a.clone()))
                } else {
                    Err(RingError::ContextMismatch(format!(
                        "series contexts differ: vars {:?} cutoff {} vs vars {:?} cutoff {}",
                        a.vars, a.cutoff, b.vars, b.cutoff
                    )))
                }
            }
        }
    }

    fn binop(
        &self,
        other: &Self,
        f: impl Fn(&BTreeMap<Vec<u16>, BigRational>, &BTreeMap<Vec<u16>, BigRational>, Option<usize>) -> BTreeMap<Vec<u16>, BigRational>,
    ) -> Self {
        let ctx = self
            .unified(other)
            .expect("series from different contexts combined");
        match &ctx {
            None => TruncatedSeries {
                terms: f(&self.terms, &other.terms, None),
                ctx,
            },
            Some(c) => {
                let a = self.promoted(c);
                let b = other.promoted(c);
                TruncatedSeries {
                    terms: f(&a.terms, &b.terms, Some(c.cutoff)),
                    ctx,
                }
            }
        }
    }

    /// Coefficient of the given exponent vector (zero-padded scalars allowed).
    pub fn coeff(&self, exp: &[u16]) -> BigRational {
        if self.ctx.is_none() && exp.iter().all(|&e| e == 0) {
            return self.terms.get(&Vec::new()).cloned().unwrap_or_else(<BigRational as Ring>::zero);
        }
        self.terms.get(exp).cloned().unwrap_or_else(<BigRational as Ring>::zero)
    }

    /// The constant term, i.e. the value at `y = 0`.
    pub fn constant_term(&self) -> BigRational {
        match &self.ctx {
            None => self.coeff(&[]),
            Some(c) => self.coeff(&vec![0u16; c.vars.len()]),
        }
    }

    /// Drops every term of positive total degree.
    pub fn substitute_zero(&self) -> Self {
        let c = self.constant_term();
        match &self.ctx {
            None => TruncatedSeries::scalar(c),
            Some(ctx) => TruncatedSeries::constant_in(ctx, c),
        }
    }

    /// Multiplies by an exact rational scalar.
    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return TruncatedSeries {
                ctx: self.ctx.clone(),
                terms: BTreeMap::new(),
            };
        }
        TruncatedSeries {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c * k))
                .collect(),
        }
    }

    /// Keeps only terms of total degree `<= deg`.
    pub fn truncate_to(&self, deg: usize) -> Self {
        TruncatedSeries {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| total_degree(e) <= deg)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Substitutes complex values for the variables.
    pub fn eval_complex(&self, at: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (exp, c) in &self.terms {
            let mut term = Complex64::new(rational_to_f64(c), 0.0);
            for (i, &e) in exp.iter().enumerate() {
                term *= at[i].powu(e as u32);
            }
            acc += term;
        }
        acc
    }

    /// Substitutes exact rational values for the variables.  Terms of total
    /// degree above the cutoff were already discarded, so this evaluates the
    /// truncated polynomial exactly.
    pub fn eval_rational(&self, at: &[BigRational]) -> BigRational {
        let mut acc: BigRational = Ring::zero();
        for (exp, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in exp.iter().enumerate() {
                for _ in 0..e {
                    term *= &at[i];
                }
            }
            acc += term;
        }
        acc
    }

    /// Iterates over `(exponents, coefficient)` pairs in lexicographic order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (&Vec<u16>, &BigRational)> {
        self.terms.iter()
    }

    /// Largest coefficient magnitude, as `f64`; used for stabilization
    /// checks on numerically driven series computations.
    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| rational_to_f64(&c.abs()))
            .fold(0.0, f64::max)
    }

    /// Serializable snapshot of the series.
    pub fn to_data(&self) -> SeriesData {
        let (vars, cutoff) = match &self.ctx {
            Some(c) => (c.vars.clone(), c.cutoff),
            None => (Vec::new(), 0),
        };
        SeriesData {
            vars,
            cutoff,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermData {
                    exp: e.clone(),
                    coeff: rational_to_string(c),
                })
                .collect(),
        }
    }

    pub fn from_data(data: &SeriesData) -> Result<Self, RingError> {
        let ctx = TruncatedSeries::context(data.vars.clone(), data.cutoff);
        let mut out = TruncatedSeries::zero_in(&ctx);
        for t in &data.terms {
            if t.exp.len() != data.vars.len() {
                return Err(RingError::ContextMismatch(format!(
                    "exponent vector of length {} for {} variables",
                    t.exp.len(),
                    data.vars.len()
                )));
            }
            let c = rational_from_str(&t.coeff)?;
            if !c.is_zero() && total_degree(&t.exp) <= data.cutoff {
                out.terms.insert(t.exp.clone(), c);
            }
        }
        Ok(out)
    }
}

fn total_degree(exp: &[u16]) -> usize {
    exp.iter().map(|&e| e as usize).sum()
}

/// JSON-facing form of a series: coefficients as `num` / `num/den` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesData {
    pub vars: Vec<String>,
    pub cutoff: usize,
    pub terms: Vec<TermData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermData {
    pub exp: Vec<u16>,
    pub coeff: String,
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        match self.unified(other) {
            Err(_) => false,
            Ok(None) => self.terms == other.terms,
            Ok(Some(c)) => self.promoted(&c).terms == other.promoted(&c).terms,
        }
    }
}

impl Ring for TruncatedSeries {
    fn zero() -> Self {
        TruncatedSeries::scalar(Ring::zero())
    }

    fn one() -> Self {
        TruncatedSeries::scalar(BigRational::from_integer(1.into()))
    }

    fn add(&self, rhs: &Self) -> Self {
        self.binop(rhs, |a, b, _| {
            let mut out = a.clone();
            for (e, c) in b {
                let entry = out.entry(e.clone()).or_insert_with(<BigRational as Ring>::zero);
                *entry += c;
                if entry.is_zero() {
                    out.remove(e);
                }
            }
            out
        })
    }

    fn neg(&self) -> Self {
        TruncatedSeries {
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.binop(rhs, |a, b, cutoff| {
            let mut out: BTreeMap<Vec<u16>, BigRational> = BTreeMap::new();
            for (ea, ca) in a {
                let da = total_degree(ea);
                for (eb, cb) in b {
                    if let Some(d) = cutoff {
                        if da + total_degree(eb) > d {
                            continue;
                        }
                    }
                    let exp: Vec<u16> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                    let entry = out.entry(exp.clone()).or_insert_with(<BigRational as Ring>::zero);
                    *entry += ca * cb;
                    if entry.is_zero() {
                        out.remove(&exp);
                    }
                }
            }
            out
        })
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_unit(&self) -> bool {
        // The variables generate a nilpotent ideal, so a unit is exactly an
        // element with invertible constant term.
        !self.constant_term().is_zero()
    }

    fn inv(&self) -> Result<Self, RingError> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(RingError::NotAUnit(
                "series with zero constant term".into(),
            ));
        }
        let c_inv = TruncatedSeries {
            ctx: self.ctx.clone(),
            terms: match &self.ctx {
                None => BTreeMap::from([(Vec::new(), c.recip())]),
                Some(ctx) => BTreeMap::from([(vec![0u16; ctx.vars.len()], c.recip())]),
            },
        };
        // self = c (1 + u) with ord(u) >= 1, so 1/self = c^{-1} sum (-u)^k.
        let u = self.mul(&c_inv).sub(&Self::one());
        let steps = self.cutoff().unwrap_or(0);
        let mut acc = Self::one().promoted_opt(&self.ctx);
        let mut pow = Self::one().promoted_opt(&self.ctx);
        for _ in 0..steps {
            pow = pow.mul(&u.neg());
            if pow.is_zero() {
                break;
            }
            acc = acc.add(&pow);
        }
        Ok(acc.mul(&c_inv))
    }

    fn from_i64(n: i64) -> Self {
        TruncatedSeries::scalar(BigRational::from_integer(n.into()))
    }

    fn order(&self) -> Option<usize> {
        self.terms.keys().map(|e| total_degree(e)).min()
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        if tol == 0.0 {
            return self == other;
        }
        let diff = self.sub(other);
        diff.terms
            .values()
            .all(|c| rational_to_f64(&c.abs()) <= tol)
    }
}

impl TruncatedSeries {
    fn promoted_opt(&self, ctx: &Option<Arc<SeriesContext>>) -> Self {
        match ctx {
            Some(c) => self.promoted(c),
            None => self.clone(),
        }
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names: Vec<String> = match &self.ctx {
            Some(c) => c.vars.clone(),
            None => Vec::new(),
        };
        let mut first = true;
        for (exp, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", rational_to_string(c))?;
            for (i, &e) in exp.iter().enumerate() {
                if e == 1 {
                    write!(f, "*{}", names[i])?;
                } else if e > 1 {
                    write!(f, "*{}^{}", names[i], e)?;
                }
            }
        }
        Ok(())
    }
}

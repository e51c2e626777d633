//! Noncommutative formal series, truncated by word length.
//!
//! Elements live in the free associative algebra on a fixed alphabet, with
//! every word of length above `max_weight` discarded.  This is the carrier
//! for flat-connection residues and their transport: brackets, `exp`, and
//! `log` all terminate because anything of positive order is nilpotent at a
//! finite weight cutoff.

use super::Ring;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Coefficients for noncommutative series; any engine ring qualifies.
pub trait NcCoeff: Ring {}
impl<T: Ring> NcCoeff for T {}

/// A word in the alphabet, stored as letter indices.
pub type NcWord = Vec<u8>;

/// Shared alphabet: letter names, in the order fixed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcAlphabet {
    pub letters: Vec<String>,
}

/// Weight-truncated series `sum_w c_w * w` over the free algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct NcSeries<C: NcCoeff> {
    alphabet: Arc<NcAlphabet>,
    max_weight: usize,
    terms: BTreeMap<NcWord, C>,
}

impl<C: NcCoeff> NcSeries<C> {
    pub fn alphabet_of(letters: Vec<String>) -> Arc<NcAlphabet> {
        assert!(letters.len() <= u8::MAX as usize + 1, "alphabet too large");
        Arc::new(NcAlphabet { letters })
    }

    pub fn zero(alphabet: &Arc<NcAlphabet>, max_weight: usize) -> Self {
        NcSeries {
            alphabet: alphabet.clone(),
            max_weight,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(alphabet: &Arc<NcAlphabet>, max_weight: usize) -> Self {
        let mut s = Self::zero(alphabet, max_weight);
        s.terms.insert(Vec::new(), C::one());
        s
    }

    /// The single letter `i` with coefficient one.
    pub fn letter(alphabet: &Arc<NcAlphabet>, max_weight: usize, i: usize) -> Self {
        assert!(i < alphabet.letters.len(), "letter index out of range");
        let mut s = Self::zero(alphabet, max_weight);
        if max_weight >= 1 {
            s.terms.insert(vec![i as u8], C::one());
        }
        s
    }

    /// Letter looked up by name; panics if absent (alphabets are built by
    /// the same code that queries them).
    pub fn letter_named(alphabet: &Arc<NcAlphabet>, max_weight: usize, name: &str) -> Self {
        let i = alphabet
            .letters
            .iter()
            .position(|l| l == name)
            .unwrap_or_else(|| panic!("letter `{name}` not in alphabet"));
        Self::letter(alphabet, max_weight, i)
    }

    pub fn alphabet(&self) -> &Arc<NcAlphabet> {
        &self.alphabet
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn coeff(&self, word: &[u8]) -> C {
        self.terms.get(word).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient of a word given by letter names.
    pub fn coeff_of_named(&self, names: &[&str]) -> C {
        let word: NcWord = names
            .iter()
            .map(|n| {
                self.alphabet
                    .letters
                    .iter()
                    .position(|l| l == n)
                    .unwrap_or_else(|| panic!("letter `{n}` not in alphabet")) as u8
            })
            .collect();
        self.coeff(&word)
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&NcWord, &C)> {
        self.terms.iter()
    }

    /// The same series with every coefficient passed through `f`, over the
    /// same alphabet; coefficients that map to zero are dropped.
    pub fn map_coeffs<D: NcCoeff>(&self, f: impl Fn(&C) -> D) -> NcSeries<D> {
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            let d = f(c);
            if !d.is_zero() {
                terms.insert(w.clone(), d);
            }
        }
        NcSeries {
            alphabet: self.alphabet.clone(),
            max_weight: self.max_weight,
            terms,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Minimal word length carrying a nonzero coefficient.
    pub fn order(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).min()
    }

    fn assert_compatible(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.alphabet, &other.alphabet)
                || self.alphabet.as_ref() == other.alphabet.as_ref(),
            "noncommutative series over different alphabets"
        );
        assert_eq!(
            self.max_weight, other.max_weight,
            "noncommutative series with different weight cutoffs"
        );
    }

    fn insert(&mut self, word: NcWord, c: C) {
        if word.len() > self.max_weight || c.is_zero() {
            return;
        }
        let entry = self.terms.entry(word.clone()).or_insert_with(C::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&word);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.insert(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        NcSeries {
            alphabet: self.alphabet.clone(),
            max_weight: self.max_weight,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero(&self.alphabet, self.max_weight);
        if k.is_zero() {
            return out;
        }
        for (w, c) in &self.terms {
            let v = c.mul(k);
            if !v.is_zero() {
                out.terms.insert(w.clone(), v);
            }
        }
        out
    }

    /// Concatenation product, truncated at the weight cutoff.
    pub fn mul(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let mut out = Self::zero(&self.alphabet, self.max_weight);
        for (wa, ca) in &self.terms {
            if wa.len() > self.max_weight {
                continue;
            }
            for (wb, cb) in &other.terms {
                if wa.len() + wb.len() > self.max_weight {
                    continue;
                }
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.insert(w, ca.mul(cb));
            }
        }
        out
    }

    /// Lie bracket `[self, other] = self*other - other*self`.
    pub fn bracket(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `exp` of a series of positive order (no empty-word term).
    pub fn exp(&self) -> Self {
        assert!(
            self.coeff(&[]).is_zero(),
            "exp needs a series without constant term"
        );
        let mut acc = Self::one(&self.alphabet, self.max_weight);
        let mut pow = Self::one(&self.alphabet, self.max_weight);
        let mut fact = C::one();
        for k in 1..=self.max_weight {
            pow = pow.mul(self);
            if pow.is_zero() {
                break;
            }
            fact = fact.mul(&C::from_i64(k as i64));
            acc = acc.add(&pow.scale(&fact.inv().expect("factorial is a unit")));
        }
        acc
    }

    /// `log` of a series with empty-word coefficient one.
    pub fn log(&self) -> Self {
        let c0 = self.coeff(&[]);
        assert!(
            c0.close_to(&C::one(), 1e-9),
            "log needs a series with unit constant term"
        );
        let u = self.sub(&Self::one(&self.alphabet, self.max_weight));
        let mut acc = Self::zero(&self.alphabet, self.max_weight);
        let mut pow = Self::one(&self.alphabet, self.max_weight);
        for k in 1..=self.max_weight {
            pow = pow.mul(&u);
            if pow.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let coeff = C::from_i64(sign)
                .div(&C::from_i64(k as i64))
                .expect("nonzero integer");
            acc = acc.add(&pow.scale(&coeff));
        }
        acc
    }

    /// Coefficient-wise closeness under the ring's own tolerance notion.
    pub fn close_to(&self, other: &Self, tol: f64) -> bool {
        let diff = self.sub(other);
        diff.terms.values().all(|c| c.close_to(&C::zero(), tol))
    }

    /// Whether all shuffle relations `c(u) c(v) = sum_{w in u sh v} c(w)`
    /// hold within `tol`, together with `c(empty) = 1`.  This characterizes
    /// exponentials of Lie elements at the weight cutoff.
    pub fn is_grouplike(&self, tol: f64) -> bool {
        if !self.coeff(&[]).close_to(&C::one(), tol) {
            return false;
        }
        let words = self.all_words_up_to(self.max_weight);
        for u in &words {
            if u.is_empty() {
                continue;
            }
            for v in &words {
                if v.is_empty() || u.len() + v.len() > self.max_weight {
                    continue;
                }
                let lhs = self.coeff(u).mul(&self.coeff(v));
                let mut rhs = C::zero();
                for w in shuffle_words(u, v) {
                    rhs = rhs.add(&self.coeff(&w));
                }
                if !lhs.close_to(&rhs, tol) {
                    return false;
                }
            }
        }
        true
    }

    fn all_words_up_to(&self, max_len: usize) -> Vec<NcWord> {
        let n = self.alphabet.letters.len();
        let mut out = vec![Vec::new()];
        let mut layer: Vec<NcWord> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for l in 0..n {
                    let mut w2 = w.clone();
                    w2.push(l as u8);
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

/// All shuffles of `u` and `v`, with multiplicity.
pub fn shuffle_words(u: &[u8], v: &[u8]) -> Vec<NcWord> {
    if u.is_empty() {
        return vec![v.to_vec()];
    }
    if v.is_empty() {
        return vec![u.to_vec()];
    }
    let mut out = Vec::new();
    for mut w in shuffle_words(&u[1..], v) {
        w.insert(0, u[0]);
        out.push(w);
    }
    for mut w in shuffle_words(u, &v[1..]) {
        w.insert(0, v[0]);
        out.push(w);
    }
    out
}

/// `sum_k c_k ad_t^k(a)` for a finite coefficient list, where
/// `ad_t(x) = [t, x]`.  Terms vanish once the iterated bracket overflows
/// the weight cutoff.
pub fn nc_ad_series<C: NcCoeff>(coeffs: &[C], t: &NcSeries<C>, a: &NcSeries<C>) -> NcSeries<C> {
    let mut acc = NcSeries::zero(t.alphabet(), t.max_weight());
    let mut bracket = a.clone();
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            bracket = t.bracket(&bracket);
            if bracket.is_zero() {
                break;
            }
        }
        acc = acc.add(&bracket.scale(c));
    }
    acc
}

impl<C: NcCoeff> fmt::Display for NcSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}")?;
            for &l in w {
                write!(f, "*{}", self.alphabet.letters[l as usize])?;
            }
        }
        Ok(())
    }
}

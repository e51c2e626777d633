//! Multiple zeta values as iterated integrals over `[0, 1]`.
//!
//! `mzv(&[s1, .., sk])` is the nested sum over `n1 > n2 > .. > nk >= 1` of
//! `n1^-s1 * .. * nk^-sk`, convergent exactly when `s1 >= 2`.  It equals
//! the iterated integral of the word `x1 x0^(sk-1) .. x1 x0^(s1-1)` read
//! innermost-first, with `x0 = dt/t` and `x1 = dt/(1-t)`.
//!
//! Direct summation converges far too slowly to certify anything past
//! depth one (the depth-two tails decay like `log N / N`), so the
//! evaluation instead splits the integration path at `1/2`: the integral
//! over a word is the sum over all of its two-part splits of a product of
//! two integrals from `0` to `1/2`, the second piece reversed and with its
//! letters swapped by the symmetry `t -> 1 - t`.  Every piece then starts
//! with `x1`, its Taylor coefficients at the origin are bounded by one,
//! and truncating at `z^N` leaves an error below `2^-N * (len + 1)`:
//! geometric convergence for every admissible word.

use crate::error::KzError;

/// Taylor coefficients kept per factor; the tail they cut off is below
/// `2^-120` and vanishes next to the `f64` roundoff floor.
const TERMS: usize = 120;

/// Letters of the integration alphabet: `x0 = dt/t`, `x1 = dt/(1-t)`.
const X0: u8 = 0;
const X1: u8 = 1;

fn word_of(indices: &[u64]) -> Result<Vec<u8>, KzError> {
    if indices.is_empty() {
        return Err(KzError::BadIndices("no indices given".to_string()));
    }
    if let Some(bad) = indices.iter().find(|&&s| s == 0) {
        return Err(KzError::BadIndices(format!(
            "index {bad} is not a positive integer"
        )));
    }
    if indices[0] < 2 {
        return Err(KzError::BadIndices(
            "the leading index must be at least 2 for the sum to converge".to_string(),
        ));
    }
    let mut w = Vec::new();
    for &s in indices.iter().rev() {
        w.push(X1);
        for _ in 1..s {
            w.push(X0);
        }
    }
    Ok(w)
}

/// Value at `1/2` of the iterated integral of `word` from `0`, computed
/// through its Taylor expansion at the origin.
///
/// Integration adds the outermost letter last, so the coefficients update
/// left to right: `x0` divides the `n`-th coefficient by `n`, `x1`
/// replaces it by the average of the previous ones.  Both keep every
/// coefficient in `[0, 1]`, which is what makes the truncation certified.
/// The empty word evaluates to `1`.
fn half_value(word: &[u8]) -> f64 {
    // A leading x0 would mean a divergent innermost integral; admissible
    // splits never produce one.
    debug_assert!(word.first() != Some(&X0));
    let mut c = [0.0f64; TERMS + 1];
    c[0] = 1.0;
    for &letter in word {
        if letter == X0 {
            c[0] = 0.0;
            for n in 1..=TERMS {
                c[n] /= n as f64;
            }
        } else {
            let mut next = [0.0f64; TERMS + 1];
            let mut prefix = 0.0;
            for n in 1..=TERMS {
                prefix += c[n - 1];
                next[n] = prefix / n as f64;
            }
            c = next;
        }
    }
    let mut value = 0.0;
    let mut z = 1.0;
    for coeff in c {
        value += coeff * z;
        z *= 0.5;
    }
    value
}

/// Reversal with letters swapped: the image of a word under `t -> 1 - t`.
fn mirrored(word: &[u8]) -> Vec<u8> {
    word.iter().rev().map(|&b| X1 - b).collect()
}

/// The multiple zeta value of the given indices, outermost first.
pub fn mzv(indices: &[u64]) -> Result<f64, KzError> {
    let w = word_of(indices)?;
    let mut total = 0.0;
    for split in 0..=w.len() {
        total += half_value(&w[..split]) * half_value(&mirrored(&w[split..]));
    }
    Ok(total)
}

//! Reduced words in a free group on `g` generators.
//!
//! The period sums run over three word families: all reduced words, words
//! not ending in a fixed generator (left-coset representatives), and words
//! neither starting in one generator nor ending in another (double-coset
//! representatives).  Everything here is plain combinatorics; the letters
//! only turn into Möbius maps at the group level.
//!
//! Enumeration order is level by level (shorter words first) and within a
//! level lexicographic in the letter order γ₁, γ₁⁻¹, γ₂, γ₂⁻¹, …  Every
//! caller relies on this order being stable, so it is part of the contract.

use crate::error::SchottkyError;

/// One letter: generator index and orientation (`true` = the generator
/// itself, `false` = its inverse).
pub type GenLetter = (usize, bool);

/// A reduced word; the empty word is the identity.
pub type GenWord = Vec<GenLetter>;

fn letters(rank: usize) -> Vec<GenLetter> {
    (0..rank).flat_map(|i| [(i, true), (i, false)]).collect()
}

fn cancels(a: GenLetter, b: GenLetter) -> bool {
    a.0 == b.0 && a.1 != b.1
}

/// All reduced words of length ≤ `max_len`, identity first.
pub fn reduced_words(rank: usize, max_len: usize) -> Vec<GenWord> {
    let alphabet = letters(rank);
    let mut out: Vec<GenWord> = vec![Vec::new()];
    let mut level: Vec<GenWord> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &level {
            for &l in &alphabet {
                if w.last().copied().map(|last| cancels(last, l)) != Some(true) {
                    let mut longer = w.clone();
                    longer.push(l);
                    next.push(longer);
                }
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// `1 + Σ_{ℓ=1}^{L} 2g(2g−1)^{ℓ−1}`, the size of [`reduced_words`].
pub fn word_count(rank: usize, max_len: usize) -> usize {
    let mut total = 1usize;
    let mut level = 2 * rank;
    for _ in 1..=max_len {
        total += level;
        level *= 2 * rank - 1;
    }
    total
}

fn check_index(rank: usize, i: usize) -> Result<(), SchottkyError> {
    if i < rank {
        Ok(())
    } else {
        Err(SchottkyError::BadGeneratorIndex(i, rank))
    }
}

/// Representatives of the left cosets Γ/⟨γ_i⟩ up to length `max_len`:
/// exactly the reduced words whose final letter is not γ_i^{±1}.
pub fn coset_reps(rank: usize, i: usize, max_len: usize) -> Result<Vec<GenWord>, SchottkyError> {
    check_index(rank, i)?;
    Ok(reduced_words(rank, max_len)
        .into_iter()
        .filter(|w| w.last().map(|&(k, _)| k) != Some(i))
        .collect())
}

/// Representatives of the double cosets ⟨γ_i⟩\Γ/⟨γ_j⟩ up to length
/// `max_len`: the identity, plus every reduced word that neither starts
/// with γ_i^{±1} nor ends with γ_j^{±1}.
pub fn double_coset_reps(
    rank: usize,
    i: usize,
    j: usize,
    max_len: usize,
) -> Result<Vec<GenWord>, SchottkyError> {
    check_index(rank, i)?;
    check_index(rank, j)?;
    Ok(reduced_words(rank, max_len)
        .into_iter()
        .filter(|w| {
            w.is_empty()
                || (w[0].0 != i && w.last().map(|&(k, _)| k) != Some(j))
        })
        .collect())
}

/// The reduced inverse of a reduced word.
pub fn inverse_word(w: &[GenLetter]) -> GenWord {
    w.iter().rev().map(|&(i, s)| (i, !s)).collect()
}

/// Human-readable form, e.g. `g1.g2^-1`; identity prints as `1`.
pub fn word_name(w: &[GenLetter]) -> String {
    if w.is_empty() {
        return "1".to_string();
    }
    w.iter()
        .map(|&(i, s)| {
            if s {
                format!("g{}", i + 1)
            } else {
                format!("g{}^-1", i + 1)
            }
        })
        .collect::<Vec<_>>()
        .join(".")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_reduced(w: &[GenLetter]) -> bool {
        w.windows(2).all(|p| !cancels(p[0], p[1]))
    }

    #[test]
    fn enumeration_counts_match_the_closed_formula() {
        for rank in 1..=3 {
            for max_len in 0..=4 {
                let words = reduced_words(rank, max_len);
                assert_eq!(words.len(), word_count(rank, max_len));
                assert!(words.iter().all(|w| is_reduced(w)));
            }
        }
        // Genus 2, length ≤ 3: 1 + 4 + 12 + 36.
        assert_eq!(word_count(2, 3), 53);
    }

    #[test]
    fn enumeration_order_is_pinned() {
        let words = reduced_words(2, 2);
        assert_eq!(words[0], Vec::<GenLetter>::new());
        assert_eq!(words[1], vec![(0, true)]);
        assert_eq!(words[2], vec![(0, false)]);
        assert_eq!(words[3], vec![(1, true)]);
        assert_eq!(words[4], vec![(1, false)]);
        // First length-2 word: g1.g1 (g1.g1^-1 is not reduced).
        assert_eq!(words[5], vec![(0, true), (0, true)]);
        assert_eq!(words[6], vec![(0, true), (1, true)]);
    }

    #[test]
    fn coset_reps_partition_the_words() {
        // Every reduced word is (rep)·γ_i^k for exactly one rep: check the
        // count by brute force at small length instead of re-deriving it.
        let all = reduced_words(2, 3);
        let reps = coset_reps(2, 0, 3).unwrap();
        assert!(reps.iter().all(|w| w.last().map(|&(k, _)| k) != Some(0)));
        // Words of length ≤ 2 are recovered as rep·γ₀^{±1} with rep strictly
        // shorter, so reps must cover everything after stripping trailing
        // γ₀-letters.
        for w in &all {
            let mut core = w.clone();
            while core.last().map(|&(k, _)| k) == Some(0) {
                core.pop();
            }
            if core.len() <= 3 {
                assert!(reps.contains(&core), "missing rep for {}", word_name(w));
            }
        }
    }

    #[test]
    fn double_coset_reps_keep_the_identity_and_trim_both_ends() {
        let reps = double_coset_reps(2, 0, 1, 3).unwrap();
        assert!(reps.contains(&Vec::new()));
        for w in &reps {
            if !w.is_empty() {
                assert_ne!(w[0].0, 0, "starts with g1: {}", word_name(w));
                assert_ne!(w.last().unwrap().0, 1, "ends with g2: {}", word_name(w));
            }
        }
        // Genus 1: only the identity survives, at any length.
        assert_eq!(double_coset_reps(1, 0, 0, 6).unwrap(), vec![Vec::new()]);
        assert!(matches!(
            double_coset_reps(2, 5, 0, 3),
            Err(SchottkyError::BadGeneratorIndex(5, 2))
        ));
    }

    #[test]
    fn inverse_and_names_round_trip() {
        let w = vec![(0, true), (1, false), (0, true)];
        assert_eq!(inverse_word(&inverse_word(&w)), w);
        assert_eq!(word_name(&w), "g1.g2^-1.g1");
        assert_eq!(word_name(&[]), "1");
    }
}

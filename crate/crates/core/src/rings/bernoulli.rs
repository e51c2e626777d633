//! Bernoulli numbers and the expansion coefficients of `T / (e^T - 1)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// First `n + 1` Bernoulli numbers `B_0, ..., B_n` with the convention
/// `B_1 = -1/2`, computed by the defining recurrence
/// `sum_{j<=m} C(m+1, j) B_j = [m == 0]`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(One::one());
            continue;
        }
        // B_m = -1/(m+1) * sum_{j=0}^{m-1} C(m+1, j) B_j
        let mut acc: BigRational = Zero::zero();
        let mut binom = BigInt::one(); // C(m+1, 0)
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            // C(m+1, j+1) = C(m+1, j) * (m+1-j) / (j+1)
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        let m1 = BigRational::from_integer(BigInt::from(m + 1));
        b.push(-acc / m1);
    }
    b
}

/// Coefficients `b_k = B_k / k!` of `T / (e^T - 1) = sum_k b_k T^k`,
/// for `k = 0, ..., n`.
pub fn bernoulli_expansion(n: usize) -> Vec<BigRational> {
    let bern = bernoulli_numbers(n);
    let mut fact = BigInt::one();
    bern.into_iter()
        .enumerate()
        .map(|(k, b)| {
            if k > 1 {
                fact *= BigInt::from(k);
            }
            b / BigRational::from_integer(fact.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::{Ring, TruncatedSeries};
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn known_bernoulli_values() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[0], q(1, 1));
        assert_eq!(b[1], q(-1, 2));
        assert_eq!(b[2], q(1, 6));
        assert_eq!(b[3], q(0, 1));
        assert_eq!(b[4], q(-1, 30));
        assert_eq!(b[6], q(1, 42));
        assert_eq!(b[8], q(-1, 30));
        assert_eq!(b[10], q(5, 66));
        assert_eq!(b[12], q(-691, 2730));
    }

    #[test]
    fn expansion_matches_series_inverse_of_exp_minus_one_over_t() {
        // Independent route: invert (e^T - 1)/T = sum_{k>=0} T^k/(k+1)! as a
        // univariate truncated series and compare coefficient by coefficient.
        const N: usize = 10;
        let ctx = TruncatedSeries::context(vec!["T".into()], N);
        let t = TruncatedSeries::var(&ctx, 0);
        let mut s = TruncatedSeries::zero_in(&ctx);
        let mut tk = TruncatedSeries::one();
        let mut fact = BigInt::one();
        for k in 0..=N {
            fact *= BigInt::from(k + 1); // (k+1)!
            s = s.add(&tk.scale(&BigRational::new(1.into(), fact.clone())));
            tk = tk.mul(&t);
        }
        let inv = s.inv().unwrap();
        let b = bernoulli_expansion(N);
        for (k, bk) in b.iter().enumerate() {
            let mut exp = vec![0u16; 1];
            exp[0] = k as u16;
            assert_eq!(&inv.coeff(&exp), bk, "coefficient of T^{k}");
        }
    }
}

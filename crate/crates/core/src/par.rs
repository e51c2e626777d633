//! Deterministic parallel helpers.
//!
//! Floating-point sums and products depend on association, so any parallel
//! reduction must commit to its tree shape up front.  Everything here
//! splits slices at their midpoint — the shape is a function of the length
//! alone — which makes results byte-identical across thread counts, and
//! identical to the single-threaded run.

use rayon::prelude::*;

use crate::rings::Ring;

/// Below this length a slice is combined sequentially; above it the two
/// halves become parallel tasks.  A constant, so it never affects values.
const GRAIN: usize = 64;

/// Applies `f` to every element in parallel, keeping index order.  When
/// several elements fail, the one earliest in the slice wins, regardless
/// of which task hit an error first.
pub(crate) fn try_map<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Send + Sync,
{
    let results: Vec<Result<U, E>> = items.par_iter().with_min_len(GRAIN).map(f).collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

/// Midpoint-tree sum; the empty slice sums to zero.
pub(crate) fn tree_sum<R: Ring>(items: &[R]) -> R {
    tree(items, R::zero, |a, b| a.add(b))
}

/// Midpoint-tree product in slice order; the empty slice multiplies to one.
pub(crate) fn tree_product<R: Ring>(items: &[R]) -> R {
    tree(items, R::one, |a, b| a.mul(b))
}

fn tree<R: Ring>(items: &[R], empty: fn() -> R, op: fn(&R, &R) -> R) -> R {
    match items.len() {
        0 => empty(),
        1 => items[0].clone(),
        n if n <= GRAIN => items[1..].iter().fold(items[0].clone(), |acc, x| op(&acc, x)),
        n => {
            let (lo, hi) = items.split_at(n / 2);
            let (a, b) = rayon::join(|| tree(lo, empty, op), || tree(hi, empty, op));
            op(&a, &b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use num_rational::BigRational;

    #[test]
    fn tree_reductions_match_sequential_folds_exactly() {
        let xs: Vec<BigRational> = (1..=300)
            .map(|n| BigRational::new(n.into(), (n + 1).into()))
            .collect();
        let seq_sum = xs.iter().fold(<BigRational as Ring>::zero(), |a, x| a.add(x));
        let seq_prod = xs.iter().fold(<BigRational as Ring>::one(), |a, x| a.mul(x));
        assert_eq!(tree_sum(&xs), seq_sum);
        assert_eq!(tree_product(&xs), seq_prod);
        assert!(Ring::is_zero(&tree_sum::<BigRational>(&[])));
        assert_eq!(tree_product::<BigRational>(&[]), <BigRational as Ring>::one());
    }

    #[test]
    fn float_trees_do_not_depend_on_the_thread_count() {
        // The association pattern is fixed by the length, so a one-thread
        // pool and a wide pool must agree bit for bit.
        let xs: Vec<Complex64> = (0..10_000)
            .map(|n| Complex64::new(((n * n) % 997) as f64 / 997.0, (n % 31) as f64 / 31.0))
            .collect();
        let wide = tree_sum(&xs);
        let narrow = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| tree_sum(&xs));
        assert_eq!(wide.re.to_bits(), narrow.re.to_bits());
        assert_eq!(wide.im.to_bits(), narrow.im.to_bits());
    }

    #[test]
    fn errors_surface_in_slice_order() {
        let xs: Vec<i64> = (0..500).collect();
        let res: Result<Vec<i64>, String> = try_map(&xs, |&x| {
            if x % 97 == 3 {
                Err(format!("bad {x}"))
            } else {
                Ok(x)
            }
        });
        assert_eq!(res.unwrap_err(), "bad 3");
    }
}

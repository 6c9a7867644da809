use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Label, LabeledExample, Language};
use crate::error::{Error, Result};

// Absorbs representation error in products like 0.15 * 40.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil(fraction * n)`, robust to floating-point products landing just above
/// an integer.
pub fn fraction_size(n: usize, fraction: f64) -> usize {
    let raw = (fraction * n as f64 - CEIL_SLACK).ceil().max(0.0) as usize;
    raw.min(n)
}

/// Stratified subsample of `ceil(fraction * N)` examples.
///
/// Each class contributes `ceil(fraction * N_class)` examples; when that
/// overshoots the total, one example at a time is dropped from the class with
/// the largest rounding excess (seeded coin flip on ties). Selected examples
/// keep their original relative order, so `fraction == 1.0` is the identity.
pub fn slice_fraction(
    split: &[LabeledExample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::arg(format!("fraction {fraction} outside (0, 1]")));
    }
    if split.is_empty() {
        return Err(Error::arg("cannot slice an empty split"));
    }
    let total = fraction_size(split.len(), fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pools: Vec<Vec<usize>> = [Label::Offensive, Label::NotOffensive]
        .iter()
        .map(|&label| {
            split
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label == label)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut counts: Vec<usize> = pools
        .iter()
        .map(|p| fraction_size(p.len(), fraction))
        .collect();

    while counts.iter().sum::<usize>() > total {
        let excess: Vec<f64> = counts
            .iter()
            .zip(&pools)
            .map(|(&c, p)| c as f64 - fraction * p.len() as f64)
            .collect();
        let drop = if counts[0] == 0 {
            1
        } else if counts[1] == 0 {
            0
        } else if (excess[0] - excess[1]).abs() < CEIL_SLACK {
            usize::from(rng.random_bool(0.5))
        } else if excess[0] > excess[1] {
            0
        } else {
            1
        };
        counts[drop] -= 1;
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(total);
    for (pool, &count) in pools.iter_mut().zip(&counts) {
        pool.shuffle(&mut rng);
        chosen.extend_from_slice(&pool[..count]);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| split[i].clone()).collect())
}

/// Multiset union of several splits, shuffled by `seed`.
pub fn concatenate_corpora(
    splits: &[(Language, &[LabeledExample])],
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    if splits.iter().all(|(_, s)| s.is_empty()) {
        return Err(Error::arg("concatenation needs at least one non-empty input"));
    }
    let mut out: Vec<LabeledExample> = splits
        .iter()
        .flat_map(|(_, s)| s.iter().cloned())
        .collect();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn make(n_off: usize, n_not: usize) -> Vec<LabeledExample> {
        (0..n_off + n_not)
            .map(|i| {
                let label = Label::from_offensive(i < n_off);
                LabeledExample::new(format!("id{i}"), format!("text {i}"), label, Language::En)
            })
            .collect()
    }

    fn balanced(n: usize) -> Vec<LabeledExample> {
        (0..n)
            .map(|i| {
                LabeledExample::new(
                    format!("id{i}"),
                    format!("t{i}"),
                    Label::from_offensive(i % 2 == 0),
                    Language::En,
                )
            })
            .collect()
    }

    /// Recount of the stratified rule without the sampler: expected total and
    /// the admissible per-class counts.
    fn oracle_counts(n_off: usize, n_not: usize, f: f64) -> (usize, Vec<(usize, usize)>) {
        let total = ((n_off + n_not) as f64 * f - 1e-9).ceil() as usize;
        let c_off = (n_off as f64 * f - 1e-9).ceil() as usize;
        let c_not = (n_not as f64 * f - 1e-9).ceil() as usize;
        let mut admissible = Vec::new();
        for a in 0..=c_off {
            for b in 0..=c_not {
                if a + b == total && c_off - a <= 1 && c_not - b <= 1 {
                    admissible.push((a, b));
                }
            }
        }
        (total, admissible)
    }

    #[test]
    fn five_percent_of_balanced_hundred() {
        let split = balanced(100);
        let (total, admissible) = oracle_counts(50, 50, 0.05);
        assert_eq!(total, 5);
        assert_eq!(admissible, vec![(2, 3), (3, 2)]);
        let a = slice_fraction(&split, 0.05, 7).unwrap();
        let b = slice_fraction(&split, 0.05, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let off = a.iter().filter(|e| e.label.is_offensive()).count();
        assert!(admissible.contains(&(off, 5 - off)));
    }

    #[test]
    fn full_fraction_is_identity() {
        let split = make(7, 13);
        assert_eq!(slice_fraction(&split, 1.0, 3).unwrap(), split);
    }

    #[test]
    fn default_grid_sizes_increase_to_n() {
        let split = balanced(40);
        let sizes: Vec<usize> = (1..=20)
            .map(|k| slice_fraction(&split, k as f64 / 20.0, 1).unwrap().len())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]), "{sizes:?}");
        assert_eq!(*sizes.last().unwrap(), 40);
        let small = balanced(9);
        let sizes: Vec<usize> = (1..=20)
            .map(|k| slice_fraction(&small, k as f64 / 20.0, 1).unwrap().len())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*sizes.last().unwrap(), 9);
    }

    #[test]
    fn rejects_bad_fractions() {
        let split = balanced(4);
        for f in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(slice_fraction(&split, f, 0).is_err());
        }
        assert!(slice_fraction(&[], 0.5, 0).is_err());
    }

    #[test]
    fn concatenation_of_two_small_sets() {
        let a = balanced(3);
        let b: Vec<_> = balanced(3)
            .into_iter()
            .map(|mut e| {
                e.id = format!("b{}", e.id);
                e.language = Language::Da;
                e
            })
            .collect();
        let out = concatenate_corpora(&[(Language::En, &a), (Language::Da, &b)], 5).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(out.iter().filter(|e| e.language == Language::Da).count(), 3);
        assert!(concatenate_corpora(&[], 1).is_err());
        assert!(concatenate_corpora(&[(Language::En, &[])], 1).is_err());
    }

    proptest! {
        #[test]
        fn stratified_counts_match_rule(n_off in 1usize..60, n_not in 1usize..60, k in 1usize..=20, seed in any::<u64>()) {
            let split: Vec<LabeledExample> = (0..n_off + n_not)
                .map(|i| LabeledExample::new(format!("{i}"), "x", Label::from_offensive(i < n_off), Language::En))
                .collect();
            let f = k as f64 / 20.0;
            let (total, admissible) = oracle_counts(n_off, n_not, f);
            let out = slice_fraction(&split, f, seed).unwrap();
            prop_assert_eq!(out.len(), total);
            let off = out.iter().filter(|e| e.label.is_offensive()).count();
            prop_assert!(admissible.contains(&(off, total - off)), "{:?} not in {:?}", (off, total - off), admissible);
            prop_assert_eq!(&out, &slice_fraction(&split, f, seed).unwrap());
        }

        #[test]
        fn concatenation_preserves_multiset(n in 1usize..30, m in 0usize..30, seed in any::<u64>()) {
            let a: Vec<_> = (0..n).map(|i| LabeledExample::new(format!("a{i}"), "x", Label::Offensive, Language::En)).collect();
            let b: Vec<_> = (0..m).map(|i| LabeledExample::new(format!("b{i}"), "y", Label::NotOffensive, Language::Tr)).collect();
            let out = concatenate_corpora(&[(Language::En, &a), (Language::Tr, &b)], seed).unwrap();
            let mut got: Vec<String> = out.iter().map(|e| e.id.clone()).collect();
            let mut want: Vec<String> = a.iter().chain(&b).map(|e| e.id.clone()).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}

//! Query selection for the unlabeled target pool.

use rand::seq::SliceRandom;
use rand::Rng;

/// Positions of the `p` smallest `|score|` values, ties broken by position.
pub fn select_uncertain(scores: &[f64], p: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].abs().total_cmp(&scores[b].abs()).then(a.cmp(&b)));
    order.truncate(p);
    order
}

/// `p` distinct members of `pool` drawn uniformly without replacement.
pub fn select_random<R: Rng + ?Sized>(pool: &[usize], p: usize, rng: &mut R) -> Vec<usize> {
    pool.choose_multiple(rng, p.min(pool.len())).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smallest_magnitudes_first() {
        assert_eq!(select_uncertain(&[0.5, -0.1, 0.9, 0.05], 2), vec![3, 1]);
        assert_eq!(select_uncertain(&[0.2; 6], 3), vec![0, 1, 2]);
        assert_eq!(select_uncertain(&[0.5, -0.1, 0.9], 10), vec![1, 0, 2]);
    }

    #[test]
    fn random_selection() {
        let pool = [3, 8, 11, 20, 21];
        let mut all = select_random(&pool, 5, &mut ChaCha8Rng::seed_from_u64(1));
        all.sort_unstable();
        assert_eq!(all, pool.to_vec());
        let a = select_random(&pool, 2, &mut ChaCha8Rng::seed_from_u64(9));
        let b = select_random(&pool, 2, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(select_random(&pool, 9, &mut ChaCha8Rng::seed_from_u64(9)).len(), 5);
    }

    #[test]
    fn random_selection_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pool = [0, 1, 2, 3];
        let mut freq = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            freq[select_random(&pool, 1, &mut rng)[0]] += 1;
        }
        for f in freq {
            assert!((f as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    proptest! {
        #[test]
        fn uncertain_subset_and_scale_invariant(scores in proptest::collection::vec(-5.0f64..5.0, 1..50), p in 1usize..10, scale in 0.001f64..1000.0) {
            let picked = select_uncertain(&scores, p);
            prop_assert_eq!(picked.len(), p.min(scores.len()));
            let mut dedup = picked.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), picked.len());
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            prop_assert_eq!(select_uncertain(&scaled, p), picked);
        }
    }
}

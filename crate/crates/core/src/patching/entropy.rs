/// Shannon entropy, in bits, of the 256-bin histogram of `channel`.
/// Result lies in `[0, 8]`; empty input has entropy 0.
pub fn channel_entropy(channel: &[u8]) -> f64 {
    if channel.is_empty() {
        return 0.0;
    }
    let mut hist = [0u64; 256];
    for &v in channel {
        hist[v as usize] += 1;
    }
    let n = channel.len() as f64;
    let mut h = 0.0;
    for &count in &hist {
        if count > 0 {
            let p = count as f64 / n;
            h -= p * p.log2();
        }
    }
    // The last ulp can dip below zero for a single-valued channel.
    h.max(0.0)
}

/// Average of three per-channel entropies.
pub fn mean_entropy(entropies: [f64; 3]) -> f64 {
    (entropies[0] + entropies[1] + entropies[2]) / 3.0
}

pub trait EntropyStats {
    fn mean_entropy(&self) -> f64;
}

/// Keep items whose mean entropy is strictly above `threshold`, in order.
pub fn filter_by_entropy<T: EntropyStats + Clone>(items: &[T], threshold: f64) -> Vec<T> {
    items
        .iter()
        .filter(|p| p.mean_entropy() > threshold)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(channel_entropy(&[42; 1000]), 0.0);
        let two: Vec<u8> = (0..1000).map(|i| if i % 2 == 0 { 3 } else { 200 }).collect();
        assert_eq!(channel_entropy(&two), 1.0);
        let uniform: Vec<u8> = (0..65536u32).map(|i| (i % 256) as u8).collect();
        assert_eq!(channel_entropy(&uniform), 8.0);
    }

    #[test]
    fn mean_of_three() {
        assert_eq!(mean_entropy([0.0, 0.0, 0.0]), 0.0);
        assert_eq!(mean_entropy([3.0, 2.5, 2.0]), 2.5);
    }

    #[derive(Clone, Debug, PartialEq)]
    struct E(f64);
    impl EntropyStats for E {
        fn mean_entropy(&self) -> f64 {
            self.0
        }
    }

    #[test]
    fn strict_threshold() {
        let items = vec![E(2.5), E(2.6), E(0.0), E(3.0)];
        assert_eq!(filter_by_entropy(&items, 2.5), vec![E(2.6), E(3.0)]);
        assert_eq!(filter_by_entropy(&items, -1.0), items);
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(mut data in proptest::collection::vec(any::<u8>(), 1..2000), seed in any::<u64>()) {
            let h = channel_entropy(&data);
            prop_assert!((0.0..=8.0).contains(&h));
            use rand::{seq::SliceRandom, SeedableRng};
            data.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((channel_entropy(&data) - h).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_threshold(vals in proptest::collection::vec(0.0f64..8.0, 0..100), t1 in 0.0f64..8.0, dt in 0.0f64..4.0) {
            let items: Vec<E> = vals.into_iter().map(E).collect();
            let lo = filter_by_entropy(&items, t1);
            let hi = filter_by_entropy(&items, t1 + dt);
            prop_assert!(hi.iter().all(|h| lo.contains(h)));
            prop_assert!(hi.len() <= lo.len());
        }
    }
}

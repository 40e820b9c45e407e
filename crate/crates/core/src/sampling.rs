//! Sampling without replacement.

use crate::rng::StreamRng;

/// `min(count, len)` distinct indices from `0..len`, uniformly.
pub fn uniform_subset(rng: &mut StreamRng, len: usize, count: usize) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, count).into_vec()
}

/// Up to `count` distinct indices from `0..len` other than `exclude`.
/// When fewer than `count` others exist, all of them are returned.
pub fn subset_excluding(rng: &mut StreamRng, len: usize, count: usize, exclude: usize) -> Vec<usize> {
    debug_assert!(exclude < len);
    let others = len - 1;
    if count >= others {
        return (0..len).filter(|&i| i != exclude).collect();
    }
    let mut picked = rand::seq::index::sample(rng, others, count).into_vec();
    for i in &mut picked {
        if *i >= exclude {
            *i += 1;
        }
    }
    picked
}

/// Successive weighted sampling without replacement: each draw picks an item
/// with probability proportional to its weight among those not yet drawn.
/// Returns `min(count, weights.len())` indices in draw order.
///
/// Weights must be finite and non-negative. Zero-weight items are only drawn
/// once every positive-weight item is gone, in which case the remainder is
/// filled uniformly.
pub fn weighted_successive(rng: &mut StreamRng, weights: &[f64], count: usize) -> Vec<usize> {
    debug_assert!(weights.iter().all(|w| w.is_finite() && *w >= 0.0));
    let count = count.min(weights.len());
    let mut remaining: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        // re-summing each draw keeps the total free of cancellation drift
        let total: f64 = remaining.iter().map(|&(_, w)| w).sum();
        let slot = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (k, &(_, w)) in remaining.iter().enumerate() {
                acc += w;
                if target < acc && w > 0.0 {
                    chosen = Some(k);
                    break;
                }
            }
            // rounding can leave target just past the last partial sum
            chosen.unwrap_or_else(|| remaining.iter().rposition(|&(_, w)| w > 0.0).expect("positive total"))
        } else {
            rng.below(remaining.len())
        };
        picked.push(remaining.swap_remove(slot).0);
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RunRng};

    fn rng(k: u64) -> StreamRng {
        RunRng::new(k).stream(Purpose::Selection, 0, 0)
    }

    #[test]
    fn uniform_subset_sizes() {
        let mut r = rng(1);
        assert_eq!(uniform_subset(&mut r, 3, 50), vec![0, 1, 2]);
        assert!(uniform_subset(&mut r, 0, 5).is_empty());
        let s = uniform_subset(&mut r, 100, 10);
        assert_eq!(s.len(), 10);
        let set: std::collections::BTreeSet<_> = s.iter().collect();
        assert_eq!(set.len(), 10);
    }

    #[test]
    fn excluding_never_returns_excluded() {
        let mut r = rng(2);
        for trial in 0..1000 {
            let ex = trial % 7;
            let s = subset_excluding(&mut r, 7, 3, ex);
            assert_eq!(s.len(), 3);
            assert!(!s.contains(&ex));
        }
        assert_eq!(subset_excluding(&mut r, 4, 10, 2), vec![0, 1, 3]);
        assert!(subset_excluding(&mut r, 1, 5, 0).is_empty());
    }

    #[test]
    fn weighted_follows_first_draw_probabilities() {
        let weights = [1.0, 2.0, 3.0, 4.0];
        let mut r = rng(3);
        let n = 100_000;
        let mut first = [0usize; 4];
        for _ in 0..n {
            first[weighted_successive(&mut r, &weights, 2)[0]] += 1;
        }
        for (i, &c) in first.iter().enumerate() {
            let p = weights[i] / 10.0;
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sd, "{first:?}");
        }
    }

    #[test]
    fn weighted_second_draw_renormalizes() {
        // P(second = 2 | first = 0) = 3 / (2 + 3 + 4)
        let weights = [1.0, 2.0, 3.0, 4.0];
        let mut r = rng(4);
        let (mut first0, mut then2) = (0usize, 0usize);
        for _ in 0..200_000 {
            let s = weighted_successive(&mut r, &weights, 2);
            if s[0] == 0 {
                first0 += 1;
                if s[1] == 2 {
                    then2 += 1;
                }
            }
        }
        let p = 3.0 / 9.0;
        let sd = (first0 as f64 * p * (1.0 - p)).sqrt();
        assert!((then2 as f64 - first0 as f64 * p).abs() < 3.0 * sd);
    }

    #[test]
    fn weighted_handles_zeros() {
        let mut r = rng(5);
        let s = weighted_successive(&mut r, &[0.0, 5.0, 0.0], 3);
        assert_eq!(s[0], 1);
        assert_eq!(s.len(), 3);
        let s = weighted_successive(&mut r, &[0.0, 0.0], 1);
        assert_eq!(s.len(), 1);
    }
}

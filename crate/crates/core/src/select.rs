//! Percentile selection shared by every tagging step.
//!
//! All "top p%" rules in the crate select `ceil(p * n)` items and then extend
//! the selection to every item tied with the boundary score, so the result is
//! a deterministic function of the scores alone.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Largest scores first.
    Highest,
    /// Smallest scores first.
    Lowest,
}

/// Number of items a `pct` threshold selects out of `n`.
pub fn quota(pct: f64, n: usize) -> usize {
    if !(pct > 0.0) || n == 0 {
        return 0;
    }
    // 0.05 * 100 is 5.000000000000001 in binary floating point
    let raw = (pct * n as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(n)
}

/// Select the top `pct` of `items` in `dir`, ties at the boundary included.
/// Non-finite scores are never selected. Output is ordered best first, ties
/// by key.
pub fn select<K: Clone + Ord>(items: &[(K, f64)], pct: f64, dir: Direction) -> Vec<K> {
    let mut ranked: Vec<&(K, f64)> = items.iter().filter(|(_, s)| s.is_finite()).collect();
    let q = quota(pct, ranked.len());
    if q == 0 {
        return Vec::new();
    }
    ranked.sort_by(|a, b| compare(a.1, b.1, dir).then_with(|| a.0.cmp(&b.0)));
    let boundary = ranked[q - 1].1;
    ranked
        .into_iter()
        .take_while(|(_, s)| compare(*s, boundary, dir) != Ordering::Greater)
        .map(|(k, _)| k.clone())
        .collect()
}

fn compare(a: f64, b: f64, dir: Direction) -> Ordering {
    match dir {
        Direction::Highest => b.total_cmp(&a),
        Direction::Lowest => a.total_cmp(&b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_is_ceil_without_float_noise() {
        assert_eq!(quota(0.05, 100), 5);
        assert_eq!(quota(0.01, 200), 2);
        assert_eq!(quota(0.05, 40), 2);
        assert_eq!(quota(0.01, 1), 1);
        assert_eq!(quota(0.10, 7), 1);
        assert_eq!(quota(0.0, 100), 0);
        assert_eq!(quota(1.0, 3), 3);
    }

    #[test]
    fn boundary_ties_are_included() {
        let items: Vec<(u32, f64)> = (0..20).map(|i| (i, if i < 3 { 1.0 } else { 0.0 })).collect();
        // quota(0.05, 20) = 1, but three items share the top score
        assert_eq!(select(&items, 0.05, Direction::Highest), vec![0, 1, 2]);
        let low = select(&items, 0.05, Direction::Lowest);
        assert_eq!(low.len(), 17);
    }

    #[test]
    fn nan_scores_are_skipped() {
        let items = vec![("a", f64::NAN), ("b", 1.0), ("c", 2.0)];
        assert_eq!(select(&items, 1.0, Direction::Highest), vec!["c", "b"]);
    }

    #[test]
    fn nested_thresholds() {
        let items: Vec<(usize, f64)> = (0..500).map(|i| (i, ((i * 7919) % 113) as f64)).collect();
        let a = select(&items, 0.01, Direction::Highest);
        let b = select(&items, 0.05, Direction::Highest);
        let c = select(&items, 0.10, Direction::Highest);
        assert!(a.iter().all(|k| b.contains(k)));
        assert!(b.iter().all(|k| c.contains(k)));
    }
}

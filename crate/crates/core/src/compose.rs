//! Bounded integer compositions.

/// Calls `f` on every vector `k` with `lo[i] <= k[i] <= hi[i]` and
/// `sum(k) == total`, in lexicographic order. Returns the number visited.
pub(crate) fn for_each_bounded_composition<F>(total: u64, lo: &[u64], hi: &[u64], mut f: F) -> u64
where
    F: FnMut(&[u64]),
{
    debug_assert_eq!(lo.len(), hi.len());
    let parts = lo.len();
    if parts == 0 {
        if total == 0 {
            f(&[]);
            return 1;
        }
        return 0;
    }
    // suffix_min[i] / suffix_max[i]: range of sum over parts i..
    let mut suffix_min = vec![0u64; parts + 1];
    let mut suffix_max = vec![0u64; parts + 1];
    for i in (0..parts).rev() {
        suffix_min[i] = suffix_min[i + 1] + lo[i];
        suffix_max[i] = suffix_max[i + 1].saturating_add(hi[i]);
    }
    let mut k = vec![0u64; parts];
    let mut visited = 0;
    recurse(0, total, lo, hi, &suffix_min, &suffix_max, &mut k, &mut f, &mut visited);
    visited
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(&[u64])>(
    i: usize,
    remaining: u64,
    lo: &[u64],
    hi: &[u64],
    suffix_min: &[u64],
    suffix_max: &[u64],
    k: &mut [u64],
    f: &mut F,
    visited: &mut u64,
) {
    let parts = lo.len();
    if i == parts - 1 {
        if remaining >= lo[i] && remaining <= hi[i] {
            k[i] = remaining;
            f(k);
            *visited += 1;
        }
        return;
    }
    let rest_min = suffix_min[i + 1];
    let rest_max = suffix_max[i + 1];
    if remaining < rest_min {
        return;
    }
    let start = lo[i].max(remaining.saturating_sub(rest_max));
    let end = hi[i].min(remaining - rest_min);
    let mut v = start;
    while v <= end {
        k[i] = v;
        recurse(i + 1, remaining - v, lo, hi, suffix_min, suffix_max, k, f, visited);
        v += 1;
    }
}

/// Exact binomial coefficient, `None` on overflow.
pub(crate) fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_all_compositions() {
        let mut seen = Vec::new();
        let n = for_each_bounded_composition(3, &[0, 0], &[3, 3], |k| seen.push(k.to_vec()));
        assert_eq!(n, 4);
        assert_eq!(seen, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
        // C(5 + 3 - 1, 3 - 1) = 21
        assert_eq!(for_each_bounded_composition(5, &[0; 3], &[5; 3], |_| {}), 21);
    }

    #[test]
    fn respects_bounds() {
        let mut seen = Vec::new();
        for_each_bounded_composition(4, &[1, 0, 2], &[2, 1, 3], |k| seen.push(k.to_vec()));
        assert_eq!(seen, vec![vec![1, 0, 3], vec![1, 1, 2], vec![2, 0, 2]]);
        assert_eq!(for_each_bounded_composition(10, &[0, 0], &[3, 3], |_| {}), 0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u128(4, 2), Some(6));
        assert_eq!(binomial_u128(20, 10), Some(184_756));
        assert_eq!(binomial_u128(3, 5), Some(0));
        assert_eq!(binomial_u128(120, 60), Some(96_614_908_840_363_322_603_893_139_521_372_656));
    }
}

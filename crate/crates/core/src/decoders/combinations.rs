//! Revolving-door enumeration of k-subsets.
//!
//! Consecutive subsets differ by exactly one element leaving and one
//! entering, so per-test counts `A x` can be updated in `O(m)` per step.

/// Visits every `k`-subset of `0..n` once. The callback receives the current
/// subset in ascending order and, after the first visit, the `(out, in)`
/// swap that produced it from the previous subset.
pub fn for_each_revolving_door<F>(n: usize, k: usize, mut visit: F)
where
    F: FnMut(&[usize], Option<(usize, usize)>),
{
    if k == 0 || k > n {
        return;
    }
    if k == n {
        let all: Vec<usize> = (0..n).collect();
        visit(&all, None);
        return;
    }
    if k == 1 {
        let mut cur = [0usize];
        visit(&cur, None);
        for j in 1..n {
            cur[0] = j;
            visit(&cur, Some((j - 1, j)));
        }
        return;
    }

    // c[1..=t] ascending, c[t + 1] = n sentinel; c[0] unused.
    let t = k;
    let mut c: Vec<usize> = (0..t + 2).map(|j| j.saturating_sub(1)).collect();
    c[t + 1] = n;
    visit(&c[1..=t], None);

    loop {
        let swap;
        let mut j;
        let mut try_increase;
        if t % 2 == 1 {
            if c[1] + 1 < c[2] {
                swap = (c[1], c[1] + 1);
                c[1] += 1;
                visit(&c[1..=t], Some(swap));
                continue;
            }
            j = 2;
            try_increase = false;
        } else {
            if c[1] > 0 {
                swap = (c[1], c[1] - 1);
                c[1] -= 1;
                visit(&c[1..=t], Some(swap));
                continue;
            }
            j = 2;
            try_increase = true;
        }

        let moved = loop {
            if !try_increase {
                // c[j] == c[j - 1] + 1
                if c[j] >= j {
                    let out = c[j];
                    let inn = j - 2;
                    c[j] = c[j - 1];
                    c[j - 1] = j - 2;
                    break Some((out, inn));
                }
                j += 1;
                try_increase = true;
            } else {
                // c[j - 1] == j - 2
                if c[j] + 1 < c[j + 1] {
                    let out = c[j - 1];
                    let inn = c[j] + 1;
                    c[j - 1] = c[j];
                    c[j] += 1;
                    break Some((out, inn));
                }
                j += 1;
                if j > t {
                    break None;
                }
                try_increase = false;
            }
        };
        match moved {
            Some(s) => visit(&c[1..=t], Some(s)),
            None => return,
        }
    }
}

/// `C(n, k)` as an exact integer, or `None` on overflow.
pub fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i at every step.
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(acc)
}

//! Permutations and injections of `{0, ..., n-1}`, stored as image vectors.

use crate::error::{Error, Result};

pub fn validate_permutation(perm: &[usize]) -> Result<()> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

pub fn validate_injection(tau: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &t in tau {
        if t >= m || seen[t] {
            return Err(Error::InvalidInjection {
                tau: tau.to_vec(),
                m,
            });
        }
        seen[t] = true;
    }
    Ok(())
}

pub fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `outer ∘ inner`: first `inner`, then `outer`.
pub fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&i| outer[i]).collect()
}

/// Extend an injection `n ↪ m` to a permutation of `m`, sending `n..m` to the unused
/// slots in increasing order.
pub fn extend_injection(tau: &[usize], m: usize) -> Vec<usize> {
    let mut used = vec![false; m];
    for &t in tau {
        used[t] = true;
    }
    let mut out = tau.to_vec();
    out.extend((0..m).filter(|&j| !used[j]));
    out
}

/// All permutations of `n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current = identity(n);
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// The adjacent transpositions `(k k+1)`, which generate the symmetric group.
pub fn adjacent_transpositions(n: usize) -> Vec<Vec<usize>> {
    (0..n.saturating_sub(1))
        .map(|k| {
            let mut p = identity(n);
            p.swap(k, k + 1);
            p
        })
        .collect()
}

/// All injections `n ↪ m` in lexicographic order.
pub fn all_injections(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(
        n: usize,
        m: usize,
        prefix: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                go(n, m, prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    if n <= m {
        go(
            n,
            m,
            &mut Vec::with_capacity(n),
            &mut vec![false; m],
            &mut out,
        );
    }
    out
}

/// 1-based rendering for reports, e.g. `[2 1 3]`.
pub fn display_one_based(p: &[usize]) -> String {
    let parts: Vec<String> = p.iter().map(|x| (x + 1).to_string()).collect();
    format!("[{}]", parts.join(" "))
}

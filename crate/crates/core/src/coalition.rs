//! Feature coalitions as bit masks, and their canonical ordering.
//!
//! Canonical order lists all non-empty coalitions of size at most `k`:
//! singletons by ascending index, then pairs lexicographically by `(i, j)`,
//! then triples, and so on. Every table of coefficients in this crate
//! (set functions, design-matrix columns, serialized models) uses it.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported universe; masks are `u64` and the top bits stay free.
pub const MAX_UNIVERSE: usize = 62;

/// Upper bound on the number of stored coalitions.
pub const MAX_DIMENSION: u64 = 1 << 26;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub const fn from_mask(mask: u64) -> Self {
        Coalition(mask)
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < 64);
        Coalition(1 << i)
    }

    pub fn pair(i: usize, j: usize) -> Self {
        Coalition((1 << i) | (1 << j))
    }

    /// Builds a coalition from member indices; duplicates are rejected.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i >= MAX_UNIVERSE {
                return Err(Error::invalid(format!(
                    "feature index {i} exceeds the supported universe of {MAX_UNIVERSE}"
                )));
            }
            if mask & (1 << i) != 0 {
                return Err(Error::invalid(format!("feature index {i} repeated")));
            }
            mask |= 1 << i;
        }
        Ok(Coalition(mask))
    }

    #[inline]
    pub const fn mask(self) -> u64 {
        self.0
    }

    #[inline]
    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub const fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub const fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub const fn union(self, other: Coalition) -> Coalition {
        Coalition(self.0 | other.0)
    }

    /// True when every member index is below `n`.
    #[inline]
    pub const fn fits(self, n: usize) -> bool {
        n >= 64 || self.0 >> n == 0
    }

    /// Member indices in ascending order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    /// All subsets of this coalition, including the empty one and itself.
    pub fn subsets(self) -> Subsets {
        Subsets {
            full: self.0,
            next: Some(self.0),
        }
    }

    /// `min_{i in A} x_i`, with the empty coalition mapping to 0.
    pub fn min_over(self, x: &[f64]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.members().map(|i| x[i]).fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.members().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let c = self.0.count_ones() as usize;
        (c, Some(c))
    }
}

impl ExactSizeIterator for Members {}

/// Submask walk from the full mask down to the empty mask.
pub struct Subsets {
    full: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & self.full)
        };
        Some(Coalition(cur))
    }
}

/// Binomial coefficient; `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `D_k = sum_{j=1..k} C(n, j)`, the number of non-empty coalitions of size at most `k`.
pub fn combinatorial_dimension(n: usize, k: usize) -> Result<u64> {
    check_order(n, k)?;
    let mut total: u64 = 0;
    for j in 1..=k {
        let c = binomial(n, j).ok_or_else(|| Error::TooLarge {
            n,
            k,
            reason: "binomial coefficient overflows u64".into(),
        })?;
        total = total.checked_add(c).ok_or_else(|| Error::TooLarge {
            n,
            k,
            reason: "dimension overflows u64".into(),
        })?;
    }
    Ok(total)
}

pub(crate) fn check_order(n: usize, k: usize) -> Result<()> {
    if n == 0 || n > MAX_UNIVERSE {
        return Err(Error::invalid(format!(
            "universe size {n} outside 1..={MAX_UNIVERSE}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "additivity order {k} outside 1..={n}"
        )));
    }
    Ok(())
}

/// All non-empty coalitions with `|A| <= k`, in canonical order.
pub fn enumerate_coalitions(n: usize, k: usize) -> Result<Vec<Coalition>> {
    let dim = combinatorial_dimension(n, k)?;
    if dim > MAX_DIMENSION {
        return Err(Error::TooLarge {
            n,
            k,
            reason: format!("{dim} coalitions exceed the limit of {MAX_DIMENSION}"),
        });
    }
    let mut out = Vec::with_capacity(dim as usize);
    for size in 1..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(Coalition(idx.iter().fold(0u64, |m, &i| m | 1 << i)));
            // advance to the next combination in lexicographic order
            let mut pos = size;
            while pos > 0 && idx[pos - 1] == n - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for q in pos..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// Rank/unrank between coalitions and canonical positions for a fixed `(n, k)`.
#[derive(Debug, Clone)]
pub struct CoalitionIndex {
    n: usize,
    k: usize,
    /// `offsets[s]` is the position of the first coalition of size `s + 1`.
    offsets: Vec<usize>,
    /// `binom[a][b] = C(a, b)` for `a <= n`, `b <= k`.
    binom: Vec<Vec<usize>>,
}

impl CoalitionIndex {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let dim = combinatorial_dimension(n, k)?;
        if dim > MAX_DIMENSION {
            return Err(Error::TooLarge {
                n,
                k,
                reason: format!("{dim} coalitions exceed the limit of {MAX_DIMENSION}"),
            });
        }
        let binom: Vec<Vec<usize>> = (0..=n)
            .map(|a| {
                (0..=k + 1)
                    .map(|b| {
                        binomial(a, b)
                            .map(|c| c.min(usize::MAX as u64) as usize)
                            .unwrap_or(usize::MAX)
                    })
                    .collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(k + 1);
        let mut acc = 0usize;
        for &count in &binom[n][1..=k] {
            offsets.push(acc);
            acc += count;
        }
        offsets.push(acc);
        Ok(CoalitionIndex {
            n,
            k,
            offsets,
            binom,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of stored coalitions, `D_k`.
    pub fn dimension(&self) -> usize {
        self.offsets[self.k]
    }

    /// Position of the first coalition of the given size.
    pub fn offset_of_size(&self, size: usize) -> usize {
        self.offsets[size - 1]
    }

    /// Canonical position of `a`, or `None` if it is empty, too large, or outside the universe.
    pub fn index_of(&self, a: Coalition) -> Option<usize> {
        let s = a.len();
        if s == 0 || s > self.k || !a.fits(self.n) {
            return None;
        }
        // lexicographic rank: C(n,s) - 1 - sum_i C(n-1-c_i, s-i)
        let total = self.binom[self.n][s];
        let mut tail = 0usize;
        for (pos, c) in a.members().enumerate() {
            tail += self.binom[self.n - 1 - c][s - pos];
        }
        Some(self.offsets[s - 1] + total - 1 - tail)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn coalition_at(&self, index: usize) -> Option<Coalition> {
        if index >= self.dimension() {
            return None;
        }
        let s = (1..=self.k)
            .find(|&s| index < self.offsets[s])
            .expect("index below dimension");
        let mut rank = index - self.offsets[s - 1];
        let mut mask = 0u64;
        let mut start = 0usize;
        for remaining in (1..=s).rev() {
            // smallest c >= start such that the block beginning with c contains rank
            let mut c = start;
            loop {
                let block = self.binom[self.n - 1 - c][remaining - 1];
                if rank < block {
                    break;
                }
                rank -= block;
                c += 1;
            }
            mask |= 1 << c;
            start = c + 1;
        }
        Some(Coalition(mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_small_universe_by_hand() {
        let got = enumerate_coalitions(2, 2).unwrap();
        assert_eq!(
            got,
            vec![
                Coalition::singleton(0),
                Coalition::singleton(1),
                Coalition::pair(0, 1)
            ]
        );
    }

    #[test]
    fn enumeration_lengths() {
        assert_eq!(enumerate_coalitions(8, 2).unwrap().len(), 36);
        assert_eq!(enumerate_coalitions(10, 10).unwrap().len(), 1023);
        assert_eq!(enumerate_coalitions(10, 1).unwrap().len(), 10);
    }

    #[test]
    fn enumeration_matches_brute_force_filter() {
        // brute force: every mask with popcount <= k, sorted by (size, lexicographic members)
        let (n, k) = (7, 4);
        let mut brute: Vec<Coalition> = (1u64..1 << n)
            .map(Coalition::from_mask)
            .filter(|c| c.len() <= k)
            .collect();
        brute.sort_by_key(|c| (c.len(), c.members().collect::<Vec<_>>()));
        assert_eq!(enumerate_coalitions(n, k).unwrap(), brute);
    }

    #[test]
    fn pairs_are_lexicographic() {
        let got = enumerate_coalitions(4, 2).unwrap();
        let pairs: Vec<String> = got[4..].iter().map(|c| c.to_string()).collect();
        assert_eq!(
            pairs,
            ["{0,1}", "{0,2}", "{0,3}", "{1,2}", "{1,3}", "{2,3}"]
        );
    }

    #[test]
    fn enumerate_rejects_bad_orders() {
        assert!(enumerate_coalitions(3, 0).is_err());
        assert!(enumerate_coalitions(3, 4).is_err());
        assert!(enumerate_coalitions(0, 0).is_err());
        assert!(enumerate_coalitions(63, 1).is_err());
        assert!(enumerate_coalitions(62, 62).is_err());
    }

    #[test]
    fn large_universe_low_order_is_supported() {
        let idx = CoalitionIndex::new(62, 2).unwrap();
        assert_eq!(idx.dimension(), 62 + 61 * 31);
        let last = Coalition::pair(60, 61);
        assert_eq!(idx.index_of(last), Some(idx.dimension() - 1));
    }

    #[test]
    fn index_is_a_bijection() {
        for (n, k) in [(1, 1), (5, 3), (9, 9), (12, 3), (20, 2)] {
            let idx = CoalitionIndex::new(n, k).unwrap();
            let all = enumerate_coalitions(n, k).unwrap();
            assert_eq!(all.len(), idx.dimension());
            for (pos, &c) in all.iter().enumerate() {
                assert_eq!(idx.index_of(c), Some(pos), "n={n} k={k} {c}");
                assert_eq!(idx.coalition_at(pos), Some(c));
            }
            assert_eq!(idx.coalition_at(all.len()), None);
        }
    }

    #[test]
    fn index_rejects_out_of_range_coalitions() {
        let idx = CoalitionIndex::new(4, 2).unwrap();
        assert_eq!(idx.index_of(Coalition::EMPTY), None);
        assert_eq!(
            idx.index_of(Coalition::from_indices(&[0, 1, 2]).unwrap()),
            None
        );
        assert_eq!(idx.index_of(Coalition::singleton(4)), None);
    }

    #[test]
    fn subsets_walk_every_submask_once() {
        let a = Coalition::from_indices(&[1, 3, 4]).unwrap();
        let subs: Vec<_> = a.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(a)));
        assert_eq!(subs.last(), Some(&Coalition::EMPTY));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 2), Some(28));
        assert_eq!(binomial(62, 31), Some(465428353255261088));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(combinatorial_dimension(8, 2).unwrap(), 36);
        assert_eq!(combinatorial_dimension(10, 10).unwrap(), 1023);
    }
}

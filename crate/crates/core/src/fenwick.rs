//! Binary indexed tree over non-negative weights with prefix-sum selection.

#[derive(Debug, Clone)]
pub(crate) struct FenwickTree {
    /// 1-indexed partial sums.
    tree: Vec<f64>,
    n: usize,
    /// Largest power of two not exceeding `n`, used by the selection walk.
    mask: usize,
}

impl FenwickTree {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(values);
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        let mask = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        Self { tree, n, mask }
    }

    pub fn rebuild(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n);
        let fresh = Self::from_values(values);
        self.tree = fresh.tree;
    }

    /// Adds `delta` to element `i` (0-indexed).
    #[inline]
    pub fn add(&mut self, i: usize, delta: f64) {
        let mut i = i + 1;
        while i <= self.n {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the first `len` elements.
    #[allow(dead_code)]
    pub fn prefix_sum(&self, len: usize) -> f64 {
        let mut i = len.min(self.n);
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Index `i` with `prefix_sum(i) <= target < prefix_sum(i+1)`, assuming
    /// non-negative weights. Targets at or beyond the total clamp to the
    /// last element.
    pub fn select(&self, mut target: f64) -> usize {
        let mut pos = 0usize;
        let mut bit = self.mask;
        while bit != 0 {
            let next = pos + bit;
            if next <= self.n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            bit >>= 1;
        }
        pos.min(self.n.saturating_sub(1))
    }
}

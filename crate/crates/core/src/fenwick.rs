//! Binary indexed tree over nonnegative rates, used to pick the next event
//! site in proportion to its rate.

use num_traits::Num;

#[derive(Debug, Clone)]
pub struct Fenwick<T> {
    tree: Vec<T>,
}

impl<T: Num + Copy + PartialOrd> Fenwick<T> {
    pub fn new(len: usize) -> Self {
        Fenwick {
            tree: vec![T::zero(); len + 1],
        }
    }

    /// Builds in O(n).
    pub fn from_values(values: &[T]) -> Self {
        let n = values.len();
        let mut tree = vec![T::zero(); n + 1];
        tree[1..].copy_from_slice(values);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                let v = tree[i];
                tree[parent] = tree[parent] + v;
            }
        }
        Fenwick { tree }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add(&mut self, index: usize, delta: T) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i] + delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the first `count` values.
    pub fn prefix(&self, count: usize) -> T {
        let mut i = count;
        let mut s = T::zero();
        while i > 0 {
            s = s + self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    pub fn total(&self) -> T {
        self.prefix(self.len())
    }

    /// Smallest index `i` with `prefix(i + 1) > target`, clamped to the last
    /// index when rounding puts `target` at or past the total.
    pub fn find(&self, mut target: T) -> usize {
        let n = self.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && !(target < self.tree[next]) {
                target = target - self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n.saturating_sub(1))
    }
}

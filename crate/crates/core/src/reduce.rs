//! Deterministic parallel reduction for Monte Carlo accumulators.
//!
//! Floating-point addition is not associative, so the summation tree must be
//! fixed by the data layout alone. `pairwise_channels` splits the index range
//! at its midpoint recursively down to a fixed leaf size, sums each leaf in
//! index order, and merges results up the tree. The tree shape depends only
//! on the range length, so the result is bit-identical whether leaves run on
//! one thread or many. Pairwise summation also keeps rounding error at
//! O(log n) rather than O(n).

use rayon::join;

/// Leaf size for the reduction tree. Fixed: changing it changes results.
const LEAF: usize = 1024;

/// Sums of K per-replicate channels plus bookkeeping counts.
#[derive(Clone, Copy, Debug)]
pub struct ChannelSums<const K: usize> {
    pub sums: [f64; K],
    /// Replicates that contributed to `sums`.
    pub included: u64,
    /// Replicates the map function declined to score (e.g. x = 0 rows).
    pub skipped: u64,
}

impl<const K: usize> ChannelSums<K> {
    pub fn zero() -> Self {
        ChannelSums {
            sums: [0.0; K],
            included: 0,
            skipped: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for i in 0..K {
            self.sums[i] += other.sums[i];
        }
        self.included += other.included;
        self.skipped += other.skipped;
        self
    }
}

/// Evaluates `f(i)` for `i` in `0..n` and accumulates the returned channel
/// vectors with a fixed pairwise tree. `f` returning `None` marks the
/// replicate as skipped. `f` must be pure in `i`.
pub fn pairwise_channels<const K: usize, F>(n: u64, f: &F) -> ChannelSums<K>
where
    F: Fn(u64) -> Option<[f64; K]> + Sync,
{
    range_sum(0, n, f)
}

fn range_sum<const K: usize, F>(lo: u64, hi: u64, f: &F) -> ChannelSums<K>
where
    F: Fn(u64) -> Option<[f64; K]> + Sync,
{
    let len = hi - lo;
    if len <= LEAF as u64 {
        let mut acc = ChannelSums::zero();
        for i in lo..hi {
            match f(i) {
                Some(row) => {
                    for c in 0..K {
                        acc.sums[c] += row[c];
                    }
                    acc.included += 1;
                }
                None => acc.skipped += 1,
            }
        }
        return acc;
    }
    let mid = lo + len / 2;
    let (left, right) = join(|| range_sum(lo, mid, f), || range_sum(mid, hi, f));
    left.merge(right)
}

/// Pairwise sum of a slice with the same fixed tree as `pairwise_channels`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    fn rec(xs: &[f64]) -> f64 {
        if xs.len() <= LEAF {
            return xs.iter().sum();
        }
        let (a, b) = xs.split_at(xs.len() / 2);
        let (sa, sb) = join(|| rec(a), || rec(b));
        sa + sb
    }
    rec(xs)
}

/// Sample mean and standard error of the mean from (sum, sum of squares, n),
/// with the n-1 variance denominator.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

pub fn mean_se(sum: f64, sum_sq: f64, n: u64) -> MeanSe {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        f64::NAN
    };
    MeanSe {
        mean,
        se: (var / nf).sqrt(),
        n,
    }
}

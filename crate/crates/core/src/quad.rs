//! Deterministic quadrature: adaptive Gauss–Kronrod and fixed Gauss–Legendre.
//!
//! The adaptive driver integrates K channels at shared nodes (a ratio of two
//! integrals should see identical node placement in numerator and denominator
//! so that common scale factors cancel). Intervals are bisected worst-first
//! with a value-based, tie-broken ordering, so results are deterministic.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// 15-point Kronrod abscissae on [0, 1] (positive half; rule is symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_41,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// 7-point Gauss weights for the embedded rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_95,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct IntervalEstimate<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
}

/// One Gauss–Kronrod 15(7) pass over [a, b].
fn gk15<const K: usize, F>(f: &F, a: f64, b: f64) -> IntervalEstimate<K>
where
    F: Fn(f64) -> [f64; K],
{
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (lo, hi);
        if x == 0.0 {
            lo = f(c);
            hi = [0.0; K];
        } else {
            lo = f(c - h * x);
            hi = f(c + h * x);
        }
        for ch in 0..K {
            // hi is zeroed at the center node, so s counts it exactly once.
            let s = lo[ch] + hi[ch];
            kron[ch] += wk * s;
            if i % 2 == 1 {
                gauss[ch] += WG[i / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for ch in 0..K {
        value[ch] = kron[ch] * h;
        error[ch] = ((kron[ch] - gauss[ch]) * h).abs();
    }
    IntervalEstimate { value, error }
}

struct HeapItem<const K: usize> {
    worst: f64,
    order: u64,
    a: f64,
    b: f64,
    est: IntervalEstimate<K>,
}

impl<const K: usize> PartialEq for HeapItem<K> {
    fn eq(&self, other: &Self) -> bool {
        self.worst == other.worst && self.order == other.order
    }
}
impl<const K: usize> Eq for HeapItem<K> {}
impl<const K: usize> PartialOrd for HeapItem<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for HeapItem<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on error; insertion order breaks ties deterministically.
        self.worst
            .total_cmp(&other.worst)
            .then_with(|| other.order.cmp(&self.order))
    }
}

pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-11,
            abs_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

/// Adaptive Gauss–Kronrod over [a, b] with optional interior pre-split
/// points (for integrands concentrated far from the interval scale).
/// Returns per-channel values and error estimates.
pub fn adaptive_gk<const K: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    presplit: &[f64],
    opts: &QuadOptions,
) -> Result<IntervalEstimate<K>>
where
    F: Fn(f64) -> [f64; K],
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::QuadratureFailure(format!(
            "bad interval [{a}, {b}]"
        )));
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(presplit.len() + 2);
    cuts.push(a);
    cuts.extend(presplit.iter().copied().filter(|x| *x > a && *x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap: BinaryHeap<HeapItem<K>> = BinaryHeap::new();
    let mut total = [0.0; K];
    let mut err = [0.0; K];
    let mut order = 0u64;
    let mut n_intervals = 0usize;
    for w in cuts.windows(2) {
        let est = gk15(f, w[0], w[1]);
        for ch in 0..K {
            total[ch] += est.value[ch];
            err[ch] += est.error[ch];
        }
        heap.push(HeapItem {
            worst: est.error.iter().fold(0.0, |m, e| e.max(m)),
            order: {
                order += 1;
                order
            },
            a: w[0],
            b: w[1],
            est,
        });
        n_intervals += 1;
    }

    let converged = |total: &[f64; K], err: &[f64; K]| {
        (0..K).all(|ch| err[ch] <= opts.abs_tol.max(opts.rel_tol * total[ch].abs()))
    };

    let mut frozen: Vec<HeapItem<K>> = Vec::new();
    while !converged(&total, &err) && n_intervals < opts.max_intervals {
        let item = match heap.pop() {
            Some(it) => it,
            None => break,
        };
        let mid = 0.5 * (item.a + item.b);
        if mid <= item.a || mid >= item.b {
            // Interval at floating-point resolution: keep its estimate as is.
            frozen.push(item);
            continue;
        }
        let left = gk15(f, item.a, mid);
        let right = gk15(f, mid, item.b);
        for ch in 0..K {
            total[ch] += left.value[ch] + right.value[ch] - item.est.value[ch];
            err[ch] += left.error[ch] + right.error[ch] - item.est.error[ch];
        }
        for (lo, hi, est) in [(item.a, mid, left), (mid, item.b, right)] {
            heap.push(HeapItem {
                worst: est.error.iter().fold(0.0, |m, e| e.max(m)),
                order: {
                    order += 1;
                    order
                },
                a: lo,
                b: hi,
                est,
            });
        }
        n_intervals += 1;
    }

    // Error totals drift under repeated add/subtract; rebuild from the
    // surviving partition.
    let mut final_err = [0.0; K];
    let mut final_val = [0.0; K];
    for item in heap.iter().chain(frozen.iter()) {
        for ch in 0..K {
            final_val[ch] += item.est.value[ch];
            final_err[ch] += item.est.error[ch];
        }
    }
    Ok(IntervalEstimate {
        value: final_val,
        error: final_err,
    })
}

/// Convenience scalar wrapper.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    presplit: &[f64],
    opts: &QuadOptions,
) -> Result<(f64, f64)> {
    let est = adaptive_gk::<1, _>(&|x| [f(x)], a, b, presplit, opts)?;
    Ok((est.value[0], est.error[0]))
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence and cached. Exact for polynomials of degree
/// 2n - 1.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((-x, w));
    }
    // Mirror to the positive half; odd n shares the center node.
    let half: Vec<(f64, f64)> = out.clone();
    for &(x, w) in half.iter().rev() {
        if x != 0.0 {
            out.push((-x, w));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The fixed 256-node rule used for continuous scale-mixture quadrature.
pub fn gauss_legendre_256() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre(256))
}

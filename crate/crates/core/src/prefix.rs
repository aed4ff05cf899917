//! Prefix sums of `x`, `x^2` and `|x|` for O(1) window statistics.
//!
//! Each running sum is carried as an unevaluated pair `hi + lo`
//! (double-double), so a window aggregate recovered by differencing two
//! prefixes keeps roughly 100 bits of precision relative to the running
//! total. When even that is not enough, i.e. the window is tiny compared
//! to everything accumulated before it, the aggregate is recomputed from
//! the slice directly.

use crate::error::{Error, Result};

/// Relative uncertainty of a differenced double-double prefix, with slack.
const DD_EPS: f64 = 1.0 / (1u128 << 100) as f64;
/// Accuracy demanded of a differenced window aggregate before falling back.
const WINDOW_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn add(self, v: f64) -> Dd {
        let (s, e) = two_sum(self.hi, v);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    fn minus(self, other: Dd) -> f64 {
        let (s, e) = two_sum(self.hi, -other.hi);
        s + (e + (self.lo - other.lo))
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Sums over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub len: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub sum_abs: f64,
}

impl Window {
    /// `sum / sqrt(sum_sq)`, `None` for an all-zero window.
    pub fn self_norm(&self) -> Option<f64> {
        (self.sum_sq > 0.0).then(|| self.sum / self.sum_sq.sqrt())
    }

    /// `(sum_abs / len) * sum / sqrt(sum_sq)`, `None` for an all-zero window.
    pub fn modified(&self) -> Option<f64> {
        self.self_norm().map(|t| t * self.sum_abs / self.len as f64)
    }

    pub(crate) fn direct(x: &[f64]) -> Window {
        let mut acc = [Dd::default(); 3];
        for &v in x {
            acc[0] = acc[0].add(v);
            acc[1] = acc[1].add(v * v);
            acc[2] = acc[2].add(v.abs());
        }
        Window {
            len: x.len(),
            sum: acc[0].hi + acc[0].lo,
            sum_sq: acc[1].hi + acc[1].lo,
            sum_abs: acc[2].hi + acc[2].lo,
        }
    }
}

/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    values: Vec<f64>,
    sum: Vec<Dd>,
    sum_sq: Vec<Dd>,
    sum_abs: Vec<Dd>,
}

impl PrefixTable {
    /// Tables of length `n + 1` with a zero at index 0.
    pub fn new(x: &[f64]) -> Result<Self> {
        crate::series::check_finite(x)?;
        let n = x.len();
        let mut sum = Vec::with_capacity(n + 1);
        let mut sum_sq = Vec::with_capacity(n + 1);
        let mut sum_abs = Vec::with_capacity(n + 1);
        let (mut s, mut q, mut a) = (Dd::default(), Dd::default(), Dd::default());
        sum.push(s);
        sum_sq.push(q);
        sum_abs.push(a);
        for &v in x {
            s = s.add(v);
            q = q.add(v * v);
            a = a.add(v.abs());
            sum.push(s);
            sum_sq.push(q);
            sum_abs.push(a);
        }
        Ok(Self {
            values: x.to_vec(),
            sum,
            sum_sq,
            sum_abs,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Aggregates of `x[start..start + b]` (zero-based `start`).
    pub fn window(&self, start: usize, b: usize) -> Result<Window> {
        let end = start
            .checked_add(b)
            .filter(|&e| b > 0 && e <= self.len())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "window [{start}, {start}+{b}) outside a series of length {}",
                    self.len()
                ))
            })?;
        Ok(self.window_unchecked(start, end))
    }

    fn window_unchecked(&self, start: usize, end: usize) -> Window {
        let sum_abs = self.sum_abs[end].minus(self.sum_abs[start]);
        let sum_sq = self.sum_sq[end].minus(self.sum_sq[start]);
        // |sum| and sum_sq are judged against the window's own scale; the
        // prefix error grows with the running totals at `end`.
        let abs_err = DD_EPS * self.sum_abs[end].hi;
        let sq_err = DD_EPS * self.sum_sq[end].hi;
        if abs_err > WINDOW_TOL * sum_abs || sq_err > WINDOW_TOL * sum_sq {
            return Window::direct(&self.values[start..end]);
        }
        Window {
            len: end - start,
            sum: self.sum[end].minus(self.sum[start]),
            sum_sq,
            sum_abs,
        }
    }

    /// Self-normalized statistic of a window; 0 for an all-zero window.
    pub fn window_self_norm(&self, start: usize, b: usize) -> Result<f64> {
        Ok(self.window(start, b)?.self_norm().unwrap_or(0.0))
    }

    /// Modified statistic of a window; 0 for an all-zero window.
    pub fn window_modified(&self, start: usize, b: usize) -> Result<f64> {
        Ok(self.window(start, b)?.modified().unwrap_or(0.0))
    }
}

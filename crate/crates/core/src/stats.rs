//! Numerical helpers: log-domain accumulation, batch-means standard errors,
//! jackknife, Poisson masses, total-variation distance and trend verdicts.

use serde::{Deserialize, Serialize};

/// Streaming log-sum-exp accumulator. Mergeable, so partial sums over disjoint
/// ranges can be combined in any order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Adds `count` copies of `exp(x)`.
    pub fn push_weighted(&mut self, x: f64, count: f64) {
        if count <= 0.0 {
            return;
        }
        self.push(x + count.ln());
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    /// `log sum exp(x_i)`; `-inf` when empty.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &x in xs {
        acc.push(x);
    }
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (0 for fewer than two values).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Splits `xs` into `batches` contiguous batches of equal size (dropping
/// nothing: the last batch absorbs the remainder) and returns the batch means.
pub fn batch_means(xs: &[f64], batches: usize) -> Vec<f64> {
    let batches = batches.clamp(1, xs.len().max(1));
    if xs.is_empty() {
        return Vec::new();
    }
    let size = xs.len() / batches;
    (0..batches)
        .map(|i| {
            let lo = i * size;
            let hi = if i + 1 == batches { xs.len() } else { lo + size };
            mean(&xs[lo..hi])
        })
        .collect()
}

/// Standard error of the grand mean from a set of batch means.
pub fn batch_standard_error(means: &[f64]) -> f64 {
    if means.len() < 2 {
        return 0.0;
    }
    (variance(means) / means.len() as f64).sqrt()
}

/// Lag-1 autocorrelation (0 for constant or too-short series).
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let m = mean(xs);
    let den: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if den == 0.0 {
        return 0.0;
    }
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

/// Delete-one jackknife standard error of a statistic over groups.
pub fn jackknife_se<T, F>(groups: &[T], stat: F) -> f64
where
    F: Fn(&[&T]) -> f64,
{
    let g = groups.len();
    if g < 2 {
        return 0.0;
    }
    let leave_out: Vec<f64> = (0..g)
        .map(|i| {
            let kept: Vec<&T> = groups
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, t)| t)
                .collect();
            stat(&kept)
        })
        .collect();
    let m = mean(&leave_out);
    let ss: f64 = leave_out.iter().map(|x| (x - m) * (x - m)).sum();
    ((g - 1) as f64 / g as f64 * ss).sqrt()
}

/// Poisson(`lambda`) masses `p_0..p_K` with `K` the first index whose upper
/// tail `1 - sum_{k<=K} p_k` drops below `tail`. Returns the masses and the
/// remaining tail mass.
pub fn poisson_masses(lambda: f64, tail: f64) -> (Vec<f64>, f64) {
    assert!(lambda >= 0.0 && lambda.is_finite(), "invalid Poisson mean {lambda}");
    let mut masses = vec![(-lambda).exp()];
    let mut cum = masses[0];
    while 1.0 - cum >= tail {
        let k = masses.len();
        let next = masses[k - 1] * lambda / k as f64;
        masses.push(next);
        cum += next;
        if k > 10_000 {
            break;
        }
    }
    (masses, (1.0 - cum).max(0.0))
}

/// Total-variation distance between an empirical count distribution and a
/// truncated reference law. Empirical mass beyond the truncation point is
/// compared against zero; the reference tail is added as an upper allowance.
pub fn total_variation(counts: &[usize], masses: &[f64], reference_tail: f64) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return f64::NAN;
    }
    let len = counts.len().max(masses.len());
    let mut sum = reference_tail;
    for k in 0..len {
        let emp = counts.get(k).copied().unwrap_or(0) as f64 / total as f64;
        let reference = masses.get(k).copied().unwrap_or(0.0);
        sum += (emp - reference).abs();
    }
    0.5 * sum
}

/// Histogram of non-negative integer observations.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut h = Vec::new();
    for v in values {
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

/// Expected direction of a finite-size trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Outcome of a monotone-trend check along a size grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    /// At least one step moves significantly in the expected direction and
    /// none moves significantly against it.
    Confirmed,
    /// Every step is within the error bars: inconclusive, counted as a pass
    /// but flagged.
    Flat,
    /// Some step moves significantly against the expected direction.
    Violated,
}

impl TrendVerdict {
    pub fn passes(self) -> bool {
        !matches!(self, TrendVerdict::Violated)
    }
}

/// Compares consecutive `(estimate, std_error)` points; a step is significant
/// when it exceeds `z` combined standard errors.
pub fn trend_verdict(points: &[(f64, f64)], expected: Direction, z: f64) -> TrendVerdict {
    let mut confirmed = false;
    for w in points.windows(2) {
        let (a, sa) = w[0];
        let (b, sb) = w[1];
        let tol = z * (sa * sa + sb * sb).sqrt();
        let step = match expected {
            Direction::Increasing => b - a,
            Direction::Decreasing => a - b,
        };
        if step < -tol {
            return TrendVerdict::Violated;
        }
        if step > tol {
            confirmed = true;
        }
    }
    if confirmed {
        TrendVerdict::Confirmed
    } else {
        TrendVerdict::Flat
    }
}

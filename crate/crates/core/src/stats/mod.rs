//! Trend fits, outlier filtering and rank tests for experiment records.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

mod analysis;

pub use analysis::{accuracy_curve, analyze, AccuracyCurve, Analysis, FitRow, PlotRow, SummaryRow};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("all x values are equal")]
    DegenerateX,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals.
    pub residual_sum: f64,
}

impl FitResult {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares line through `points`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<FitResult, StatsError> {
    if points.len() < 2 {
        return Err(StatsError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_sum = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitResult {
        slope,
        intercept,
        residual_sum,
    })
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) q`). `sorted` must be ascending and nonempty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps the values within `multiplier` inter-quantile ranges of the
/// `[low_q, high_q]` quantiles, in their original order.
pub fn remove_outliers(values: &[f64], low_q: f64, high_q: f64, multiplier: f64) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = outlier_bounds(values, low_q, high_q, multiplier);
    values
        .iter()
        .copied()
        .filter(|v| (lo..=hi).contains(v))
        .collect()
}

pub fn outlier_bounds(values: &[f64], low_q: f64, high_q: f64, multiplier: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d_lo = quantile(&sorted, low_q);
    let d_hi = quantile(&sorted, high_q);
    let range = d_hi - d_lo;
    (d_lo - multiplier * range, d_hi + multiplier * range)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankTestResult {
    /// Rank sum of the first sample.
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Largest pooled size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 12;

/// Two-sided Wilcoxon rank-sum test with midranks for ties. Exact for
/// pooled sizes up to [`EXACT_LIMIT`], normal approximation with tie and
/// continuity correction above that. Empty samples give p = 1.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> RankTestResult {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return RankTestResult {
            statistic: 0.0,
            p_value: 1.0,
            n1,
            n2,
        };
    }
    let doubled = doubled_midranks(a, b);
    let n = n1 + n2;
    let w2: i64 = doubled[..n1].iter().sum();
    let p_value = if n <= EXACT_LIMIT {
        exact_p(&doubled, n1, w2)
    } else {
        normal_p(a, b, w2 as f64 / 2.0)
    };
    RankTestResult {
        statistic: w2 as f64 / 2.0,
        p_value,
        n1,
        n2,
    }
}

/// Twice the midrank of every pooled value (so ranks stay integral), `a`
/// first then `b`.
fn doubled_midranks(a: &[f64], b: &[f64]) -> Vec<i64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0i64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let twice_mid = (i + j + 2) as i64;
        for &k in &order[i..=j] {
            ranks[k] = twice_mid;
        }
        i = j + 1;
    }
    ranks
}

fn exact_p(doubled: &[i64], n1: usize, observed: i64) -> f64 {
    let n = doubled.len();
    let centre = n1 as i64 * (n as i64 + 1);
    let dev = (observed - centre).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let s: i64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| doubled[i])
            .sum();
        total += 1;
        if (s - centre).abs() >= dev {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn normal_p(a: &[f64], b: &[f64], w: f64) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    for group in pooled.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        ties += t * t * t - t;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let u = w - n1 * (n1 + 1.0) / 2.0;
    let z = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    (2.0 * (1.0 - std.cdf(z))).min(1.0)
}

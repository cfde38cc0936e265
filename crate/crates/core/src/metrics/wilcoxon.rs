use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest effective sample size handled by exact enumeration.
pub const EXACT_CUTOFF: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

/// Nonzero differences and their average ranks by absolute value.
struct SignedRanks {
    positive: Vec<bool>,
    ranks: Vec<f64>,
    tie_sizes: Vec<usize>,
}

fn signed_ranks(x: &[f64], y: &[f64]) -> Result<SignedRanks> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::AllPairsEqual);
    }
    let mut diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::InvalidConfig("NaN in paired samples".into()));
    }
    if diffs.is_empty() {
        return Err(Error::AllPairsEqual);
    }
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut ranks = vec![0.0; diffs.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < diffs.len() {
        let mut end = start + 1;
        while end < diffs.len() && diffs[end].abs() == diffs[start].abs() {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share their mean
        let mean = (start + 1 + end) as f64 / 2.0;
        ranks[start..end].iter_mut().for_each(|r| *r = mean);
        tie_sizes.push(end - start);
        start = end;
    }
    Ok(SignedRanks {
        positive: diffs.iter().map(|d| *d > 0.0).collect(),
        ranks,
        tie_sizes,
    })
}

/// Paired two-sided Wilcoxon signed-rank test.
///
/// Zero differences are dropped and tied magnitudes share their average rank.
/// Up to [`EXACT_CUTOFF`] pairs the p-value is exact over all `2^n` sign
/// assignments of the observed ranks; above it the normal approximation with
/// tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    let sr = signed_ranks(x, y)?;
    if sr.ranks.len() <= EXACT_CUTOFF {
        Ok(exact(&sr))
    } else {
        Ok(normal(&sr))
    }
}

/// Same test forced onto the normal approximation.
pub fn wilcoxon_signed_rank_normal(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    Ok(normal(&signed_ranks(x, y)?))
}

fn rank_sums(sr: &SignedRanks) -> (f64, f64) {
    sr.positive.iter().zip(&sr.ranks).fold((0.0, 0.0), |(plus, minus), (&pos, &r)| {
        if pos {
            (plus + r, minus)
        } else {
            (plus, minus + r)
        }
    })
}

fn exact(sr: &SignedRanks) -> WilcoxonResult {
    let (w_plus, w_minus) = rank_sums(sr);
    let statistic = w_plus.min(w_minus);

    // Average ranks are multiples of 1/2, so doubled ranks are integers and
    // the null distribution of 2·W⁺ is a subset-sum count.
    let doubled: Vec<usize> = sr.ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2.0 * statistic).round() as usize;
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| s.min(total - s) <= observed)
        .map(|(_, &c)| c)
        .sum();
    let p_value = (extreme as f64 / (1u64 << doubled.len()) as f64).min(1.0);
    WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        p_value,
        n_effective: doubled.len(),
        method: WilcoxonMethod::Exact,
    }
}

fn normal(sr: &SignedRanks) -> WilcoxonResult {
    let (w_plus, w_minus) = rank_sums(sr);
    let statistic = w_plus.min(w_minus);
    let n = sr.ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = sr.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let z = ((statistic - mean + 0.5).min(0.0)) / variance.sqrt();
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        (2.0 * std_normal.cdf(z)).min(1.0)
    };
    WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        p_value,
        n_effective: sr.ranks.len(),
        method: WilcoxonMethod::Normal,
    }
}

//! Ranking metrics, standard error and the Wilcoxon signed-rank test.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Above this many nonzero pairs the signed-rank test switches to the
/// normal approximation.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

/// p-value threshold for flagging a paired difference as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("metric undefined: labels contain a single class")]
    SingleClass,
    #[error("metric undefined: no positive labels")]
    NoPositives,
    #[error("score is not a finite number")]
    NonFinite,
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("no nonzero pairs")]
    NoNonzeroPairs,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// 1-based ranks with ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve via the midrank (Mann-Whitney) statistic: the
/// probability a positive outscores a negative, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let n1 = n_pos as f64;
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n_neg as f64))
}

/// Average precision. Items with equal scores are retrieved together: every
/// positive in a tied group receives the precision at the group's end.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut retrieved, mut ap) = (0usize, 0usize, 0.0);
    for group in order.chunk_by(|&a, &b| scores[a] == scores[b]) {
        let pos = group.iter().filter(|&&i| labels[i]).count();
        tp += pos;
        retrieved += group.len();
        if pos > 0 {
            ap += pos as f64 * (tp as f64 / retrieved as f64);
        }
    }
    Ok(ap / n_pos as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1) over sqrt(n).
pub fn standard_error(values: &[f64]) -> Result<f64, MetricError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricError::TooFew { needed: 2, got: n });
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok(libm::sqrt(ss / (n - 1) as f64) / libm::sqrt(n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    /// min(W+, W-).
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after discarding zero differences.
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

/// Paired per-repeat measurements of two models.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, MetricError> {
        if a.len() != b.len() {
            return Err(MetricError::LengthMismatch(a.len(), b.len()));
        }
        if a.is_empty() {
            return Err(MetricError::TooFew { needed: 1, got: 0 });
        }
        Ok(Self { a, b })
    }

    pub fn wilcoxon(&self, two_sided: bool) -> Result<TestResult, MetricError> {
        wilcoxon_signed_rank(&self.a, &self.b, two_sided)
    }
}

/// Signed ranks of the nonzero differences `a - b`: (|d| midranks, sign).
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<bool>), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricError::TooFew { needed: 1, got: 0 });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    if diffs.is_empty() {
        return Err(MetricError::NoNonzeroPairs);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    Ok((midranks(&abs), diffs.iter().map(|d| *d > 0.0).collect()))
}

/// Wilcoxon signed-rank test on paired samples, zero differences discarded.
///
/// With at most [`EXACT_WILCOXON_MAX_N`] nonzero pairs the p-value is exact
/// over all sign assignments; otherwise it uses the tie-corrected normal
/// approximation with continuity correction. The one-sided alternative is
/// `a > b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], two_sided: bool) -> Result<TestResult, MetricError> {
    let n = a.iter().zip(b).filter(|(x, y)| x != y).count();
    let method = if n <= EXACT_WILCOXON_MAX_N {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApproximation
    };
    wilcoxon_signed_rank_with(a, b, two_sided, method)
}

pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    two_sided: bool,
    method: WilcoxonMethod,
) -> Result<TestResult, MetricError> {
    let (ranks, positive) = signed_ranks(a, b)?;
    let n = ranks.len();
    // Folding from +0.0: an empty f64 sum is -0.0.
    let w_plus: f64 = ranks.iter().zip(&positive).filter(|(_, &p)| p).fold(0.0, |acc, (r, _)| acc + r);
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w_plus, two_sided),
        WilcoxonMethod::NormalApproximation => normal_p(&ranks, w_plus, two_sided),
    };
    Ok(TestResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n_effective: n,
        method,
    })
}

/// Null distribution of W+ by counting sign assignments. Midranks are
/// multiples of 1/2, so doubled ranks are integers and the count is a
/// subset-sum over them.
fn exact_p(ranks: &[f64], w_plus: f64, two_sided: bool) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| libm::round(2.0 * r) as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let total = libm::pow(2.0, ranks.len() as f64);
    let observed = libm::round(2.0 * w_plus) as usize;
    let tail = |pred: &dyn Fn(usize) -> bool| -> f64 {
        counts
            .iter()
            .enumerate()
            .filter(|(s, _)| pred(*s))
            .map(|(_, c)| *c as f64)
            .sum::<f64>()
            / total
    };
    if two_sided {
        // |W+ - T/2| >= |w - T/2| with everything doubled.
        let dev = (2 * observed).abs_diff(max);
        tail(&|s| (2 * s).abs_diff(max) >= dev)
    } else {
        tail(&|s| s >= observed)
    }
}

fn normal_p(ranks: &[f64], w_plus: f64, two_sided: bool) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tie_term: f64 = sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let sd = libm::sqrt(var);
    if two_sided {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
        libm::erfc(z / core::f64::consts::SQRT_2)
    } else {
        let z = (w_plus - mean - 0.5) / sd;
        0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&x| x == 1).collect()
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.3], &labels(&[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &labels(&[1, 0])).unwrap(), 0.5);
        // Brute force: (0.35>0.1) (0.35<0.4) (0.8>0.1) (0.8>0.4) -> 3/4.
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &labels(&[0, 0, 1, 1])).unwrap(), 0.75);
    }

    #[test]
    fn auroc_rejects_single_class() {
        assert_eq!(auroc(&[0.1, 0.2], &labels(&[1, 1])), Err(MetricError::SingleClass));
        assert_eq!(auroc(&[0.1], &labels(&[1, 0])), Err(MetricError::LengthMismatch(1, 2)));
        assert_eq!(auroc(&[f64::NAN, 0.2], &labels(&[1, 0])), Err(MetricError::NonFinite));
    }

    #[test]
    fn auprc_examples() {
        assert_eq!(auprc(&[0.9, 0.8, 0.1], &labels(&[1, 1, 0])).unwrap(), 1.0);
        assert_eq!(auprc(&[0.9, 0.1], &labels(&[0, 1])).unwrap(), 0.5);
        let l = labels(&[1, 0, 0, 0, 1, 0, 0, 0, 0, 0]);
        assert!((auprc(&[0.3; 10], &l).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(auprc(&[0.3, 0.2], &labels(&[0, 0])), Err(MetricError::NoPositives));
    }

    #[test]
    fn standard_error_examples() {
        assert!((standard_error(&[0.7, 0.8]).unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(standard_error(&[0.4; 5]).unwrap(), 0.0);
        let se = standard_error(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((se - libm::sqrt(2.5) / libm::sqrt(5.0)).abs() < 1e-12);
        assert_eq!(libm::round(se * 1e4), 7071.0);
        assert_eq!(standard_error(&[1.0]), Err(MetricError::TooFew { needed: 2, got: 1 }));
    }

    #[test]
    fn wilcoxon_three_positive_differences() {
        // 8 sign assignments of ranks {1,2,3}; W+ in {0,6} is as extreme -> 2/8.
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3], true).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 0.25);
        assert_eq!(r.n_effective, 3);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        let neg = wilcoxon_signed_rank(&[0.0; 3], &[1.0, 2.0, 3.0], true).unwrap();
        assert!(neg.statistic == 0.0 && neg.statistic.is_sign_positive());
    }

    #[test]
    fn wilcoxon_single_nonzero_pair() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 5.0], &[1.0, 2.0, 4.0], true).unwrap();
        assert_eq!(r.n_effective, 1);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_is_symmetric_in_its_arguments() {
        let a = [0.71, 0.69, 0.75, 0.70, 0.73, 0.68];
        let b = [0.70, 0.72, 0.71, 0.66, 0.74, 0.61];
        let ab = wilcoxon_signed_rank(&a, &b, true).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a, true).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.statistic, ba.statistic);
    }

    #[test]
    fn wilcoxon_all_zero_differences() {
        assert_eq!(
            wilcoxon_signed_rank(&[0.5, 0.6], &[0.5, 0.6], true),
            Err(MetricError::NoNonzeroPairs)
        );
    }

    #[test]
    fn wilcoxon_constant_shift_of_twenty_is_significant() {
        let a: Vec<f64> = (0..20).map(|i| 0.6 + 0.01 * i as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.1).collect();
        let r = wilcoxon_signed_rank(&a, &b, true).unwrap();
        // Only the two all-same-sign assignments reach W = 0.
        assert!((r.p_value - 2.0 / libm::pow(2.0, 20.0)).abs() < 1e-15);
        assert!(r.p_value < SIGNIFICANCE_LEVEL);
    }

    #[test]
    fn wilcoxon_switches_to_normal_above_cutoff() {
        let a: Vec<f64> = (0..30).map(|i| i as f64 * 0.37 % 1.0 - 0.4).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 30], true).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApproximation);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn one_sided_tail() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3], false).unwrap();
        assert_eq!(r.p_value, 0.125);
    }
}

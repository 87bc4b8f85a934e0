//! Scaling-curve estimators and solution-diversity metrics.
//!
//! EM@k and Pass@k share one estimator: the task-level verdict vectors differ
//! (exact match vs hidden tests) but the curve machinery is identical. The
//! default estimator is the unbiased combinatorial form
//! 1 − C(n−c, k)/C(n, k); the empirical prefix estimator (fraction of tasks
//! solved within the first k attempts) is available for direct "with k
//! attempts" reads.

mod report;
mod text;

pub use report::{
    similarity_report, write_curve_csv, write_similarity_csv, SimilarityOptions, SimilarityReport,
    TaskSimilarity,
};
pub use text::{
    default_tokenizer, lev_similarity, levenshtein_distance, pairwise_cosine_mean,
    tfidf_similarity, token_seq_similarity, LevVariant,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Unbiased,
    EmpiricalPrefix,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::Unbiased => write!(f, "unbiased"),
            Estimator::EmpiricalPrefix => write!(f, "empirical_prefix"),
        }
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unbiased" => Ok(Estimator::Unbiased),
            "empirical_prefix" => Ok(Estimator::EmpiricalPrefix),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Unbiased pass@k estimator: 1 − C(n−c, k)/C(n, k).
///
/// The ratio accumulates as an exact reduced fraction in the product form
/// ∏ (n−c−k+i)/(n−k+i); only if the integers would overflow u128 does the
/// tail of the product spill into floating point. Small cases (n ≤ 12) are
/// therefore exact to the last bit against subset enumeration.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, MetricsError> {
    if c > n {
        return Err(MetricsError::InvalidArgument(format!("c={c} exceeds n={n}")));
    }
    if k == 0 || k > n {
        return Err(MetricsError::InvalidArgument(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    let mut float_tail: Option<f64> = None;
    for i in 1..=k {
        let a = u128::from(n - c - k + i);
        let b = u128::from(n - k + i);
        if let Some(acc) = float_tail.as_mut() {
            *acc *= a as f64 / b as f64;
            continue;
        }
        if num > u128::MAX / a || den > u128::MAX / b {
            let g = gcd(num, den);
            num /= g;
            den /= g;
            if num > u128::MAX / a || den > u128::MAX / b {
                float_tail = Some((num as f64 / den as f64) * (a as f64 / b as f64));
                continue;
            }
        }
        num *= a;
        den *= b;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Ok(match float_tail {
        Some(ratio) => 1.0 - ratio,
        None => (den - num) as f64 / den as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    /// Attempts per task (the curve spans k = 1..=n).
    pub n: u64,
    /// rates[k-1] is the success rate at budget k.
    pub rates: Vec<f64>,
    pub estimator: Estimator,
    pub task_count: usize,
}

impl ScalingCurve {
    pub fn rate(&self, k: u64) -> f64 {
        self.rates[(k - 1) as usize]
    }

    /// Binomial standard error of the rate at budget k.
    pub fn stderr(&self, k: u64) -> f64 {
        let r = self.rate(k);
        (r * (1.0 - r) / self.task_count as f64).sqrt()
    }
}

/// Build the scaling curve from per-task verdict vectors (attempt order).
/// Every task must have exactly the same number of verdicts.
pub fn scaling_curve(
    verdicts_per_task: &[Vec<bool>],
    estimator: Estimator,
) -> Result<ScalingCurve, MetricsError> {
    let Some(first) = verdicts_per_task.first() else {
        return Err(MetricsError::InvalidArgument("no tasks".into()));
    };
    let n = first.len();
    if n == 0 {
        return Err(MetricsError::InvalidArgument("tasks carry zero verdicts".into()));
    }
    if let Some(ragged) = verdicts_per_task.iter().find(|v| v.len() != n) {
        return Err(MetricsError::InvalidArgument(format!(
            "ragged verdict counts: expected {n}, found {}",
            ragged.len()
        )));
    }
    let tasks = verdicts_per_task.len() as f64;
    let mut rates = Vec::with_capacity(n);
    match estimator {
        Estimator::Unbiased => {
            let corrects: Vec<u64> = verdicts_per_task
                .iter()
                .map(|v| v.iter().filter(|&&x| x).count() as u64)
                .collect();
            for k in 1..=n as u64 {
                let sum: f64 = corrects
                    .iter()
                    .map(|&c| pass_at_k(n as u64, c, k).expect("k <= n"))
                    .sum();
                rates.push(sum / tasks);
            }
        }
        Estimator::EmpiricalPrefix => {
            for k in 1..=n {
                let solved = verdicts_per_task
                    .iter()
                    .filter(|v| v[..k].iter().any(|&x| x))
                    .count();
                rates.push(solved as f64 / tasks);
            }
        }
    }
    Ok(ScalingCurve {
        n: n as u64,
        rates,
        estimator,
        task_count: verdicts_per_task.len(),
    })
}

//! Pairwise text-similarity metrics over a task's solution set.
//!
//! All metrics average over the k(k−1) ordered pairs with self-pairs
//! excluded; since every metric here is symmetric this equals the unordered
//! pair average, which is what the loops compute.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Edit distance over Unicode scalar values.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Which reading of the normalized-Levenshtein column to use. The printed
/// formula is a distance (d / max length); the table trend reads as a
/// similarity. Both are available and the report records the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevVariant {
    OneMinusNormalized,
    PaperRatio,
}

impl Default for LevVariant {
    fn default() -> Self {
        LevVariant::OneMinusNormalized
    }
}

impl std::str::FromStr for LevVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one_minus_normalized" => Ok(LevVariant::OneMinusNormalized),
            "paper_ratio" => Ok(LevVariant::PaperRatio),
            other => Err(format!("unknown levenshtein variant {other:?}")),
        }
    }
}

impl std::fmt::Display for LevVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LevVariant::OneMinusNormalized => write!(f, "one_minus_normalized"),
            LevVariant::PaperRatio => write!(f, "paper_ratio"),
        }
    }
}

fn require_pairs(solutions: &[String]) -> Result<(), MetricsError> {
    if solutions.len() < 2 {
        return Err(MetricsError::UndefinedMetric(format!(
            "pairwise similarity needs >= 2 solutions, got {}",
            solutions.len()
        )));
    }
    Ok(())
}

fn pairwise_mean(count: usize, mut pair_value: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..count {
        for j in (i + 1)..count {
            sum += pair_value(i, j);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Average pairwise normalized Levenshtein value over the solution set.
pub fn lev_similarity(solutions: &[String], variant: LevVariant) -> Result<f64, MetricsError> {
    require_pairs(solutions)?;
    let lengths: Vec<usize> = solutions.iter().map(|s| s.chars().count()).collect();
    Ok(pairwise_mean(solutions.len(), |i, j| {
        let longest = lengths[i].max(lengths[j]);
        let ratio = if longest == 0 {
            0.0 // two empty strings: zero edits
        } else {
            levenshtein_distance(&solutions[i], &solutions[j]) as f64 / longest as f64
        };
        match variant {
            LevVariant::OneMinusNormalized => 1.0 - ratio,
            LevVariant::PaperRatio => ratio,
        }
    }))
}

/// Default tokenizer: maximal alphanumeric/underscore runs plus single
/// punctuation characters (whitespace separates, punctuation splits).
pub fn default_tokenizer(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '_' {
            word.push(ch);
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Average pairwise Jaccard overlap between token sets.
pub fn token_seq_similarity(
    solutions: &[String],
    tokenize: impl Fn(&str) -> Vec<String>,
) -> Result<f64, MetricsError> {
    require_pairs(solutions)?;
    let sets: Vec<BTreeSet<String>> = solutions
        .iter()
        .map(|s| tokenize(s).into_iter().collect())
        .collect();
    Ok(pairwise_mean(solutions.len(), |i, j| {
        let intersection = sets[i].intersection(&sets[j]).count();
        let union = sets[i].union(&sets[j]).count();
        if union == 0 {
            1.0 // identical emptiness
        } else {
            intersection as f64 / union as f64
        }
    }))
}

/// Cosine over a pair of equal-length vectors, with an identical-vector
/// shortcut so `sim(x, x)` is exactly 1. Zero-norm pairs score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean pairwise cosine over per-solution vectors, each cosine clamped into
/// [0, 1] so report values stay in range.
pub fn pairwise_cosine_mean(vectors: &[Vec<f64>], texts: &[String]) -> f64 {
    pairwise_mean(vectors.len(), |i, j| {
        if texts[i] == texts[j] {
            1.0
        } else {
            cosine(&vectors[i], &vectors[j]).clamp(0.0, 1.0)
        }
    })
}

/// Average pairwise cosine between tf-idf vectors of the solution set.
///
/// Weighting: raw term counts, idf = ln((1+D)/(1+df)) + 1 with D the number
/// of solutions, vectors L2-normalized.
pub fn tfidf_similarity(solutions: &[String]) -> Result<f64, MetricsError> {
    require_pairs(solutions)?;
    let docs: Vec<Vec<String>> = solutions.iter().map(|s| default_tokenizer(s)).collect();
    if docs.iter().all(|d| d.is_empty()) {
        return Err(MetricsError::UndefinedMetric(
            "tf-idf over all-empty solutions".into(),
        ));
    }
    let d_count = solutions.len() as f64;
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for term in unique {
            *vocab.entry(term).or_default() += 1;
        }
    }
    let index: BTreeMap<&str, usize> = vocab.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let idf: Vec<f64> = vocab
        .values()
        .map(|df| ((1.0 + d_count) / (1.0 + *df as f64)).ln() + 1.0)
        .collect();
    let vectors: Vec<Vec<f64>> = docs
        .iter()
        .map(|doc| {
            let mut v = vec![0.0; vocab.len()];
            for term in doc {
                v[index[term.as_str()]] += 1.0;
            }
            for (x, w) in v.iter_mut().zip(&idf) {
                *x *= w;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in &mut v {
                    *x /= norm;
                }
            }
            v
        })
        .collect();
    Ok(pairwise_cosine_mean(&vectors, solutions))
}

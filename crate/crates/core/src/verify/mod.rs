//! Verifier families: exact match, hidden-test execution, ORM top-k
//! selection, generated unit tests, and majority vote.
//!
//! Canonical answers are strings post-normalization, never parsed numerics;
//! majority voting operates on normalized extracted answers, not full
//! solution texts.

mod judge;
mod sandbox;

pub use judge::{
    generate_tests, judge_prompt, judge_scores, parse_generated_tests, parse_judge_scores,
    testgen_prompt, JudgeOptions,
};
pub use sandbox::{generated_tests_verify, run_hidden_tests, run_tests, SandboxSpec};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("sandbox failed: {0}")]
    SandboxFailed(String),
    #[error("verification unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Answer normalization rules, applied in the order listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormRule {
    Trim,
    CaseFold,
    CollapseWhitespace,
    StripLatex,
    /// Keep only what follows the final occurrence of the marker.
    ExtractAfterMarker(String),
}

impl fmt::Display for NormRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormRule::Trim => write!(f, "trim"),
            NormRule::CaseFold => write!(f, "case_fold"),
            NormRule::CollapseWhitespace => write!(f, "collapse_whitespace"),
            NormRule::StripLatex => write!(f, "strip_latex"),
            NormRule::ExtractAfterMarker(m) => write!(f, "marker:{m}"),
        }
    }
}

impl FromStr for NormRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trim" => Ok(NormRule::Trim),
            "case_fold" => Ok(NormRule::CaseFold),
            "collapse_whitespace" => Ok(NormRule::CollapseWhitespace),
            "strip_latex" => Ok(NormRule::StripLatex),
            other => other
                .strip_prefix("marker:")
                .map(|m| NormRule::ExtractAfterMarker(m.to_owned()))
                .ok_or_else(|| format!("unknown normalization rule {other:?}")),
        }
    }
}

impl Serialize for NormRule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormRule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn default_rules() -> Vec<NormRule> {
    vec![
        NormRule::Trim,
        NormRule::CaseFold,
        NormRule::CollapseWhitespace,
        NormRule::StripLatex,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierKind {
    ExactMatch,
    HiddenTests,
    OrmTopk { k: usize, judge_backend: String },
    GeneratedTests {
        count: usize,
        threshold: usize,
        judge_backend: String,
    },
    MajorityVote,
}

impl VerifierKind {
    pub fn name(&self) -> &'static str {
        match self {
            VerifierKind::ExactMatch => "exact_match",
            VerifierKind::HiddenTests => "hidden_tests",
            VerifierKind::OrmTopk { .. } => "orm_topk",
            VerifierKind::GeneratedTests { .. } => "generated_tests",
            VerifierKind::MajorityVote => "majority_vote",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierSpec {
    pub kind: VerifierKind,
    #[serde(default = "default_rules")]
    pub normalizer: Vec<NormRule>,
}

impl VerifierSpec {
    pub fn exact_match() -> Self {
        VerifierSpec {
            kind: VerifierKind::ExactMatch,
            normalizer: default_rules(),
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        match &self.kind {
            VerifierKind::OrmTopk { k, .. } if *k == 0 => {
                Err(VerifyError::Configuration("orm_topk requires k >= 1".into()))
            }
            VerifierKind::GeneratedTests { count, threshold, .. }
                if *threshold == 0 || threshold > count =>
            {
                Err(VerifyError::Configuration(format!(
                    "generated_tests threshold must be in 1..={count}, got {threshold}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Apply normalization rules in order.
pub fn normalize_answer(text: &str, rules: &[NormRule]) -> String {
    let mut out = text.to_owned();
    for rule in rules {
        out = match rule {
            NormRule::Trim => out.trim().to_owned(),
            NormRule::CaseFold => out.to_lowercase(),
            NormRule::CollapseWhitespace => out.split_whitespace().collect::<Vec<_>>().join(" "),
            NormRule::StripLatex => strip_latex(&out),
            NormRule::ExtractAfterMarker(marker) => match out.rfind(marker.as_str()) {
                Some(pos) => out[pos + marker.len()..].trim().to_owned(),
                None => out,
            },
        };
    }
    out
}

fn strip_latex(text: &str) -> String {
    let mut t = text.trim();
    loop {
        let before = t;
        for (open, close) in [("$$", "$$"), ("\\[", "\\]"), ("\\(", "\\)"), ("$", "$")] {
            if t.len() > open.len() + close.len() && t.starts_with(open) && t.ends_with(close) {
                t = t[open.len()..t.len() - close.len()].trim();
            }
        }
        if let Some(inner) = t.strip_prefix("\\boxed{").and_then(|r| r.strip_suffix('}')) {
            t = inner.trim();
        }
        if t == before {
            return t.to_owned();
        }
    }
}

/// Exact-match verification over normalized strings.
pub fn verify_exact(extracted: &str, ground_truth: &str, rules: &[NormRule]) -> bool {
    normalize_answer(extracted, rules) == normalize_answer(ground_truth, rules)
}

/// Select the `min(k, len)` highest-scoring candidate indices; ties break
/// toward the lower candidate index. Unordered input is fine; NaN scores
/// sink to the bottom.
pub fn orm_topk_select(scores: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .map(|&(i, s)| (i, if s.is_nan() { f64::NEG_INFINITY } else { s }))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k.min(scores.len()));
    ranked.into_iter().map(|(i, _)| i).collect()
}

/// Modal value over (answer, count) pairs; ties break to the
/// lexicographically smallest answer.
pub fn modal_from_counts<'a>(counts: impl IntoIterator<Item = (&'a str, usize)>) -> Option<String> {
    let mut best: Option<(&str, usize)> = None;
    for (answer, count) in counts {
        best = match best {
            None => Some((answer, count)),
            Some((b_answer, b_count)) => {
                if count > b_count || (count == b_count && answer < b_answer) {
                    Some((answer, count))
                } else {
                    Some((b_answer, b_count))
                }
            }
        };
    }
    best.map(|(answer, _)| answer.to_owned())
}

/// Most frequent answer; ties break lexicographically smallest.
pub fn majority_vote(answers: &[String]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for answer in answers {
        *counts.entry(answer.as_str()).or_default() += 1;
    }
    modal_from_counts(counts.into_iter())
}

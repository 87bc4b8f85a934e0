//! Similarity reports and CSV emission.
//!
//! Per-task metric values plus corpus means. A metric that is undefined for
//! a task (fewer than two solutions, all-empty corpus) or whose provider is
//! unavailable is *skipped* — reported absent, never zero.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::backends::embed::EmbeddingProvider;

use super::text::{lev_similarity, pairwise_cosine_mean, tfidf_similarity, token_seq_similarity};
use super::{default_tokenizer, LevVariant, ScalingCurve};

#[derive(Debug, Clone, Default)]
pub struct SimilarityOptions {
    pub lev_variant: LevVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSimilarity {
    pub task_id: String,
    pub tfidf: Option<f64>,
    pub embed: Option<f64>,
    pub lev: Option<f64>,
    pub seq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub per_task: Vec<TaskSimilarity>,
    pub lev_variant: LevVariant,
    /// Whether an embedding provider was configured at all.
    pub embed_available: bool,
    pub corpus_tfidf: Option<f64>,
    pub corpus_embed: Option<f64>,
    pub corpus_lev: Option<f64>,
    pub corpus_seq: Option<f64>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

fn embed_mean(provider: &dyn EmbeddingProvider, solutions: &[String]) -> Option<f64> {
    let vectors: Result<Vec<Vec<f64>>, _> =
        solutions.iter().map(|s| provider.embed(s)).collect();
    match vectors {
        Ok(vectors) => Some(pairwise_cosine_mean(&vectors, solutions)),
        Err(e) => {
            log::warn!("embedding provider failed, metric skipped: {e}");
            None
        }
    }
}

/// Compute the four pairwise similarity metrics per task.
pub fn similarity_report(
    solutions_by_task: &BTreeMap<String, Vec<String>>,
    opts: &SimilarityOptions,
    provider: Option<&dyn EmbeddingProvider>,
) -> SimilarityReport {
    let mut per_task = Vec::with_capacity(solutions_by_task.len());
    for (task_id, solutions) in solutions_by_task {
        let undefined = solutions.len() < 2;
        per_task.push(TaskSimilarity {
            task_id: task_id.clone(),
            tfidf: if undefined { None } else { tfidf_similarity(solutions).ok() },
            embed: if undefined {
                None
            } else {
                provider.and_then(|p| embed_mean(p, solutions))
            },
            lev: if undefined {
                None
            } else {
                lev_similarity(solutions, opts.lev_variant).ok()
            },
            seq: if undefined {
                None
            } else {
                token_seq_similarity(solutions, default_tokenizer).ok()
            },
        });
    }
    SimilarityReport {
        corpus_tfidf: mean_defined(per_task.iter().map(|t| t.tfidf)),
        corpus_embed: mean_defined(per_task.iter().map(|t| t.embed)),
        corpus_lev: mean_defined(per_task.iter().map(|t| t.lev)),
        corpus_seq: mean_defined(per_task.iter().map(|t| t.seq)),
        embed_available: provider.is_some(),
        lev_variant: opts.lev_variant,
        per_task,
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Curve table: columns k, rate, stderr.
pub fn write_curve_csv<W: Write>(w: &mut W, curve: &ScalingCurve) -> std::io::Result<()> {
    writeln!(w, "k,rate,stderr")?;
    for k in 1..=curve.n {
        writeln!(w, "{k},{:.6},{:.6}", curve.rate(k), curve.stderr(k))?;
    }
    Ok(())
}

/// Similarity table: columns task_id, metric, value, variant. Skipped
/// metrics emit no row.
pub fn write_similarity_csv<W: Write>(w: &mut W, report: &SimilarityReport) -> std::io::Result<()> {
    writeln!(w, "task_id,metric,value,variant")?;
    let lev_variant = report.lev_variant.to_string();
    for task in &report.per_task {
        let rows: [(&str, Option<f64>, &str); 4] = [
            ("tfidf_sim", task.tfidf, ""),
            ("embed_sim", task.embed, ""),
            ("lev_sim", task.lev, lev_variant.as_str()),
            ("seq_sim", task.seq, ""),
        ];
        for (metric, value, variant) in rows {
            if let Some(v) = value {
                writeln!(w, "{},{metric},{v:.6},{variant}", csv_field(&task.task_id))?;
            }
        }
    }
    Ok(())
}

//! Thinker-driven solution-idea collection.
//!
//! A thinker is queried for batches of `m` ideas until `n` accumulate, then
//! the list is truncated to the first `n`. With a reliable thinker that is
//! ⌈n/m⌉ calls; with batches that parse to m' < m ideas it is ⌈n/m'⌉. The
//! diverse variant traverses a pool of thinkers cyclically, skipping (and
//! logging) a thinker that fails within a cycle.

use serde::{Deserialize, Serialize};

use crate::backends::BackendHandle;
use crate::input::{CombinedInput, Perturbation, PerturbationKind, PerturbationSource};
use crate::seed::derive_call_seed;

use super::{idea_prompt, PerturbError};

pub const MIN_IDEA_CHARS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdeaSet {
    pub task_id: String,
    pub ideas: Vec<String>,
    /// Originating thinker model id, one per idea.
    pub provenance: Vec<String>,
}

impl IdeaSet {
    pub fn validate(&self, expected: usize) -> Result<(), PerturbError> {
        if self.ideas.len() != expected || self.provenance.len() != expected {
            return Err(PerturbError::InvalidArgument(format!(
                "idea set for {} has {} ideas, expected {expected}",
                self.task_id,
                self.ideas.len()
            )));
        }
        if self.ideas.iter().any(String::is_empty) {
            return Err(PerturbError::InvalidArgument(format!(
                "idea set for {} contains an empty idea",
                self.task_id
            )));
        }
        Ok(())
    }

    pub fn perturbations(&self) -> Vec<Perturbation> {
        self.ideas
            .iter()
            .zip(&self.provenance)
            .enumerate()
            .map(|(index, (text, model_id))| Perturbation {
                kind: PerturbationKind::Idea,
                text: text.clone(),
                source: PerturbationSource::Thinker {
                    model_id: model_id.clone(),
                },
                index,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub temperature: f64,
    pub max_tokens: u32,
    pub base_seed: u64,
    /// Consecutive failed batches tolerated before aborting.
    pub max_retries: u32,
    pub min_idea_chars: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            temperature: 0.6,
            max_tokens: 1024,
            base_seed: 0,
            max_retries: 3,
            min_idea_chars: MIN_IDEA_CHARS,
        }
    }
}

/// Per-collection trace: which thinker handled each call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectionStats {
    pub calls: Vec<String>,
    pub failed_batches: u32,
}

/// Parse a thinker reply into idea strings: strict bracketed-list parse
/// first, then a fallback split on numbered/bulleted lines. Returns up to
/// `expected` non-empty items.
pub fn parse_idea_list(raw: &str, expected: usize) -> Result<Vec<String>, PerturbError> {
    let mut items = parse_bracketed(raw);
    if items.is_empty() {
        items = parse_marked_lines(raw);
    }
    items.retain(|s| !s.is_empty());
    items.truncate(expected);
    if items.is_empty() {
        return Err(PerturbError::ParseFailed);
    }
    Ok(items)
}

fn parse_bracketed(raw: &str) -> Vec<String> {
    let Some(start) = raw.find('[') else {
        return Vec::new();
    };
    let Some(end) = raw.rfind(']') else {
        return Vec::new();
    };
    if end <= start {
        return Vec::new();
    }
    match serde_json::from_str::<Vec<String>>(&raw[start..=end]) {
        Ok(items) => items.into_iter().map(|s| s.trim().to_owned()).collect(),
        Err(_) => Vec::new(),
    }
}

fn parse_marked_lines(raw: &str) -> Vec<String> {
    raw.lines().filter_map(strip_list_marker).map(str::to_owned).collect()
}

fn strip_list_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return Some(rest.trim());
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        for sep in [". ", ") ", ".", ")"] {
            if let Some(r) = rest.strip_prefix(sep) {
                return Some(r.trim());
            }
        }
    }
    None
}

/// Single/Dual idea collection: one thinker, batches of `m`, until `n` ideas.
pub fn collect_ideas(
    thinker: &BackendHandle,
    input: &CombinedInput,
    task_id: &str,
    n: usize,
    m: usize,
    opts: &CollectOptions,
) -> Result<(IdeaSet, CollectionStats), PerturbError> {
    collect_ideas_diverse(std::slice::from_ref(thinker), input, task_id, n, m, opts)
}

/// Diverse idea collection: cyclically traverse the thinker pool until `n`
/// ideas accumulate, then keep the first `n`.
pub fn collect_ideas_diverse(
    thinkers: &[impl std::borrow::Borrow<BackendHandle>],
    input: &CombinedInput,
    task_id: &str,
    n: usize,
    m: usize,
    opts: &CollectOptions,
) -> Result<(IdeaSet, CollectionStats), PerturbError> {
    if thinkers.is_empty() {
        return Err(PerturbError::InvalidArgument("no thinkers supplied".into()));
    }
    if n == 0 || m == 0 {
        return Err(PerturbError::InvalidArgument(format!(
            "n and m must be >= 1, got n={n}, m={m}"
        )));
    }
    let prompt = idea_prompt(&input.rendered, m);
    let mut ideas: Vec<String> = Vec::with_capacity(n);
    let mut provenance: Vec<String> = Vec::with_capacity(n);
    let mut stats = CollectionStats::default();
    let mut call_index: u64 = 0;
    let mut consecutive_failures: u32 = 0;

    'cycles: while ideas.len() < n {
        let mut progressed = false;
        for thinker in thinkers {
            let thinker = thinker.borrow();
            let seed = derive_call_seed(opts.base_seed, task_id, "ideas", call_index);
            call_index += 1;
            stats.calls.push(thinker.model_id.clone());
            let request = thinker.request(&prompt, opts.temperature, seed, opts.max_tokens);
            let batch = match thinker.complete(&request) {
                Ok(reply) => match parse_idea_list(&reply.text, m) {
                    Ok(items) => items,
                    Err(_) => Vec::new(),
                },
                Err(e) => {
                    log::warn!("thinker {} skipped this cycle: {e}", thinker.id);
                    Vec::new()
                }
            };
            let kept: Vec<String> = batch
                .into_iter()
                .filter(|idea| idea.chars().count() >= opts.min_idea_chars)
                .collect();
            if kept.is_empty() {
                stats.failed_batches += 1;
                consecutive_failures += 1;
                if consecutive_failures >= opts.max_retries {
                    return Err(PerturbError::CollectionFailed {
                        consecutive_failures,
                    });
                }
            } else {
                consecutive_failures = 0;
                progressed = true;
                for idea in kept {
                    ideas.push(idea);
                    provenance.push(thinker.model_id.clone());
                }
            }
            if ideas.len() >= n {
                break 'cycles;
            }
        }
        // A full cycle without progress still counts toward the failure cap
        // above; nothing extra to do here.
        let _ = progressed;
    }

    ideas.truncate(n);
    provenance.truncate(n);
    let set = IdeaSet {
        task_id: task_id.to_owned(),
        ideas,
        provenance,
    };
    set.validate(n)?;
    Ok((set, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendHandle, ScriptedBackend};
    use crate::input::make_input;
    use std::sync::Arc;

    fn idea_list_reply(label: &str, count: usize) -> String {
        let items: Vec<String> = (0..count)
            .map(|i| format!("\"idea {label}-{i} with plenty of words\""))
            .collect();
        format!("[{}]", items.join(","))
    }

    fn thinker(model: &str, batch: usize) -> BackendHandle {
        BackendHandle::new(
            format!("backend-{model}"),
            model,
            Arc::new(ScriptedBackend::fixed(idea_list_reply(model, batch))),
        )
    }

    #[test]
    fn exact_batch_single_call() {
        let t = thinker("thinker-a", 10);
        let input = make_input("p", "q").unwrap();
        let (set, stats) =
            collect_ideas(&t, &input, "t1", 10, 10, &CollectOptions::default()).unwrap();
        assert_eq!(set.ideas.len(), 10);
        assert_eq!(stats.calls.len(), 1);
    }

    #[test]
    fn ceiling_call_count_and_truncation() {
        // Derived oracle: ceil(10 / 4) = 3 calls, 12 ideas accumulated,
        // first 10 kept.
        let t = thinker("thinker-a", 4);
        let input = make_input("p", "q").unwrap();
        let (set, stats) =
            collect_ideas(&t, &input, "t1", 10, 4, &CollectOptions::default()).unwrap();
        assert_eq!(stats.calls.len(), 3);
        assert_eq!(set.ideas.len(), 10);
    }

    #[test]
    fn deterministic_across_runs() {
        let input = make_input("p", "q").unwrap();
        let opts = CollectOptions::default();
        let (a, _) = collect_ideas(&thinker("m", 5), &input, "t1", 5, 5, &opts).unwrap();
        let (b, _) = collect_ideas(&thinker("m", 5), &input, "t1", 5, 5, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_robin_provenance() {
        // Derived oracle: with 2 thinkers, n=6, m=3, the cycle visits A then
        // B, each contributing a full batch: A,A,A,B,B,B.
        let pool = vec![thinker("thinker-a", 3), thinker("thinker-b", 3)];
        let input = make_input("p", "q").unwrap();
        let (set, _) =
            collect_ideas_diverse(&pool, &input, "t1", 6, 3, &CollectOptions::default()).unwrap();
        assert_eq!(
            set.provenance,
            vec!["thinker-a", "thinker-a", "thinker-a", "thinker-b", "thinker-b", "thinker-b"]
        );
    }

    #[test]
    fn four_thinkers_one_idea_each() {
        let pool: Vec<BackendHandle> = (0..4).map(|i| thinker(&format!("t{i}"), 1)).collect();
        let input = make_input("p", "q").unwrap();
        let (set, _) =
            collect_ideas_diverse(&pool, &input, "t1", 4, 1, &CollectOptions::default()).unwrap();
        assert_eq!(set.provenance, vec!["t0", "t1", "t2", "t3"]);
    }

    #[test]
    fn failing_thinker_is_skipped() {
        let broken = BackendHandle::new(
            "broken",
            "thinker-broken",
            Arc::new(ScriptedBackend::by_request(vec![])),
        );
        let pool = vec![broken, thinker("thinker-ok", 3)];
        let input = make_input("p", "q").unwrap();
        let (set, _) =
            collect_ideas_diverse(&pool, &input, "t1", 3, 3, &CollectOptions::default()).unwrap();
        assert!(set.provenance.iter().all(|p| p == "thinker-ok"));
    }

    #[test]
    fn collection_aborts_after_consecutive_failures() {
        let t = BackendHandle::new("b", "m", Arc::new(ScriptedBackend::fixed("no list here")));
        let input = make_input("p", "q").unwrap();
        let err = collect_ideas(&t, &input, "t1", 5, 5, &CollectOptions::default()).unwrap_err();
        assert!(matches!(err, PerturbError::CollectionFailed { consecutive_failures: 3 }));
    }

    #[test]
    fn short_ideas_are_discarded_at_collection() {
        // Batches mix a too-short idea with long ones; only long ones count.
        let reply = r#"["tiny", "a sufficiently long idea one", "a sufficiently long idea two"]"#;
        let t = BackendHandle::new("b", "m", Arc::new(ScriptedBackend::fixed(reply.to_owned())));
        let input = make_input("p", "q").unwrap();
        let (set, stats) =
            collect_ideas(&t, &input, "t1", 4, 3, &CollectOptions::default()).unwrap();
        assert_eq!(stats.calls.len(), 2);
        assert!(set.ideas.iter().all(|i| i.chars().count() >= MIN_IDEA_CHARS));
    }

    #[test]
    fn parse_strict_list() {
        let items = parse_idea_list(r#"["use recursion","use a stack"]"#, 5).unwrap();
        assert_eq!(items, vec!["use recursion", "use a stack"]);
    }

    #[test]
    fn parse_fallback_numbered_lines() {
        let items = parse_idea_list("1. idea one\n2. idea two", 5).unwrap();
        assert_eq!(items, vec!["idea one", "idea two"]);
    }

    #[test]
    fn parse_empty_list_fails() {
        assert!(matches!(parse_idea_list("[]", 5), Err(PerturbError::ParseFailed)));
    }

    #[test]
    fn parse_respects_expected_cap() {
        let items = parse_idea_list(r#"["a","b","c","d"]"#, 2).unwrap();
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn parse_list_embedded_in_prose() {
        let raw = "Sure! Here are the ideas:\n[\"first idea\", \"second idea\"]\nHope it helps.";
        assert_eq!(parse_idea_list(raw, 5).unwrap().len(), 2);
    }
}

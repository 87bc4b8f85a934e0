//! LLM-as-judge scoring and unit-test generation.
//!
//! Scoring is one batched prompt over the full candidate list; replies are
//! parsed against the strict `<SOL_i> ... score = X` pattern with one retry
//! on a fully unparseable reply, after which missing candidates score
//! negative infinity (and are logged).

use crate::backends::BackendHandle;

use super::VerifyError;

#[derive(Debug, Clone)]
pub struct JudgeOptions {
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions {
            temperature: 0.0,
            max_tokens: 2048,
            seed: 0,
        }
    }
}

pub fn judge_prompt(question: &str, candidates: &[String]) -> String {
    let list: Vec<String> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| format!("<SOL_{i}> {c}"))
        .collect();
    include_str!("assets/judge_prompt.txt")
        .replace("{question}", question)
        .replace("{candidates}", &list.join("\n"))
}

pub fn testgen_prompt(question: &str, count: usize) -> String {
    include_str!("assets/testgen_prompt.txt")
        .replace("{count}", &count.to_string())
        .replace("{question}", question)
}

/// Parse per-candidate scores from a judge reply. `None` marks candidates the
/// reply did not score parseably.
pub fn parse_judge_scores(reply: &str, count: usize) -> Vec<Option<f64>> {
    let mut scores = vec![None; count];
    for line in reply.lines() {
        if let Some((index, score)) = parse_score_line(line) {
            if index < count && scores[index].is_none() {
                scores[index] = Some(score);
            }
        }
    }
    scores
}

fn parse_score_line(line: &str) -> Option<(usize, f64)> {
    let start = line.find("<SOL_")?;
    let rest = &line[start + "<SOL_".len()..];
    let close = rest.find('>')?;
    let index: usize = rest[..close].trim().parse().ok()?;
    let after = &rest[close + 1..];
    let score_pos = after.find("score")?;
    let after_score = &after[score_pos + "score".len()..];
    let eq = after_score.find('=')?;
    let tail = after_score[eq + 1..].trim_start();
    let number: String = tail
        .chars()
        .take_while(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+'))
        .collect();
    number.parse().ok().map(|score| (index, score))
}

/// Score every candidate with one batched judging call.
pub fn judge_scores(
    judge: &BackendHandle,
    question: &str,
    candidates: &[String],
    opts: &JudgeOptions,
) -> Result<Vec<f64>, VerifyError> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let prompt = judge_prompt(question, candidates);
    let mut parsed = vec![None; candidates.len()];
    for attempt in 0..2u64 {
        let request = judge.request(&prompt, opts.temperature, opts.seed.wrapping_add(attempt), opts.max_tokens);
        match judge.complete(&request) {
            Ok(reply) => {
                parsed = parse_judge_scores(&reply.text, candidates.len());
                if parsed.iter().any(Option::is_some) {
                    break;
                }
                log::warn!("judge reply had no parseable scores (attempt {})", attempt + 1);
            }
            Err(e) if attempt == 0 => log::warn!("judge call failed, retrying once: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(parsed
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.unwrap_or_else(|| {
                log::warn!("candidate {i} unscored by judge; assigning -inf");
                f64::NEG_INFINITY
            })
        })
        .collect())
}

/// Extract assertion-per-line generated tests from a reply.
pub fn parse_generated_tests(reply: &str) -> Vec<String> {
    reply
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with("assert"))
        .map(str::to_owned)
        .collect()
}

/// Ask the judge backend for `count` unit tests.
pub fn generate_tests(
    judge: &BackendHandle,
    question: &str,
    count: usize,
    opts: &JudgeOptions,
) -> Result<Vec<String>, VerifyError> {
    let prompt = testgen_prompt(question, count);
    let request = judge.request(&prompt, opts.temperature, opts.seed, opts.max_tokens);
    let reply = judge.complete(&request)?;
    let mut tests = parse_generated_tests(&reply.text);
    tests.truncate(count);
    if tests.is_empty() {
        return Err(VerifyError::Unavailable(
            "judge produced zero parseable tests".into(),
        ));
    }
    Ok(tests)
}

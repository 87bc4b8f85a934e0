//! Majority vote versus Best-of-N on a fixed answer distribution.
//!
//! Majority voting converges to the most probable answer, so its asymptotic
//! accuracy is an indicator of whether the correct answer is the modal one;
//! Best-of-N accuracy is exactly 1 − (1 − p(y*))^N and converges to 1 for
//! any positive p(y*). The Monte Carlo side uses the verify module's tie
//! rule (lexicographically smallest among the most frequent).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::mix64;
use crate::verify::modal_from_counts;

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDist {
    /// (answer, probability) pairs.
    pub answers: Vec<(String, f64)>,
    /// Index of the correct answer y*.
    pub correct: usize,
}

impl AnswerDist {
    pub fn new(answers: Vec<(String, f64)>, correct: usize) -> Result<Self, SimError> {
        let dist = AnswerDist { answers, correct };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.answers.is_empty() {
            return Err(SimError::InvalidDistribution("no answers".into()));
        }
        if self.correct >= self.answers.len() {
            return Err(SimError::InvalidDistribution(format!(
                "correct index {} out of range",
                self.correct
            )));
        }
        if self.answers.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
            return Err(SimError::InvalidDistribution(
                "probabilities must lie in [0,1]".into(),
            ));
        }
        let total: f64 = self.answers.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn correct_probability(&self) -> f64 {
        self.answers[self.correct].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvBonResult {
    /// Monte Carlo majority-vote accuracy over the trials.
    pub mv_accuracy: f64,
    /// Exact Best-of-N accuracy 1 − (1 − p(y*))^n.
    pub bon_accuracy: f64,
}

const MV_CHUNK: u64 = 64;

/// Monte Carlo majority vote against the exact Best-of-N accuracy.
pub fn mv_vs_bon(dist: &AnswerDist, n: u32, trials: u64, seed: u64) -> Result<MvBonResult, SimError> {
    dist.validate()?;
    if n == 0 || trials == 0 {
        return Err(SimError::InvalidArgument("n and trials must be >= 1".into()));
    }
    let cumulative: Vec<f64> = dist
        .answers
        .iter()
        .scan(0.0, |acc, (_, p)| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let correct_answer = dist.answers[dist.correct].0.as_str();

    let chunk_count = trials.div_ceil(MV_CHUNK);
    let wins: u64 = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let chunk_trials = MV_CHUNK.min(trials - chunk * MV_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(chunk + 1)));
            let mut wins = 0u64;
            for _ in 0..chunk_trials {
                let mut counts = vec![0usize; dist.answers.len()];
                for _ in 0..n {
                    let roll: f64 = rng.gen();
                    let idx = cumulative.partition_point(|&c| c < roll).min(counts.len() - 1);
                    counts[idx] += 1;
                }
                let winner = modal_from_counts(
                    dist.answers
                        .iter()
                        .zip(&counts)
                        .filter(|(_, &c)| c > 0)
                        .map(|((answer, _), &c)| (answer.as_str(), c)),
                );
                if winner.as_deref() == Some(correct_answer) {
                    wins += 1;
                }
            }
            wins
        })
        .sum();

    Ok(MvBonResult {
        mv_accuracy: wins as f64 / trials as f64,
        bon_accuracy: 1.0 - (1.0 - dist.correct_probability()).powi(n as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, f64)], correct: usize) -> AnswerDist {
        AnswerDist::new(
            pairs.iter().map(|(a, p)| (a.to_string(), *p)).collect(),
            correct,
        )
        .unwrap()
    }

    #[test]
    fn favorable_distribution_mv_converges() {
        // Derived oracle: P(Bin(1001, 0.6) <= 500) < 1e-9, so over 2000
        // trials MV should essentially never lose.
        let d = dist(&[("y*", 0.6), ("y1", 0.4)], 0);
        let result = mv_vs_bon(&d, 1001, 2_000, 1).unwrap();
        assert!(result.mv_accuracy >= 0.999, "mv {}", result.mv_accuracy);
    }

    #[test]
    fn non_modal_correct_answer_fails_mv_but_not_bon() {
        let d = dist(&[("y*", 0.3), ("y1", 0.4), ("y2", 0.3)], 0);
        let result = mv_vs_bon(&d, 1001, 2_000, 2).unwrap();
        assert!(result.mv_accuracy <= 0.05, "mv {}", result.mv_accuracy);
        assert!(result.bon_accuracy >= 0.999999);
    }

    #[test]
    fn impossible_answer_never_hits_for_bon() {
        let d = dist(&[("y*", 0.0), ("y1", 1.0)], 0);
        for n in [1, 10, 100] {
            let result = mv_vs_bon(&d, n, 100, 3).unwrap();
            assert_eq!(result.bon_accuracy, 0.0);
            assert_eq!(result.mv_accuracy, 0.0);
        }
    }

    #[test]
    fn bon_closed_form() {
        let d = dist(&[("y*", 0.3), ("y1", 0.7)], 0);
        let result = mv_vs_bon(&d, 5, 10, 4).unwrap();
        assert!((result.bon_accuracy - (1.0 - 0.7f64.powi(5))).abs() < 1e-15);
    }

    #[test]
    fn bad_distributions_rejected() {
        assert!(AnswerDist::new(vec![("a".into(), 0.5), ("b".into(), 0.4)], 0).is_err());
        assert!(AnswerDist::new(vec![("a".into(), 1.0)], 3).is_err());
        assert!(AnswerDist::new(vec![], 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let d = dist(&[("y*", 0.5), ("y1", 0.5)], 0);
        let a = mv_vs_bon(&d, 101, 3_000, 9).unwrap();
        let b = mv_vs_bon(&d, 101, 3_000, 9).unwrap();
        assert_eq!(a, b);
    }
}

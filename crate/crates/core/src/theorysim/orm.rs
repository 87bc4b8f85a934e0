//! ORM top-k recall under a latent margin.
//!
//! Score model: the correct candidate's latent score sits a margin γ above
//! every incorrect one; observed scores add i.i.d. Gaussian noise with
//! standard deviation σ (a sub-Gaussian variance proxy, so the analytic
//! bound applies). Each trial selects top-k with the verify module's
//! selector and records whether the correct candidate was missed. The bound
//! is (N−1)·p_γ/k with p_γ = exp(−γ²/(4σ²)); the check is one-sided
//! (empirical ≤ bound), so the Gaussian instantiation cannot produce false
//! failures.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::mix64;
use crate::verify::orm_topk_select;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrmTrialResult {
    pub empirical_miss_rate: f64,
    /// (N−1) · p_γ / k; may exceed 1, in which case it is vacuous.
    pub bound: f64,
    pub p_gamma: f64,
}

const ORM_CHUNK: u64 = 256;

pub fn orm_margin_trial(
    n_candidates: usize,
    gamma: f64,
    sigma: f64,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<OrmTrialResult, SimError> {
    if n_candidates == 0 || k == 0 || trials == 0 {
        return Err(SimError::InvalidArgument(
            "n_candidates, k, and trials must be >= 1".into(),
        ));
    }
    if !(gamma > 0.0) || !(sigma > 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "gamma and sigma must be positive, got gamma={gamma}, sigma={sigma}"
        )));
    }
    let p_gamma = (-gamma * gamma / (4.0 * sigma * sigma)).exp();
    let bound = (n_candidates as f64 - 1.0) * p_gamma / k as f64;

    let chunk_count = trials.div_ceil(ORM_CHUNK);
    let misses: u64 = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let chunk_trials = ORM_CHUNK.min(trials - chunk * ORM_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(chunk + 1)));
            let mut misses = 0u64;
            for _ in 0..chunk_trials {
                let correct = rng.gen_range(0..n_candidates);
                let scores: Vec<(usize, f64)> = (0..n_candidates)
                    .map(|i| {
                        let latent = if i == correct { gamma } else { 0.0 };
                        let noise: f64 = rng.sample(StandardNormal);
                        (i, latent + sigma * noise)
                    })
                    .collect();
                if !orm_topk_select(&scores, k).contains(&correct) {
                    misses += 1;
                }
            }
            misses
        })
        .sum();

    Ok(OrmTrialResult {
        empirical_miss_rate: misses as f64 / trials as f64,
        bound,
        p_gamma,
    })
}

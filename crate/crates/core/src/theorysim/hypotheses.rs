//! Dispersion and fidelity measurement over a generated suite.
//!
//! Both quantities are exact sums over the finite grids: the dispersion
//! M₁(r) = E_η E_ξ |q − E_ξ q| and the fidelity ratio
//! E_r E_η[e^{N q(·,ξ*)}] / E_r E_η[e^{N q(·,ξ⁰)}].

use serde::{Deserialize, Serialize};

use super::{SimSuite, XiRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M1Report {
    /// M₁ per instance, suite order.
    pub per_instance: Vec<f64>,
    /// Realized μ̂₁: minimum over instances outside R₀*. Absent when every
    /// instance is fully unsolvable.
    pub mu1_hat: Option<f64>,
    pub mean_m1: f64,
}

/// First absolute central moment of q with respect to ξ, averaged over η.
pub fn measure_m1(suite: &SimSuite) -> M1Report {
    let mut per_instance = Vec::with_capacity(suite.instances.len());
    let mut mu1_hat: Option<f64> = None;
    for instance in &suite.instances {
        let mut m1 = 0.0;
        for e in 0..suite.eta_count {
            let mean_xi: f64 = (0..suite.xi_count)
                .map(|j| instance.q(e, XiRef::Aux(j)))
                .sum::<f64>()
                / suite.xi_count as f64;
            let abs_dev: f64 = (0..suite.xi_count)
                .map(|j| (instance.q(e, XiRef::Aux(j)) - mean_xi).abs())
                .sum::<f64>()
                / suite.xi_count as f64;
            m1 += abs_dev;
        }
        m1 /= suite.eta_count as f64;
        per_instance.push(m1);
        if !instance.in_r0_star {
            mu1_hat = Some(match mu1_hat {
                None => m1,
                Some(best) => best.min(m1),
            });
        }
    }
    let mean_m1 = if per_instance.is_empty() {
        0.0
    } else {
        per_instance.iter().sum::<f64>() / per_instance.len() as f64
    };
    M1Report {
        per_instance,
        mu1_hat,
        mean_m1,
    }
}

/// Fidelity ratio for a fixed auxiliary setting at attempt budget `n`:
/// exact expectation over the instance measure and the η grid.
pub fn fidelity_ratio(suite: &SimSuite, n: u32, xi_star: XiRef) -> f64 {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for instance in &suite.instances {
        for e in 0..suite.eta_count {
            numerator += (f64::from(n) * instance.q(e, xi_star)).exp();
            denominator += (f64::from(n) * instance.q(e, XiRef::Baseline)).exp();
        }
    }
    numerator / denominator
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    /// max over (ξ*, N) of the fidelity ratio.
    pub max_ratio: f64,
    /// Realized ε = max(0, max_ratio − 1).
    pub realized: f64,
    /// (xi index, N) attaining the maximum.
    pub worst_xi: usize,
    pub worst_n: u32,
    /// Full (xi, N, ratio) table for the softened per-setting reading.
    pub ratios: Vec<(usize, u32, f64)>,
}

/// Realized fidelity loss over every auxiliary setting and the N schedule.
pub fn realized_epsilon(suite: &SimSuite, n_values: &[u32]) -> EpsilonReport {
    let mut ratios = Vec::with_capacity(suite.xi_count * n_values.len());
    let (mut max_ratio, mut worst_xi, mut worst_n) = (f64::NEG_INFINITY, 0, 1);
    for j in 0..suite.xi_count {
        for &n in n_values {
            let ratio = fidelity_ratio(suite, n, XiRef::Aux(j));
            if ratio > max_ratio {
                (max_ratio, worst_xi, worst_n) = (ratio, j, n);
            }
            ratios.push((j, n, ratio));
        }
    }
    EpsilonReport {
        max_ratio,
        realized: (max_ratio - 1.0).max(0.0),
        worst_xi,
        worst_n,
        ratios,
    }
}

/// Law-of-total-variance decomposition of q over the (η, ξ) grid:
/// returns (total variance, E_η[Var_ξ], Var_η[E_ξ]).
pub fn variance_decomposition(
    instance: &super::SimInstance,
    eta_count: usize,
    xi_count: usize,
) -> (f64, f64, f64) {
    let cell = |e: usize, j: usize| instance.q(e, XiRef::Aux(j));
    let grand_mean: f64 = (0..eta_count)
        .flat_map(|e| (0..xi_count).map(move |j| cell(e, j)))
        .sum::<f64>()
        / (eta_count * xi_count) as f64;
    let total: f64 = (0..eta_count)
        .flat_map(|e| (0..xi_count).map(move |j| (cell(e, j) - grand_mean).powi(2)))
        .sum::<f64>()
        / (eta_count * xi_count) as f64;
    let mut expected_var = 0.0;
    let mut var_of_means = 0.0;
    for e in 0..eta_count {
        let row_mean: f64 = (0..xi_count).map(|j| cell(e, j)).sum::<f64>() / xi_count as f64;
        expected_var += (0..xi_count)
            .map(|j| (cell(e, j) - row_mean).powi(2))
            .sum::<f64>()
            / xi_count as f64;
        var_of_means += (row_mean - grand_mean).powi(2);
    }
    (
        total,
        expected_var / eta_count as f64,
        var_of_means / eta_count as f64,
    )
}

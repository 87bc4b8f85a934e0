//! Best-of-N failure curves and the diversity comparison bound.
//!
//! Exact curves come from the product form E_r[(E_mode e^q)^N] with the mode
//! law matching each policy (ξ fixed at the baseline for regular, uniform
//! over the pool for diversified). Monte Carlo curves draw i.i.d. modes per
//! attempt and must agree with the exact curves within Hoeffding half-widths.
//! Tails are analytic from suite membership (P_reg^inf = mass(R₀),
//! P_div^inf = mass(R₀*)), never extrapolated.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::mix64;

use super::hypotheses::{measure_m1, realized_epsilon, EpsilonReport, M1Report};
use super::{SimError, SimSuite, XiRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Regular,
    Diversified,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Regular => "regular",
            Policy::Diversified => "diversified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCurve {
    pub policy: Policy,
    pub n_max: u32,
    /// Monte Carlo failure estimate at N = index + 1.
    pub mc_failure: Vec<f64>,
    /// Exact product-form failure at N = index + 1.
    pub exact_failure: Vec<f64>,
    /// Hoeffding half-width shared by every point of the MC curve.
    pub half_width: f64,
    /// Analytic N→∞ limit from suite membership.
    pub tail: f64,
    pub trials: u64,
}

impl PolicyCurve {
    pub fn mc_at(&self, n: u32) -> f64 {
        self.mc_failure[(n - 1) as usize]
    }

    pub fn exact_at(&self, n: u32) -> f64 {
        self.exact_failure[(n - 1) as usize]
    }
}

/// Hoeffding 1−α half-width for a mean of `trials` Bernoulli draws.
pub fn hoeffding_half_width(trials: u64, confidence: f64) -> f64 {
    let alpha = 1.0 - confidence;
    ((2.0 / alpha).ln() / (2.0 * trials as f64)).sqrt()
}

/// Exact failure curve over N = 1..=n_max.
pub fn exact_failure_curve(suite: &SimSuite, policy: Policy, n_max: u32) -> Vec<f64> {
    let per_attempt: Vec<f64> = suite
        .instances
        .iter()
        .map(|i| i.per_attempt_failure(policy))
        .collect();
    let count = per_attempt.len() as f64;
    let mut acc = per_attempt.clone();
    let mut curve = Vec::with_capacity(n_max as usize);
    curve.push(acc.iter().sum::<f64>() / count);
    for _ in 2..=n_max {
        for (a, f) in acc.iter_mut().zip(&per_attempt) {
            *a *= f;
        }
        curve.push(acc.iter().sum::<f64>() / count);
    }
    curve
}

const MC_CHUNK: u64 = 1024;

/// Monte Carlo failure curve over N = 1..=n_max: each trial draws an
/// instance, then i.i.d. modes per attempt until the first success. Trials
/// are partitioned into fixed chunks with derived seeds and reduced in chunk
/// order, so the result is independent of worker scheduling.
pub fn mc_failure_curve(
    suite: &SimSuite,
    policy: Policy,
    n_max: u32,
    trials: u64,
    seed: u64,
) -> Vec<f64> {
    let chunk_count = trials.div_ceil(MC_CHUNK);
    let counts: Vec<u64> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let chunk_trials = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(chunk + 1)));
            let mut fail_counts = vec![0u64; n_max as usize];
            for _ in 0..chunk_trials {
                let instance = &suite.instances[rng.gen_range(0..suite.instances.len())];
                let mut first_success: u32 = n_max + 1;
                for attempt in 1..=n_max {
                    let eta = rng.gen_range(0..suite.eta_count);
                    let xi = match policy {
                        Policy::Regular => XiRef::Baseline,
                        Policy::Diversified => XiRef::Aux(rng.gen_range(0..suite.xi_count)),
                    };
                    let fail_prob = instance.q(eta, xi).exp();
                    if rng.gen::<f64>() >= fail_prob {
                        first_success = attempt;
                        break;
                    }
                }
                for n in 1..first_success.min(n_max + 1) {
                    fail_counts[(n - 1) as usize] += 1;
                }
            }
            fail_counts
        })
        .reduce(
            || vec![0u64; n_max as usize],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    counts.iter().map(|&c| c as f64 / trials as f64).collect()
}

/// Build both estimates plus the analytic tail for one policy.
pub fn failure_curves(
    suite: &SimSuite,
    policy: Policy,
    n_max: u32,
    trials: u64,
    seed: u64,
    confidence: f64,
) -> PolicyCurve {
    let tail = match policy {
        Policy::Regular => suite.r0_mass(),
        Policy::Diversified => suite.r0_star_mass(),
    };
    PolicyCurve {
        policy,
        n_max,
        mc_failure: mc_failure_curve(suite, policy, n_max, trials, seed),
        exact_failure: exact_failure_curve(suite, policy, n_max),
        half_width: hoeffding_half_width(trials, confidence),
        tail,
        trials,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnPoint {
    pub n: u32,
    /// Implied C_N from the exact curves; absent when the diversified excess
    /// is numerically zero.
    pub value: Option<f64>,
    /// The MC denominator is statistically indistinguishable from zero.
    pub denominator_indistinguishable: bool,
}

/// Implied comparison constants from the curves:
/// C_N = (P_reg^N − P_reg^inf) / (P_div^N − P_div^inf) − 1.
pub fn implied_cn(
    reg: &PolicyCurve,
    div: &PolicyCurve,
    at: &[u32],
) -> Result<Vec<CnPoint>, SimError> {
    if div.tail > reg.tail {
        return Err(SimError::SuiteViolatesTheorem(format!(
            "diversified tail {} exceeds regular tail {}",
            div.tail, reg.tail
        )));
    }
    let mut points = Vec::with_capacity(at.len());
    for &n in at {
        let reg_excess = reg.exact_at(n) - reg.tail;
        let div_excess = div.exact_at(n) - div.tail;
        let mc_div_excess = div.mc_at(n) - div.tail;
        points.push(CnPoint {
            n,
            value: (div_excess > 1e-300).then(|| reg_excess / div_excess - 1.0),
            denominator_indistinguishable: mc_div_excess <= div.half_width,
        });
    }
    Ok(points)
}

/// Least-squares slope of C_N against N over the defined points.
pub fn cn_slope(points: &[CnPoint]) -> Option<f64> {
    let defined: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.value.map(|v| (f64::from(p.n), v)))
        .collect();
    if defined.len() < 2 {
        return None;
    }
    let n = defined.len() as f64;
    let mean_x = defined.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = defined.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = defined.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let var: f64 = defined.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    (var > 0.0).then(|| cov / var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    HypothesisUnmet { reason: String },
    Violated { reasons: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub mu1_hat: Option<f64>,
    pub mean_m1: f64,
    pub realized_epsilon: f64,
    pub max_fidelity_ratio: f64,
    pub epsilon_target: f64,
    pub clamped_cells: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub reg: PolicyCurve,
    pub div: PolicyCurve,
    pub cn: Vec<CnPoint>,
    pub cn_regression_slope: Option<f64>,
    pub hypotheses: HypothesisSummary,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub n_schedule: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            n_schedule: vec![1, 2, 5, 10, 25, 50, 100],
            trials: 40_000,
            seed: 0,
            confidence: 0.99,
        }
    }
}

/// Run the full comparison-bound check on a suite.
pub fn run_theorem_check(suite: &SimSuite, opts: &CheckOptions) -> Result<TheoremCheck, SimError> {
    if opts.n_schedule.is_empty() || opts.trials == 0 {
        return Err(SimError::InvalidArgument(
            "n_schedule and trials must be non-empty".into(),
        ));
    }
    let n_max = *opts.n_schedule.iter().max().unwrap();
    let reg = failure_curves(suite, Policy::Regular, n_max, opts.trials, mix64(opts.seed ^ 0xA), opts.confidence);
    let div = failure_curves(suite, Policy::Diversified, n_max, opts.trials, mix64(opts.seed ^ 0xB), opts.confidence);

    let m1: M1Report = measure_m1(suite);
    let eps: EpsilonReport = realized_epsilon(suite, &opts.n_schedule);
    let hypotheses = HypothesisSummary {
        mu1_hat: m1.mu1_hat,
        mean_m1: m1.mean_m1,
        realized_epsilon: eps.realized,
        max_fidelity_ratio: eps.max_ratio,
        epsilon_target: suite.config.epsilon_target,
        clamped_cells: suite.clamped_cells,
    };

    let cn_schedule: Vec<u32> = opts.n_schedule.iter().copied().filter(|&n| n >= 2).collect();
    let cn = implied_cn(&reg, &div, &cn_schedule)?;
    let slope = cn_slope(&cn);

    let verdict = decide(suite, opts, &reg, &div, &cn, slope, &hypotheses);
    Ok(TheoremCheck {
        reg,
        div,
        cn,
        cn_regression_slope: slope,
        hypotheses,
        verdict,
    })
}

fn decide(
    _suite: &SimSuite,
    opts: &CheckOptions,
    reg: &PolicyCurve,
    div: &PolicyCurve,
    cn: &[CnPoint],
    slope: Option<f64>,
    hypotheses: &HypothesisSummary,
) -> Verdict {
    if hypotheses.mu1_hat.unwrap_or(0.0) <= 1e-12 {
        return Verdict::HypothesisUnmet {
            reason: "dispersion: realized mu1_hat is zero (hypothesis 1 unmet)".into(),
        };
    }
    if hypotheses.realized_epsilon > hypotheses.epsilon_target {
        return Verdict::HypothesisUnmet {
            reason: format!(
                "fidelity: realized epsilon {:.4} exceeds target {:.4} (hypothesis 2 unmet)",
                hypotheses.realized_epsilon, hypotheses.epsilon_target
            ),
        };
    }
    let mut reasons = Vec::new();
    if div.tail > reg.tail {
        reasons.push(format!(
            "diversified tail {} exceeds regular tail {}",
            div.tail, reg.tail
        ));
    }
    for &n in &opts.n_schedule {
        if div.exact_at(n) > reg.exact_at(n) {
            reasons.push(format!(
                "exact P_div({n}) = {:.6} exceeds exact P_reg({n}) = {:.6}",
                div.exact_at(n),
                reg.exact_at(n)
            ));
        }
        if div.mc_at(n) > reg.mc_at(n) + reg.half_width + div.half_width {
            reasons.push(format!("MC P_div({n}) exceeds MC P_reg({n}) beyond CI"));
        }
        for curve in [reg, div] {
            if (curve.mc_at(n) - curve.exact_at(n)).abs() > curve.half_width {
                reasons.push(format!(
                    "{} MC estimate at N={n} ({:.6}) disagrees with exact ({:.6}) beyond half-width {:.6}",
                    curve.policy.name(),
                    curve.mc_at(n),
                    curve.exact_at(n),
                    curve.half_width
                ));
            }
        }
    }
    for point in cn {
        match point.value {
            Some(v) if v < 0.0 => {
                reasons.push(format!("implied C_N at N={} is negative ({v:.4})", point.n))
            }
            None if !point.denominator_indistinguishable => {
                reasons.push(format!("implied C_N at N={} undefined", point.n))
            }
            _ => {}
        }
    }
    match slope {
        Some(s) if s <= 0.0 => reasons.push(format!("C_N regression slope {s:.4} not positive")),
        None => reasons.push("C_N regression slope undefined".into()),
        _ => {}
    }
    if reasons.is_empty() {
        Verdict::Holds
    } else {
        Verdict::Violated { reasons }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theorysim::{gen_instances, GenConfig};

    fn small_suite() -> SimSuite {
        gen_instances(&GenConfig::new(800, 0.25, 0.10, 0.5), 41).unwrap()
    }

    #[test]
    fn exact_curves_monotone_and_bounded() {
        let suite = small_suite();
        for policy in [Policy::Regular, Policy::Diversified] {
            let curve = exact_failure_curve(&suite, policy, 50);
            for w in curve.windows(2) {
                assert!(w[1] <= w[0] + 1e-15);
            }
            assert!(curve.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn n_equal_one_reduces_to_mean_per_attempt_failure() {
        let suite = small_suite();
        for policy in [Policy::Regular, Policy::Diversified] {
            let curve = exact_failure_curve(&suite, policy, 1);
            let mean: f64 = suite
                .instances
                .iter()
                .map(|i| i.per_attempt_failure(policy))
                .sum::<f64>()
                / suite.instances.len() as f64;
            assert!((curve[0] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn curves_plateau_at_construction_tails() {
        // Large N: curve → analytic tail (0.10 diversified, 0.25 regular).
        let suite = small_suite();
        let reg = exact_failure_curve(&suite, Policy::Regular, 400);
        let div = exact_failure_curve(&suite, Policy::Diversified, 400);
        assert!((reg[399] - 0.25).abs() < 1e-6, "reg tail {}", reg[399]);
        assert!((div[399] - 0.10).abs() < 1e-6, "div tail {}", div[399]);
    }

    #[test]
    fn mc_agrees_with_exact_within_hoeffding() {
        let suite = small_suite();
        let trials = 30_000;
        let hw = hoeffding_half_width(trials, 0.99);
        for policy in [Policy::Regular, Policy::Diversified] {
            let exact = exact_failure_curve(&suite, policy, 25);
            let mc = mc_failure_curve(&suite, policy, 25, trials, 99);
            for (n, (e, m)) in exact.iter().zip(&mc).enumerate() {
                assert!((e - m).abs() <= hw, "{policy:?} N={} exact {e} mc {m}", n + 1);
            }
        }
    }

    #[test]
    fn mc_curve_is_monotone_by_construction() {
        let suite = small_suite();
        let mc = mc_failure_curve(&suite, Policy::Diversified, 30, 5_000, 3);
        for w in mc.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn mc_deterministic_in_seed() {
        let suite = small_suite();
        let a = mc_failure_curve(&suite, Policy::Regular, 10, 8_000, 5);
        let b = mc_failure_curve(&suite, Policy::Regular, 10, 8_000, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn identical_curves_give_zero_cn() {
        let suite = small_suite();
        let reg = failure_curves(&suite, Policy::Regular, 10, 1_000, 1, 0.99);
        let mut cloned = reg.clone();
        cloned.policy = Policy::Diversified;
        let cn = implied_cn(&reg, &cloned, &[2, 5, 10]).unwrap();
        for point in cn {
            assert_eq!(point.value, Some(0.0));
        }
    }

    #[test]
    fn default_suite_cn_positive_and_growing() {
        let suite = small_suite();
        let opts = CheckOptions {
            trials: 20_000,
            seed: 7,
            ..CheckOptions::default()
        };
        let check = run_theorem_check(&suite, &opts).unwrap();
        assert_eq!(check.verdict, Verdict::Holds, "{:?}", check.verdict);
        let values: Vec<f64> = check.cn.iter().map(|p| p.value.unwrap()).collect();
        assert!(values.iter().all(|&v| v >= 0.0), "{values:?}");
        assert!(check.cn_regression_slope.unwrap() > 0.0);
        // The fitted constants make the bound an identity; check it closes.
        for point in &check.cn {
            let n = point.n;
            let c = point.value.unwrap();
            let rhs = (check.reg.exact_at(n) - check.reg.tail) / (1.0 + c) + check.div.tail;
            assert!((check.div.exact_at(n) - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_delta_reports_hypothesis_unmet() {
        let suite = gen_instances(&GenConfig::new(400, 0.25, 0.10, 0.0), 5).unwrap();
        let opts = CheckOptions {
            trials: 5_000,
            ..CheckOptions::default()
        };
        let check = run_theorem_check(&suite, &opts).unwrap();
        assert!(matches!(check.verdict, Verdict::HypothesisUnmet { .. }));
    }

    #[test]
    fn inconsistent_tails_rejected() {
        let suite = small_suite();
        let reg = failure_curves(&suite, Policy::Regular, 5, 1_000, 1, 0.99);
        let mut div = failure_curves(&suite, Policy::Diversified, 5, 1_000, 1, 0.99);
        div.tail = reg.tail + 0.1;
        assert!(matches!(
            implied_cn(&reg, &div, &[2, 5]),
            Err(SimError::SuiteViolatesTheorem(_))
        ));
    }

    #[test]
    fn limits_ordered_on_every_generated_suite() {
        for seed in 0..5 {
            let suite = gen_instances(&GenConfig::new(300, 0.3, 0.15, 0.5), seed).unwrap();
            assert!(suite.r0_star_mass() <= suite.r0_mass());
        }
    }
}

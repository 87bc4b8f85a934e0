//! Simulator scenarios and output emission.
//!
//! A scenario bundles the suite generator config with the N schedule, trial
//! counts, and optional majority-vote / ORM studies. Outputs land in the
//! given directory: `curves.csv` (policy, N, failure, half_width),
//! `hypotheses.json` (realized μ̂₁ and ε), `theorem.json` (full check and
//! verdict), `mv.csv`, and `orm.csv`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::curves::{run_theorem_check, CheckOptions, TheoremCheck, Verdict};
use super::voting::{mv_vs_bon, AnswerDist};
use super::{gen_instances, orm_margin_trial, GenConfig, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MvScenario {
    pub name: String,
    /// (answer, probability) pairs.
    pub answers: Vec<(String, f64)>,
    /// The correct answer's position in `answers`.
    pub correct: usize,
    pub n: u32,
    #[serde(default = "default_mv_trials")]
    pub trials: u64,
}

fn default_mv_trials() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrmScenario {
    pub n_candidates: usize,
    pub k: usize,
    pub gamma: f64,
    pub sigma: f64,
    #[serde(default = "default_orm_trials")]
    pub trials: u64,
}

fn default_orm_trials() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub gen: GenConfig,
    pub seed: u64,
    #[serde(default = "default_n_schedule")]
    pub n_schedule: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub mv: Vec<MvScenario>,
    #[serde(default)]
    pub orm: Vec<OrmScenario>,
}

fn default_n_schedule() -> Vec<u32> {
    vec![1, 2, 5, 10, 25, 50, 100]
}
fn default_trials() -> u64 {
    40_000
}
fn default_confidence() -> f64 {
    0.99
}

impl SimScenario {
    pub fn with_defaults(gen: GenConfig, seed: u64) -> Self {
        SimScenario {
            gen,
            seed,
            n_schedule: default_n_schedule(),
            trials: default_trials(),
            confidence: default_confidence(),
            mv: Vec::new(),
            orm: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvRow {
    pub name: String,
    pub n: u32,
    pub trials: u64,
    pub mv_accuracy: f64,
    pub bon_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrmRow {
    pub n_candidates: usize,
    pub k: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub trials: u64,
    pub empirical_miss_rate: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub suite_digest: String,
    pub check: TheoremCheck,
    pub mv: Vec<MvRow>,
    pub orm: Vec<OrmRow>,
    pub out_files: Vec<PathBuf>,
}

impl SimulationReport {
    pub fn verdict(&self) -> &Verdict {
        &self.check.verdict
    }
}

/// Generate the suite, run every check, and write the output tables.
pub fn run_simulation(scenario: &SimScenario, out_dir: &Path) -> Result<SimulationReport, SimError> {
    let suite = gen_instances(&scenario.gen, scenario.seed)?;
    let opts = CheckOptions {
        n_schedule: scenario.n_schedule.clone(),
        trials: scenario.trials,
        seed: scenario.seed,
        confidence: scenario.confidence,
    };
    let check = run_theorem_check(&suite, &opts)?;

    let mut mv_rows = Vec::with_capacity(scenario.mv.len());
    for (i, mv) in scenario.mv.iter().enumerate() {
        let dist = AnswerDist::new(mv.answers.clone(), mv.correct)?;
        let result = mv_vs_bon(&dist, mv.n, mv.trials, scenario.seed ^ (i as u64 + 0x3F))?;
        mv_rows.push(MvRow {
            name: mv.name.clone(),
            n: mv.n,
            trials: mv.trials,
            mv_accuracy: result.mv_accuracy,
            bon_accuracy: result.bon_accuracy,
        });
    }

    let mut orm_rows = Vec::with_capacity(scenario.orm.len());
    for (i, orm) in scenario.orm.iter().enumerate() {
        let result = orm_margin_trial(
            orm.n_candidates,
            orm.gamma,
            orm.sigma,
            orm.k,
            orm.trials,
            scenario.seed ^ (i as u64 + 0x7A),
        )?;
        orm_rows.push(OrmRow {
            n_candidates: orm.n_candidates,
            k: orm.k,
            gamma: orm.gamma,
            sigma: orm.sigma,
            trials: orm.trials,
            empirical_miss_rate: result.empirical_miss_rate,
            bound: result.bound,
            within_bound: result.empirical_miss_rate <= result.bound,
        });
    }

    std::fs::create_dir_all(out_dir)?;
    let mut out_files = Vec::new();

    let curves_path = out_dir.join("curves.csv");
    let mut curves = std::fs::File::create(&curves_path)?;
    writeln!(curves, "policy,N,failure,half_width")?;
    for curve in [&check.reg, &check.div] {
        for n in 1..=curve.n_max {
            writeln!(
                curves,
                "{},{n},{:.6},{:.6}",
                curve.policy.name(),
                curve.mc_at(n),
                curve.half_width
            )?;
        }
    }
    out_files.push(curves_path);

    let hypotheses_path = out_dir.join("hypotheses.json");
    std::fs::write(
        &hypotheses_path,
        serde_json::to_string_pretty(&check.hypotheses).unwrap(),
    )?;
    out_files.push(hypotheses_path);

    let theorem_path = out_dir.join("theorem.json");
    std::fs::write(&theorem_path, serde_json::to_string_pretty(&check).unwrap())?;
    out_files.push(theorem_path);

    if !mv_rows.is_empty() {
        let mv_path = out_dir.join("mv.csv");
        let mut mv_file = std::fs::File::create(&mv_path)?;
        writeln!(mv_file, "name,N,trials,mv_accuracy,bon_accuracy")?;
        for row in &mv_rows {
            writeln!(
                mv_file,
                "{},{},{},{:.6},{:.9}",
                row.name, row.n, row.trials, row.mv_accuracy, row.bon_accuracy
            )?;
        }
        out_files.push(mv_path);
    }

    if !orm_rows.is_empty() {
        let orm_path = out_dir.join("orm.csv");
        let mut orm_file = std::fs::File::create(&orm_path)?;
        writeln!(
            orm_file,
            "n_candidates,k,gamma,sigma,trials,empirical_miss_rate,bound,within_bound"
        )?;
        for row in &orm_rows {
            writeln!(
                orm_file,
                "{},{},{},{},{},{:.6},{:.6},{}",
                row.n_candidates,
                row.k,
                row.gamma,
                row.sigma,
                row.trials,
                row.empirical_miss_rate,
                row.bound,
                row.within_bound
            )?;
        }
        out_files.push(orm_path);
    }

    Ok(SimulationReport {
        suite_digest: suite.digest(),
        check,
        mv: mv_rows,
        orm: orm_rows,
        out_files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario() -> SimScenario {
        let mut scenario =
            SimScenario::with_defaults(GenConfig::new(400, 0.25, 0.10, 0.5), 3);
        scenario.trials = 8_000;
        scenario.n_schedule = vec![1, 2, 5, 10, 25];
        scenario.mv = vec![MvScenario {
            name: "favorable".into(),
            answers: vec![("y*".into(), 0.6), ("y1".into(), 0.4)],
            correct: 0,
            n: 101,
            trials: 500,
        }];
        scenario.orm = vec![OrmScenario {
            n_candidates: 50,
            k: 5,
            gamma: 2.0,
            sigma: 0.5,
            trials: 500,
        }];
        scenario
    }

    #[test]
    fn simulation_writes_all_tables() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_simulation(&small_scenario(), dir.path()).unwrap();
        assert_eq!(report.verdict(), &Verdict::Holds);
        for name in ["curves.csv", "hypotheses.json", "theorem.json", "mv.csv", "orm.csv"] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
        assert!(curves.starts_with("policy,N,failure,half_width\n"));
        assert!(curves.contains("regular,1,"));
        assert!(curves.contains("diversified,25,"));
        assert!(report.mv[0].mv_accuracy >= 0.99);
        assert!(report.orm[0].within_bound);
    }

    #[test]
    fn scenario_json_round_trip() {
        let scenario = small_scenario();
        let json = serde_json::to_string(&scenario).unwrap();
        let back: SimScenario = serde_json::from_str(&json).unwrap();
        assert_eq!(scenario, back);
    }

    #[test]
    fn unknown_fields_rejected() {
        let json = r#"{"gen": {"instance_count": 10, "r0_fraction": 0.2, "r0_star_fraction": 0.1, "delta": 0.5}, "seed": 1, "bogus": true}"#;
        assert!(serde_json::from_str::<SimScenario>(json).is_err());
    }
}

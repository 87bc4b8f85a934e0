//! Perturbation pools and the plain-text pool file format.
//!
//! A pool file is a header line naming the kind (`kind: role`) followed by
//! one entry per line. Role and instruction pools must have distinct entries;
//! jabberwocky pools may repeat lines (the bundled poem's closing reprise
//! repeats its opening couplet).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::input::{Perturbation, PerturbationKind, PerturbationSource};

use super::PerturbError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    Role,
    Instruction,
    Jabberwocky,
}

impl PoolKind {
    pub fn perturbation_kind(self) -> PerturbationKind {
        match self {
            PoolKind::Role => PerturbationKind::Role,
            PoolKind::Instruction => PerturbationKind::Instruction,
            PoolKind::Jabberwocky => PerturbationKind::Jabberwocky,
        }
    }

    fn parse(name: &str) -> Option<PoolKind> {
        match name {
            "role" => Some(PoolKind::Role),
            "instruction" => Some(PoolKind::Instruction),
            "jabberwocky" => Some(PoolKind::Jabberwocky),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPool {
    pub pool_id: String,
    pub kind: PoolKind,
    pub entries: Vec<String>,
}

impl PerturbationPool {
    pub fn parse(pool_id: &str, text: &str) -> Result<Self, PerturbError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("").trim();
        let kind_name = header.strip_prefix("kind:").map(str::trim).ok_or_else(|| {
            PerturbError::PoolFormat {
                pool: pool_id.to_owned(),
                message: format!("first line must be 'kind: <name>', got {header:?}"),
            }
        })?;
        let kind = PoolKind::parse(kind_name).ok_or_else(|| PerturbError::PoolFormat {
            pool: pool_id.to_owned(),
            message: format!("unknown pool kind {kind_name:?}"),
        })?;
        let entries: Vec<String> = lines
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect();
        let pool = PerturbationPool {
            pool_id: pool_id.to_owned(),
            kind,
            entries,
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        if self.entries.is_empty() {
            return Err(PerturbError::PoolEmpty {
                pool: self.pool_id.clone(),
            });
        }
        if self.kind != PoolKind::Jabberwocky {
            let mut seen = std::collections::HashSet::new();
            for entry in &self.entries {
                if !seen.insert(entry.as_str()) {
                    return Err(PerturbError::PoolDuplicate {
                        pool: self.pool_id.clone(),
                        entry: entry.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn load_from_path(path: &Path) -> Result<Self, PerturbError> {
        let text = std::fs::read_to_string(path)?;
        let pool_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "pool".into());
        Self::parse(&pool_id, &text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn perturbation(&self, index: usize) -> Option<Perturbation> {
        self.entries.get(index).map(|text| Perturbation {
            kind: self.kind.perturbation_kind(),
            text: text.clone(),
            source: PerturbationSource::Pool,
            index,
        })
    }

    pub fn perturbations(&self) -> Vec<Perturbation> {
        (0..self.entries.len())
            .map(|i| self.perturbation(i).unwrap())
            .collect()
    }
}

pub fn bundled_roles() -> PerturbationPool {
    PerturbationPool::parse("role", include_str!("assets/roles.txt")).expect("bundled role pool")
}

pub fn bundled_instructions() -> PerturbationPool {
    PerturbationPool::parse("instruction", include_str!("assets/instructions.txt"))
        .expect("bundled instruction pool")
}

pub fn bundled_jabberwocky() -> PerturbationPool {
    PerturbationPool::parse("jabberwocky", include_str!("assets/jabberwocky.txt"))
        .expect("bundled jabberwocky pool")
}

/// Resolve a pool id: one of the bundled names, else a path to a pool file.
pub fn resolve_pool(pool_id: &str) -> Result<PerturbationPool, PerturbError> {
    match pool_id {
        "role" | "roles" => Ok(bundled_roles()),
        "instruction" | "instructions" => Ok(bundled_instructions()),
        "jabberwocky" => Ok(bundled_jabberwocky()),
        path => PerturbationPool::load_from_path(Path::new(path)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_pool_sizes() {
        assert_eq!(bundled_roles().len(), 13);
        assert_eq!(bundled_instructions().len(), 10);
        assert_eq!(bundled_jabberwocky().len(), 14);
    }

    #[test]
    fn bundled_entries_all_non_empty() {
        for pool in [bundled_roles(), bundled_instructions(), bundled_jabberwocky()] {
            assert!(pool.entries.iter().all(|e| !e.is_empty()));
        }
    }

    #[test]
    fn roles_start_with_identity_sentences() {
        assert!(bundled_roles().entries.iter().all(|e| e.starts_with("You are")));
    }

    #[test]
    fn jabberwocky_reprise_is_kept() {
        let poem = bundled_jabberwocky();
        assert_eq!(poem.entries[0], poem.entries[12]);
        assert_eq!(poem.entries[1], poem.entries[13]);
    }

    #[test]
    fn duplicate_role_entries_rejected() {
        let text = "kind: role\nYou are A.\nYou are A.\n";
        assert!(matches!(
            PerturbationPool::parse("p", text),
            Err(PerturbError::PoolDuplicate { .. })
        ));
    }

    #[test]
    fn missing_header_rejected() {
        assert!(matches!(
            PerturbationPool::parse("p", "You are A.\n"),
            Err(PerturbError::PoolFormat { .. })
        ));
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(matches!(
            PerturbationPool::parse("p", "kind: role\n"),
            Err(PerturbError::PoolEmpty { .. })
        ));
    }

    #[test]
    fn perturbation_carries_pool_index() {
        let pool = bundled_instructions();
        let p = pool.perturbation(3).unwrap();
        assert_eq!(p.index, 3);
        assert_eq!(p.kind, PerturbationKind::Instruction);
        assert_eq!(p.text, pool.entries[3]);
    }

    #[test]
    fn uniformity_chi_square_over_seeded_draws() {
        // Goodness-of-fit for uniform sampling over the 13-entry role pool:
        // dof = 12, upper 0.01 critical value 26.217.
        use crate::mode::{draw_mode, MaterializedPolicy};
        let pool = bundled_roles();
        let policy = MaterializedPolicy::with_auxiliary(0.6, pool.perturbations());
        let mut counts = vec![0f64; pool.len()];
        let draws = 10_000;
        for seed in 0..draws {
            let mode = draw_mode(&policy, crate::seed::mix64(seed)).unwrap();
            counts[mode.xi.unwrap().index] += 1.0;
        }
        let expected = draws as f64 / pool.len() as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 26.217, "chi-square statistic {chi2}");
    }
}

//! Task definitions: an instruction prompt, a question, and a verification
//! target (canonical answer or hidden tests).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Reasoning,
    Math,
    Code,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    /// Instruction prompt shared by the task set.
    pub prompt: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_tests: Option<Vec<String>>,
    pub task_kind: TaskKind,
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("task {0}: exactly one of ground_truth / hidden_tests must be present")]
    VerificationTarget(String),
    #[error("task {0}: code tasks carry hidden_tests, not ground_truth")]
    KindMismatch(String),
    #[error("duplicate task id {0}")]
    DuplicateId(String),
    #[error("task {0}: empty {1}")]
    EmptyField(String, &'static str),
    #[error("reading tasks: {0}")]
    Io(#[from] std::io::Error),
    #[error("task line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

impl Task {
    pub fn validate(&self) -> Result<(), TaskError> {
        if self.id.is_empty() {
            return Err(TaskError::EmptyField(self.id.clone(), "id"));
        }
        if self.prompt.is_empty() {
            return Err(TaskError::EmptyField(self.id.clone(), "prompt"));
        }
        if self.question.is_empty() {
            return Err(TaskError::EmptyField(self.id.clone(), "question"));
        }
        match (&self.ground_truth, &self.hidden_tests) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(TaskError::VerificationTarget(self.id.clone()))
            }
            _ => {}
        }
        let wants_tests = self.task_kind == TaskKind::Code;
        if wants_tests != self.hidden_tests.is_some() {
            return Err(TaskError::KindMismatch(self.id.clone()));
        }
        Ok(())
    }
}

/// Validate a task set: per-task invariants plus id uniqueness.
pub fn validate_task_set(tasks: &[Task]) -> Result<(), TaskError> {
    let mut seen = std::collections::HashSet::new();
    for task in tasks {
        task.validate()?;
        if !seen.insert(task.id.as_str()) {
            return Err(TaskError::DuplicateId(task.id.clone()));
        }
    }
    Ok(())
}

/// Load a task set from a JSONL file, one task per line.
pub fn load_tasks(path: &std::path::Path) -> Result<Vec<Task>, TaskError> {
    let text = std::fs::read_to_string(path)?;
    let mut tasks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let task: Task =
            serde_json::from_str(line).map_err(|source| TaskError::Parse { line: i + 1, source })?;
        tasks.push(task);
    }
    validate_task_set(&tasks)?;
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn math_task(id: &str) -> Task {
        Task {
            id: id.into(),
            prompt: "Solve:".into(),
            question: "2+2".into(),
            ground_truth: Some("4".into()),
            hidden_tests: None,
            task_kind: TaskKind::Math,
        }
    }

    #[test]
    fn valid_math_task() {
        assert!(math_task("t1").validate().is_ok());
    }

    #[test]
    fn code_task_requires_hidden_tests() {
        let mut t = math_task("t1");
        t.task_kind = TaskKind::Code;
        assert!(matches!(t.validate(), Err(TaskError::KindMismatch(_))));
    }

    #[test]
    fn both_targets_rejected() {
        let mut t = math_task("t1");
        t.hidden_tests = Some(vec!["assert f(1) == 2".into()]);
        assert!(matches!(t.validate(), Err(TaskError::VerificationTarget(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let tasks = vec![math_task("t1"), math_task("t1")];
        assert!(matches!(
            validate_task_set(&tasks),
            Err(TaskError::DuplicateId(_))
        ));
    }
}

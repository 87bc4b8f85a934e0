//! Sandboxed execution of candidate code against tests.
//!
//! The sandbox is an external command invoked as
//! `command [prefix_args..] <solution_path> <tests_path> <timeout_secs>`,
//! exiting 0 with a per-test report on stdout: lines `test <i> pass|fail`.
//! Per-test timeouts are the sandbox's job; the harness additionally kills a
//! sandbox that hangs past the whole-file deadline and counts tests that
//! never reported as failed.

use std::io::Read;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::VerifyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxSpec {
    pub command: PathBuf,
    /// Arguments placed before the (solution, tests, timeout) triple, e.g.
    /// the script path when `command` is an interpreter.
    #[serde(default)]
    pub prefix_args: Vec<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
}

fn default_timeout_secs() -> u64 {
    10
}

fn default_max_concurrent() -> usize {
    4
}

impl SandboxSpec {
    pub fn new(command: impl Into<PathBuf>) -> Self {
        SandboxSpec {
            command: command.into(),
            prefix_args: Vec::new(),
            timeout_secs: default_timeout_secs(),
            max_concurrent: default_max_concurrent(),
        }
    }
}

/// Run the solution against every test; `results[i]` is test i's outcome.
pub fn run_tests(
    spec: &SandboxSpec,
    solution_text: &str,
    tests: &[String],
) -> Result<Vec<bool>, VerifyError> {
    if tests.is_empty() {
        return Ok(Vec::new());
    }
    let mut solution_file = tempfile::NamedTempFile::new()?;
    solution_file.write_all(solution_text.as_bytes())?;
    solution_file.flush()?;
    let mut tests_file = tempfile::NamedTempFile::new()?;
    for test in tests {
        writeln!(tests_file, "{test}")?;
    }
    tests_file.flush()?;

    let mut child = Command::new(&spec.command)
        .args(&spec.prefix_args)
        .arg(solution_file.path())
        .arg(tests_file.path())
        .arg(spec.timeout_secs.to_string())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .stdin(Stdio::null())
        .spawn()
        .map_err(|e| {
            VerifyError::Configuration(format!(
                "sandbox command {:?} could not start: {e}",
                spec.command
            ))
        })?;

    let mut stdout_pipe = child.stdout.take().expect("stdout piped");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout_pipe.read_to_string(&mut out);
        out
    });

    let deadline =
        Instant::now() + Duration::from_secs(spec.timeout_secs * tests.len() as u64 + 10);
    let status = loop {
        match child.try_wait()? {
            Some(status) => break Some(status),
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            None => std::thread::sleep(Duration::from_millis(10)),
        }
    };
    let stdout = reader.join().unwrap_or_default();

    match status {
        None => {
            log::warn!("sandbox exceeded the whole-file deadline and was killed");
        }
        Some(s) if !s.success() => {
            return Err(VerifyError::SandboxFailed(format!(
                "sandbox exited with {s}; output: {}",
                stdout.trim()
            )));
        }
        Some(_) => {}
    }

    let mut results = vec![false; tests.len()];
    for line in stdout.lines() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("test") {
            continue;
        }
        let Some(Ok(index)) = parts.next().map(str::parse::<usize>) else {
            continue;
        };
        if index < results.len() {
            results[index] = parts.next() == Some("pass");
        }
    }
    Ok(results)
}

/// True iff every hidden test passes.
pub fn run_hidden_tests(
    spec: &SandboxSpec,
    solution_text: &str,
    tests: &[String],
) -> Result<bool, VerifyError> {
    if tests.is_empty() {
        return Err(VerifyError::Configuration(
            "hidden-test verification requires at least one test".into(),
        ));
    }
    Ok(run_tests(spec, solution_text, tests)?.iter().all(|&p| p))
}

/// True iff at least `threshold` generated tests pass.
pub fn generated_tests_verify(
    spec: &SandboxSpec,
    solution_text: &str,
    tests: &[String],
    threshold: usize,
) -> Result<bool, VerifyError> {
    if tests.is_empty() {
        return Err(VerifyError::Unavailable(
            "no parseable generated tests".into(),
        ));
    }
    let passes = run_tests(spec, solution_text, tests)?
        .iter()
        .filter(|&&p| p)
        .count();
    Ok(passes >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn python_sandbox() -> SandboxSpec {
        let script = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scripts/py_sandbox.py");
        SandboxSpec {
            command: "python3".into(),
            prefix_args: vec![script.to_string()],
            timeout_secs: 2,
            max_concurrent: 4,
        }
    }

    fn gcd_tests() -> Vec<String> {
        vec![
            "assert greatest_common_divisor(3, 5) == 1".into(),
            "assert greatest_common_divisor(25, 15) == 5".into(),
            "assert greatest_common_divisor(0, 3) == 3".into(),
        ]
    }

    const GOOD_GCD: &str = "def greatest_common_divisor(a, b):\n    while b:\n        a, b = b, a % b\n    return a\n";
    const BAD_GCD: &str = "def greatest_common_divisor(a, b):\n    return 1 if b else b or a\n";

    #[test]
    fn all_tests_pass() {
        assert!(run_hidden_tests(&python_sandbox(), GOOD_GCD, &gcd_tests()).unwrap());
    }

    #[test]
    fn one_failing_test_fails_the_solution() {
        let spec = python_sandbox();
        let results = run_tests(&spec, BAD_GCD, &gcd_tests()).unwrap();
        assert_eq!(results, vec![true, false, false]);
        assert!(!run_hidden_tests(&spec, BAD_GCD, &gcd_tests()).unwrap());
    }

    #[test]
    fn infinite_loop_is_failed_by_timeout() {
        let spec = python_sandbox();
        let looping = "def greatest_common_divisor(a, b):\n    while True:\n        pass\n";
        let tests = vec!["assert greatest_common_divisor(3, 5) == 1".to_string()];
        assert!(!run_hidden_tests(&spec, looping, &tests).unwrap());
    }

    #[test]
    fn threshold_semantics() {
        let spec = python_sandbox();
        // BAD_GCD passes exactly 1 of 3.
        assert!(generated_tests_verify(&spec, BAD_GCD, &gcd_tests(), 1).unwrap());
        assert!(!generated_tests_verify(&spec, BAD_GCD, &gcd_tests(), 2).unwrap());
        assert!(generated_tests_verify(&spec, GOOD_GCD, &gcd_tests(), 3).unwrap());
    }

    #[test]
    fn zero_generated_tests_is_unavailable() {
        assert!(matches!(
            generated_tests_verify(&python_sandbox(), GOOD_GCD, &[], 1),
            Err(VerifyError::Unavailable(_))
        ));
    }

    #[test]
    fn missing_sandbox_is_a_configuration_error() {
        let spec = SandboxSpec::new("/no/such/sandbox-command");
        assert!(matches!(
            run_tests(&spec, "x", &["assert True".to_string()]),
            Err(VerifyError::Configuration(_))
        ));
    }
}

#!/usr/bin/env python3
"""Process-per-test Python sandbox.

Usage: py_sandbox.py <solution_path> <tests_path> <timeout_secs>

The tests file holds one assert statement per line. Each test runs in its own
python subprocess against the solution file, with the given wall-clock
timeout. Report format, one line per test on stdout:

    test <i> pass|fail
"""

import subprocess
import sys
import tempfile


def main() -> int:
    solution_path, tests_path, timeout = sys.argv[1], sys.argv[2], float(sys.argv[3])
    with open(solution_path, encoding="utf-8") as f:
        solution = f.read()
    with open(tests_path, encoding="utf-8") as f:
        tests = [line.strip() for line in f if line.strip()]

    for i, test in enumerate(tests):
        with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as probe:
            probe.write(solution + "\n\n" + test + "\n")
            probe_path = probe.name
        try:
            result = subprocess.run(
                [sys.executable, "-I", probe_path],
                capture_output=True,
                timeout=timeout,
            )
            verdict = "pass" if result.returncode == 0 else "fail"
        except subprocess.TimeoutExpired:
            verdict = "fail"
        print(f"test {i} {verdict}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

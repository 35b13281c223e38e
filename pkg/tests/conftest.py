import itertools
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "src" / "dtest" / "schemas"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def brute_is_test(rows, cols):
    seen = {tuple(r[c] for c in cols) for r in rows}
    return len(seen) == len(rows)


def brute_dead_end_tests(rows, m):
    """All inclusion-minimal distinguishing column subsets, by scanning 2^m subsets."""
    tests = [
        frozenset(s)
        for size in range(m + 1)
        for s in itertools.combinations(range(m), size)
        if brute_is_test(rows, s)
    ]
    test_set = set(tests)
    minimal = [t for t in tests if not any(t - {c} in test_set for c in t)]
    return sorted((tuple(sorted(t)) for t in minimal), key=lambda t: (len(t), t))


def random_matrix(rng, n, m, kmax, distinct=True):
    """Random symbol rows with per-column alphabet sizes in [2, kmax]."""
    while True:
        sizes = rng.integers(2, kmax + 1, size=m)
        rows = rng.integers(0, sizes, size=(n, m))
        if not distinct or len({tuple(r) for r in rows.tolist()}) == n:
            return rows, [int(k) for k in sizes]


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def run_cli(*args, cwd=None, env=None):
    proc = subprocess.run(
        [sys.executable, "-m", "dtest", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
        env=env,
    )
    return proc


@pytest.fixture(scope="session")
def report_schema():
    return json.loads((SCHEMA_DIR / "report.schema.json").read_text())


@pytest.fixture(scope="session")
def error_schema():
    return json.loads((SCHEMA_DIR / "error.schema.json").read_text())


def write_csv(path, header, rows):
    lines = []
    if header is not None:
        lines.append(",".join(header))
    lines.extend(",".join(str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

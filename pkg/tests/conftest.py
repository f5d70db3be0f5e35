import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, whatever the capture settings."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" not in getattr(rep, "nodeid", ""):
                continue
            if rep.when != "call" and outcome != "error":
                continue
            name = rep.nodeid.split("::test_criterion_", 1)[1]
            number, _, label = name.partition("_")
            detail = "; ".join(f"{k}={v}" for k, v in rep.user_properties)
            rows.append((int(number), outcome, label.replace("_", " "), detail))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, outcome, label, detail in sorted(rows):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  criterion {number:2d}: {label}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))

from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from calf.corpus import load_instances
from calf.fcm import LexicalScorer
from importlib.resources import files

FIXTURES = files("calf") / "data" / "fixtures"

# one human-readable verdict line per acceptance criterion, keyed by test name
ACCEPTANCE_LABELS = {
    "test_shapley_efficiency": "Shapley efficiency (sum rule 1e-9; bit-for-bit vs enumerator)",
    "test_alignment_fidelity": "Alignment fidelity (anchored example; 200 random pairs vs oracle)",
    "test_normalization": "Normalization (exact 0/1 endpoints; degenerate all-ones)",
    "test_loss_reduction": "Loss reduction (uniform weights = plain NLL; finite-difference gradients)",
    "test_focused_training_effect": "Focused-training effect (fact NLL sign test, 10 seeds)",
    "test_gate_constants": "Gate constants (0.9/0.1 schedule, viable 3, cap 8, EOS 0.02, 4 seeds)",
    "test_metric_oracle_equivalence": "Metric oracle equivalence (30 fixtures, exact)",
    "test_end_to_end_determinism": "End-to-end determinism (byte-identical across runs and jobs)",
    "test_stopping_replay": "Stopping replay (50 synthetic histories)",
}


@pytest.fixture(scope="session")
def fixture_instances():
    return load_instances(str(FIXTURES / "instances.jsonl"))


@pytest.fixture(scope="session")
def candidate_paths():
    return [
        str(FIXTURES / "candidates_iter0.jsonl"),
        str(FIXTURES / "candidates_iter1.jsonl"),
    ]


@pytest.fixture()
def lexical():
    return LexicalScorer()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            name = nodeid.split("::")[-1].split("[")[0]
            label = ACCEPTANCE_LABELS.get(name)
            if label:
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append(f"{verdict}  {label}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines, key=lambda s: s[5:]):
            terminalreporter.write_line(line)

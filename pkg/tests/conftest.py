import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_report
from corebox.imagery import LabelMap
from corebox.synth import make_toy_dataset


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = acceptance_report.format_lines()
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """One shared synthetic dataset (images, masks, labels.json, pool)."""
    root = tmp_path_factory.mktemp("toy")
    return make_toy_dataset(root, count=5, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def core_labels():
    return LabelMap({"core_column": 255})

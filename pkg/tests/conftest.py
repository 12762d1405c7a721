import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth(tmp_path_factory):
    """A small synthetic dataset for fast end-to-end runs."""
    from pseudogen.synth import write_synthetic

    out = tmp_path_factory.mktemp("synth")
    train, test = write_synthetic(out, seed=3, n_normal=300, n_test_normal=180, n_test_anomaly=20, m=4)
    return train, test


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from dsirr import linalg
from dsirr.scalars import GaussianRational as G


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible pass/fail line per acceptance criterion."""
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "test_acceptance" in item.nodeid:
        terminal = item.config.pluginmanager.get_plugin("terminalreporter")
        if terminal is not None:
            status = "PASS" if rep.passed else "FAIL"
            terminal.write_line(f"[acceptance] {item.name}: {status}")


def unit_matrix(n, i, j, exact=False):
    """Elementary matrix with a single one in row i, column j."""
    m = linalg.zeros(n, n, exact)
    m[i, j] = G(1) if exact else 1.0 + 0j
    return m


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

import numpy as np
import pytest


def direct_dft(x, size=None):
    """O(N^2) DFT straight from the definition."""
    x = np.asarray(x, dtype=complex)
    size = len(x) if size is None else size
    xp = np.concatenate([x, np.zeros(size - len(x))])
    n = np.arange(size)
    return np.exp(-2j * np.pi * np.outer(n, n) / size) @ xp


def direct_correlate(y, x):
    """O(N^2) cyclic cross-correlation by explicit double loop."""
    N = len(x)
    out = np.zeros(N, dtype=complex)
    for n in range(N):
        for i in range(N):
            out[n] += y[i] * np.conj(x[(i - n) % N])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])

import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_simplex(rng, n):
    """Strictly positive random probability vector of length ``n``."""
    p = rng.dirichlet(np.ones(n))
    p = np.maximum(p, 1e-300)
    return p / p.sum()


def random_feasible(rng, actions, target, count):
    """``count`` random distributions with mean action exactly ``target``.

    Each is a random Dirichlet draw mixed with the point mass on the smallest
    or largest action, whichever brackets the target.
    """
    a = np.asarray(actions, dtype=np.float64)
    lo, hi = int(np.argmin(a)), int(np.argmax(a))
    out = np.empty((count, a.size))
    alphas = rng.choice([0.2, 1.0, 5.0], size=count)
    for i in range(count):
        u = rng.dirichlet(np.full(a.size, alphas[i]))
        m = float(u @ a)
        vertex = np.zeros(a.size)
        if m >= target:
            vertex[lo] = 1.0
            lam = (target - a[lo]) / (m - a[lo])
        else:
            vertex[hi] = 1.0
            lam = (a[hi] - target) / (a[hi] - m)
        out[i] = lam * u + (1 - lam) * vertex
    return out


def shannon_rows(P):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return -terms.sum(axis=1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

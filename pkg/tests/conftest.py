import math
from fractions import Fraction

import numpy as np
import pytest

from hotlattice.lattice import GOLDEN, AxisModulation, LatticeSpec

PI = math.pi


def chain(t=1.0, lam=0.5, b=Fraction(1, 3), phi=0.0, n=30, **kw):
    return AxisModulation(t, lam, b, phi, n, **kw)


def brute_force_dense(spec: LatticeSpec, factors) -> np.ndarray:
    """Kronecker sum assembled entry by entry from site coordinates.

    Entry ((i..), (k..)) is sum_s H_s[i_s, k_s] * prod_{r != s} delta(i_r, k_r).
    """
    dims = spec.dims
    sites = list(np.ndindex(*dims))
    n = len(sites)
    dtype = np.result_type(*factors)
    out = np.zeros((n, n), dtype=dtype)
    for a, sa in enumerate(sites):
        for c, sc in enumerate(sites):
            val = 0
            for s, h in enumerate(factors):
                if all(sa[r] == sc[r] for r in range(len(dims)) if r != s):
                    val += h[sa[s], sc[s]]
            out[a, c] = val
    return out


@pytest.fixture
def third_period_axis():
    return chain()


@pytest.fixture
def golden15_axis():
    return AxisModulation(0.5, 0.95, GOLDEN, 0.4 * PI, 15)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


class CriterionLog:
    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.line = None

    def verdict(self, ok: bool, detail: str) -> bool:
        self.line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.number}: {self.title} -- {detail}"
        print(self.line)
        return ok


@pytest.fixture
def criterion(request):
    """Records exactly one PASS/FAIL line for an acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")
    log = CriterionLog(*marker.args)
    yield log
    if log.line is None:
        log.line = f"[FAIL] criterion {log.number}: {log.title} -- raised before a verdict"
    request.config.stash[ACCEPTANCE_LINES].append(log.line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from harmratio import kernels

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

BACKENDS = kernels.backends()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    """Each importable kernel implementation in turn."""
    return BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def utility_tables(max_agents=5, max_outcomes=12, zeros=True):
    """Hypothesis strategy for small finite utility tables (outcomes x agents)."""

    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_agents))
        k = draw(st.integers(1, max_outcomes))
        cell = st.integers(0, 6) if zeros else st.integers(1, 6)
        rows = draw(st.lists(st.lists(cell, min_size=n, max_size=n), min_size=k, max_size=k))
        return np.array(rows, dtype=float)

    return build()


def goods_matrices(max_agents=3, max_goods=4):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_agents))
        m = draw(st.integers(1, max_goods))
        rows = draw(st.lists(st.lists(st.integers(0, 9), min_size=m, max_size=m), min_size=n, max_size=n))
        V = np.array(rows, dtype=float)
        for i in range(n):
            if V[i].sum() == 0:
                V[i, draw(st.integers(0, m - 1))] = 1.0
        return V

    return build()


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

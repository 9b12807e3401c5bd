import numpy as np
import pytest
from hypothesis import strategies as st

from catnet.core import normalize


def random_alpha(rng: np.random.Generator, d: int, zeros: bool = False) -> np.ndarray:
    """Signed coefficients; a few draws get exact ties and zeros to hit edge cases."""
    a = rng.uniform(-1, 1, d)
    if zeros and d > 1 and rng.random() < 0.3:
        a[rng.integers(1, d)] = 0.0
    if d > 1 and rng.random() < 0.2:
        i, j = rng.choice(d, 2, replace=False)
        a[j] = a[i] if rng.random() < 0.5 else -a[i]
    if not np.any(a):
        a[0] = 1.0
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def alphas(min_d=1, max_d=6):
    """Hypothesis strategy for nonzero coefficient vectors."""
    elem = st.one_of(
        st.floats(-1, 1, allow_nan=False, allow_subnormal=False).filter(lambda x: x == 0 or abs(x) > 1e-6),
        st.sampled_from([1.0, -1.0, 0.5, 0.0]),
    )
    return (
        st.lists(elem, min_size=min_d, max_size=max_d)
        .filter(lambda a: any(abs(x) > 1e-3 for x in a))
        .map(np.array)
    )


@pytest.fixture
def fc_half():
    return normalize([1.0, 0.5])


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str):
    ACCEPTANCE_RESULTS[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

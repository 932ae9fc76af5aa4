import mpmath
import numpy as np
import pytest

mpmath.mp.dps = 40


def mp_besselj(k, w):
    """Extended-precision J_k(w) and J_k'(w)."""
    w = mpmath.mpc(complex(w))
    j = mpmath.besselj(k, w)
    jp = mpmath.besselj(k, w, derivative=1)
    return complex(j), complex(jp)


def mp_series_j(k, w, terms=80):
    """Ascending series of J_k(w) in extended precision (oracle independent of mpmath.besselj)."""
    w = mpmath.mpc(complex(w))
    q = -w * w / 4
    term = (w / 2) ** k / mpmath.factorial(k)
    s = term
    for m in range(1, terms):
        term = term * q / (m * (k + m))
        s += term
    return s


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

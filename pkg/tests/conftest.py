import math

import numpy as np
import pytest
from scipy.special import eval_hermite

from cvtomo import OscillatorState, SqueezedCoherentState

SQRT_PI = math.sqrt(math.pi)


def reference_psi(state, x):
    """Wavefunctions written out independently of the package (scipy Hermite, exact factorial)."""
    x = np.asarray(x, dtype=float)
    if isinstance(state, OscillatorState):
        n = state.n
        norm = 1.0 / math.sqrt(2.0**n * math.factorial(n) * SQRT_PI)
        return norm * eval_hermite(n, x) * np.exp(-0.5 * x**2) + 0j
    s = state
    norm = (math.pi * s.sigma**2) ** -0.25
    return norm * np.exp(-((x - s.mean_x) ** 2) / (2 * s.sigma**2)) * np.exp(1j * s.mean_p * x)


def reference_rho(state, x, xp):
    return reference_psi(state, x) * np.conj(reference_psi(state, xp))


SHIPPED_STATES = [
    OscillatorState(0),
    OscillatorState(1),
    OscillatorState(3),
    OscillatorState(10),
    SqueezedCoherentState(0.0, 0.5, 0.1),
    SqueezedCoherentState(0.0, 0.5, 0.4),
    SqueezedCoherentState(0.3, -1.0, 0.9),
]


@pytest.fixture
def ground():
    return OscillatorState(0)


@pytest.fixture
def squeezed():
    return SqueezedCoherentState(0.0, 0.5, 0.1)


@pytest.fixture(params=SHIPPED_STATES, ids=lambda s: s.descriptor)
def any_state(request):
    return request.param


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one summary line per acceptance criterion."""

    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append((criterion, f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

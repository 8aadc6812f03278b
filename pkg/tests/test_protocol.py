import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvtomo import OscillatorState, RandomStream, SqueezedCoherentState, density, diagonal_weight
from cvtomo.protocol import (
    CircuitSettings,
    OutcomeDistribution,
    ShotTally,
    branch_probability,
    chernoff_condition_shots,
    chernoff_estimate_shots,
    coherence_integral,
    estimate_from_tallies,
    exact_estimate,
    outcome_distribution,
    plan_estimate,
    sample_shots,
)

from .conftest import SHIPPED_STATES, reference_rho

ERF = math.erf(0.05)
ORIGIN = CircuitSettings(0.0, 0.0, 0.0, 0.0, 0.1)


def riemann_estimate(state, s, points=100_000):
    """Midpoint rule for (1/delta) int rho(e^-r y + x, e^-r' y + x') dy, from the reference kernel."""
    y = (np.arange(points) + 0.5) / points * s.delta - 0.5 * s.delta
    vals = reference_rho(state, math.exp(-s.r) * y + s.x, math.exp(-s.rp) * y + s.xp)
    return complex(vals.mean())


def test_settings_validation():
    with pytest.raises(ValueError):
        CircuitSettings(0, 0, 0, 0, 0.0)
    with pytest.raises(ValueError):
        CircuitSettings(0, float("nan"))
    s = CircuitSettings(0, 1, math.log(2), -math.log(2), 0.1)
    assert s.width_x == pytest.approx(0.05)
    assert s.width_xp == pytest.approx(0.2)


def test_coherence_ground_state_origin(ground):
    c = coherence_integral(ground, ORIGIN)
    assert c.real == pytest.approx(ERF, rel=1e-10)
    assert abs(c.imag) < 1e-16


@pytest.mark.parametrize("state", SHIPPED_STATES, ids=lambda s: s.descriptor)
def test_coherence_swap_conjugates(state):
    s = CircuitSettings(0.13, -0.4, 0.7, -0.2, 0.1)
    a = coherence_integral(state, s)
    b = coherence_integral(state, s.swapped())
    assert a == pytest.approx(b.conjugate(), rel=1e-10, abs=1e-15)


def test_coherence_squeezed_against_midpoint(squeezed):
    s = CircuitSettings(0.0, 0.2, 0.0, 0.0, 0.01)
    c = coherence_integral(squeezed, s)
    ys = (np.arange(20000) + 0.5) / 20000 * 0.01 - 0.005
    riemann = complex(reference_rho(squeezed, ys, 0.2 + ys).sum() * 0.01 / 20000)
    assert abs(c - riemann) <= 1e-8 * abs(riemann)
    midpoint = complex(density(squeezed, 0.0, 0.2)) * 0.01
    assert abs(c - midpoint) <= 0.01 * abs(midpoint)


def test_branch_probability_examples(ground):
    assert branch_probability(ground, ORIGIN, 0) == pytest.approx(ERF / 2, rel=1e-10)
    assert ERF / 2 == pytest.approx(0.028186, abs=1e-6)
    narrower = CircuitSettings(0, 0, math.log(2), 0, 0.1)
    assert branch_probability(ground, narrower, 0) < branch_probability(ground, ORIGIN, 0)
    with pytest.raises(ValueError):
        branch_probability(ground, ORIGIN, 2)


@given(x=st.floats(-3, 3), r=st.floats(-1.5, 4), state=st.sampled_from(SHIPPED_STATES))
@settings(max_examples=40, deadline=None)
def test_branch_probability_is_half_window_weight(x, r, state):
    delta = 0.1
    s = CircuitSettings(x, 0.0, r, 0.0, delta)
    half = 0.5 * math.exp(-r) * delta
    expected = 0.5 * diagonal_weight(state, (x - half, x + half))
    assert abs(branch_probability(state, s, 0) - expected) <= 1e-10 * max(expected, 1e-300) + 1e-18
    assert branch_probability(state, s, 0) + branch_probability(state, s.swapped(), 0) <= 1.0


def test_outcome_distribution_ground_origin(ground):
    d = outcome_distribution(ground, ORIGIN, "x")
    assert d.p_plus == pytest.approx(ERF, rel=1e-10)
    assert abs(d.p_minus) < 1e-15
    assert d.p_noclick == pytest.approx(1 - ERF, rel=1e-12)
    with pytest.raises(ValueError):
        outcome_distribution(ground, ORIGIN, "z")


def test_diagonal_sigma_y_is_balanced(any_state):
    s = CircuitSettings(0.2, 0.2, 0.5, 0.5, 0.1)
    d = outcome_distribution(any_state, s, "y")
    assert d.p_plus == pytest.approx(d.p_minus, abs=1e-15)


settings_strategy = st.builds(
    CircuitSettings,
    x=st.floats(-3, 3),
    xp=st.floats(-3, 3),
    r=st.floats(-2, 5),
    rp=st.floats(-2, 5),
    delta=st.sampled_from([0.01, 0.1, 0.5, 1.0]),
)


@given(state=st.sampled_from(SHIPPED_STATES), s=settings_strategy, axis=st.sampled_from(["x", "y"]))
@settings(max_examples=80, deadline=None)
def test_outcome_positivity_and_cauchy_schwarz(state, s, axis):
    d = outcome_distribution(state, s, axis)
    probs = d.as_vector()
    assert np.all((probs >= 0) & (probs <= 1))
    assert abs(probs.sum() - 1) <= 1e-9
    p0, p1 = branch_probability(state, s, 0), branch_probability(state, s, 1)
    assert abs(coherence_integral(state, s)) <= 2 * math.sqrt(p0 * p1) + 1e-9


def test_sample_shots_examples(ground):
    none = OutcomeDistribution("x", 1.0, 0.0, 0.0)
    assert sample_shots(none, 100, RandomStream(1)) == ShotTally("x", 0, 0, 100)
    d = outcome_distribution(ground, ORIGIN, "x")
    assert sample_shots(d, 1000, RandomStream(9)) == sample_shots(d, 1000, RandomStream(9))
    M = 10**6
    t = sample_shots(d, M, RandomStream(11))
    assert t.total == M
    assert abs(t.n_plus / M - d.p_plus) <= 3 * math.sqrt(d.p_plus * (1 - d.p_plus) / M)
    with pytest.raises(ValueError):
        sample_shots(d, 0, RandomStream(0))


def test_estimate_from_tallies_basic():
    s = CircuitSettings(0, 0, 0.3, 0.1, 0.1)
    assert estimate_from_tallies(ShotTally("x", 5, 5, 90), ShotTally("y", 7, 7, 86), s) == 0
    with pytest.raises(ValueError):
        estimate_from_tallies(ShotTally("x", 0, 0, 0), ShotTally("y", 1, 0, 0), s)
    with pytest.raises(ValueError):
        estimate_from_tallies(ShotTally("y", 1, 0, 0), ShotTally("x", 1, 0, 0), s)


def _exact_tally(d, M):
    return ShotTally(d.axis, round(d.p_plus * M), round(d.p_minus * M), M - round(d.p_plus * M) - round(d.p_minus * M))


@pytest.mark.parametrize("state", SHIPPED_STATES, ids=lambda s: s.descriptor)
def test_estimator_consistency(state):
    s = CircuitSettings(0.1, -0.15, 0.4, 0.9, 0.1)
    dx, dy = outcome_distribution(state, s, "x"), outcome_distribution(state, s, "y")
    scale = math.exp(0.5 * (s.r + s.rp)) / s.delta
    from_probs = scale * complex(dx.p_plus - dx.p_minus, dy.p_plus - dy.p_minus)
    exact = exact_estimate(state, s)
    assert abs(from_probs - exact) <= 1e-12 * max(abs(exact), 1.0)
    M = 10**9
    est = estimate_from_tallies(_exact_tally(dx, M), _exact_tally(dy, M), s)
    assert abs(est - exact) <= 2 * scale / M


def test_exact_estimate_ground_origin(ground):
    value = exact_estimate(ground, ORIGIN)
    assert value == pytest.approx(ERF / 0.1, rel=1e-10)
    assert abs(value - 1 / math.sqrt(math.pi)) <= 1e-3 / math.sqrt(math.pi)


@pytest.mark.parametrize("state", SHIPPED_STATES, ids=lambda s: s.descriptor)
def test_exact_estimate_small_window_limit(state):
    # away from the odd-parity nodes at the origin
    s = CircuitSettings(0.63, -0.42, 0.0, 0.0, 1e-4)
    target = complex(density(state, 0.63, -0.42))
    assert abs(exact_estimate(state, s) - target) <= 1e-6 * abs(target)


def test_exact_estimate_against_riemann(any_state):
    s = CircuitSettings(0.25, -0.1, 1.1, -0.4, 0.1)
    assert exact_estimate(any_state, s) == pytest.approx(riemann_estimate(any_state, s), rel=1e-7)


@pytest.mark.parametrize("state", SHIPPED_STATES, ids=lambda s: s.descriptor)
def test_exact_estimate_hermitian_swap_and_diagonal(state):
    s = CircuitSettings(0.2, 0.45, 1.0, 2.0, 0.1)
    a, b = exact_estimate(state, s), exact_estimate(state, s.swapped())
    assert abs(a - b.conjugate()) <= 1e-10 * max(abs(a), 1e-300) + 1e-15
    d = exact_estimate(state, CircuitSettings(0.3, 0.3, 0.7, 0.7, 0.1))
    assert abs(d.imag) <= 1e-10 and d.real >= -1e-10


def test_sampled_coverage_at_chernoff_shots(ground):
    M = chernoff_estimate_shots(0.1, 0.05, 0.1, 0, 0)
    exact = ERF / 0.1
    dx, dy = outcome_distribution(ground, ORIGIN, "x"), outcome_distribution(ground, ORIGIN, "y")
    root = RandomStream(31)
    hits = 0
    for k in range(100):
        st_ = root.substream(k)
        est = estimate_from_tallies(sample_shots(dx, M, st_), sample_shots(dy, M, st_), ORIGIN)
        hits += abs(est - exact) <= 0.1
    assert hits >= 95


def test_chernoff_condition_shots():
    assert chernoff_condition_shots(0.01, 0.05) == 18445
    assert math.log(40) / 0.0002 == pytest.approx(18444.4, abs=0.05)
    assert chernoff_condition_shots(1.0, 2 / math.e**2) == 1
    a, b = chernoff_condition_shots(0.02, 0.01), chernoff_condition_shots(0.04, 0.01)
    assert abs(a / 4 - b) <= 1


def test_chernoff_estimate_shots():
    assert chernoff_estimate_shots(0.1, 0.05, 0.1, 0, 0) == 73778
    assert chernoff_estimate_shots(0.1, 0.05, 1.0, 0, 0) == 738
    base = plan_estimate(0.1, 0.05, 0.1, 0, 0).bound
    squeezed = plan_estimate(0.1, 0.05, 0.1, math.log(2), math.log(2)).bound
    assert squeezed == pytest.approx(4 * base, rel=1e-12)


@pytest.mark.parametrize("args", [(0.0, 0.05), (0.1, 0.0), (0.1, 1.0), (-1, 0.5)])
def test_chernoff_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        chernoff_condition_shots(*args)

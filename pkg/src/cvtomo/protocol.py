"""Circuit expectations, outcome statistics and shot budgets.

The circuit prepares the ancilla in |+>, applies T^dag(x) S^dag(r) on the
system when the ancilla is |0> and T^dag(x') S^dag(r') when it is |1>, then
reads a position window of width ``delta`` around the origin together with
the ancilla in the sigma_x or sigma_y basis.  Every number here is obtained
from the closed-form traces of the resulting state, evaluated by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, RandomStream, integrate_lines
from .states import as_kernel

__all__ = [
    "CircuitSettings",
    "OutcomeDistribution",
    "ShotTally",
    "ChernoffPlan",
    "ModelError",
    "coherence_integral",
    "coherence_integrals",
    "branch_probability",
    "branch_probabilities",
    "outcome_distribution",
    "sample_shots",
    "estimate_from_tallies",
    "exact_estimate",
    "exact_estimates",
    "chernoff_condition_shots",
    "chernoff_estimate_shots",
    "plan_condition",
    "plan_estimate",
]

AXES = ("x", "y")


class ModelError(ArithmeticError):
    """An outcome probability came out clearly negative."""


@dataclass(frozen=True)
class CircuitSettings:
    x: float
    xp: float
    r: float = 0.0
    rp: float = 0.0
    delta: float = 0.1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"detector window delta must be positive, got {self.delta!r}")
        for name in ("x", "xp", "r", "rp", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def width_x(self) -> float:
        return math.exp(-self.r) * self.delta

    @property
    def width_xp(self) -> float:
        return math.exp(-self.rp) * self.delta

    def swapped(self) -> CircuitSettings:
        return CircuitSettings(self.xp, self.x, self.rp, self.r, self.delta)


@dataclass(frozen=True)
class OutcomeDistribution:
    axis: str
    p_noclick: float
    p_plus: float
    p_minus: float

    def as_vector(self) -> np.ndarray:
        """Probabilities ordered (no-click, +1, -1)."""
        return np.array([self.p_noclick, self.p_plus, self.p_minus])


@dataclass(frozen=True)
class ShotTally:
    axis: str
    n_plus: int
    n_minus: int
    n_noclick: int

    @property
    def total(self) -> int:
        return self.n_plus + self.n_minus + self.n_noclick

    @property
    def mean(self) -> float:
        """Sample mean of the +1/-1/0 outcome."""
        if self.total == 0:
            raise ValueError("empty tally")
        return (self.n_plus - self.n_minus) / self.total


@dataclass(frozen=True)
class ChernoffPlan:
    epsilon: float
    p: float
    shots: int
    bound: float


def _check_axis(axis):
    if axis not in AXES:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def coherence_integrals(kernel, x, xp, r, rp, delta, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Vectorized :func:`coherence_integral` over broadcast setting arrays."""
    kernel = as_kernel(kernel)
    x, xp, r, rp = (np.ravel(v).astype(float) for v in np.broadcast_arrays(x, xp, r, rp))
    sx, sxp = np.exp(-r), np.exp(-rp)

    def integrand(y, owner):
        return kernel(sx[owner, None] * y + x[owner, None], sxp[owner, None] * y + xp[owner, None])

    half = 0.5 * delta
    lo = np.full(x.shape, -half)
    hi = np.full(x.shape, half)
    return np.exp(-0.5 * (r + rp)) * integrate_lines(integrand, lo, hi, spec)


def coherence_integral(kernel, s: CircuitSettings, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """<Pi_delta (x) sigma_x> + i <Pi_delta (x) sigma_y> on the output state."""
    return complex(coherence_integrals(kernel, s.x, s.xp, s.r, s.rp, s.delta, spec)[0])


def branch_probabilities(kernel, x, r, delta, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Click probability jointly with one ancilla branch, for arrays of (x, r)."""
    kernel = as_kernel(kernel)
    x, r = (np.ravel(v).astype(float) for v in np.broadcast_arrays(x, r))
    sx = np.exp(-r)

    def integrand(y, owner):
        return kernel.diagonal(sx[owner, None] * y + x[owner, None])

    half = 0.5 * delta
    vals = integrate_lines(integrand, np.full(x.shape, -half), np.full(x.shape, half), spec)
    return 0.5 * sx * vals.real


def branch_probability(kernel, s: CircuitSettings, branch: int, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Tr(rho_2 Pi_delta (x) |b><b|) for ancilla branch ``b`` in {0, 1}."""
    if branch == 0:
        x, r = s.x, s.r
    elif branch == 1:
        x, r = s.xp, s.rp
    else:
        raise ValueError(f"branch must be 0 or 1, got {branch!r}")
    return float(branch_probabilities(kernel, x, r, s.delta, spec)[0])


def _distribution(axis, p0, p1, c):
    a = c.real if axis == "x" else c.imag
    clicks = p0 + p1
    probs = (1.0 - clicks, 0.5 * clicks + 0.5 * a, 0.5 * clicks - 0.5 * a)
    if min(probs) < -1e-9:
        raise ModelError(f"negative outcome probability {min(probs):.3g} on axis {axis}")
    clipped = [min(max(v, 0.0), 1.0) for v in probs]
    return OutcomeDistribution(axis, *clipped)


def outcome_distribution(kernel, s: CircuitSettings, axis: str, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> OutcomeDistribution:
    _check_axis(axis)
    p0 = branch_probability(kernel, s, 0, spec)
    p1 = branch_probability(kernel, s, 1, spec)
    return _distribution(axis, p0, p1, coherence_integral(kernel, s, spec))


def sample_shots(dist: OutcomeDistribution, M: int, stream: RandomStream) -> ShotTally:
    """Tally ``M`` independent runs drawn from ``dist``.

    The tally of ``M`` categorical draws is multinomial, so it is drawn in
    one step; shot counts of 10^9 cost the same as 10.
    """
    if M < 1:
        raise ValueError("need at least one shot")
    probs = dist.as_vector()
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("outcome distribution is not normalized")
    probs = np.clip(probs, 0.0, None)
    n_noclick, n_plus, n_minus = stream.generator.multinomial(M, probs / probs.sum())
    return ShotTally(dist.axis, int(n_plus), int(n_minus), int(n_noclick))


def estimate_from_tallies(tally_x: ShotTally, tally_y: ShotTally, s: CircuitSettings) -> complex:
    if tally_x.axis != "x" or tally_y.axis != "y":
        raise ValueError("expected a sigma_x tally followed by a sigma_y tally")
    if tally_x.total == 0 or tally_y.total == 0:
        raise ValueError("cannot estimate from zero shots")
    scale = math.exp(0.5 * (s.r + s.rp)) / s.delta
    return scale * complex(tally_x.mean, tally_y.mean)


def exact_estimates(kernel, x, xp, r, rp, delta, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    x, xp, r, rp = (np.ravel(v).astype(float) for v in np.broadcast_arrays(x, xp, r, rp))
    c = coherence_integrals(kernel, x, xp, r, rp, delta, spec)
    return np.exp(0.5 * (r + rp)) * c / delta


def exact_estimate(kernel, s: CircuitSettings, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Window average of rho along the diagonal of the selected region."""
    return complex(exact_estimates(kernel, s.x, s.xp, s.r, s.rp, s.delta, spec)[0])


def _check_bound_args(epsilon, p):
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < p < 1:
        raise ValueError("failure probability must lie in (0, 1)")


def _ceil(bound: float) -> int:
    # absorb round-off so an exact integer bound is not bumped up by one
    return max(1, math.ceil(bound - 1e-9 * max(1.0, bound)))


def plan_condition(epsilon: float, p: float) -> ChernoffPlan:
    _check_bound_args(epsilon, p)
    bound = math.log(2.0 / p) / (2.0 * epsilon**2)
    return ChernoffPlan(epsilon, p, _ceil(bound), bound)


def plan_estimate(epsilon: float, p: float, delta: float, r: float = 0.0, rp: float = 0.0) -> ChernoffPlan:
    _check_bound_args(epsilon, p)
    if not delta > 0:
        raise ValueError("delta must be positive")
    bound = 2.0 * math.log(2.0 / p) / (epsilon**2 * delta**2 * math.exp(-(r + rp)))
    return ChernoffPlan(epsilon, p, _ceil(bound), bound)


def chernoff_condition_shots(epsilon: float, p: float) -> int:
    """Runs needed to test a weight condition to within ``epsilon`` w.p. >= 1 - p."""
    return plan_condition(epsilon, p).shots


def chernoff_estimate_shots(epsilon: float, p: float, delta: float, r: float = 0.0, rp: float = 0.0) -> int:
    """Runs per axis needed to estimate rho(x, x') to within ``epsilon`` w.p. >= 1 - p."""
    return plan_estimate(epsilon, p, delta, r, rp).shots

"""Analytic pure states and their position-space density kernels."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, hermite_eval, integrate_line, integrate_lines

__all__ = [
    "OscillatorState",
    "SqueezedCoherentState",
    "DensityKernel",
    "PureStateKernel",
    "osc_wavefunction",
    "squeezed_wavefunction",
    "density",
    "diagonal_weight",
    "diagonal_weights",
    "parse_state",
]

NORMALIZATION_TOLERANCE = 1e-8


def _oscillator_norm(n: int) -> float:
    # (2^n n! sqrt(pi))^(-1/2) through log-gamma
    return math.exp(-0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi)))


def osc_wavefunction(n: int, x):
    if n < 0:
        raise ValueError("oscillator level must be nonnegative")
    x = np.asarray(x, dtype=float)
    return (_oscillator_norm(n) * np.exp(-0.5 * x * x) * hermite_eval(n, x))[()]


class _PureState:
    def __call__(self, x):
        return self.wavefunction(x)

    def support_hint(self) -> tuple[float, float]:
        """An interval holding essentially all of the probability mass."""
        raise NotImplementedError

    def _check_normalization(self):
        lo, hi = self.support_hint()
        mass = integrate_line(lambda y: np.abs(self.wavefunction(y)) ** 2, lo, hi).real
        if abs(mass - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"{self!r} is not normalized: integral of |psi|^2 = {mass:.12g}")


@dataclass(frozen=True)
class OscillatorState(_PureState):
    """Energy eigenstate ``n`` of the harmonic oscillator (hbar = m = omega = 1)."""

    n: int
    normalization: float = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"oscillator level must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "normalization", _oscillator_norm(self.n))
        self._check_normalization()

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        return (self.normalization * np.exp(-0.5 * x * x) * hermite_eval(self.n, x)).astype(complex)[()]

    def support_hint(self):
        # classical turning point sqrt(2n+1) plus a generous Gaussian tail
        h = math.sqrt(2 * self.n + 1) + 12.0
        return -h, h

    @property
    def descriptor(self) -> str:
        return f"oscillator:{self.n}"


@dataclass(frozen=True)
class SqueezedCoherentState(_PureState):
    """Gaussian wave packet centred at ``mean_x`` with momentum ``mean_p`` and width ``sigma``."""

    mean_x: float = 0.0
    mean_p: float = 0.0
    sigma: float = 1.0
    normalization: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        object.__setattr__(self, "normalization", (math.pi * self.sigma**2) ** -0.25)
        self._check_normalization()

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        arg = -((x - self.mean_x) ** 2) / (2.0 * self.sigma**2) + 1j * self.mean_p * x
        return (self.normalization * np.exp(arg))[()]

    def support_hint(self):
        h = 40.0 * self.sigma
        return self.mean_x - h, self.mean_x + h

    @property
    def descriptor(self) -> str:
        return f"squeezed:{self.mean_x:g},{self.mean_p:g},{self.sigma:g}"


def squeezed_wavefunction(s: SqueezedCoherentState, x):
    return s.wavefunction(x)


class DensityKernel:
    """Position-space density matrix rho(x, x').

    Subclasses implement :meth:`__call__` (broadcasting over arrays) and
    :meth:`diagonal`.  Anything satisfying this interface can be probed by
    the protocol and reconstructed, not only the shipped pure states.
    """

    def __call__(self, x, xp):
        raise NotImplementedError

    def diagonal(self, y):
        return self(y, y).real

    def support_hint(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def descriptor(self) -> str:
        return type(self).__name__


class PureStateKernel(DensityKernel):
    """rho(x, x') = psi(x) conj(psi(x')) for a pure state."""

    def __init__(self, state):
        self.state = state

    def __call__(self, x, xp):
        a = np.asarray(self.state.wavefunction(x), dtype=complex)
        b = np.asarray(self.state.wavefunction(xp), dtype=complex)
        # spelled out in real arithmetic: swapping x and x' then conjugates bit-exactly
        re = a.real * b.real + a.imag * b.imag
        im = a.imag * b.real - a.real * b.imag
        return (re + 1j * im)[()]

    def diagonal(self, y):
        return (np.abs(self.state.wavefunction(y)) ** 2)[()]

    def support_hint(self):
        return self.state.support_hint()

    @property
    def descriptor(self):
        return self.state.descriptor

    def __repr__(self):
        return f"PureStateKernel({self.state!r})"


def as_kernel(state) -> DensityKernel:
    if isinstance(state, DensityKernel):
        return state
    if isinstance(state, _PureState):
        return PureStateKernel(state)
    raise TypeError(f"cannot build a density kernel from {state!r}")


def density(state, x, xp):
    return as_kernel(state)(x, xp)


def diagonal_weights(state, lo, hi, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """Probability mass of rho(y, y) over each interval ``[lo[k], hi[k]]``."""
    kernel = as_kernel(state)
    return integrate_lines(lambda y, _: kernel.diagonal(y), lo, hi, spec).real


def diagonal_weight(state, interval, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    a, b = interval
    if b < a:
        raise ValueError("interval must satisfy a <= b")
    if a == b:
        return 0.0
    return float(diagonal_weights(state, a, b, spec)[0])


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_state(text: str):
    """Parse ``oscillator:<n>`` or ``squeezed:<mean_x>,<mean_p>,<sigma>``.

    The long form ``kind=oscillator n=3`` / ``kind=squeezed mean_x=0
    mean_p=0.5 sigma=0.1`` is accepted as well.
    """
    text = text.strip()
    if "=" in text:
        fields = dict(tok.split("=", 1) for tok in text.split())
        kind = fields.pop("kind", None)
        if kind == "oscillator":
            return OscillatorState(int(fields["n"]))
        if kind == "squeezed":
            return SqueezedCoherentState(
                float(fields.get("mean_x", 0.0)), float(fields.get("mean_p", 0.0)), float(fields["sigma"])
            )
        raise ValueError(f"unknown state kind {kind!r}")
    m = re.fullmatch(r"oscillator:(\d+)", text)
    if m:
        return OscillatorState(int(m.group(1)))
    m = re.fullmatch(rf"squeezed:({_NUMBER}),({_NUMBER}),({_NUMBER})", text)
    if m:
        return SqueezedCoherentState(*(float(g) for g in m.groups()))
    raise ValueError(f"cannot parse state descriptor {text!r}")

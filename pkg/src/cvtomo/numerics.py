"""Quadrature, Hermite polynomials and seeded random streams.

The integrators are vectorized over many integration domains at once: the
integrand receives a block of nodes together with the index of the domain
each row belongs to, so thousands of cell integrals cost a handful of numpy
calls instead of a Python loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "RandomStream",
    "hermite_eval",
    "integrate_line",
    "integrate_lines",
    "integrate_rect",
    "integrate_rects",
    "sample_index",
    "sample_indices",
]

GAUSS_POINTS = 16
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_POINTS)
# half-interval nodes/weights for the refined estimate of a panel
_HALF_NODES = np.concatenate([0.5 * _NODES - 0.5, 0.5 * _NODES + 0.5])
_HALF_WEIGHTS = np.concatenate([0.5 * _WEIGHTS, 0.5 * _WEIGHTS])

# bound on nodes evaluated per vectorized call
_CHUNK_NODES = 1 << 21


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its subdivision limit before converging."""


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-10
    max_subdivisions: int = 24
    # floor below which a panel counts as converged regardless of relative error
    absolute_tolerance: float = 1e-15

    def __post_init__(self):
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        if self.absolute_tolerance < 0:
            raise ValueError("absolute_tolerance must be nonnegative")


DEFAULT_QUADRATURE = QuadratureSpec()


def hermite_eval(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by upward recurrence.

    Works elementwise on arrays; returns a float for scalar ``x``.
    """
    if n < 0:
        raise ValueError("Hermite degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev[()]
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h[()]


def _converged(coarse, fine, spec):
    return np.abs(fine - coarse) <= np.maximum(
        spec.relative_tolerance * np.abs(fine), spec.absolute_tolerance
    )


def integrate_lines(f, a, b, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Integrate a family of 1-D integrands over ``[a[k], b[k]]``.

    ``f(y, owner)`` receives nodes ``y`` of shape ``(m, q)`` and an integer
    array ``owner`` of shape ``(m,)`` naming the integral each row belongs
    to; it returns values with the shape of ``y``.  Each panel is accepted
    once a 16-point Gauss-Legendre rule on the panel agrees with the same
    rule on its two halves; otherwise the panel is bisected.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    if np.any(b < a):
        raise ValueError("integration bounds must satisfy a <= b")
    shape = a.shape
    lo, hi = a.ravel().copy(), b.ravel().copy()
    owner = np.arange(lo.size)
    total = np.zeros(lo.size, dtype=complex)

    rows_per_chunk = max(1, _CHUNK_NODES // (3 * GAUSS_POINTS))
    level = 0
    while owner.size:
        if level > spec.max_subdivisions:
            raise QuadratureError(
                f"{owner.size} panel(s) unconverged after {spec.max_subdivisions} subdivisions"
            )
        accepted = np.zeros(owner.size, dtype=bool)
        estimate = np.empty(owner.size, dtype=complex)
        for start in range(0, owner.size, rows_per_chunk):
            sl = slice(start, start + rows_per_chunk)
            half = 0.5 * (hi[sl] - lo[sl])
            mid = 0.5 * (hi[sl] + lo[sl])
            nodes = np.concatenate([_NODES, _HALF_NODES])
            y = mid[:, None] + half[:, None] * nodes[None, :]
            vals = np.asarray(f(y, owner[sl]))
            coarse = half * (vals[:, :GAUSS_POINTS] @ _WEIGHTS)
            fine = half * (vals[:, GAUSS_POINTS:] @ _HALF_WEIGHTS)
            accepted[sl] = _converged(coarse, fine, spec)
            estimate[sl] = fine
        np.add.at(total, owner[accepted], estimate[accepted])
        keep = ~accepted
        lo, hi, owner = lo[keep], hi[keep], owner[keep]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        owner = np.concatenate([owner, owner])
        level += 1
    return total.reshape(shape)


def integrate_line(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Adaptive Gauss-Legendre integral of ``f`` over ``[a, b]``.

    ``f`` must accept a numpy array of nodes.
    """
    if a == b:
        return 0j
    return complex(integrate_lines(lambda y, _: f(y), a, b, spec)[0])


def integrate_rects(f, x0, x1, y0, y1, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Tensor-product analogue of :func:`integrate_lines`.

    ``f(X, Y, owner)`` gets node grids of shape ``(m, q, q)``.  A panel is
    accepted when the single-panel rule agrees with the rule on its 2x2
    split; otherwise it is quartered.
    """
    arrays = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (x0, x1, y0, y1)))
    shape = arrays[0].shape
    ax, bx, ay, by = (v.ravel().copy() for v in arrays)
    if np.any(bx < ax) or np.any(by < ay):
        raise ValueError("rectangle bounds must be ordered")
    owner = np.arange(ax.size)
    total = np.zeros(ax.size, dtype=complex)

    q = GAUSS_POINTS
    w_coarse = np.outer(_WEIGHTS, _WEIGHTS)
    w_fine = np.outer(_HALF_WEIGHTS, _HALF_WEIGHTS)
    rows_per_chunk = max(1, _CHUNK_NODES // (5 * q * q))
    level = 0
    while owner.size:
        if level > spec.max_subdivisions:
            raise QuadratureError(
                f"{owner.size} panel(s) unconverged after {spec.max_subdivisions} subdivisions"
            )
        accepted = np.zeros(owner.size, dtype=bool)
        estimate = np.empty(owner.size, dtype=complex)
        for start in range(0, owner.size, rows_per_chunk):
            sl = slice(start, start + rows_per_chunk)
            hx, mx = 0.5 * (bx[sl] - ax[sl]), 0.5 * (bx[sl] + ax[sl])
            hy, my = 0.5 * (by[sl] - ay[sl]), 0.5 * (by[sl] + ay[sl])
            jac = hx * hy
            xs = mx[:, None] + hx[:, None] * _NODES
            ys = my[:, None] + hy[:, None] * _NODES
            coarse = jac * np.einsum(
                "mij,ij->m", f(xs[:, :, None], ys[:, None, :], owner[sl]), w_coarse
            )
            xs = mx[:, None] + hx[:, None] * _HALF_NODES
            ys = my[:, None] + hy[:, None] * _HALF_NODES
            fine = jac * np.einsum(
                "mij,ij->m", f(xs[:, :, None], ys[:, None, :], owner[sl]), w_fine
            )
            accepted[sl] = _converged(coarse, fine, spec)
            estimate[sl] = fine
        np.add.at(total, owner[accepted], estimate[accepted])
        keep = ~accepted
        ax, bx, ay, by, owner = ax[keep], bx[keep], ay[keep], by[keep], owner[keep]
        mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
        ax, bx = np.concatenate([ax, mx, ax, mx]), np.concatenate([mx, bx, mx, bx])
        ay, by = np.concatenate([ay, ay, my, my]), np.concatenate([my, my, by, by])
        owner = np.tile(owner, 4)
        level += 1
    return total.reshape(shape)


def integrate_rect(f, rect, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> complex:
    """Integrate ``f(x, xp)`` over a rectangle.

    ``rect`` is anything with ``row`` and ``col`` intervals exposing ``lo``
    and ``hi`` (a :class:`cvtomo.mesh.Region`), or a tuple
    ``((x0, x1), (y0, y1))``.
    """
    if hasattr(rect, "row"):
        (x0, x1), (y0, y1) = (rect.row.lo, rect.row.hi), (rect.col.lo, rect.col.hi)
    else:
        (x0, x1), (y0, y1) = rect
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rectangle must have positive widths")
    return complex(integrate_rects(lambda x, y, _: f(x, y), x0, x1, y0, y1, spec)[0])


class RandomStream:
    """Seeded, splittable source of uniforms.

    The pair ``(seed, stream_index)`` fully determines the sequence, so cell
    ``k`` of a reconstruction can draw from ``stream.substream(k)`` no matter
    in which order cells are processed.
    """

    def __init__(self, seed: int = 0, stream_index: int = 0):
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.seed & (2**64 - 1), spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index: int) -> RandomStream:
        return RandomStream(self.seed, index)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index})"


def _checked_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be one-dimensional and non-empty")
    if np.any(p < -1e-12):
        raise ValueError(f"negative probability {p.min():g}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
    return np.clip(p, 0.0, None)


def sample_indices(probs, stream: RandomStream, size: int) -> np.ndarray:
    """Draw ``size`` categorical indices by inverting the cumulative sum."""
    p = _checked_probs(probs)
    cdf = np.cumsum(p)
    # round-off in the sum must not push a draw onto a zero-probability tail
    cdf[np.flatnonzero(p)[-1]:] = np.inf
    u = stream.generator.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    return idx


def sample_index(probs, stream: RandomStream) -> int:
    return int(sample_indices(probs, stream, 1)[0])

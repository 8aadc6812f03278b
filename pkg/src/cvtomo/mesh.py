"""Dyadic interval partitions and squeezing selection.

Every interval produced here is a dyadic piece of a root interval.  It is
stored by its (level, position) pair and its endpoints are computed as
``root.lo + root.width * position / 2**level``, so neighbours share
endpoints bit-for-bit.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, RandomStream
from .protocol import branch_probabilities, chernoff_condition_shots
from .states import as_kernel, diagonal_weights

__all__ = [
    "MeshError",
    "SupportError",
    "RegionSelectionError",
    "Interval",
    "Region",
    "Partition",
    "RefinementConfig",
    "RegionSelection",
    "find_support_interval",
    "refine_partition",
    "squeezing_for_width",
    "select_region",
]

MODES = ("exact", "sampled")
LN2 = math.log(2.0)


class MeshError(RuntimeError):
    pass


class SupportError(MeshError):
    pass


class RegionSelectionError(MeshError):
    def __init__(self, branch: int, message: str):
        super().__init__(message)
        self.branch = branch


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    level: int = 0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"interval [{self.lo}, {self.hi}] has no positive width")

    @classmethod
    def centered(cls, center: float, width: float, level: int = 0) -> Interval:
        return cls(center - 0.5 * width, center + 0.5 * width, level)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def dilate(self, factor: float = 2.0) -> Interval:
        return Interval.centered(self.center, factor * self.width, self.level)

    def contains(self, other: Interval) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


@dataclass(frozen=True)
class Region:
    row: Interval
    col: Interval


@dataclass(frozen=True)
class RefinementConfig:
    epsilon_weight: float = 0.01
    tail_mass: float = 1e-6
    max_depth: int = 40
    mode: str = "exact"
    # sampled-mode runs per condition test; None picks a Chernoff count for epsilon_weight / 4
    condition_shots: int | None = None
    fail_prob: float = 0.05
    delta: float = 0.1
    seed_interval: tuple[float, float] = (-1.0, 1.0)
    quadrature: QuadratureSpec = DEFAULT_QUADRATURE

    def __post_init__(self):
        if not 0 < self.epsilon_weight <= 1:
            raise ValueError("epsilon_weight must lie in (0, 1]")
        if not 0 < self.tail_mass < 0.1:
            raise ValueError("tail_mass must lie in (0, 0.1)")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.condition_shots is not None and self.condition_shots < 1:
            raise ValueError("condition_shots must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def shots_per_condition(self) -> int:
        if self.condition_shots is not None:
            return self.condition_shots
        return chernoff_condition_shots(self.epsilon_weight / 4, self.fail_prob)


@dataclass(frozen=True)
class Partition:
    intervals: tuple[Interval, ...]
    initial: Interval
    epsilon: float
    weights: np.ndarray = field(repr=False)
    flagged: tuple[int, ...] = ()
    mode: str = "exact"

    def __len__(self):
        return len(self.intervals)

    @property
    def edges(self) -> np.ndarray:
        return np.array([iv.lo for iv in self.intervals] + [self.intervals[-1].hi])

    @property
    def centers(self) -> np.ndarray:
        return np.array([iv.center for iv in self.intervals])

    @property
    def widths(self) -> np.ndarray:
        return np.array([iv.width for iv in self.intervals])

    def region(self, i: int, j: int) -> Region:
        return Region(self.intervals[i], self.intervals[j])

    def locate(self, x) -> np.ndarray:
        """Index of the interval owning each point, -1 outside.

        Intervals are closed on the left and open on the right, except the
        last one which also owns the right edge.
        """
        x = np.asarray(x, dtype=float)
        edges = self.edges
        idx = np.searchsorted(edges, x, side="right") - 1
        idx = np.where(x == edges[-1], len(self) - 1, idx)
        return np.where((x < edges[0]) | (x > edges[-1]), -1, idx)

    def to_dict(self) -> dict:
        return {
            "initial": {"center": self.initial.center, "width": self.initial.width},
            "epsilon": self.epsilon,
            "mode": self.mode,
            "cells": [
                {"center": iv.center, "width": iv.width, "weight": float(w), "level": iv.level, "lo": iv.lo, "hi": iv.hi}
                for iv, w in zip(self.intervals, self.weights)
            ],
            "flagged": list(self.flagged),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> Partition:
        init = data["initial"]
        initial = Interval.centered(init["center"], init["width"])
        intervals = []
        for c in data["cells"]:
            if "lo" in c:
                intervals.append(Interval(c["lo"], c["hi"], c.get("level", 0)))
            else:
                intervals.append(Interval.centered(c["center"], c["width"], c.get("level", 0)))
        return cls(
            tuple(intervals),
            initial,
            data["epsilon"],
            np.array([c["weight"] for c in data["cells"]]),
            tuple(data.get("flagged", ())),
            data.get("mode", "exact"),
        )


def find_support_interval(state, tail_mass: float = 1e-6, seed_interval=(-1.0, 1.0),
                          spec: QuadratureSpec = DEFAULT_QUADRATURE, max_doublings: int = 60) -> Interval:
    """Smallest doubling of ``seed_interval`` holding at least ``1 - tail_mass`` of the mass."""
    if not 0 < tail_mass < 0.1:
        raise ValueError("tail_mass must lie in (0, 0.1)")
    iv = seed_interval if isinstance(seed_interval, Interval) else Interval(*seed_interval)
    for _ in range(max_doublings + 1):
        if diagonal_weights(state, iv.lo, iv.hi, spec)[0] >= 1.0 - tail_mass:
            return iv
        iv = iv.dilate(2.0)
    raise SupportError(f"no interval up to width {iv.width / 2:g} holds 1 - {tail_mass:g} of the probability")


def _condition_passes(kernel, lo, hi, config: RefinementConfig, stream):
    """Weight test for a batch of intervals; returns (passes, recorded weight)."""
    if config.mode == "exact":
        w = diagonal_weights(kernel, lo, hi, config.quadrature)
        return w <= config.epsilon_weight, w
    width = hi - lo
    r = np.log(config.delta / width)
    p_click = np.clip(branch_probabilities(kernel, 0.5 * (lo + hi), r, config.delta, config.quadrature), 0.0, 1.0)
    n = config.shots_per_condition
    freq = stream.generator.binomial(n, p_click) / n
    return freq <= 0.5 * config.epsilon_weight, 2.0 * freq


def refine_partition(state, config: RefinementConfig = RefinementConfig(),
                     stream: RandomStream | None = None, support: Interval | None = None) -> Partition:
    """Bisect the support until every interval carries at most ``epsilon_weight``.

    Intervals still too heavy at ``max_depth`` are kept, listed in
    ``Partition.flagged`` and reported with a warning.
    """
    kernel = as_kernel(state)
    if config.mode == "sampled" and stream is None:
        stream = RandomStream(0)
    root = support or find_support_interval(kernel, config.tail_mass, config.seed_interval, config.quadrature)

    def endpoints(level, pos):
        scale = 2.0**-level
        return root.lo + root.width * (pos * scale), root.lo + root.width * ((pos + 1) * scale)

    done = []  # (level, pos, weight, ok)
    level = 0
    active = np.array([0], dtype=np.int64)
    while active.size:
        lo, hi = endpoints(level, active)
        ok, w = _condition_passes(kernel, np.asarray(lo, float), np.asarray(hi, float), config, stream)
        stop = ok | (level >= config.max_depth)
        done.extend((level, int(p), float(wt), bool(o)) for p, wt, o in zip(active[stop], w[stop], ok[stop]))
        split = active[~stop]
        active = np.sort(np.concatenate([2 * split, 2 * split + 1]))
        level += 1

    done.sort(key=lambda item: item[1] * 2.0 ** -item[0])
    intervals, weights, flagged = [], [], []
    for k, (lev, pos, w, ok) in enumerate(done):
        lo, hi = endpoints(lev, pos)
        intervals.append(Interval(float(lo), float(hi), lev))
        weights.append(w)
        if not ok:
            flagged.append(k)
    if flagged:
        warnings.warn(f"{len(flagged)} interval(s) exceed weight {config.epsilon_weight:g} at max depth "
                      f"{config.max_depth}", RuntimeWarning, stacklevel=2)
    return Partition(tuple(intervals), root, config.epsilon_weight, np.array(weights), tuple(flagged), config.mode)


def squeezing_for_width(width: float, delta: float) -> float:
    """Squeezing r with exp(-r) * delta == width."""
    if not (width > 0 and delta > 0):
        raise ValueError("width and delta must be positive")
    return math.log(delta / width)


@dataclass(frozen=True)
class RegionSelection:
    r: float
    rp: float
    diagnostics: tuple[dict, ...] = ()


def select_region(state, x: float, xp: float, delta: float, epsilon: float,
                  config: RefinementConfig | None = None, stream: RandomStream | None = None) -> RegionSelection:
    """Halve each branch's window until its click probability is at most epsilon / 2.

    Starts from r = r' = 0 and raises r (or r') by ln 2 per failed test; the
    two branches are tested independently.  ``diagnostics`` lists every test
    with its probability (exact mode) or empirical frequency (sampled mode)
    and the margin to the threshold.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not delta > 0:
        raise ValueError("delta must be positive")
    config = config or RefinementConfig()
    kernel = as_kernel(state)
    if config.mode == "sampled" and stream is None:
        stream = RandomStream(0)
    threshold = 0.5 * epsilon
    diagnostics = []
    chosen = []
    for branch, centre in ((0, x), (1, xp)):
        for k in range(config.max_depth + 1):
            r = k * LN2
            p = float(branch_probabilities(kernel, centre, r, delta, config.quadrature)[0])
            if config.mode == "exact":
                observed = p
            else:
                n = config.shots_per_condition
                observed = stream.generator.binomial(n, min(max(p, 0.0), 1.0)) / n
            diagnostics.append({"branch": branch, "k": k, "r": r, "probability": p,
                                "observed": observed, "margin": threshold - observed})
            if observed <= threshold:
                chosen.append(r)
                break
        else:
            raise RegionSelectionError(
                branch, f"branch {branch} (x={centre:g}) still above epsilon/2 after {config.max_depth} halvings"
            )
    return RegionSelection(chosen[0], chosen[1], tuple(diagnostics))

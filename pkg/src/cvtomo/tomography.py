"""Selective element estimation, full reconstruction and fidelity."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Partition, RefinementConfig, refine_partition, select_region, squeezing_for_width
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, RandomStream, integrate_lines, integrate_rects
from .protocol import (
    ChernoffPlan,
    CircuitSettings,
    _distribution,
    branch_probabilities,
    coherence_integrals,
    estimate_from_tallies,
    exact_estimate,
    exact_estimates,
    outcome_distribution,
    plan_estimate,
    sample_shots,
)
from .states import PureStateKernel, as_kernel

__all__ = [
    "ElementEstimate",
    "ReconstructedState",
    "FidelityReport",
    "estimate_element",
    "reconstruct",
    "evaluate",
    "fidelity",
    "cell_overlaps",
]

# substream reserved for sampled-mode mesh tests; cells use i * K + j
PARTITION_STREAM = 2**63

CSV_COLUMNS = ("x_center", "xp_center", "width_x", "width_xp", "re", "im")


@dataclass(frozen=True)
class ElementEstimate:
    x: float
    xp: float
    value: complex
    r: float
    rp: float
    shots_used: int
    epsilon_weight: float
    delta: float
    mode: str = "exact"
    plan: ChernoffPlan | None = None
    diagnostics: tuple[dict, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        out = {
            "x": self.x,
            "xp": self.xp,
            "re": self.value.real,
            "im": self.value.imag,
            "r": self.r,
            "rp": self.rp,
            "delta": self.delta,
            "epsilon": self.epsilon_weight,
            "mode": self.mode,
            "shots": self.shots_used,
        }
        if self.plan is not None:
            out["chernoff"] = {
                "epsilon": self.plan.epsilon,
                "fail_prob": self.plan.p,
                "shots_per_axis": self.plan.shots,
                "bound": self.plan.bound,
            }
        return out


def estimate_element(state, x: float, xp: float, delta: float = 0.1, epsilon: float = 0.01,
                     mode: str = "exact", stream: RandomStream | None = None, *,
                     shots_epsilon: float = 0.1, fail_prob: float = 0.05,
                     config: RefinementConfig | None = None,
                     spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ElementEstimate:
    """Estimate one density-matrix element rho(x, x').

    The region is sized first (halving the window on each branch until the
    weight condition holds), then the element is either integrated exactly
    or measured with the Chernoff number of shots on each ancilla axis.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    config = config or RefinementConfig(epsilon_weight=epsilon, mode=mode, delta=delta,
                                        fail_prob=fail_prob, quadrature=spec)
    if mode == "sampled" and stream is None:
        stream = RandomStream(0)
    kernel = as_kernel(state)
    sel = select_region(kernel, x, xp, delta, epsilon, config, stream)
    s = CircuitSettings(x, xp, sel.r, sel.rp, delta)
    if mode == "exact":
        return ElementEstimate(x, xp, exact_estimate(kernel, s, spec), sel.r, sel.rp, 0, epsilon, delta,
                               mode, None, sel.diagnostics)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    plan = plan_estimate(shots_epsilon, fail_prob, delta, sel.r, sel.rp)
    tx = sample_shots(outcome_distribution(kernel, s, "x", spec), plan.shots, stream)
    ty = sample_shots(outcome_distribution(kernel, s, "y", spec), plan.shots, stream)
    return ElementEstimate(x, xp, estimate_from_tallies(tx, ty, s), sel.r, sel.rp, 2 * plan.shots,
                           epsilon, delta, mode, plan, sel.diagnostics)


@dataclass(frozen=True)
class ReconstructedState:
    """Piecewise-constant estimate of rho over the cells of a partition.

    ``cells[i, j]`` is the estimate on row interval ``i`` times column
    interval ``j``; ``shots[i, j]`` counts the runs spent on it (0 in exact
    mode).
    """

    partition: Partition
    cells: np.ndarray = field(repr=False)
    delta: float
    mode: str
    shots: np.ndarray = field(repr=False)
    descriptor: str = ""

    @property
    def total_shots(self) -> int:
        return int(sum(int(v) for v in self.shots.ravel()))

    def __call__(self, x, xp):
        return evaluate(self, x, xp)

    def to_dict(self) -> dict:
        part = self.partition
        K = len(part)
        centers = part.centers
        cells = [
            {"i": i, "j": j, "x": float(centers[i]), "xp": float(centers[j]),
             "re": float(self.cells[i, j].real), "im": float(self.cells[i, j].imag),
             "shots": int(self.shots[i, j])}
            for i in range(K) for j in range(K)
        ]
        return {"state": self.descriptor, "partition": part.to_dict(), "delta": self.delta,
                "mode": self.mode, "total_shots": self.total_shots, "cells": cells}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> ReconstructedState:
        part = Partition.from_dict(data["partition"])
        K = len(part)
        cells = np.zeros((K, K), dtype=complex)
        shots = np.zeros((K, K), dtype=object)
        for c in data["cells"]:
            cells[c["i"], c["j"]] = complex(c["re"], c["im"])
            shots[c["i"], c["j"]] = int(c.get("shots", 0))
        return cls(part, cells, data["delta"], data["mode"], shots, data.get("state", ""))

    @classmethod
    def from_json(cls, text: str) -> ReconstructedState:
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        c, w = self.partition.centers, self.partition.widths
        for i in range(len(c)):
            for j in range(len(c)):
                v = self.cells[i, j]
                writer.writerow([repr(float(c[i])), repr(float(c[j])), repr(float(w[i])), repr(float(w[j])),
                                 repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


def evaluate(recon: ReconstructedState, x, xp):
    """Value of the reconstruction at (x, x'); zero outside the support square."""
    i = recon.partition.locate(x)
    j = recon.partition.locate(xp)
    i, j = np.broadcast_arrays(i, j)
    inside = (i >= 0) & (j >= 0)
    out = np.where(inside, recon.cells[np.where(inside, i, 0), np.where(inside, j, 0)], 0j)
    return out[()]


def _squeezings(partition: Partition, delta: float) -> np.ndarray:
    return np.array([squeezing_for_width(w, delta) for w in partition.widths])


def reconstruct(state, config: RefinementConfig = RefinementConfig(), stream: RandomStream | None = None, *,
                shots_epsilon: float = 0.1, fail_prob: float = 0.05, shot_multiplier: float = 1.0,
                partition: Partition | None = None) -> ReconstructedState:
    """Full piecewise-constant reconstruction.

    Each cell is probed at the centres of its row and column intervals with
    squeezings chosen so the detector window maps exactly onto the cell.  In
    sampled mode cell ``(i, j)`` draws from substream ``i * K + j`` of
    ``stream``, so the result does not depend on evaluation order.
    """
    kernel = as_kernel(state)
    if config.mode == "sampled" and stream is None:
        stream = RandomStream(0)
    if partition is None:
        partition = refine_partition(kernel, config, stream.substream(PARTITION_STREAM) if stream else None)
    delta = config.delta
    K = len(partition)
    c = partition.centers
    r = _squeezings(partition, delta)
    X, XP = np.meshgrid(c, c, indexing="ij")
    R, RP = np.meshgrid(r, r, indexing="ij")

    if config.mode == "exact":
        cells = exact_estimates(kernel, X, XP, R, RP, delta, config.quadrature).reshape(K, K)
        shots = np.zeros((K, K), dtype=object)
        return ReconstructedState(partition, cells, delta, "exact", shots, kernel.descriptor)

    coh = coherence_integrals(kernel, X, XP, R, RP, delta, config.quadrature).reshape(K, K)
    pb = branch_probabilities(kernel, c, r, delta, config.quadrature)
    cells = np.empty((K, K), dtype=complex)
    shots = np.zeros((K, K), dtype=object)
    for i in range(K):
        for j in range(K):
            s = CircuitSettings(float(c[i]), float(c[j]), float(r[i]), float(r[j]), delta)
            M = max(1, math.ceil(shot_multiplier * plan_estimate(shots_epsilon, fail_prob, delta, r[i], r[j]).shots))
            sub = stream.substream(i * K + j)
            tx = sample_shots(_distribution("x", pb[i], pb[j], coh[i, j]), M, sub)
            ty = sample_shots(_distribution("y", pb[i], pb[j], coh[i, j]), M, sub)
            cells[i, j] = estimate_from_tallies(tx, ty, s)
            shots[i, j] = 2 * M
    return ReconstructedState(partition, cells, delta, "sampled", shots, kernel.descriptor)


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    imag_residue: float
    descriptor: str
    epsilon_weight: float
    delta: float
    contributions: np.ndarray = field(repr=False)


def cell_overlaps(partition: Partition, state, spec: QuadratureSpec = DEFAULT_QUADRATURE,
                  separable: bool | None = None) -> np.ndarray:
    """``O[i, j]`` = integral of rho(x', x) over x in row i and x' in column j.

    For a pure state the double integral factorizes into single-interval
    integrals of psi; ``separable=False`` forces the tensor-product route.
    """
    kernel = as_kernel(state)
    edges_lo = np.array([iv.lo for iv in partition.intervals])
    edges_hi = np.array([iv.hi for iv in partition.intervals])
    if separable is None:
        separable = isinstance(kernel, PureStateKernel)
    if separable:
        psi = kernel.state.wavefunction
        amp = integrate_lines(lambda y, _: psi(y), edges_lo, edges_hi, spec)
        # rho(x', x) = psi(x') conj(psi(x)), x in row i, x' in column j
        return np.conj(amp)[:, None] * amp[None, :]
    K = len(partition)
    I, J = np.meshgrid(np.arange(K), np.arange(K), indexing="ij")
    I, J = I.ravel(), J.ravel()
    vals = integrate_rects(lambda x, xp, _: kernel(xp, x),
                           edges_lo[I], edges_hi[I], edges_lo[J], edges_hi[J], spec)
    return vals.reshape(K, K)


def fidelity(recon: ReconstructedState, state, spec: QuadratureSpec = DEFAULT_QUADRATURE,
             separable: bool | None = None) -> FidelityReport:
    """Overlap <psi| rho_est |psi> of a pure state with a reconstruction."""
    kernel = as_kernel(state)
    contributions = recon.cells * cell_overlaps(recon.partition, kernel, spec, separable)
    total = contributions.sum()
    return FidelityReport(float(total.real), float(total.imag), kernel.descriptor,
                          recon.partition.epsilon, recon.delta, contributions)

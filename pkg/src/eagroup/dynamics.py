"""Discrete dynamics of the generation map on the simplex.

Tangent coordinates drop the last component: ``y = p[:-1]`` and
``p = (y, 1 - sum(y))``.  Jacobians and their eigenvalues are always
reported in these coordinates, so they have ``n - 1`` entries.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, SearchFailure
from .mixing import MixingHeuristic, as_rng, to_simplex

log = logging.getLogger(__name__)

FIXED_POINT_TOL = 1e-10
STABILITY_TOL = 1e-6
FD_STEP = 1e-6
TIKHONOV = 1e-10


@dataclass
class Trajectory:
    states: np.ndarray
    stop_reason: str

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.states)

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = self.states.shape[1]
        buf.write("step," + ",".join(str(g) for g in range(n)) + "\n")
        for t, row in enumerate(self.states):
            buf.write(f"{t}," + ",".join(f"{x:.17g}" for x in row) + "\n")
        return buf.getvalue()


def iterate(model: MixingHeuristic, p0, steps: int, tol: float = 0.0) -> Trajectory:
    """Apply ``G`` up to ``steps`` times, stopping early once
    ``max|p_{t+1} - p_t| < tol``."""
    p = to_simplex(p0, "initial population")
    states = [p]
    reason = "max_steps"
    for t in range(1, steps + 1):
        nxt = model(p)
        if not np.all(np.isfinite(nxt)):
            raise NumericError(f"non-finite population vector at step {t}")
        nxt = to_simplex(nxt, f"population vector at step {t}")
        states.append(nxt)
        if np.max(np.abs(nxt - p)) < tol:
            reason = "converged"
            break
        p = nxt
    return Trajectory(np.array(states), reason)


def to_tangent(p) -> np.ndarray:
    return np.asarray(p, dtype=float)[:-1]


def from_tangent(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.append(y, 1.0 - y.sum())


def jacobian_at(model: MixingHeuristic, p, method: str = "analytic", step: float = FD_STEP) -> np.ndarray:
    """``(n-1) x (n-1)`` Jacobian of ``G`` in tangent coordinates.

    ``method="fd"`` uses central differences with the given step and serves
    as the oracle for the analytic form.
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    if method == "analytic":
        basis = np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])
        return (model.jacobian(p) @ basis)[:-1]
    if method != "fd":
        raise ValueError(f"unknown jacobian method {method!r}")
    y = to_tangent(p)
    J = np.empty((n - 1, n - 1))
    for k in range(n - 1):
        e = np.zeros(n - 1)
        e[k] = step
        J[:, k] = (model(from_tangent(y + e))[:-1] - model(from_tangent(y - e))[:-1]) / (2 * step)
    return J


def classify_stability(eigenvalues, tol: float = STABILITY_TOL) -> str:
    moduli = np.abs(np.asarray(eigenvalues, dtype=complex))
    if moduli.size == 0:
        return "stable"
    if np.any(np.abs(moduli - 1.0) <= tol):
        return "non-hyperbolic"
    if np.all(moduli < 1.0 - tol):
        return "stable"
    if np.all(moduli > 1.0 + tol):
        return "unstable"
    return "saddle"


@dataclass
class FixedPointReport:
    point: np.ndarray
    residual: float
    eigenvalues: np.ndarray = field(repr=False)
    classification: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "point": [float(x) for x in self.point],
            "residual": float(self.residual),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "classification": self.classification,
        }, indent=2)


def _residual(model, p):
    return float(np.max(np.abs(model(p) - p)))


def fixed_point_report(model: MixingHeuristic, p, method: str = "analytic") -> FixedPointReport:
    p = np.asarray(p, dtype=float)
    eig = np.linalg.eigvals(jacobian_at(model, p, method)) if len(p) > 1 else np.array([], dtype=complex)
    return FixedPointReport(p, _residual(model, p), eig, classify_stability(eig))


def _newton(model, p, iterations):
    y = to_tangent(p)
    best_p, best_r = p, _residual(model, p)
    for _ in range(iterations):
        if best_r < 1e-14:
            break
        A = jacobian_at(model, from_tangent(y), "fd") - np.eye(len(y))
        r = model(from_tangent(y))[:-1] - y
        if np.linalg.cond(A) < 1e12:
            delta = np.linalg.solve(A, -r)
        else:
            delta = np.linalg.solve(A.T @ A + TIKHONOV * np.eye(len(y)), -A.T @ r)
        y = y + delta
        cand = from_tangent(y)
        if cand.min() < -1e-12:
            cand = np.maximum(cand, 0.0)
            cand /= cand.sum()
            y = to_tangent(cand)
        res = _residual(model, cand)
        if res < best_r:
            best_p, best_r = cand, res
    return best_p, best_r


def find_fixed_point(model: MixingHeuristic, p0, max_steps: int = 20000, newton_iterations: int = 30,
                     tol: float = FIXED_POINT_TOL) -> FixedPointReport:
    """Iterate toward a fixed point, then polish with damped Newton steps.

    Raises :class:`SearchFailure` (with the best report attached) when the
    residual ``max|G(p) - p|`` does not drop below ``tol``.
    """
    traj = iterate(model, p0, max_steps, tol=1e-13)
    p = traj.final
    res = _residual(model, p)
    if res >= 1e-14 and len(p) > 1:
        p, res = _newton(model, p, newton_iterations)
    p = to_simplex(np.where(np.abs(p) < 1e-300, 0.0, p))
    report = fixed_point_report(model, p)
    if report.residual >= tol:
        raise SearchFailure(f"no fixed point within {max_steps} steps (residual {report.residual:.3e})",
                            best=report)
    return report


@dataclass
class BasinResult:
    labels: list
    fixed_points: list

    def counts(self) -> dict:
        out: dict = {}
        for lab in self.labels:
            out[lab] = out.get(lab, 0) + 1
        return out


def basin_sample(model: MixingHeuristic, starts, steps: int = 2000, attach_tol: float = 1e-6,
                 sustain: int = 10, known=None) -> BasinResult:
    """Label each start by the fixed point its trajectory settles on.

    A trajectory is attached to ``p*`` when its last ``sustain`` states lie
    within ``attach_tol`` of ``p*`` in max norm; otherwise the label is
    ``None``.  Fixed points are numbered in order of discovery (after any
    ``known`` ones).
    """
    fixed = [np.asarray(f, dtype=float) for f in (known or [])]
    labels = []
    for start in starts:
        traj = iterate(model, start, steps, tol=1e-15)
        candidate = traj.final
        if _residual(model, candidate) >= FIXED_POINT_TOL:
            try:
                candidate = find_fixed_point(model, candidate, max_steps=0).point
            except SearchFailure:
                labels.append(None)
                continue
        tail = traj.states[-sustain:]
        if traj.stop_reason != "converged" and len(traj.states) < sustain:
            labels.append(None)
            continue
        if np.max(np.abs(tail - candidate)) >= attach_tol:
            labels.append(None)
            continue
        for k, f in enumerate(fixed):
            if np.max(np.abs(f - candidate)) < attach_tol:
                labels.append(k)
                break
        else:
            fixed.append(candidate)
            labels.append(len(fixed) - 1)
    return BasinResult(labels, fixed)


@dataclass
class SampleComparison:
    distances: np.ndarray       # seeds x steps
    median: np.ndarray
    maximum: np.ndarray

    def to_csv(self) -> str:
        lines = ["step,median_linf,max_linf"]
        for t, (m, x) in enumerate(zip(self.median, self.maximum), start=1):
            lines.append(f"{t},{m:.17g},{x:.17g}")
        return "\n".join(lines) + "\n"


def model_vs_sample(model: MixingHeuristic, p0, mu: int, steps: int, seeds) -> SampleComparison:
    """Finite-population runs (one per seed) against the exact trajectory.

    Each generation draws ``mu`` offspring from ``G`` applied to the
    previous empirical vector; the distance at step ``t`` is the max-norm gap
    to ``G^t(p0)``.
    """
    exact = iterate(model, p0, steps).states[1:]
    seeds = list(seeds)
    out = np.zeros((len(seeds), steps))
    for i, seed in enumerate(seeds):
        rng = as_rng(seed)
        emp = to_simplex(p0)
        for t in range(steps):
            _, emp = model.sample_generation(emp, mu, rng)
            out[i, t] = np.max(np.abs(emp - exact[t]))
    return SampleComparison(out, np.median(out, axis=0), out.max(axis=0))

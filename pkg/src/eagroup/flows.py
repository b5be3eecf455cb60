"""Gradient, quotient-gradient and projected-gradient flows.

All flows share one explicit integrator loop (fixed-step RK4 or adaptive
Dormand-Prince 5(4)) with a post-step hook, which the projected flow uses to
pull iterates back onto the constraint manifold, and a stopping rule on the
norm of the vector field.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import NumericError, SearchFailure, ValidationError

METHODS = ("rk45-adaptive", "rk4-fixed")


class DivergenceError(NumericError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45-adaptive"
    h: float = 1e-2                 # fixed step, or initial step for rk45
    max_step: float = 0.1           # rk45 cap; keeps the controller off the stability edge
    atol: float = 1e-9
    rtol: float = 1e-7
    max_time: float = 1e3
    max_steps: int = 1_000_000
    stop_tol: float = 1e-8          # terminate once max|field| drops below
    blowup: float = 1e9

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown integrator {self.method!r}", field="experiment.integrator.method")
        for name in ("h", "max_step", "atol", "rtol", "max_time", "stop_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"integrator {name} must be positive", field=f"experiment.integrator.{name}")


def _fd_gradient(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = eps * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _fd_jacobian(F, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = eps * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.atleast_1d(F(x + e)) - np.atleast_1d(F(x - e))) / (2 * h))
    return np.array(cols).T.reshape(-1, x.size)


@dataclass(frozen=True)
class SmoothObjective:
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    dim: int | None = None

    def __call__(self, x) -> float:
        return float(self.f(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is None:
            return _fd_gradient(self.f, x)
        return np.asarray(self.grad(x), dtype=float).reshape(x.shape)

    def hessian(self, x) -> np.ndarray:
        H = _fd_jacobian(self.gradient, x, eps=1e-5)
        return (H + H.T) / 2


@dataclass(frozen=True)
class ConstraintMap:
    """Equality constraints ``H(x) = 0`` with ``m`` components."""

    H: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.H(np.asarray(x, dtype=float)), dtype=float))

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jac is None:
            return _fd_jacobian(self, x)
        return np.asarray(self.jac(x), dtype=float).reshape(-1, x.size)


# -- integrator ---------------------------------------------------------------

_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp_step(rhs, x, h):
    k = []
    for i in range(7):
        xi = x + h * sum((a * kj for a, kj in zip(_DP_A[i], k)), np.zeros_like(x))
        k.append(rhs(xi))
    k = np.array(k)
    x5 = x + h * np.tensordot(_DP_B5, k, axes=1)
    x4 = x + h * np.tensordot(_DP_B4, k, axes=1)
    return x5, x5 - x4


def _rk4_step(rhs, x, h):
    k1 = rhs(x)
    k2 = rhs(x + h / 2 * k1)
    k3 = rhs(x + h / 2 * k2)
    k4 = rhs(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rhs, x0, cfg: IntegratorConfig, field_norm=None, post_step=None):
    """Integrate ``x' = rhs(x)`` from ``x0``.

    Stops when ``field_norm(x) < cfg.stop_tol`` (default: max-norm of the
    right-hand side), at ``cfg.max_time`` or after ``cfg.max_steps`` accepted
    steps.  Returns ``(times, states, converged)``.
    """
    field_norm = field_norm or (lambda x: float(np.max(np.abs(rhs(x)))) if x.size else 0.0)
    x = np.array(x0, dtype=float)
    t, h = 0.0, cfg.h
    times, states = [t], [x.copy()]
    converged = field_norm(x) < cfg.stop_tol
    steps = 0
    while not converged and t < cfg.max_time and steps < cfg.max_steps:
        h = min(h, cfg.max_time - t)
        if cfg.method == "rk4-fixed":
            x_new = _rk4_step(rhs, x, h)
        else:
            x_new, err = _dp_step(rhs, x, h)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x_new))
            ratio = float(np.sqrt(np.mean((err / scale) ** 2))) if x.size else 0.0
            if not np.isfinite(ratio) or ratio > 1.0:
                h *= max(0.2, 0.9 * ratio ** -0.2) if np.isfinite(ratio) else 0.2
                if h < 1e-14:
                    raise NumericError(f"step size underflow at t={t:.6g}")
                continue
            h_next = min(cfg.max_step, h * min(5.0, max(0.2, 0.9 * ratio ** -0.2 if ratio > 0 else 5.0)))
        if not np.all(np.isfinite(x_new)) or np.max(np.abs(x_new), initial=0.0) > cfg.blowup:
            raise DivergenceError(f"trajectory diverged at t={t + h:.6g}")
        t += h
        x = post_step(x_new) if post_step else x_new
        times.append(t)
        states.append(x.copy())
        steps += 1
        if cfg.method == "rk45-adaptive":
            h = h_next
        converged = field_norm(x) < cfg.stop_tol
    return np.array(times), np.array(states), converged


# -- flow results -------------------------------------------------------------

@dataclass
class FlowResult:
    times: np.ndarray
    states: np.ndarray
    values: np.ndarray                      # f along the path (or 1/2 |H|^2)
    converged: bool
    classification: str = ""
    feasibility: np.ndarray | None = field(default=None, repr=False)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        dim = self.states.shape[1]
        cols = ["t"] + [f"x{i + 1}" for i in range(dim)] + ["f"]
        if self.feasibility is not None:
            cols.append("norm_H")
        buf.write(",".join(cols) + "\n")
        for k, t in enumerate(self.times):
            row = [t, *self.states[k], self.values[k]]
            if self.feasibility is not None:
                row.append(self.feasibility[k])
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def classify_critical_point(obj: SmoothObjective, x, tol: float = 1e-6) -> str:
    eig = np.linalg.eigvalsh(np.atleast_2d(obj.hessian(x)))
    if np.all(eig > tol):
        return "minimum"
    if np.all(eig < -tol):
        return "maximum"
    if np.any(eig > tol) and np.any(eig < -tol):
        return "saddle"
    return "degenerate"


def gradient_flow(obj: SmoothObjective, x0, cfg: IntegratorConfig = IntegratorConfig()) -> FlowResult:
    """Integrate ``x' = -grad f(x)`` until ``max|grad f| < cfg.stop_tol``."""
    rhs = lambda x: -obj.gradient(x)
    times, states, ok = integrate(rhs, np.atleast_1d(np.asarray(x0, dtype=float)), cfg)
    values = np.array([obj(x) for x in states])
    return FlowResult(times, states, values, ok, classify_critical_point(obj, states[-1]))


def quotient_gradient_flow(con: ConstraintMap, x0, cfg: IntegratorConfig = IntegratorConfig()) -> FlowResult:
    """Integrate ``x' = -JH(x)^T H(x)``; ``1/2 |H|^2`` decreases along it."""
    rhs = lambda x: -con.jacobian(x).T @ con(x)
    times, states, ok = integrate(rhs, np.atleast_1d(np.asarray(x0, dtype=float)), cfg)
    values = np.array([0.5 * float(con(x) @ con(x)) for x in states])
    norms = np.array([float(np.max(np.abs(con(x)))) for x in states])
    return FlowResult(times, states, values, ok, "", norms)


def tangent_projector(con: ConstraintMap | None, x, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the tangent space ``ker JH(x)``.

    ``P = I - JH^T (JH JH^T)^{-1} JH``; a rank-deficient Jacobian falls back
    to the pseudo-inverse with a warning.
    """
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    if con is None:
        return eye
    J = con.jacobian(x)
    if J.shape[0] == 0:
        return eye
    sv = np.linalg.svd(J, compute_uv=False)
    if sv.size < J.shape[0] or sv[-1] <= rank_tol * max(sv[0], 1.0):
        warnings.warn("constraint Jacobian is rank deficient; using pseudo-inverse", RuntimeWarning)
        P = eye - np.linalg.pinv(J, rcond=rank_tol) @ J
    else:
        P = eye - J.T @ np.linalg.solve(J @ J.T, J)
    return (P + P.T) / 2


def newton_project(con: ConstraintMap, x, tol: float = 1e-12, iterations: int = 20) -> np.ndarray:
    """Pull ``x`` onto ``H = 0`` by Gauss-Newton steps ``x -= JH^+ H``."""
    x = np.asarray(x, dtype=float)
    for _ in range(iterations):
        r = con(x)
        if np.max(np.abs(r)) <= tol:
            return x
        x = x - np.linalg.pinv(con.jacobian(x)) @ r
        if not np.all(np.isfinite(x)):
            break
    if np.max(np.abs(con(x))) > max(tol, 1e-9):
        raise SearchFailure("could not re-project onto the constraint manifold", best=x)
    return x


def projected_gradient_flow(obj: SmoothObjective, con: ConstraintMap, x0,
                            cfg: IntegratorConfig = IntegratorConfig(), feas_tol: float = 1e-9) -> FlowResult:
    """Integrate ``x' = -P_H(x) grad f(x)`` on the manifold ``H = 0``.

    After every accepted step the iterate is re-projected when
    ``max|H| > feas_tol``, which keeps integrator drift off the manifold
    bounded.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if np.max(np.abs(con(x0))) >= 1e-8:
        raise ValidationError(f"infeasible start: max|H(x0)| = {np.max(np.abs(con(x0))):.3e}", field="x0")

    def rhs(x):
        return -tangent_projector(con, x) @ obj.gradient(x)

    def post(x):
        if np.max(np.abs(con(x))) > feas_tol:
            return newton_project(con, x, tol=feas_tol * 1e-3)
        return x

    times, states, ok = integrate(rhs, x0, cfg, post_step=post)
    values = np.array([obj(x) for x in states])
    norms = np.array([float(np.max(np.abs(con(x)))) for x in states])
    return FlowResult(times, states, values, ok, "", norms)


# -- exit points ----------------------------------------------------------------

@dataclass
class ExitReport:
    found: bool
    t: float | None = None
    point: np.ndarray | None = None
    value: float | None = None
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        if not self.found:
            return {"found": False, "exit": "none within horizon"}
        return {"found": True, "t": self.t, "point": [float(v) for v in self.point], "f": self.value}


def exit_point_search(obj: SmoothObjective, con: ConstraintMap | None, x_s, direction, h: float = 1e-2,
                      horizon: float = 10.0, tol: float = 1e-6) -> ExitReport:
    """March from ``x_s`` along ``direction`` until ``f`` stops increasing.

    The exit is the first sampled local maximum of ``f`` along the ray (a
    geodesic-free retraction of it when constrained), refined by bisection
    on the sign of the slope to an interval shorter than ``tol``.
    """
    x_s = np.atleast_1d(np.asarray(x_s, dtype=float))
    d = np.atleast_1d(np.asarray(direction, dtype=float))
    if con is not None:
        d = tangent_projector(con, x_s) @ d
    norm = np.linalg.norm(d)
    if norm == 0:
        raise SearchFailure("search direction vanishes on the tangent space")
    d = d / norm

    def path(t):
        x = x_s + t * d
        return newton_project(con, x) if con is not None else x

    def value(t):
        return obj(path(t))

    ts = [0.0]
    fs = [value(0.0)]
    rising = False
    k = 0
    while ts[-1] < horizon:
        k += 1
        t = k * h
        ts.append(t)
        fs.append(value(t))
        if fs[-1] > fs[-2]:
            rising = True
        elif rising and fs[-1] < fs[-2]:
            lo, hi = ts[-3], ts[-1]
            delta = min(h, 1e-5)

            def slope(t):
                return value(t + delta) - value(t - delta)

            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if slope(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            t_exit = 0.5 * (lo + hi)
            x_exit = path(t_exit)
            return ExitReport(True, t_exit, x_exit, obj(x_exit), np.column_stack([ts, fs]))
    return ExitReport(False, samples=np.column_stack([ts, fs]))


# -- double bracket -------------------------------------------------------------

@dataclass(frozen=True)
class MatrixFlowProblem:
    A: np.ndarray
    N: np.ndarray | None = None
    cfg: IntegratorConfig = IntegratorConfig(max_time=1e4, stop_tol=1e-10)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError("A must be square", field="experiment.A")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
            raise ValidationError("A must be symmetric", field="experiment.A")
        N = np.diag(np.arange(1.0, A.shape[0] + 1)) if self.N is None else np.asarray(self.N, dtype=float)
        if N.shape != A.shape or np.max(np.abs(N - np.diag(np.diag(N))), initial=0.0) > 0:
            raise ValidationError("N must be a diagonal matrix of the same size as A", field="experiment.N")
        if len(set(np.diag(N))) != N.shape[0]:
            raise ValidationError("N must have distinct diagonal entries", field="experiment.N")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "N", N)


@dataclass
class MatrixFlowResult:
    times: np.ndarray
    matrices: np.ndarray
    rotations: np.ndarray = field(repr=False)
    converged: bool = False

    @property
    def terminal(self) -> np.ndarray:
        return self.matrices[-1]


def _polar(Q):
    u, _, vt = np.linalg.svd(Q)
    return u @ vt


def double_bracket_flow(problem: MatrixFlowProblem) -> MatrixFlowResult:
    """Isospectral flow ``H' = [H, [H, N]]`` with ``H = Q^T A Q``.

    Integrates ``Q' = Q [H, N]`` on the orthogonal group (the bracket is
    skew, so the velocity lies in the translated tangent space ``Q so(k)``),
    re-orthonormalizing ``Q`` after every step.  Stops once
    ``max|[H, N]| < cfg.stop_tol``; the limit is diagonal with entries
    ordered like those of ``N``.
    """
    A, N, cfg = problem.A, problem.N, problem.cfg
    k = A.shape[0]
    # linearized rates are bounded by spread(eig A) * spread(N)
    rate = np.ptp(np.linalg.eigvalsh(A)) * np.ptp(np.diag(N))
    if rate > 0:
        cfg = replace(cfg, max_step=min(cfg.max_step, 1.0 / rate), h=min(cfg.h, 1.0 / rate))

    def H_of(Q):
        H = Q.T @ A @ Q
        drift = np.max(np.abs(H - H.T))
        if drift > 1e-8:
            raise NumericError(f"symmetry drift {drift:.3e} in double-bracket flow")
        return (H + H.T) / 2

    def rhs(qflat):
        Q = qflat.reshape(k, k)
        H = H_of(Q)
        return (Q @ (H @ N - N @ H)).ravel()

    def bracket_norm(qflat):
        H = H_of(qflat.reshape(k, k))
        return float(np.max(np.abs(H @ N - N @ H)))

    post = lambda qflat: _polar(qflat.reshape(k, k)).ravel()
    times, qs, ok = integrate(rhs, np.eye(k).ravel(), cfg, field_norm=bracket_norm, post_step=post)
    rotations = qs.reshape(-1, k, k)
    matrices = np.array([H_of(Q) for Q in rotations])
    return MatrixFlowResult(times, matrices, rotations, ok)

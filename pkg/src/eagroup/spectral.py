"""Characters and Fourier analysis on Z_d^l, spectral radii, joint spectral radius."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ResourceError, UsageError
from .ring import GenomeSpace

EIG_CUTOFF = 512
JSR_PRODUCT_CAP = 10 ** 6


@dataclass(frozen=True)
class CharacterTable:
    """``chi(u, v) = w_d ** <u, v>`` with ``<u, v> = sum_i u_i v_i mod d``."""

    space: GenomeSpace

    @property
    def root(self) -> complex:
        return np.exp(2j * np.pi / self.space.d)

    def pairing(self) -> np.ndarray:
        digits = self.space.all_digits()
        return (digits @ digits.T) % self.space.d

    def matrix(self) -> np.ndarray:
        self.space.check_matrix("character table")
        return np.exp(2j * np.pi * self.pairing() / self.space.d)

    def __call__(self, u: int, v: int) -> complex:
        k = int(np.dot(self.space.digits(u), self.space.digits(v))) % self.space.d
        return self.root ** k


def walsh_hadamard(x) -> np.ndarray:
    """Unitary fast Walsh-Hadamard transform; ``len(x)`` must be a power of two."""
    a = np.array(x, dtype=float if not np.iscomplexobj(x) else complex)
    n = a.shape[0]
    if n & (n - 1):
        raise UsageError("Walsh-Hadamard length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1)
        h *= 2
    return a.reshape(n) / np.sqrt(n)


def _dft_axes(x, space, sign):
    # separable: one length-d DFT per digit axis, so axis order is irrelevant
    d, l = space.d, space.l
    a = np.asarray(x, dtype=complex).reshape((d,) * l)
    k = np.arange(d)
    F = np.exp(sign * 2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    for axis in range(l):
        a = np.moveaxis(np.tensordot(F, a, axes=([1], [axis])), 0, axis)
    return a.reshape(-1)


def group_dft(x, space: GenomeSpace) -> np.ndarray:
    """``xhat(u) = n**-1/2 sum_v chi(u, v) x(v)``; the Walsh transform when d = 2."""
    x = np.asarray(x)
    if x.shape != (space.n,):
        raise UsageError(f"vector length {x.shape} does not match n={space.n}")
    if space.d == 2 and not np.iscomplexobj(x):
        return walsh_hadamard(x).astype(complex)
    return _dft_axes(x, space, +1)


def inverse_group_dft(xhat, space: GenomeSpace) -> np.ndarray:
    xhat = np.asarray(xhat)
    if xhat.shape != (space.n,):
        raise UsageError(f"vector length {xhat.shape} does not match n={space.n}")
    return _dft_axes(xhat, space, -1)


# -- spectra -------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    radius: float
    second_modulus: float

    def to_json(self) -> str:
        return json.dumps({
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "radius": float(self.radius),
            "second_modulus": float(self.second_modulus),
        }, indent=2)


def _power_iteration(A, iterations=5000, tol=1e-12, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=A.shape[0]) + 1j * rng.normal(size=A.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        if abs(norm - est) <= tol * max(norm, 1.0):
            return float(norm)
        est = norm
    return float(est)


def spectral_radius(A) -> float:
    """Largest eigenvalue modulus (dense eigen-solve up to 512 x 512)."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError("spectral radius needs a square matrix")
    if A.shape[0] == 0:
        return 0.0
    if A.shape[0] <= EIG_CUTOFF:
        return float(np.max(np.abs(np.linalg.eigvals(A))))
    return _power_iteration(A)


def spectrum(A) -> SpectrumReport:
    ev = np.linalg.eigvals(np.asarray(A))
    return _report(ev)


def _report(ev, leading=()):
    ev = np.asarray(ev, dtype=complex)
    moduli = np.sort(np.abs(np.concatenate([np.asarray(leading, dtype=complex), ev])))[::-1]
    radius = float(np.max(np.abs(ev))) if ev.size else 0.0
    second = float(moduli[1]) if moduli.size > 1 else 0.0
    return SpectrumReport(ev, radius, second)


def ea_map_spectrum(model, p, tol: float = 1e-10) -> SpectrumReport:
    """Spectrum of the generation map linearized at a fixed point.

    ``eigenvalues`` are those of the tangent-space Jacobian.  Moduli are
    ranked with the eigenvalue 1 of the normalization direction in first
    place, so ``second_modulus`` is the largest tangent modulus: the local
    convergence rate, matching the second eigenvalue of a stochastic kernel.
    """
    from .dynamics import jacobian_at

    p = np.asarray(p, dtype=float)
    residual = float(np.max(np.abs(model(p) - p)))
    if residual >= tol:
        raise UsageError(f"point is not a fixed point (residual {residual:.3e})")
    ev = np.linalg.eigvals(jacobian_at(model, p)) if p.size > 1 else np.array([], dtype=complex)
    return _report(ev, leading=(1.0,))


# -- joint spectral radius -----------------------------------------------------

@dataclass(frozen=True)
class JSRBounds:
    lower: float
    upper: float
    depth: int
    lower_product: tuple[int, ...]


def jsr_bounds(matrices, depth: int) -> JSRBounds:
    """Brute-force bracket of the joint spectral radius.

    ``lower = max rho(P)**(1/j)`` over all products of length ``j <= depth``;
    ``upper = max ||P||_2**(1/depth)`` over products of length ``depth``.
    """
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if not mats:
        raise UsageError("matrix set is empty")
    if not 1 <= depth <= 12:
        raise UsageError("depth must be between 1 and 12")
    if len(mats) ** depth > JSR_PRODUCT_CAP:
        raise ResourceError(f"{len(mats)}^{depth} products exceed the cap of {JSR_PRODUCT_CAP}")
    k = mats[0].shape[0]
    lower, best = 0.0, ()
    level = {(): np.eye(k)}
    for j in range(1, depth + 1):
        nxt = {}
        for word, P in level.items():
            for i, M in enumerate(mats):
                Q = M @ P
                w = word + (i,)
                nxt[w] = Q
                r = spectral_radius(Q) ** (1.0 / j)
                if r > lower + 1e-15:
                    lower, best = r, w
        level = nxt
    upper = max(np.linalg.norm(P, 2) for P in level.values()) ** (1.0 / depth)
    return JSRBounds(lower, upper, depth, best)


def jsr_sequence(matrices, max_depth: int) -> dict:
    """Bounds for depths 1..max_depth plus monotonicity flags (checked, not assumed)."""
    if len(matrices) ** max_depth > JSR_PRODUCT_CAP:
        raise ResourceError(f"{len(matrices)}^{max_depth} products exceed the cap of {JSR_PRODUCT_CAP}")
    rows = [jsr_bounds(matrices, k) for k in range(1, max_depth + 1)]
    lowers = [r.lower for r in rows]
    uppers = [r.upper for r in rows]
    return {
        "bounds": rows,
        "lower_nondecreasing": all(b >= a - 1e-12 for a, b in zip(lowers, lowers[1:])),
        "upper_nonincreasing": all(b <= a + 1e-12 for a, b in zip(uppers, uppers[1:])),
    }

"""Arithmetic on the product ring Z_d^l of fixed-length d-ary strings.

Genomes are identified with integers in ``[0, d**l)`` through their base-d
representation; digit 0 is the least significant.  ``(+)`` is digit-wise
addition mod d, ``(x)`` digit-wise multiplication mod d.  In the usual
notation ``(x)`` binds tighter than ``(+)``; the API here is always fully
parenthesized by function calls.

Most functions accept plain ints or integer numpy arrays (vectorized over
genomes).  :class:`Genome` wraps a single value together with its space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, UsageError

VECTOR_CAP = 65536
MATRIX_CAP = 4096


@dataclass(frozen=True)
class GenomeSpace:
    """The ring H = Z_d^l with ``n = d**l`` elements."""

    d: int
    l: int
    vector_cap: int = field(default=VECTOR_CAP, compare=False)
    matrix_cap: int = field(default=MATRIX_CAP, compare=False)

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise UsageError(f"alphabet size d must be an integer >= 2, got {self.d!r}")
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            raise UsageError(f"string length l must be an integer >= 1, got {self.l!r}")
        n = self.d ** self.l
        if n > self.vector_cap:
            raise ResourceError(f"space size {self.d}^{self.l} = {n} exceeds vector cap {self.vector_cap}")

    @property
    def n(self) -> int:
        return self.d ** self.l

    @property
    def ones(self) -> int:
        """The all-ones string (multiplicative identity)."""
        return sum(self.d ** i for i in range(self.l))

    def __iter__(self):
        return iter(range(self.n))

    def __len__(self):
        return self.n

    def genome(self, value) -> "Genome":
        return Genome(self, int(value))

    def check(self, x):
        arr = np.asarray(x)
        if arr.size and (arr.min() < 0 or arr.max() >= self.n):
            raise UsageError(f"genome out of range [0, {self.n}): {x!r}")
        return x

    def check_matrix(self, what="matrix"):
        if self.n > self.matrix_cap:
            raise ResourceError(f"{what} of size {self.n}x{self.n} exceeds matrix cap {self.matrix_cap}")

    # -- digit conversion -------------------------------------------------

    @property
    def _powers(self) -> np.ndarray:
        return self.d ** np.arange(self.l, dtype=np.int64)

    def digits(self, x) -> np.ndarray:
        """Base-d digits, position 0 first.  Shape ``x.shape + (l,)``."""
        x = np.asarray(x, dtype=np.int64)
        return (x[..., None] // self._powers) % self.d

    def from_digits(self, digits) -> np.ndarray | int:
        digits = np.asarray(digits, dtype=np.int64)
        if digits.shape[-1] != self.l:
            raise UsageError(f"digit vector must have length {self.l}")
        out = (np.mod(digits, self.d) * self._powers).sum(axis=-1)
        return int(out) if out.ndim == 0 else out

    def all_digits(self) -> np.ndarray:
        """n x l digit table of every genome."""
        return self.digits(np.arange(self.n))

    # -- ring operations --------------------------------------------------

    def _binop(self, u, v, op):
        out = self.from_digits(op(self.digits(u), self.digits(v)) % self.d)
        return out

    def add(self, u, v):
        return self._binop(u, v, np.add)

    def mul(self, u, v):
        return self._binop(u, v, np.multiply)

    def sub(self, u, v):
        return self._binop(u, v, np.subtract)

    def neg(self, s):
        return self.sub(0 * np.asarray(s), s)

    def complement(self, s):
        return self.sub(np.full_like(np.asarray(s, dtype=np.int64), self.ones), s)

    def nonzero_count(self, s):
        out = np.count_nonzero(self.digits(s), axis=-1)
        return int(out) if np.ndim(out) == 0 else out

    def is_binary(self, s) -> bool:
        return bool(np.all(self.digits(s) <= 1))

    def add_table(self) -> np.ndarray:
        """``T[u, v] = u (+) v`` for all pairs."""
        self.check_matrix("addition table")
        idx = np.arange(self.n)
        return self.add(idx[:, None], idx[None, :])

    def elements_of_embedding(self, s) -> np.ndarray:
        """Sorted elements of H_s: strings that vanish wherever ``s`` does."""
        m = self.nonzero_count(s)
        return np.sort(np.asarray([self.embed(s, j) for j in range(self.d ** m)], dtype=np.int64))

    # -- injections and embeddings ---------------------------------------

    def support(self, s) -> list[int]:
        return [i for i, digit in enumerate(self.digits(s)) if digit != 0]

    def injection(self, s) -> "Injection":
        self.check(s)
        rows = self.support(s)
        matrix = np.zeros((self.l, len(rows)), dtype=np.int64)
        for j, i in enumerate(rows):
            matrix[i, j] = 1
        return Injection(mask=int(s), m=len(rows), matrix=matrix)

    def embed(self, s, j) -> int:
        """Image of the m-digit genome ``j`` under the injection of ``s``."""
        rows = self.support(s)
        m = len(rows)
        if not 0 <= int(j) < self.d ** m:
            raise UsageError(f"j={j} out of range for the {m}-digit space of mask {s}")
        jd = [(int(j) // self.d ** k) % self.d for k in range(m)]
        return sum(digit * self.d ** i for digit, i in zip(jd, rows))

    def binary_decompose(self, i, s):
        """Split ``i`` as ``u (+) v`` with ``u = i (x) s`` and ``v = i (x) ~s``."""
        if not self.is_binary(s):
            raise UsageError(f"mask {s} is not binary")
        return self.mul(i, s), self.mul(i, self.complement(s))


@dataclass(frozen=True)
class Injection:
    mask: int
    m: int
    matrix: np.ndarray = field(compare=False, repr=False)


@dataclass(frozen=True)
class Genome:
    """A single element of a :class:`GenomeSpace`.

    Supports ``+`` (ring addition), ``*`` (ring product), ``-`` and unary
    ``-``; ``~g`` is the complement ``1 (-) g``.
    """

    space: GenomeSpace
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.space.n:
            raise UsageError(f"genome value {self.value} outside [0, {self.space.n})")

    @property
    def digits(self) -> list[int]:
        return [int(x) for x in self.space.digits(self.value)]

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def _same(self, other):
        if not isinstance(other, Genome) or (other.space.d, other.space.l) != (self.space.d, self.space.l):
            raise UsageError("genomes belong to different spaces")
        return other

    def __add__(self, other):
        return ring_add(self, other)

    def __mul__(self, other):
        return ring_mul(self, other)

    def __sub__(self, other):
        return ring_sub(self, other)

    def __neg__(self):
        return negate(self)

    def __invert__(self):
        return complement(self)


def _wrap(space, value):
    return Genome(space, int(value))


def ring_add(u: Genome, v: Genome) -> Genome:
    u._same(v)
    return _wrap(u.space, u.space.add(u.value, v.value))


def ring_mul(u: Genome, v: Genome) -> Genome:
    u._same(v)
    return _wrap(u.space, u.space.mul(u.value, v.value))


def ring_sub(u: Genome, v: Genome) -> Genome:
    u._same(v)
    return _wrap(u.space, u.space.sub(u.value, v.value))


def negate(s: Genome) -> Genome:
    return _wrap(s.space, s.space.neg(s.value))


def complement(s: Genome) -> Genome:
    return _wrap(s.space, s.space.complement(s.value))


def nonzero_count(s: Genome) -> int:
    return s.space.nonzero_count(s.value)


def injection_of(s: Genome) -> Injection:
    return s.space.injection(s.value)


def embed(s: Genome, j: int) -> Genome:
    return _wrap(s.space, s.space.embed(s.value, int(j)))


def binary_decompose(i: Genome, s: Genome) -> tuple[Genome, Genome]:
    i._same(s)
    u, v = i.space.binary_decompose(i.value, s.value)
    return _wrap(i.space, u), _wrap(i.space, v)

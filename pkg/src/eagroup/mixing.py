"""Infinite-population EA operators: fitness, selection, mixing.

The generation map is ``G = M o F`` on the simplex of population vectors:
``F`` is fitness-proportional selection and ``M`` is the quadratic mixing
operator built from a child kernel ``b(u, v, w)`` (crossover by binary mask,
then independent-digit mutation, unless ``order="mutation_first"``).

When the kernel commutes with the translation group ``v -> v (+) s``, the
whole of ``M`` is determined by the mixing matrix ``MM[u, v] = a(u, v, 0)``:

    M(p)[w] = sum_{x, y} p[x (+) w] p[y (+) w] MM[x, y]
"""

from __future__ import annotations

import ast
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericError, ResourceError, UsageError, ValidationError
from .groups import PermutationGroup, translation_group
from .ring import GenomeSpace

log = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12
TENSOR_CAP = 256
EXACT_CAP = 64

CROSSOVER_KINDS = ("uniform", "one_point", "none")
ORDERS = ("crossover_first", "mutation_first")


# -- random source -----------------------------------------------------------

def as_rng(seed_or_rng=None) -> np.random.Generator:
    """Deterministic stream from a 64-bit seed (or pass a Generator through)."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


# -- simplex helpers ---------------------------------------------------------

def to_simplex(p, what="population vector") -> np.ndarray:
    """Validate ``p`` as a point on the simplex, clamping round-off negatives."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise NumericError(f"{what} has non-finite entries")
    low = p.min()
    if low < -SIMPLEX_TOL:
        raise NumericError(f"{what} has entry {low:.3e} below zero")
    if low < 0:
        if low < -1e-15:
            log.warning("clamping %s entry %.3e to zero", what, low)
        p = np.maximum(p, 0.0)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise NumericError(f"{what} sums to {total!r}, not 1")
    return p / total


def uniform_population(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def vertex(n: int, i: int) -> np.ndarray:
    p = np.zeros(n)
    p[i] = 1.0
    return p


# -- fitness pipeline --------------------------------------------------------

@dataclass(frozen=True)
class Scaling:
    """Fitness scaling ``T_s``: identity, power(alpha), exponential(beta) or
    linear_offset(c)."""

    kind: str = "identity"
    param: float | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "power", "exponential", "linear_offset"):
            raise ValidationError(f"unknown scaling kind {self.kind!r}", field="operators.scaling.kind")
        if self.kind != "identity" and self.param is None:
            raise ValidationError(f"scaling {self.kind} needs a parameter", field="operators.scaling")

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        with np.errstate(all="ignore"):
            if self.kind == "identity":
                return values
            if self.kind == "power":
                return np.power(values, self.param)
            if self.kind == "exponential":
                return np.exp(self.param * values)
            return values + self.param


def digits_decoder(space: GenomeSpace) -> Callable[[int], np.ndarray]:
    table = space.all_digits().astype(float)
    return lambda g: table[g]


def table_decoder(table) -> Callable[[int], np.ndarray]:
    table = np.atleast_2d(np.asarray(table, dtype=float).T).T
    return lambda g: table[g]


def onemax(offset: float = 1.0) -> Callable[[np.ndarray], float]:
    """Number of nonzero digits plus ``offset`` (OneMax+1 by default)."""
    return lambda x: float(np.count_nonzero(x)) + offset


_EXPR_NAMES = {
    "abs": abs, "min": min, "max": max, "sum": np.sum, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "prod": np.prod, "pi": math.pi,
    "count_nonzero": np.count_nonzero,
}
_EXPR_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Subscript, ast.Slice, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod,
    ast.FloorDiv, ast.USub, ast.UAdd,
    ast.Compare, ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.IfExp, ast.Tuple,
) + ((ast.Index,) if hasattr(ast, "Index") else ())


def expression_objective(expr: str) -> Callable[[np.ndarray], float]:
    """Objective from an arithmetic expression in the decoded vector ``x``.

    Only arithmetic, comparisons, indexing and a small set of math functions
    are allowed, e.g. ``"sum(x) + 1"`` or ``"1 + (x[0] - x[1])**2"``.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"bad fitness expression {expr!r}: {exc.msg}", field="operators.fitness.expr") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _EXPR_NODES):
            raise ValidationError(f"disallowed syntax {type(node).__name__} in fitness expression",
                                  field="operators.fitness.expr")
        if isinstance(node, ast.Name) and node.id != "x" and node.id not in _EXPR_NAMES:
            raise ValidationError(f"unknown name {node.id!r} in fitness expression", field="operators.fitness.expr")
    code = compile(tree, "<fitness>", "eval")
    return lambda x: float(eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "x": np.asarray(x)}))


@dataclass(frozen=True)
class FitnessPipeline:
    """``Phi = T_s o f o D``; the decoder defaults to the digit vector."""

    objective: Callable[[np.ndarray], float]
    decoder: Callable[[int], np.ndarray] | None = None
    scaling: Scaling = Scaling()


def fitness_vector(pipeline: FitnessPipeline, space: GenomeSpace) -> np.ndarray:
    decoder = pipeline.decoder or digits_decoder(space)
    raw = np.array([pipeline.objective(decoder(g)) for g in range(space.n)], dtype=float)
    phi = pipeline.scaling(raw)
    bad = np.flatnonzero(~np.isfinite(phi) | (phi <= 0))
    if bad.size:
        g = int(bad[0])
        raise ValidationError(f"fitness of genome {g} is {phi[g]!r}; must be finite and positive",
                              field="operators.fitness")
    return phi


def check_fitness(phi, n: int) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (n,):
        raise ValidationError(f"fitness vector must have length {n}", field="operators.fitness")
    bad = np.flatnonzero(~np.isfinite(phi) | (phi <= 0))
    if bad.size:
        raise ValidationError(f"fitness of genome {int(bad[0])} is {phi[bad[0]]!r}; must be finite and positive",
                              field="operators.fitness")
    return phi


def select(p, phi) -> np.ndarray:
    """Proportional selection ``F(p)_i = phi_i p_i / (phi . p)``."""
    weighted = np.asarray(phi, dtype=float) * np.asarray(p, dtype=float)
    return weighted / weighted.sum()


# -- operator specs ----------------------------------------------------------

@dataclass(frozen=True)
class MutationSpec:
    """Each digit is independently replaced, with probability ``q``, by a
    uniformly chosen different value."""

    q: float | Fraction = 0.0

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValidationError(f"mutation rate q={self.q} outside [0, 1]", field="operators.mutation.q")

    def probability(self, space: GenomeSpace, c: int, w: int):
        """Probability that ``c`` mutates into ``w``."""
        k = space.nonzero_count(space.sub(c, w))
        q = self.q
        return (1 - q) ** (space.l - k) * (q / (space.d - 1)) ** k

    def kernel(self, space: GenomeSpace, exact: bool = False) -> np.ndarray:
        """Row-stochastic ``U[c, w]``; depends only on ``c (-) w``."""
        space.check_matrix("mutation kernel")
        idx = np.arange(space.n)
        changed = space.nonzero_count(space.sub(idx[:, None], idx[None, :]))
        if exact:
            q = Fraction(self.q)
            keep, move = 1 - q, q / (space.d - 1)
            values = [keep ** (space.l - k) * move ** k for k in range(space.l + 1)]
            return np.array(values, dtype=object)[changed]
        keep, move = 1.0 - float(self.q), float(self.q) / (space.d - 1)
        return keep ** (space.l - changed) * move ** changed


@dataclass(frozen=True)
class CrossoverSpec:
    """Distribution ``chi`` over binary masks; child = ``u (x) s (+) v (x) ~s``."""

    masks: tuple[int, ...]
    weights: tuple = ()
    kind: str = "custom"

    def __post_init__(self):
        if len(self.masks) != len(self.weights) or not self.masks:
            raise ValidationError("crossover needs one weight per mask", field="operators.crossover")
        if any(w < 0 for w in self.weights):
            raise ValidationError("crossover weights must be nonnegative", field="operators.crossover")
        if abs(float(sum(self.weights)) - 1.0) > 1e-12:
            raise ValidationError("crossover weights must sum to 1", field="operators.crossover")

    @classmethod
    def uniform(cls, space: GenomeSpace, exact: bool = False) -> "CrossoverSpec":
        masks = tuple(int(space.from_digits(b)) for b in _binary_vectors(space.l))
        w = Fraction(1, len(masks)) if exact else 1.0 / len(masks)
        return cls(masks, (w,) * len(masks), "uniform")

    @classmethod
    def one_point(cls, space: GenomeSpace, exact: bool = False) -> "CrossoverSpec":
        # low-order prefix masks for cut points 1..l-1; l == 1 has no cut point
        if space.l == 1:
            return cls.none(space, exact)
        masks = tuple(sum(space.d ** i for i in range(k)) for k in range(1, space.l))
        w = Fraction(1, len(masks)) if exact else 1.0 / len(masks)
        return cls(masks, (w,) * len(masks), "one_point")

    @classmethod
    def none(cls, space: GenomeSpace, exact: bool = False) -> "CrossoverSpec":
        return cls((space.ones,), (Fraction(1) if exact else 1.0,), "none")

    @classmethod
    def from_kind(cls, space: GenomeSpace, kind: str, exact: bool = False) -> "CrossoverSpec":
        if kind not in CROSSOVER_KINDS:
            raise ValidationError(f"unknown crossover kind {kind!r}", field="operators.crossover.kind")
        return getattr(cls, kind)(space, exact)

    def validate(self, space: GenomeSpace) -> "CrossoverSpec":
        for s in self.masks:
            space.check(s)
            if not space.is_binary(s):
                raise ValidationError(f"crossover mask {s} is not binary", field="operators.crossover")
        return self

    def child(self, space: GenomeSpace, u, v, s):
        return space.add(space.mul(u, s), space.mul(v, space.complement(s)))


def _binary_vectors(l):
    for k in range(2 ** l):
        yield [(k >> i) & 1 for i in range(l)]


@dataclass(frozen=True)
class OperatorParams:
    """Exogenous operator parameters with their documented ranges."""

    q: float = 0.0
    crossover: str = "none"
    order: str = "crossover_first"
    alpha: float | None = None
    beta: float | None = None
    mu: int | None = None

    def __post_init__(self):
        if not 0 <= self.q <= 1:
            raise ValidationError("q must lie in [0, 1]", field="operators.mutation.q")
        if self.crossover not in CROSSOVER_KINDS:
            raise ValidationError(f"unknown crossover kind {self.crossover!r}", field="operators.crossover.kind")
        if self.order not in ORDERS:
            raise ValidationError(f"unknown order {self.order!r}", field="operators.order")
        if self.mu is not None and self.mu < 1:
            raise ValidationError("population size mu must be >= 1", field="experiment.mu")


# -- child kernels -----------------------------------------------------------

def child_kernel(space: GenomeSpace, cx: CrossoverSpec, mu: MutationSpec, u: int, v: int, w: int,
                 order: str = "crossover_first"):
    """Probability ``b(u, v, w)`` that parents ``u, v`` produce child ``w``."""
    total = 0
    for s, chi in zip(cx.masks, cx.weights):
        if order == "crossover_first":
            total += chi * mu.probability(space, cx.child(space, u, v, s), w)
        else:
            for u2 in range(space.n):
                pu = mu.probability(space, u, u2)
                for v2 in range(space.n):
                    if cx.child(space, u2, v2, s) == w:
                        total += chi * pu * mu.probability(space, v, v2)
    return total


def crossover_tensor(space: GenomeSpace, cx: CrossoverSpec, exact: bool = False) -> np.ndarray:
    """``C[u, v, w] = sum_s chi(s) [w == u (x) s (+) v (x) ~s]``."""
    _check_tensor(space, exact)
    n = space.n
    C = np.zeros((n, n, n), dtype=object if exact else float)
    if exact:
        C[...] = Fraction(0)
    idx = np.arange(n)
    uu, vv = np.meshgrid(idx, idx, indexing="ij")
    for s, chi in zip(cx.masks, cx.weights):
        child = cx.child(space, uu, vv, s)
        C[uu, vv, child] += chi
    return C


def child_kernel_tensor(space: GenomeSpace, cx: CrossoverSpec, mu: MutationSpec,
                        order: str = "crossover_first", exact: bool = False) -> np.ndarray:
    """Full ``b[u, v, w]`` (``n**3`` entries; desk-scale spaces only)."""
    if order not in ORDERS:
        raise ValidationError(f"unknown order {order!r}", field="operators.order")
    C = crossover_tensor(space, cx, exact)
    U = mu.kernel(space, exact)
    if order == "crossover_first":
        return np.tensordot(C, U, axes=([2], [0]))
    # b[u,v,w] = sum_{a,b} U[u,a] U[v,b] C[a,b,w]
    left = np.tensordot(U, C, axes=([1], [0]))            # [u, b, w]
    return np.tensordot(U, left, axes=([1], [1])).transpose(1, 0, 2)


def symmetrize(b: np.ndarray) -> np.ndarray:
    """``a(u, v, w) = (b(u, v, w) + b(v, u, w)) / 2``."""
    return (b + b.transpose(1, 0, 2)) / 2


def symmetrized_kernel(b: np.ndarray, u: int, v: int, w: int):
    return (b[u, v, w] + b[v, u, w]) / 2


def _check_tensor(space, exact):
    cap = EXACT_CAP if exact else TENSOR_CAP
    if space.n > cap:
        raise ResourceError(f"kernel tensor for n={space.n} exceeds cap n <= {cap}")


@dataclass(frozen=True)
class CommutationReport:
    ok: bool
    max_deviation: float
    witness: tuple | None = None    # (element index, u, v, w)

    def __bool__(self):
        return self.ok


def commutes_with_action(group: PermutationGroup, a: np.ndarray, tol: float = 1e-12) -> CommutationReport:
    """Check ``a(pi u, pi v, pi w) == a(u, v, w)`` for every group element.

    Object (rational) kernels are compared exactly.
    """
    exact = a.dtype == object
    worst, witness = 0, None
    for k, pi in enumerate(group.elements):
        idx = np.asarray(pi.images)
        moved = a[np.ix_(idx, idx, idx)]
        diff = moved - a
        dev = np.abs(diff.astype(float)) if not exact else np.vectorize(abs, otypes=[object])(diff)
        flat = int(np.argmax(dev)) if not exact else max(range(dev.size), key=lambda i: dev.flat[i])
        value = dev.flat[flat]
        if value > worst:
            worst = value
            witness = (k,) + tuple(int(x) for x in np.unravel_index(flat, a.shape))
    ok = bool(worst == 0) if exact else bool(worst <= tol)
    return CommutationReport(ok, worst if exact else float(worst), None if ok else witness)


@dataclass(frozen=True)
class MixingMatrix:
    entries: np.ndarray
    provenance: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        e = self.entries
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValidationError("mixing matrix must be square")
        if e.dtype != object and not np.allclose(e, e.T, atol=1e-14, rtol=0):
            raise ValidationError("mixing matrix is not symmetric")

    @property
    def n(self):
        return self.entries.shape[0]


def mixing_matrix(a: np.ndarray, provenance=None) -> MixingMatrix:
    """``MM[u, v] = a(u, v, 0)``."""
    return MixingMatrix(a[:, :, 0].copy(), provenance)


def mixing_matrix_from_specs(space: GenomeSpace, cx: CrossoverSpec, mu: MutationSpec,
                             order: str = "crossover_first") -> MixingMatrix:
    """Mixing matrix without materializing the ``n**3`` kernel."""
    space.check_matrix("mixing matrix")
    cx.validate(space)
    idx = np.arange(space.n)
    uu, vv = idx[:, None], idx[None, :]
    if order == "crossover_first":
        u0 = mu.kernel(space)[:, 0]
        mm = np.zeros((space.n, space.n))
        for s, chi in zip(cx.masks, cx.weights):
            mm += float(chi) * u0[cx.child(space, uu, vv, s)]
    elif order == "mutation_first":
        hits = np.zeros((space.n, space.n))
        for s, chi in zip(cx.masks, cx.weights):
            hits += float(chi) * (cx.child(space, uu, vv, s) == 0)
        U = mu.kernel(space)
        mm = U @ hits @ U.T
    else:
        raise ValidationError(f"unknown order {order!r}", field="operators.order")
    return MixingMatrix((mm + mm.T) / 2, (cx, mu, order))


def mix(mm, p, space: GenomeSpace, table: np.ndarray | None = None) -> np.ndarray:
    """``M(p)`` via translates of the mixing matrix.

    Assumes the kernel commutes with translations; :class:`MixingHeuristic`
    checks that once per configuration.
    """
    entries = mm.entries if isinstance(mm, MixingMatrix) else np.asarray(mm)
    if table is None:
        table = space.add_table()
    q = np.asarray(p, dtype=float)[table]          # q[w, x] = p[x (+) w]
    return np.einsum("wx,xy,wy->w", q, entries.astype(float), q)


def mix_oracle(a: np.ndarray, p) -> np.ndarray:
    """Direct triple sum ``sum_{u,v} p_u p_v a(u, v, w)``."""
    p = np.asarray(p, dtype=float)
    return np.einsum("u,v,uvw->w", p, p, a.astype(float))


# -- the heuristic -----------------------------------------------------------

class MixingHeuristic:
    """Generation map ``G(p) = M(F(p))`` for one operator configuration.

    Parameters
    ----------
    space : GenomeSpace
    fitness : array-like or FitnessPipeline
        Positive fitness vector ``Phi``.
    crossover, mutation : CrossoverSpec, MutationSpec
        Defaults: no crossover, ``q = 0``.
    order : {"crossover_first", "mutation_first"}
    kernel : ndarray, optional
        An explicit symmetrized kernel ``a[u, v, w]``; overrides the specs.
    """

    def __init__(self, space, fitness, crossover=None, mutation=None, order="crossover_first",
                 kernel=None, check=True):
        self.space = space
        if isinstance(fitness, FitnessPipeline):
            fitness = fitness_vector(fitness, space)
        self.phi = check_fitness(fitness, space.n)
        self.crossover = (crossover or CrossoverSpec.none(space)).validate(space)
        self.mutation = mutation or MutationSpec(0.0)
        if order not in ORDERS:
            raise ValidationError(f"unknown order {order!r}", field="operators.order")
        self.order = order
        self.kernel = kernel
        if kernel is not None:
            kernel = np.asarray(kernel)
            if kernel.shape != (space.n,) * 3:
                raise ValidationError("kernel must have shape (n, n, n)")
            self.mm = mixing_matrix(kernel, provenance="explicit")
        else:
            self.mm = mixing_matrix_from_specs(space, self.crossover, self.mutation, order)
        self.table = space.add_table()
        if check:
            self._check_commutation()

    def _check_commutation(self):
        space = self.space
        gens = translation_group(space).generators
        if self.kernel is not None:
            a = np.asarray(self.kernel)
        elif space.n <= 64:
            a = symmetrize(child_kernel_tensor(space, self.crossover, self.mutation, self.order))
        else:
            a = None
        if a is not None:
            generated = PermutationGroup(gens, gens)
            report = commutes_with_action(generated, a)
            if not report:
                raise ConfigurationError(
                    f"kernel does not commute with translations (deviation {float(report.max_deviation):.3e} "
                    f"at {report.witness}); the mixing-matrix form of M is invalid")

    @property
    def n(self) -> int:
        return self.space.n

    def select(self, p) -> np.ndarray:
        return select(p, self.phi)

    def mix(self, p) -> np.ndarray:
        return mix(self.mm, p, self.space, self.table)

    def __call__(self, p) -> np.ndarray:
        return self.mix(self.select(p))

    generation = __call__

    def jacobian(self, p) -> np.ndarray:
        """Analytic ``dG(p) = dM(F(p)) dF(p)`` as an ``n x n`` matrix."""
        p = np.asarray(p, dtype=float)
        phi = self.phi
        z = phi @ p
        dF = np.diag(phi) / z - np.outer(phi * p, phi) / z ** 2
        r = self.select(p)
        q = r[self.table]
        grad = 2.0 * q @ self.mm.entries
        dM = np.zeros((self.n, self.n))
        np.put_along_axis(dM, self.table, grad, axis=1)
        return dM @ dF

    def sample_generation(self, p, mu: int, rng=None):
        """Draw ``mu`` offspring i.i.d. from ``G(p)``.

        Returns the population (sorted genome array) and its empirical vector.
        """
        if mu < 1:
            raise UsageError("population size mu must be >= 1")
        rng = as_rng(rng)
        probs = np.clip(self(p), 0.0, None)
        counts = rng.multinomial(mu, probs / probs.sum())
        return np.repeat(np.arange(self.n), counts), counts / mu


# -- finite-population operators --------------------------------------------

def mutate_population(space: GenomeSpace, population, q: float, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    digits = space.digits(np.asarray(population, dtype=np.int64))
    hit = rng.random(digits.shape) < q
    shift = rng.integers(1, space.d, size=digits.shape)
    return space.from_digits(np.where(hit, digits + shift, digits))


def crossover_population(space: GenomeSpace, mothers, fathers, cx: CrossoverSpec, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    probs = np.asarray([float(w) for w in cx.weights])
    masks = np.asarray(cx.masks)[rng.choice(len(cx.masks), size=len(mothers), p=probs / probs.sum())]
    return cx.child(space, np.asarray(mothers), np.asarray(fathers), masks)


def select_population(population, phi, size: int, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    population = np.asarray(population)
    w = np.asarray(phi, dtype=float)[population]
    return population[rng.choice(len(population), size=size, p=w / w.sum())]


def _mutation_joint(space, population, q):
    # exact joint distribution of the mutated population, enumerated digit by digit
    per = [MutationSpec(q).kernel(space)[x] for x in population]
    joint = per[0]
    for row in per[1:]:
        joint = np.multiply.outer(joint, row)
    return joint


@dataclass
class OperatorReport:
    mutation_per_individual: bool
    crossover_multi_parent: bool
    crossover_witness: tuple | None
    selection_subset: bool

    def lines(self) -> list[str]:
        mark = lambda ok: "✓" if ok else "✗"
        w = f" witness {self.crossover_witness}" if self.crossover_witness else ""
        return [
            f"mutation: per-individual {mark(self.mutation_per_individual)}",
            f"crossover: multi-parent {mark(self.crossover_multi_parent)}{w}",
            f"selection: subset {mark(self.selection_subset)}",
        ]


def classify_operator_properties(space: GenomeSpace, crossover: CrossoverSpec, mutation: MutationSpec,
                                 phi=None, rng=None, trials: int = 200) -> OperatorReport:
    """Check the defining properties of mutation, crossover and selection.

    Mutation: on every two-member population, each offspring's marginal is
    unchanged when the other parent is replaced.  Crossover: exhibits parents
    ``(u, v, v2)`` whose child distributions differ although only the second
    parent changed.  Selection: sampled selections only contain members.
    """
    if space.n > 64:
        raise ResourceError("operator classification is exhaustive; use a space with n <= 64")
    rng = as_rng(rng)
    n = space.n

    per_individual = True
    for x in range(n):
        base = _mutation_joint(space, [x, 0], mutation.q).sum(axis=1)
        for y in range(n):
            joint = _mutation_joint(space, [x, y], mutation.q)
            if not np.allclose(joint.sum(axis=1), base, atol=1e-15):
                per_individual = False

    C = crossover_tensor(space, crossover)
    witness = None
    for u in range(n):
        for v in range(n):
            for v2 in range(v + 1, n):
                if not np.array_equal(C[u, v], C[u, v2]):
                    witness = (u, v, v2)
                    break
            if witness:
                break
        if witness:
            break

    phi = np.ones(n) if phi is None else np.asarray(phi, dtype=float)
    subset = True
    for _ in range(trials):
        pop = rng.integers(0, n, size=int(rng.integers(1, 6)))
        chosen = select_population(pop, phi, size=8, rng=rng)
        subset &= bool(np.isin(chosen, pop).all())

    return OperatorReport(per_individual, witness is not None, witness, subset)

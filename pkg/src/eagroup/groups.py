"""Permutation groups acting on a genome space.

Groups are kept concretely as closed sets of permutations (BFS closure).
Orbits of a subgroup give equivalence relations on H, i.e. schema families,
and lists of such relations give the representation map onto chromosome
tuples used for the coverage calculus.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ResourceError, UsageError, ValidationError
from .ring import GenomeSpace

GROUP_CAP = 100_000


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection of ``[0, n)`` stored as its image array."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        object.__setattr__(self, "images", images)
        if sorted(images) != list(range(len(images))):
            raise ValidationError("permutation images are not a bijection on [0, n)")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, v):
        if isinstance(v, (int, np.integer)):
            return self.images[v]
        return np.asarray(self.images)[np.asarray(v)]

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self o other)(v) = self(other(v))``."""
        return Permutation(tuple(self.images[x] for x in other.images))

    __matmul__ = compose

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for v, image in enumerate(self.images):
            inv[image] = v
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == x for i, x in enumerate(self.images))

    def __eq__(self, other):
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Permutation({list(self.images)})"


@dataclass(frozen=True)
class PermutationGroup:
    generators: tuple[Permutation, ...]
    elements: tuple[Permutation, ...] = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def n(self) -> int:
        return self.elements[0].n

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, perm):
        return perm in set(self.elements)

    def image_array(self) -> np.ndarray:
        """``|L| x n`` array; row k holds the images of element k."""
        return np.asarray([p.images for p in self.elements], dtype=np.int64)


def close_group(generators, n: int | None = None, cap: int = GROUP_CAP) -> PermutationGroup:
    """Smallest permutation group containing ``generators``.

    Elements are listed in BFS order from the identity, which gives each a
    stable label (its index).
    """
    generators = tuple(generators)
    if n is None:
        if not generators:
            raise UsageError("n is required when there are no generators")
        n = generators[0].n
    for g in generators:
        if g.n != n:
            raise UsageError("generators act on spaces of different size")
    identity = Permutation.identity(n)
    seen = {identity}
    elements = [identity]
    queue = deque([identity])
    while queue:
        current = queue.popleft()
        for g in generators:
            nxt = g.compose(current)
            if nxt not in seen:
                if len(seen) >= cap:
                    raise ResourceError(f"group closure exceeds cap of {cap} elements")
                seen.add(nxt)
                elements.append(nxt)
                queue.append(nxt)
    return PermutationGroup(generators, tuple(elements))


# -- standard generators ----------------------------------------------------

def digit_permutation(space: GenomeSpace, positions) -> Permutation:
    """Move the digit at position ``i`` to position ``positions[i]``."""
    positions = [int(p) for p in positions]
    if sorted(positions) != list(range(space.l)):
        raise ValidationError(f"{positions} is not a permutation of the {space.l} digit positions")
    digits = space.all_digits()
    moved = np.zeros_like(digits)
    moved[:, positions] = digits
    return Permutation(tuple(int(x) for x in space.from_digits(moved)))


def rotation(space: GenomeSpace, shift: int = 1) -> Permutation:
    """Cyclic shift of digit positions: position i goes to i + shift (mod l)."""
    return digit_permutation(space, [(i + shift) % space.l for i in range(space.l)])


def translation(space: GenomeSpace, s: int) -> Permutation:
    """``v -> v (+) s``."""
    space.check(s)
    return Permutation(tuple(int(x) for x in space.add(np.arange(space.n), s)))


def translation_group(space: GenomeSpace, subgroup=None) -> PermutationGroup:
    """Group of translations by the elements of ``subgroup`` (default: all of H)."""
    if subgroup is None:
        gens = [translation(space, space.d ** i) for i in range(space.l)]
    else:
        gens = [translation(space, int(w)) for w in subgroup if int(w) != 0]
    return close_group(gens, n=space.n)


def parse_generator(space: GenomeSpace, spec) -> Permutation:
    """Build a generator from a config token.

    Accepted forms: ``"rotation"``, ``"translation:<s>"``,
    ``"digit_perm:<p0>,<p1>,..."`` and an explicit image list.
    """
    if isinstance(spec, (list, tuple)):
        if len(spec) != space.n:
            raise ValidationError(f"explicit generator must have {space.n} images", field="group.generators")
        return Permutation(tuple(spec))
    if not isinstance(spec, str):
        raise ValidationError(f"unrecognized generator {spec!r}", field="group.generators")
    kind, _, arg = spec.partition(":")
    try:
        if kind == "rotation":
            return rotation(space, int(arg) if arg else 1)
        if kind == "translation":
            return translation(space, int(arg))
        if kind == "digit_perm":
            return digit_permutation(space, [int(p) for p in arg.replace(" ", "").split(",") if p])
    except (ValueError, UsageError) as exc:
        raise ValidationError(f"bad generator {spec!r}: {exc}", field="group.generators") from exc
    raise ValidationError(f"unrecognized generator {spec!r}", field="group.generators")


# -- orbits -----------------------------------------------------------------

@dataclass(frozen=True)
class OrbitPartition:
    """A partition of ``[0, n)``; classes are ordered by smallest member.

    Also serves as the representation of an equivalence relation
    (schema family): genomes are equivalent iff they share a class.
    """

    classes: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_labels(cls, labels) -> "OrbitPartition":
        labels = [int(x) for x in labels]
        groups: dict[int, list[int]] = {}
        for x, lab in enumerate(labels):
            groups.setdefault(lab, []).append(x)
        classes = sorted((tuple(sorted(members)) for members in groups.values()), key=lambda c: c[0])
        class_of = [0] * len(labels)
        for k, members in enumerate(classes):
            for x in members:
                class_of[x] = k
        return cls(tuple(classes), tuple(class_of))

    @classmethod
    def from_classes(cls, classes, n: int) -> "OrbitPartition":
        labels = [-1] * n
        for k, members in enumerate(classes):
            for x in members:
                if labels[x] != -1:
                    raise ValidationError(f"genome {x} appears in two classes")
                labels[x] = k
        if -1 in labels:
            raise ValidationError(f"classes do not cover genome {labels.index(-1)}")
        return cls.from_labels(labels)

    @property
    def n(self) -> int:
        return len(self.class_of)

    def __len__(self):
        return len(self.classes)

    def equivalent(self, x, y) -> bool:
        return self.class_of[x] == self.class_of[y]

    def to_json(self) -> list[list[int]]:
        return [list(c) for c in self.classes]


EquivalenceRelation = OrbitPartition


def orbit_of(group: PermutationGroup, zeta: int) -> frozenset[int]:
    return frozenset(p.images[zeta] for p in group.elements)


def stabilizer_of(group: PermutationGroup, zeta: int) -> PermutationGroup:
    elements = tuple(p for p in group.elements if p.images[zeta] == zeta)
    return PermutationGroup(elements, elements)


def orbit_partition(group: PermutationGroup) -> OrbitPartition:
    """Orbits of the action as an equivalence relation on H."""
    images = group.image_array()
    # an orbit's canonical label is its smallest member
    return OrbitPartition.from_labels(images.min(axis=0))


def invariant_points(group: PermutationGroup) -> frozenset[int]:
    images = group.image_array()
    fixed = np.all(images == np.arange(group.n), axis=0)
    return frozenset(int(x) for x in np.flatnonzero(fixed))


def permutation_matrix(perm: Permutation, matrix_cap: int = 4096) -> np.ndarray:
    """``sigma[u, v] = [u == perm(v)]``, so ``sigma @ e_v = e_{perm(v)}``."""
    if perm.n > matrix_cap:
        raise ResourceError(f"permutation matrix {perm.n}x{perm.n} exceeds matrix cap {matrix_cap}")
    sigma = np.zeros((perm.n, perm.n))
    sigma[list(perm.images), np.arange(perm.n)] = 1.0
    return sigma


def kernel_is_trivial(family) -> bool:
    """True iff only the identity label acts as the identity permutation.

    ``family`` is a sequence of ``(label, permutation)`` pairs; the first
    pair whose permutation is the identity is taken as the identity label.
    """
    acting_trivially = [label for label, perm in family if perm.is_identity()]
    return len(acting_trivially) <= 1


# -- schema families ---------------------------------------------------------

def schema_family_from_mask(space: GenomeSpace, s: int) -> OrbitPartition:
    """Classes of genomes that agree on every position where ``s`` is nonzero."""
    if not space.is_binary(s):
        raise UsageError(f"mask {s} is not binary")
    return OrbitPartition.from_labels(space.mul(np.arange(space.n), s))


def digit_relation(space: GenomeSpace, i: int) -> OrbitPartition:
    """Equivalence by the value of digit ``i``."""
    return schema_family_from_mask(space, space.d ** i)


def universal_relation(space: GenomeSpace) -> OrbitPartition:
    return OrbitPartition.from_labels([0] * space.n)


def singleton_relation(space: GenomeSpace) -> OrbitPartition:
    return OrbitPartition.from_labels(range(space.n))


def common_refinement(relations) -> OrbitPartition:
    """Intersection of equivalence relations (finest common coarsening of none)."""
    relations = list(relations)
    tuples = list(zip(*(r.class_of for r in relations)))
    index = {}
    labels = [index.setdefault(t, len(index)) for t in tuples]
    return OrbitPartition.from_labels(labels)


def position_subgroups(space: GenomeSpace) -> list[frozenset[int]]:
    """Q_i: strings that are zero except possibly at position i."""
    return [frozenset(k * space.d ** i for k in range(space.d)) for i in range(space.l)]


def _span(space: GenomeSpace, subgroups) -> set[int]:
    reached = {0}
    for q in subgroups:
        reached = {int(space.add(a, b)) for a in reached for b in q}
    return reached


def validate_direct_sum(space: GenomeSpace, subgroups) -> None:
    """Raise :class:`ValidationError` unless H is the internal direct sum of ``subgroups``.

    Checks, in order: each member is a subgroup, pairwise intersections are
    {0}, and the (+)-span is all of H.  Normality is automatic in an abelian
    group.
    """
    subgroups = [frozenset(int(x) for x in q) for q in subgroups]
    for k, q in enumerate(subgroups):
        if 0 not in q or any(int(space.add(a, b)) not in q for a in q for b in q):
            raise ValidationError(f"Q_{k} is not a subgroup of H", field="subgroups")
    for i, j in combinations(range(len(subgroups)), 2):
        if subgroups[i] & subgroups[j] != {0}:
            raise ValidationError(f"condition 2 violated: Q_{i} and Q_{j} intersect nontrivially", field="subgroups")
    if len(_span(space, subgroups)) != space.n:
        raise ValidationError("condition 1 violated: the subgroups do not span H", field="subgroups")


def direct_sum_decompose(space: GenomeSpace, omega: int, subgroups=None) -> tuple[int, ...]:
    """Components ``(w_0, ..., w_{l-1})`` with ``w_i`` in ``Q_i`` summing to ``omega``."""
    if subgroups is None:
        subgroups = position_subgroups(space)
    else:
        validate_direct_sum(space, subgroups)
        if [sorted(q) for q in subgroups] != [sorted(q) for q in position_subgroups(space)]:
            return _decompose_by_search(space, omega, subgroups)
    digits = space.digits(omega)
    return tuple(int(digits[i]) * space.d ** i for i in range(space.l))


def _decompose_by_search(space, omega, subgroups):
    # general (validated) family: walk the product, which is small at desk scale
    partial = {0: ()}
    for q in subgroups:
        partial = {int(space.add(acc, w)): comps + (w,) for acc, comps in partial.items() for w in sorted(q)}
    return tuple(int(w) for w in partial[int(omega)])


# -- representation and coverage --------------------------------------------

def rho_partial(relation: OrbitPartition, x: int) -> int:
    return relation.class_of[x]


def rho_family(relations, x: int) -> tuple[int, ...]:
    relations = list(relations)
    if not relations:
        raise UsageError("relation family is empty")
    return tuple(r.class_of[x] for r in relations)


def covers(relations) -> tuple[bool, tuple[int, int] | None]:
    """Whether every pair of distinct genomes is separated by some relation.

    Returns ``(True, None)`` or ``(False, (x, y))`` with the lexicographically
    first unseparated pair.
    """
    relations = list(relations)
    if not relations:
        raise UsageError("relation family is empty")
    first_seen: dict[tuple[int, ...], int] = {}
    witness = None
    for x in range(relations[0].n):
        key = rho_family(relations, x)
        if key in first_seen:
            pair = (first_seen[key], x)
            if witness is None or pair < witness:
                witness = pair
        else:
            first_seen[key] = x
    return witness is None, witness


@dataclass(frozen=True)
class RepresentationImage:
    relations: tuple[OrbitPartition, ...]
    tuples: tuple[tuple[int, ...], ...]
    image: frozenset[tuple[int, ...]]

    @property
    def size(self) -> int:
        return len(self.image)


def chromosome_image(relations) -> RepresentationImage:
    relations = tuple(relations)
    if not relations:
        raise UsageError("relation family is empty")
    tuples = tuple(rho_family(relations, x) for x in range(relations[0].n))
    return RepresentationImage(relations, tuples, frozenset(tuples))

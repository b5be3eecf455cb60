import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eagroup import groups
from eagroup.errors import ResourceError, UsageError, ValidationError
from eagroup.groups import OrbitPartition, Permutation, close_group
from eagroup.ring import GenomeSpace

S23 = GenomeSpace(2, 3)


@pytest.fixture
def rotations():
    return close_group([groups.rotation(S23)], n=S23.n)


def test_closure_sizes(rotations):
    assert rotations.order == 3
    assert close_group([], n=8).order == 1
    assert groups.translation_group(S23).order == 8
    assert groups.translation_group(GenomeSpace(3, 2)).order == 9


def test_closure_cap():
    sp = GenomeSpace(2, 4)
    gens = [groups.digit_permutation(sp, [1, 0, 2, 3]), groups.rotation(sp)]
    assert close_group(gens, n=sp.n).order == 24
    with pytest.raises(ResourceError):
        close_group(gens, n=sp.n, cap=10)


def test_orbits(rotations):
    assert groups.orbit_of(rotations, 1) == {1, 2, 4}
    assert groups.orbit_of(rotations, 0) == {0}
    trans = groups.translation_group(S23)
    assert all(groups.orbit_of(trans, z) == set(range(8)) for z in range(8))


def test_stabilizers(rotations):
    assert len(groups.stabilizer_of(rotations, 0)) == 3
    stab = groups.stabilizer_of(rotations, 1)
    assert len(stab) == 1 and stab.elements[0].is_identity()


def test_orbit_partition(rotations):
    part = groups.orbit_partition(rotations)
    assert part.to_json() == [[0], [1, 2, 4], [3, 5, 6], [7]]
    assert len(groups.orbit_partition(close_group([], n=8))) == 8
    assert len(groups.orbit_partition(groups.translation_group(S23))) == 1


def test_invariant_points(rotations):
    assert groups.invariant_points(rotations) == {0, 7}
    assert groups.invariant_points(close_group([], n=8)) == set(range(8))
    assert groups.invariant_points(groups.translation_group(S23)) == set()


def test_permutation_matrix():
    assert np.array_equal(groups.permutation_matrix(Permutation.identity(5)), np.eye(5))
    perm = groups.rotation(S23)
    sigma = groups.permutation_matrix(perm)
    for v in range(8):
        assert np.argmax(sigma @ np.eye(8)[v]) == perm(v)


def test_permutation_matrix_is_homomorphism(rotations):
    for a in rotations.elements:
        for b in rotations.elements:
            lhs = groups.permutation_matrix(a.compose(b))
            rhs = groups.permutation_matrix(a) @ groups.permutation_matrix(b)
            assert np.array_equal(lhs, rhs)


def test_kernel_is_trivial(rotations):
    assert groups.kernel_is_trivial([(k, p) for k, p in enumerate(rotations.elements)])
    ident = Permutation.identity(8)
    assert not groups.kernel_is_trivial([("e", ident), ("g", ident)])
    assert groups.kernel_is_trivial([("e", ident)])


def test_schema_family_from_mask():
    assert groups.schema_family_from_mask(S23, 4).to_json() == [[0, 1, 2, 3], [4, 5, 6, 7]]
    assert len(groups.schema_family_from_mask(S23, 7)) == 8
    assert len(groups.schema_family_from_mask(S23, 0)) == 1
    with pytest.raises(UsageError):
        groups.schema_family_from_mask(GenomeSpace(3, 2), 2)


def test_direct_sum():
    assert groups.direct_sum_decompose(S23, 6) == (0, 2, 4)
    assert groups.direct_sum_decompose(S23, 0) == (0, 0, 0)
    sp = GenomeSpace(3, 2)
    for w in range(sp.n):
        parts = groups.direct_sum_decompose(sp, w)
        total = 0
        for p in parts:
            total = sp.add(total, p)
        assert total == w


def test_direct_sum_nonstandard_family():
    # {0,3} and {0,1} also split Z_2^2
    sp = GenomeSpace(2, 2)
    parts = groups.direct_sum_decompose(sp, 2, [{0, 3}, {0, 1}])
    assert parts == (3, 1)


def test_direct_sum_validation_names_condition():
    sp = GenomeSpace(2, 2)
    with pytest.raises(ValidationError, match="condition 2"):
        groups.validate_direct_sum(sp, [{0, 1}, {0, 1}])
    with pytest.raises(ValidationError, match="condition 1"):
        groups.validate_direct_sum(sp, [{0, 1}])
    with pytest.raises(ValidationError, match="not a subgroup"):
        groups.validate_direct_sum(sp, [{0, 1, 2}])


def test_rho():
    eps0 = groups.digit_relation(S23, 0)
    k = groups.rho_partial(eps0, 5)
    assert eps0.classes[k] == (1, 3, 5, 7)
    single = groups.singleton_relation(S23)
    assert single.classes[groups.rho_partial(single, 5)] == (5,)
    univ = groups.universal_relation(S23)
    assert univ.classes[groups.rho_partial(univ, 5)] == tuple(range(8))
    digits = [groups.digit_relation(S23, i) for i in range(3)]
    assert groups.rho_family(digits, 5) == (1, 0, 1)
    assert len({groups.rho_family([univ], x) for x in range(8)}) == 1


def test_coverage():
    digits = [groups.digit_relation(S23, i) for i in range(3)]
    assert groups.covers(digits) == (True, None)
    assert groups.covers(digits[1:]) == (False, (0, 1))
    assert groups.covers([groups.universal_relation(S23), groups.singleton_relation(S23)])[0]
    with pytest.raises(UsageError):
        groups.covers([])


def test_chromosome_image():
    digits = [groups.digit_relation(S23, i) for i in range(3)]
    assert groups.chromosome_image(digits).size == 8
    assert groups.chromosome_image([groups.universal_relation(S23)]).size == 1
    assert groups.chromosome_image(digits[:1]).size == 2


def test_parse_generator():
    sp = S23
    assert groups.parse_generator(sp, "rotation") == groups.rotation(sp)
    assert groups.parse_generator(sp, "translation:3")(4) == 7
    assert groups.parse_generator(sp, "digit_perm:1,0,2")(1) == 2
    assert groups.parse_generator(sp, list(range(8))).is_identity()
    for bad in ["spin", "digit_perm:0,0,1", [0, 1], "translation:x"]:
        with pytest.raises(ValidationError):
            groups.parse_generator(sp, bad)


def test_partition_from_classes_checks_cover():
    with pytest.raises(ValidationError):
        OrbitPartition.from_classes([[0, 1]], 3)
    with pytest.raises(ValidationError):
        OrbitPartition.from_classes([[0, 1], [1, 2]], 3)


group_specs = st.sampled_from([
    ((2, 3), ["rotation"]), ((2, 4), ["rotation"]), ((2, 4), ["rotation:2"]),
    ((3, 2), ["digit_perm:1,0"]), ((2, 3), ["translation:1", "rotation"]),
    ((3, 2), ["translation:4"]), ((2, 4), ["digit_perm:1,0,2,3", "rotation"]),
])


@settings(max_examples=30, deadline=None)
@given(group_specs)
def test_orbit_stabilizer_and_partition(spec):
    (d, l), gens = spec
    sp = GenomeSpace(d, l)
    g = close_group([groups.parse_generator(sp, x) for x in gens], n=sp.n)
    part = groups.orbit_partition(g)
    seen = sorted(x for c in part.classes for x in c)
    assert seen == list(range(sp.n))
    for z in range(sp.n):
        assert len(groups.orbit_of(g, z)) * len(groups.stabilizer_of(g, z)) == g.order
        assert set(part.classes[part.class_of[z]]) == groups.orbit_of(g, z)


@settings(max_examples=30, deadline=None)
@given(group_specs)
def test_group_axioms(spec):
    (d, l), gens = spec
    sp = GenomeSpace(d, l)
    g = close_group([groups.parse_generator(sp, x) for x in gens], n=sp.n)
    elems = set(g.elements)
    assert Permutation.identity(sp.n) in elems
    for a in g.elements:
        assert a.inverse() in elems
        assert a.compose(a.inverse()).is_identity()
        for b in list(g.elements)[:6]:
            assert a.compose(b) in elems

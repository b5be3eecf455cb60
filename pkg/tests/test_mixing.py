from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eagroup import groups, mixing
from eagroup.errors import ConfigurationError, NumericError, ResourceError, ValidationError
from eagroup.mixing import CrossoverSpec, FitnessPipeline, MixingHeuristic, MutationSpec, Scaling
from eagroup.ring import GenomeSpace

S23 = GenomeSpace(2, 3)


def kernel(space, kind="uniform", q=0.0, order="crossover_first", exact=False):
    cx = CrossoverSpec.from_kind(space, kind, exact)
    mu = MutationSpec(Fraction(q).limit_denominator(10 ** 6) if exact else q)
    return mixing.symmetrize(mixing.child_kernel_tensor(space, cx, mu, order, exact))


# -- fitness -------------------------------------------------------------------

def test_onemax_fitness():
    phi = mixing.fitness_vector(FitnessPipeline(mixing.onemax()), S23)
    assert phi.tolist() == [1, 2, 2, 3, 2, 3, 3, 4]


def test_constant_fitness_and_power_scaling():
    phi = mixing.fitness_vector(FitnessPipeline(lambda x: 2.5), S23)
    assert np.all(phi == 2.5)
    assert Scaling("power", 2.0)(np.array([1.0, 3.0])).tolist() == [1.0, 9.0]
    assert Scaling("linear_offset", 1.0)(np.array([1.0])).tolist() == [2.0]
    assert np.allclose(Scaling("exponential", 1.0)(np.array([0.0, 1.0])), [1.0, np.e])


def test_fitness_validation_names_genome():
    with pytest.raises(ValidationError, match="genome 0"):
        mixing.fitness_vector(FitnessPipeline(mixing.onemax(offset=0.0)), S23)
    with pytest.raises(ValidationError):
        mixing.check_fitness([1.0, np.nan], 2)
    with pytest.raises(ValidationError):
        Scaling("power")


def test_expression_objective():
    f = mixing.expression_objective("sum(x) + 1")
    assert f(np.array([1.0, 0.0, 1.0])) == 3.0
    for bad in ["__import__('os')", "x.__class__", "lambda: 1", "open('f')"]:
        with pytest.raises(ValidationError):
            mixing.expression_objective(bad)


def test_selection():
    assert np.allclose(mixing.select([0.5, 0.5], [1.0, 3.0]), [0.25, 0.75])
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(mixing.select(p, np.ones(4) * 7), p)
    assert np.array_equal(mixing.select(mixing.vertex(4, 2), [1, 2, 3, 4]), mixing.vertex(4, 2))


def test_to_simplex():
    assert np.allclose(mixing.to_simplex([0.5, 0.5 + 1e-13, -1e-13]), [0.5, 0.5, 0.0], atol=1e-12)
    with pytest.raises(NumericError):
        mixing.to_simplex([1.1, -0.1])
    with pytest.raises(NumericError):
        mixing.to_simplex([0.5, 0.4])


# -- kernels -------------------------------------------------------------------

def test_child_kernel_examples():
    sp = GenomeSpace(2, 2)
    ux, none = CrossoverSpec.uniform(sp), CrossoverSpec.none(sp)
    assert [mixing.child_kernel(sp, ux, MutationSpec(0.0), 0, 3, w) for w in range(4)] == [0.25] * 4
    for u in range(4):
        assert [mixing.child_kernel(sp, ux, MutationSpec(0.0), u, u, w) for w in range(4)] == \
            [float(w == u) for w in range(4)]
    s1 = GenomeSpace(2, 1)
    q = 0.1
    row = [mixing.child_kernel(s1, CrossoverSpec.none(s1), MutationSpec(q), 0, 1, w) for w in range(2)]
    assert np.allclose(row, [1 - q, q])
    assert mixing.child_kernel(sp, none, MutationSpec(0.0), 1, 2, 1) == 1.0


def test_symmetrized_kernel():
    b = mixing.child_kernel_tensor(GenomeSpace(2, 2), CrossoverSpec.one_point(GenomeSpace(2, 2)), MutationSpec(0.0))
    a = mixing.symmetrize(b)
    assert np.allclose(a, a.transpose(1, 0, 2))
    assert np.allclose(a.sum(axis=2), 1.0)
    assert np.allclose(a[:, :, :][0, 3], 0.5 * (b[0, 3] + b[3, 0]))
    assert np.allclose([mixing.symmetrized_kernel(b, 2, 2, w) for w in range(4)], b[2, 2])


@pytest.mark.parametrize("order", mixing.ORDERS)
@pytest.mark.parametrize("kind", mixing.CROSSOVER_KINDS)
def test_scalar_kernel_matches_tensor(kind, order):
    sp = GenomeSpace(3, 2) if kind != "one_point" else GenomeSpace(2, 3)
    cx, mu = CrossoverSpec.from_kind(sp, kind), MutationSpec(0.07)
    b = mixing.child_kernel_tensor(sp, cx, mu, order)
    rng = np.random.default_rng(3)
    for u, v, w in rng.integers(0, sp.n, size=(15, 3)):
        assert mixing.child_kernel(sp, cx, mu, u, v, w, order) == pytest.approx(b[u, v, w], abs=1e-15)
    assert np.allclose(b.sum(axis=2), 1.0)


@pytest.mark.parametrize("order", mixing.ORDERS)
def test_mixing_matrix_from_specs_matches_tensor(order):
    sp = GenomeSpace(2, 3)
    cx, mu = CrossoverSpec.uniform(sp), MutationSpec(0.02)
    direct = mixing.mixing_matrix(mixing.symmetrize(mixing.child_kernel_tensor(sp, cx, mu, order)))
    fast = mixing.mixing_matrix_from_specs(sp, cx, mu, order)
    assert np.max(np.abs(direct.entries - fast.entries)) < 1e-15


def test_tensor_caps():
    with pytest.raises(ResourceError):
        mixing.crossover_tensor(GenomeSpace(2, 7), CrossoverSpec.none(GenomeSpace(2, 7)), exact=True)


def test_one_point_masks():
    sp = GenomeSpace(2, 4)
    assert CrossoverSpec.one_point(sp).masks == (1, 3, 7)
    assert CrossoverSpec.one_point(GenomeSpace(2, 1)).kind == "none"
    with pytest.raises(ValidationError):
        CrossoverSpec((1, 2), (0.5, 0.4))
    with pytest.raises(ValidationError):
        CrossoverSpec((2,), (1.0,)).validate(GenomeSpace(3, 1))


# -- commutation ---------------------------------------------------------------

def test_commutation_uniform_mutation():
    for l in (1, 2, 3):
        sp = GenomeSpace(2, l)
        rep = mixing.commutes_with_action(groups.translation_group(sp), kernel(sp, q=0.05))
        assert rep.ok and rep.max_deviation < 1e-12


def test_commutation_exact():
    sp = GenomeSpace(2, 3)
    a = kernel(sp, q=0.05, exact=True)
    rep = mixing.commutes_with_action(groups.translation_group(sp), a)
    assert rep.ok and rep.max_deviation == 0


def test_commutation_identity_group_and_counterexample():
    sp = GenomeSpace(2, 2)
    a = kernel(sp, q=0.1)
    assert mixing.commutes_with_action(close_identity(sp), a + np.random.default_rng(0).random(a.shape))
    biased = a.copy()
    biased[1, 1, 0] += 0.2
    biased[1, 1, 1] -= 0.2
    rep = mixing.commutes_with_action(groups.translation_group(sp), biased)
    assert not rep.ok and rep.witness is not None
    k, u, v, w = rep.witness
    pi = groups.translation_group(sp).elements[k].images
    assert biased[pi[u], pi[v], pi[w]] != biased[u, v, w]
    with pytest.raises(ConfigurationError):
        MixingHeuristic(sp, np.ones(4), kernel=biased)


def close_identity(space):
    return groups.close_group([], n=space.n)


# -- mixing --------------------------------------------------------------------

def test_mix_examples():
    s1 = GenomeSpace(2, 1)
    q = 0.1
    model = MixingHeuristic(s1, np.ones(2), mutation=MutationSpec(q))
    assert np.allclose(model.mix([1.0, 0.0]), [1 - q, q])
    sp = GenomeSpace(2, 3)
    ux = MixingHeuristic(sp, np.ones(8), CrossoverSpec.uniform(sp))
    for u in range(8):
        assert np.allclose(ux.mix(mixing.vertex(8, u)), mixing.vertex(8, u), atol=1e-15)
    full = MixingHeuristic(sp, np.ones(8), CrossoverSpec.uniform(sp), MutationSpec(0.03))
    assert np.allclose(full.mix(mixing.uniform_population(8)), 1 / 8, atol=1e-15)


def test_generation_identity_config_on_vertices():
    sp = GenomeSpace(2, 3)
    model = MixingHeuristic(sp, mixing.fitness_vector(FitnessPipeline(mixing.onemax()), sp))
    for i in range(8):
        assert np.allclose(model(mixing.vertex(8, i)), mixing.vertex(8, i))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)]),
       st.sampled_from(mixing.CROSSOVER_KINDS), st.sampled_from(mixing.ORDERS),
       st.floats(0, 0.5), st.integers(0, 2 ** 32 - 1))
def test_mix_matches_triple_sum(dl, kind, order, q, seed):
    sp = GenomeSpace(*dl)
    cx, mu = CrossoverSpec.from_kind(sp, kind), MutationSpec(q)
    a = mixing.symmetrize(mixing.child_kernel_tensor(sp, cx, mu, order))
    mm = mixing.mixing_matrix_from_specs(sp, cx, mu, order)
    p = np.random.default_rng(seed).dirichlet(np.ones(sp.n))
    out = mixing.mix(mm, p, sp)
    assert np.max(np.abs(out - mixing.mix_oracle(a, p))) < 1e-12
    assert abs(out.sum() - 1) < 1e-12 and out.min() >= -1e-15


# -- finite populations --------------------------------------------------------

def test_sample_generation_vertex_and_determinism():
    sp = GenomeSpace(2, 3)
    model = MixingHeuristic(sp, np.arange(1.0, 9.0))
    pop, emp = model.sample_generation(mixing.vertex(8, 5), 50, 1)
    assert np.all(pop == 5) and emp[5] == 1.0
    noisy = MixingHeuristic(sp, np.arange(1.0, 9.0), CrossoverSpec.uniform(sp), MutationSpec(0.1))
    p = mixing.uniform_population(8)
    a, _ = noisy.sample_generation(p, 200, 42)
    b, _ = noisy.sample_generation(p, 200, 42)
    assert np.array_equal(a, b)


def test_population_operators_stay_in_space():
    sp = GenomeSpace(3, 2)
    rng = np.random.default_rng(0)
    pop = rng.integers(0, sp.n, size=100)
    assert np.all(mixing.mutate_population(sp, pop, 0.0, rng) == pop)
    mutated = mixing.mutate_population(sp, pop, 1.0, rng)
    assert np.all(sp.nonzero_count(sp.sub(mutated, pop)) == 2)
    kids = mixing.crossover_population(sp, pop, pop[::-1], CrossoverSpec.uniform(sp), rng)
    assert kids.min() >= 0 and kids.max() < sp.n
    chosen = mixing.select_population(pop[:5], np.ones(sp.n), 20, rng)
    assert set(chosen) <= set(pop[:5])


def test_operator_report():
    sp = GenomeSpace(2, 2)
    rep = mixing.classify_operator_properties(sp, CrossoverSpec.uniform(sp), MutationSpec(0.1), rng=0)
    lines = rep.lines()
    assert lines[0] == "mutation: per-individual ✓"
    assert lines[1].startswith("crossover: multi-parent ✓ witness")
    assert lines[2] == "selection: subset ✓"
    none = mixing.classify_operator_properties(sp, CrossoverSpec.none(sp), MutationSpec(0.1), rng=0)
    assert not none.crossover_multi_parent and none.crossover_witness is None

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eagroup import dynamics, mixing, spectral
from eagroup.errors import ResourceError, UsageError
from eagroup.mixing import MixingHeuristic, MutationSpec
from eagroup.ring import GenomeSpace

SHEAR = [np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [1.0, 1.0]])]
GOLDEN = (1 + np.sqrt(5)) / 2


def test_dft_examples():
    s1 = GenomeSpace(2, 1)
    assert np.allclose(spectral.group_dft([0.5, 0.5], s1), [1 / np.sqrt(2), 0])
    a, b = 0.3, -1.7
    assert np.allclose(spectral.group_dft([a, b], s1), [(a + b) / np.sqrt(2), (a - b) / np.sqrt(2)])
    sp = GenomeSpace(3, 2)
    assert np.allclose(spectral.group_dft(mixing.vertex(9, 0), sp), 1 / 3)
    with pytest.raises(UsageError):
        spectral.group_dft(np.ones(4), sp)


def test_walsh_is_involutive():
    x = np.random.default_rng(0).normal(size=16)
    assert np.allclose(spectral.walsh_hadamard(spectral.walsh_hadamard(x)), x, atol=1e-14)
    with pytest.raises(UsageError):
        spectral.walsh_hadamard(np.ones(6))


@pytest.mark.parametrize("dl", [(2, 1), (2, 3), (3, 1), (3, 2), (5, 2)])
def test_character_orthogonality(dl):
    sp = GenomeSpace(*dl)
    chi = spectral.CharacterTable(sp)
    X = chi.matrix()
    assert np.allclose(X @ X.conj().T, sp.n * np.eye(sp.n), atol=1e-10)
    assert np.allclose(X[0], 1)
    assert np.isclose(chi(1, 1 % sp.n), X[1, 1 % sp.n])


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(2, 1), (2, 2), (2, 4), (3, 1), (3, 2), (3, 3), (4, 2)]),
       st.integers(0, 2 ** 32 - 1), st.booleans())
def test_dft_matches_character_matrix_and_inverts(dl, seed, complex_input):
    sp = GenomeSpace(*dl)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=sp.n) + (1j * rng.normal(size=sp.n) if complex_input else 0)
    xhat = spectral.group_dft(x, sp)
    assert np.allclose(xhat, spectral.CharacterTable(sp).matrix() @ x / np.sqrt(sp.n), atol=1e-12)
    assert np.max(np.abs(spectral.inverse_group_dft(xhat, sp) - x)) < 1e-12
    assert abs(np.linalg.norm(xhat) - np.linalg.norm(x)) < 1e-12


def test_spectral_radius_examples():
    rng = np.random.default_rng(1)
    P = rng.random((6, 6))
    P /= P.sum(axis=1, keepdims=True)
    assert spectral.spectral_radius(P) == pytest.approx(1.0, abs=1e-12)
    assert spectral.spectral_radius(np.triu(rng.random((5, 5)), 1)) == pytest.approx(0.0, abs=1e-12)
    q = 0.1
    rep = spectral.spectrum(MutationSpec(q).kernel(GenomeSpace(2, 1)))
    assert rep.radius == pytest.approx(1.0) and rep.second_modulus == pytest.approx(1 - 2 * q)


def test_spectral_radius_power_iteration_path():
    rng = np.random.default_rng(2)
    P = rng.random((600, 600))
    P /= P.sum(axis=1, keepdims=True)
    assert spectral.spectral_radius(P) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("dl", [(2, 2), (3, 2), (2, 4)])
def test_stochastic_kernels_have_unit_radius(dl):
    sp = GenomeSpace(*dl)
    assert spectral.spectral_radius(MutationSpec(0.2).kernel(sp)) == pytest.approx(1.0, abs=1e-10)


def test_jsr_examples():
    lo2 = spectral.jsr_bounds(SHEAR, 2)
    assert lo2.lower >= 1.618 and lo2.lower == pytest.approx(GOLDEN, abs=1e-12)
    b8 = spectral.jsr_bounds(SHEAR, 8)
    assert b8.lower <= b8.upper and b8.upper - b8.lower < 0.2
    ident = spectral.jsr_bounds([np.eye(3)], 4)
    assert (ident.lower, ident.upper) == pytest.approx((1.0, 1.0))
    U = MutationSpec(0.1).kernel(GenomeSpace(2, 2))
    single = spectral.jsr_bounds([U], 8)
    assert single.lower <= 1.0 + 1e-12 <= single.upper + 1e-12
    assert single.upper - single.lower < 0.05


def test_jsr_limits():
    with pytest.raises(UsageError):
        spectral.jsr_bounds(SHEAR, 13)
    with pytest.raises(UsageError):
        spectral.jsr_bounds([], 2)
    with pytest.raises(ResourceError):
        spectral.jsr_bounds([np.eye(2)] * 4, 12)


def test_jsr_sequence_monotonicity_flags():
    seq = spectral.jsr_sequence(SHEAR, 6)
    assert seq["lower_nondecreasing"] and seq["upper_nonincreasing"]
    assert all(b.lower <= b.upper + 1e-12 for b in seq["bounds"])


def test_ea_map_spectrum_mutation_only():
    q = 0.1
    sp = GenomeSpace(2, 1)
    model = MixingHeuristic(sp, np.ones(2), mutation=MutationSpec(q))
    rep = spectral.ea_map_spectrum(model, mixing.uniform_population(2))
    assert len(rep.eigenvalues) == 1
    assert rep.eigenvalues[0] == pytest.approx(1 - 2 * q)
    assert rep.second_modulus == pytest.approx(1 - 2 * q)


def test_ea_map_spectrum_selection_vertex_and_identity():
    sp = GenomeSpace(2, 2)
    phi = np.array([1.0, 2.0, 3.0, 5.0])
    model = MixingHeuristic(sp, phi)
    rep = spectral.ea_map_spectrum(model, mixing.vertex(4, 3))
    assert np.allclose(sorted(np.abs(rep.eigenvalues)), sorted(phi[:3] / 5), atol=1e-10)
    ident = spectral.ea_map_spectrum(MixingHeuristic(sp, np.ones(4)), [0.1, 0.2, 0.3, 0.4])
    assert np.allclose(ident.eigenvalues, 1.0)
    with pytest.raises(UsageError):
        spectral.ea_map_spectrum(model, mixing.uniform_population(4))


def test_ea_map_spectrum_matches_kernel_on_larger_space():
    sp = GenomeSpace(2, 3)
    q = 0.05
    model = MixingHeuristic(sp, np.ones(8), mutation=MutationSpec(q))
    rep = spectral.ea_map_spectrum(model, mixing.uniform_population(8))
    kernel = spectral.spectrum(MutationSpec(q).kernel(sp))
    assert rep.second_modulus == pytest.approx(kernel.second_modulus, abs=1e-10)
    fd = np.linalg.eigvals(dynamics.jacobian_at(model, mixing.uniform_population(8), "fd"))
    assert np.allclose(sorted(np.abs(fd)), sorted(np.abs(rep.eigenvalues)), atol=1e-6)

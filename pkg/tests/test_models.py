import numpy as np
import pytest

from satl import (
    RateParams,
    StateSpace,
    build_generator,
    build_model,
    four_level_coherent,
    four_level_incoherent,
    steady_state,
    three_level_incoherent,
)
from satl.errors import ConfigurationError
from satl.hilbert import annihilation, atomic_transition
from satl.liouvillian import vec, unvec

from oracles import lindblad_rhs


def test_rate_params_reject_negative():
    with pytest.raises(ConfigurationError):
        RateParams(g=-0.1)
    with pytest.raises(ConfigurationError):
        RateParams(Gamma=-1.0)


def test_irrelevant_params_must_be_zero():
    with pytest.raises(ConfigurationError):
        three_level_incoherent(RateParams(g=1, kappa=0.1, gamma=1, Gamma=1, gamma_f=2), 3)
    with pytest.raises(ConfigurationError):
        four_level_incoherent(RateParams(g=1, kappa=0.1, gamma=1, Gamma=1, E_pump=0.5), 3)
    with pytest.raises(ConfigurationError):
        four_level_coherent(
            RateParams(g=1, kappa=0.1, gamma=1, gamma_f=1, gamma_4=1, E_pump=1, Gamma=2), 3)


def test_n_max_must_be_positive():
    with pytest.raises(ConfigurationError):
        three_level_incoherent(RateParams(g=1, kappa=0.1, gamma=1, Gamma=1), 0)


def test_unknown_scheme_rejected():
    with pytest.raises(ConfigurationError):
        build_model("five-level", RateParams(gamma=1), 2)


def test_three_level_collapse_list():
    p = RateParams(g=0.5, kappa=0.1, gamma=1.0, Gamma=0.7)
    model = three_level_incoherent(p, 3)
    rates = [rate for _, rate in model.collapses]
    assert rates == [2 * 0.1, 1.0, 0.7]
    assert model.collapse_labels == ("cavity", "spont", "pump")
    assert model.space == StateSpace(2, 3)


def test_four_level_collapse_list():
    p = RateParams(g=0.5, kappa=0.1, gamma=1.0, Gamma=0.7, gamma_f=2.0)
    model = four_level_incoherent(p, 2)
    rates = [rate for _, rate in model.collapses]
    assert rates == [0.2, 0.7, 1.0, 2.0]
    space = model.space
    # pump operator is |3><1| diagonal in n
    pump = model.collapses[1][0].data
    assert pump[space.flat_index(3, 1), space.flat_index(1, 1)] == 1.0


def test_coherent_collapse_list_and_pump_decay():
    p = RateParams(g=0.5, kappa=0.1, gamma=1.0, gamma_f=2.0, gamma_4=3.0, E_pump=0.4)
    model = four_level_coherent(p, 2)
    rates = [rate for _, rate in model.collapses]
    assert rates == [0.2, 1.0, 2.0, 3.0]
    s43 = model.collapses[3][0].data
    space = model.space
    assert s43[space.flat_index(3, 0), space.flat_index(4, 0)] == 1.0


@pytest.mark.parametrize("scheme,params,n_levels", [
    ("three-incoherent", RateParams(g=0.8, kappa=0.2, gamma=1.0, Gamma=0.5), 2),
    ("four-incoherent", RateParams(g=0.8, kappa=0.2, gamma=1.0, Gamma=0.5, gamma_f=2.0), 3),
    ("four-coherent",
     RateParams(g=0.8, kappa=0.2, gamma=1.0, gamma_f=2.0, gamma_4=1.5, E_pump=0.9), 4),
])
def test_hamiltonian_hermitian(scheme, params, n_levels):
    model = build_model(scheme, params, 3)
    h = model.hamiltonian.data
    assert model.space.n_levels == n_levels
    np.testing.assert_allclose(h, h.conj().T, atol=0)


def test_three_level_hamiltonian_matches_definition():
    p = RateParams(g=0.37, kappa=0.1, gamma=1.0, Gamma=0.4)
    model = three_level_incoherent(p, 4)
    space = model.space
    a = annihilation(space).data
    sm = atomic_transition(space, 2, 1).data
    sp = atomic_transition(space, 1, 2).data
    expected = 1j * p.g * (a.conj().T @ sm - a @ sp)
    np.testing.assert_array_equal(model.hamiltonian.data, expected)


def test_generator_matches_brute_force_action():
    p = RateParams(g=0.8, kappa=0.15, gamma=1.0, Gamma=0.6)
    model = three_level_incoherent(p, 3)
    gen = build_generator(model)
    rng = np.random.default_rng(7)
    h = model.hamiltonian.data
    collapses = [(op.data, rate) for op, rate in model.collapses]
    for _ in range(5):
        z = rng.normal(size=(model.dim, model.dim)) + 1j * rng.normal(size=(model.dim, model.dim))
        rho = z + z.conj().T
        expected = lindblad_rhs(h, collapses, rho)
        np.testing.assert_allclose(gen.apply(rho), expected, atol=1e-13 * np.max(np.abs(expected)))


@pytest.mark.parametrize("scheme,params", [
    ("three-incoherent", RateParams(g=0.8, kappa=0.2, gamma=1.0, Gamma=0.5)),
    ("four-incoherent", RateParams(g=0.8, kappa=0.2, gamma=1.0, Gamma=0.5, gamma_f=2.0)),
    ("four-coherent",
     RateParams(g=0.8, kappa=0.2, gamma=1.0, gamma_f=2.0, gamma_4=1.5, E_pump=0.9)),
])
def test_trace_and_hermiticity_preservation(scheme, params):
    model = build_model(scheme, params, 2)
    gen = build_generator(model)
    rng = np.random.default_rng(11)
    for _ in range(20):
        z = rng.normal(size=(model.dim, model.dim)) + 1j * rng.normal(size=(model.dim, model.dim))
        x = (z + z.conj().T) / 2
        x /= np.max(np.abs(x))
        lx = gen.apply(x)
        assert abs(np.trace(lx)) < 1e-12 * model.dim
        np.testing.assert_allclose(lx, lx.conj().T, atol=1e-13)


def test_pump_decay_swap_matches_level_relabeling():
    """Swapping (gamma <-> Gamma, lowering <-> raising) is a basis permutation."""
    p = RateParams(g=0.8, kappa=0.2, gamma=1.3, Gamma=0.4)
    model = three_level_incoherent(p, 3)
    m1 = build_generator(model).matrix.toarray()

    # swapped model, assembled directly: raising and lowering exchange roles
    from satl.hilbert import OperatorMatrix
    from satl.models import ModelSpec
    space = model.space
    a = annihilation(space)
    sm = atomic_transition(space, 2, 1)
    sp = atomic_transition(space, 1, 2)
    h_swapped = 1j * p.g * (a.dag().data @ sp.data - a.data @ sm.data)
    swapped = ModelSpec(
        scheme="three-incoherent", space=space, params=p,
        hamiltonian=OperatorMatrix(h_swapped, "hamiltonian"),
        collapses=((a, 2 * p.kappa), (sp, p.gamma), (sm, p.Gamma)),
        collapse_labels=("cavity", "spont", "pump"),
        lasing_levels=(2, 1),
    )
    m2 = build_generator(swapped).matrix.toarray()

    # permutation that swaps the two atomic levels at every photon number
    perm = np.zeros((space.dim, space.dim))
    for n in range(space.n_max + 1):
        perm[space.flat_index(1, n), space.flat_index(2, n)] = 1.0
        perm[space.flat_index(2, n), space.flat_index(1, n)] = 1.0
    s = np.kron(perm, perm)  # column-stacked conjugation rho -> P rho P
    np.testing.assert_array_equal(s @ m1 @ s, m2)


def test_three_level_no_drive_steady_state_is_vacuum_ground():
    p = RateParams(g=0.0, kappa=0.3, gamma=1.0, Gamma=0.0)
    model = three_level_incoherent(p, 3)
    ss = steady_state(build_generator(model))
    expected = np.zeros((model.dim, model.dim))
    expected[0, 0] = 1.0
    np.testing.assert_allclose(ss.rho, expected, atol=1e-12)


def test_four_level_no_pump_steady_state_is_ground():
    p = RateParams(g=0.7, kappa=0.3, gamma=1.0, Gamma=0.0, gamma_f=1.5)
    model = four_level_incoherent(p, 2)
    ss = steady_state(build_generator(model))
    expected = np.zeros((model.dim, model.dim))
    expected[model.space.flat_index(1, 0), model.space.flat_index(1, 0)] = 1.0
    np.testing.assert_allclose(ss.rho, expected, atol=1e-11)


def test_coherent_no_drive_steady_state_is_ground():
    p = RateParams(g=0.7, kappa=0.3, gamma=1.0, gamma_f=1.5, gamma_4=2.0, E_pump=0.0)
    model = four_level_coherent(p, 2)
    ss = steady_state(build_generator(model))
    expected = np.zeros((model.dim, model.dim))
    expected[0, 0] = 1.0
    np.testing.assert_allclose(ss.rho, expected, atol=1e-11)


def test_four_level_decoupled_atom_rate_equations():
    """g = 0: atomic populations solve the three-level rate equations."""
    p = RateParams(g=0.0, kappa=0.3, gamma=1.1, Gamma=0.8, gamma_f=2.3)
    model = four_level_incoherent(p, 2)
    ss = steady_state(build_generator(model))
    pops = np.real(np.diag(ss.rho)).reshape(3, -1).sum(axis=1)
    raw = np.array([p.gamma * p.gamma_f, p.gamma * p.Gamma, p.Gamma * p.gamma_f])
    np.testing.assert_allclose(pops, raw / raw.sum(), atol=1e-12)


def test_coherent_decoupled_drive_block_two_level_result():
    """g = 0: the 1<->4 block carries the driven-damped two-level ratio."""
    p = RateParams(g=0.0, kappa=0.3, gamma=1.0, gamma_f=2.0, gamma_4=1.7, E_pump=0.6)
    model = four_level_coherent(p, 2)
    ss = steady_state(build_generator(model))
    pops = np.real(np.diag(ss.rho)).reshape(4, -1).sum(axis=1)
    p11, p44 = pops[0], pops[3]
    expected = 4 * p.E_pump**2 / (p.gamma_4**2 + 8 * p.E_pump**2)
    assert p44 / (p11 + p44) == pytest.approx(expected, abs=1e-12)


def test_three_level_population_damping_coefficient():
    """Diagonal entry for rho_{n,1;n,1} must be -(2 kappa n + Gamma)."""
    p = RateParams(g=0.4, kappa=0.17, gamma=1.0, Gamma=0.9)
    model = three_level_incoherent(p, 4)
    gen = build_generator(model)
    space = model.space
    dim = space.dim
    for n in range(space.n_max + 1):
        i = space.flat_index(1, n)
        pos = i + i * dim
        assert gen.matrix[pos, pos] == pytest.approx(-(2 * p.kappa * n + p.Gamma))


def test_four_level_coherence_damping_coefficient():
    """Damping of rho_{n,2;n-1,3} is kappa(2n-1) + gamma/2 + gamma_f/2.

    Both lasing levels decay, so both halves appear in the coherence decay;
    dropping the gamma_f part would violate the Lindblad structure the model
    is assembled from.
    """
    p = RateParams(g=0.4, kappa=0.17, gamma=1.0, Gamma=0.9, gamma_f=2.2)
    model = four_level_incoherent(p, 4)
    gen = build_generator(model)
    space = model.space
    dim = space.dim
    for n in range(1, space.n_max + 1):
        r = space.flat_index(2, n)
        c = space.flat_index(3, n - 1)
        pos = r + c * dim
        expected = -(p.kappa * (2 * n - 1) + p.gamma / 2 + p.gamma_f / 2)
        assert gen.matrix[pos, pos] == pytest.approx(expected)

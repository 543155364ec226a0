import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from becsync import focksector as fs
from becsync.focksector import FockStateN, QuantumParams

from oracles import dense_hamiltonian, embed_matrix, rabi_two_level, random_sector, sector_matrix, two_mode_ops


def _sector_block_from_dense(N, delta, g, chi):
    d = N + 1
    h = dense_hamiltonian(d, delta, g, chi)
    idx = [j * d + (N - j) for j in range(N + 1)]
    return h[np.ix_(idx, idx)]


@pytest.mark.parametrize("N", [0, 1, 2, 5, 12])
@pytest.mark.parametrize("delta,chi", [(0.0, 0.0), (0.4, -0.1), (-0.3, 0.25)])
def test_hamiltonian_matches_operator_construction(N, delta, chi):
    h = fs.build_hamiltonian(QuantumParams(delta, 1.3, chi, N)).to_dense()
    ref = _sector_block_from_dense(N, delta, 1.3, chi)
    np.testing.assert_allclose(h, ref.real, atol=1e-12)


def test_sector_block_couples_nothing_else():
    d = 5
    h = dense_hamiltonian(d, 0.2, 1.0, -0.3)
    aA, aB = two_mode_ops(d)
    n_tot = np.rint(np.diag(aA.T @ aA + aB.T @ aB))
    mask = n_tot[:, None] != n_tot[None, :]
    assert np.abs(h[mask]).max() == 0


def test_params_validation_and_time_unit():
    with pytest.raises(ValueError):
        QuantumParams(g=-1.0)
    with pytest.raises(ValueError):
        QuantumParams(N=1.5)
    p = QuantumParams(0.0, 1.0, -0.01, 15)
    assert abs(p.hopping - 0.86) < 1e-15
    assert abs(fs.time_unit(p) - np.pi / 0.86) < 1e-14


def test_state_constructors():
    assert FockStateN.number_state(3).c[3] == 1
    assert FockStateN.number_state(3, 1).c[1] == 1
    np.testing.assert_allclose(FockStateN.uniform(4).populations, 0.2)
    with pytest.raises(ValueError):
        FockStateN(2, [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        FockStateN(2, [1.0, 0.0])


@pytest.mark.parametrize("delta,g", [(0.0, 1.0), (0.7, 1.0), (-0.4, 2.5)])
def test_single_atom_rabi_closed_form(delta, g):
    t = np.linspace(0, 10, 41)
    out = fs.evolve_fock(FockStateN.number_state(1), QuantumParams(delta, g, 0.3, 1), t)
    c0, c1 = rabi_two_level(delta, g, t)
    got = np.array([s.c for s in out])
    np.testing.assert_allclose(got[:, 0], c0, atol=1e-12)
    np.testing.assert_allclose(got[:, 1], c1, atol=1e-12)


def test_spectral_matches_ode_and_matrix_exponential():
    rng = np.random.default_rng(5)
    p = QuantumParams(0.3, 1.0, -0.07, 15)
    c0 = FockStateN(15, random_sector(rng, 15))
    t, y = fs.evolve_fock_ode(c0, p, 20.0, 21)
    spec = np.array([s.c for s in fs.evolve_fock(c0, p, t)])
    assert np.abs(spec - y).max() < 1e-9
    u = expm(-1j * 20.0 * fs.build_hamiltonian(p).to_dense())
    assert np.abs(spec[-1] - u @ c0.c).max() < 1e-11


def test_backward_propagation_inverts():
    p = QuantumParams(0.2, 1.0, -0.1, 8)
    c0 = FockStateN(8, random_sector(np.random.default_rng(1), 8))
    fwd = fs.evolve_fock(c0, p, [7.5])[0]
    back = fs.evolve_fock(fwd, p, [-7.5])[0]
    assert np.abs(back.c - c0.c).max() < 1e-12


def test_norm_and_energy_conserved_without_renormalization():
    p = QuantumParams(0.0, 1.0, -0.01, 15)
    c0 = FockStateN.number_state(15)
    out = fs.evolve_fock(c0, p, np.linspace(0, 100, 201), renormalize=False)
    norms = np.array([np.vdot(s.c, s.c).real for s in out])
    assert np.abs(norms - 1).max() < 1e-12
    e = np.array([fs.energy_expectation(s, p) for s in out])
    assert np.abs(e - e[0]).max() < 1e-10 * max(1, abs(e[0]))


def test_state_mismatch_rejected():
    with pytest.raises(ValueError):
        fs.evolve_fock(FockStateN.number_state(3), QuantumParams(N=4), [0.0])


def test_trapping_pure_phases():
    N = 7
    p = QuantumParams(0.2, 1.0, -1.0 / (N - 1), N)
    c0 = FockStateN(N, random_sector(np.random.default_rng(2), N))
    out = fs.evolve_fock(c0, p, np.linspace(0, 30, 31))
    for s in out:
        np.testing.assert_allclose(s.populations, c0.populations, atol=1e-12)
    ref = fs.trapped_phase_evolution(c0, p, 30.0)
    assert np.abs(ref.c - out[-1].c).max() < 1e-11
    with pytest.raises(ValueError):
        fs.trapped_phase_evolution(c0, QuantumParams(0.2, 1.0, -0.1, N), 1.0)


def test_spectrum_three_atoms_degenerate_at_trapping():
    chi, levels = fs.spectrum_vs_chi(3, 0.0, 1.0, [-0.5, -0.2, 0.0])
    np.testing.assert_allclose(levels[0], [-5.0, -5.0, -3.0, -3.0], atol=1e-12)
    assert np.all(np.diff(levels[1]) > 1e-3)
    # linear case: levels at -3, -1, 1, 3
    np.testing.assert_allclose(levels[2], [-3.0, -1.0, 1.0, 3.0], atol=1e-12)


def _dense_moments(c):
    N = c.N
    d = N + 2  # one spare level so a a^dag is exact on the sector
    aA, aB = two_mode_ops(d)
    psi = embed_matrix(sector_matrix(c.c), d)
    b = (aA - aB) / np.sqrt(2)
    x = b + b.T
    p = 1j * (b.T - b)

    def ev(op):
        return np.vdot(psi, op @ psi)

    nA = ev(aA.T @ aA).real
    return {
        "n_A": nA,
        "var_n_A": ev(aA.T @ aA @ aA.T @ aA).real - nA ** 2,
        "cross": ev(aA.T @ aB),
        "var_x": (ev(x @ x) - ev(x) ** 2).real,
        "var_p": (ev(p @ p) - ev(p) ** 2).real,
        "mean_x": ev(x).real,
    }


@pytest.mark.parametrize("N", [1, 4, 9])
def test_moments_match_dense_operators(N):
    c = FockStateN(N, random_sector(np.random.default_rng(N), N))
    m = fs.sector_moments(c)
    ref = _dense_moments(c)
    assert abs(m.n_A - ref["n_A"]) < 1e-12
    assert abs(m.var_n_A - ref["var_n_A"]) < 1e-11
    assert abs(m.cross - ref["cross"]) < 1e-12
    assert abs(m.var_x_minus - ref["var_x"]) < 1e-11
    assert abs(m.var_p_minus - ref["var_p"]) < 1e-11
    assert abs(ref["mean_x"]) < 1e-14 and m.mean_x_minus == 0.0


def test_paper_fluctuations_drop_covariance():
    c = FockStateN(6, random_sector(np.random.default_rng(8), 6))
    sx, sp = fs.paper_fluctuations(c)
    m = fs.sector_moments(c)
    assert abs(sx * sx - 7.0) < 1e-12 and sx == sp
    assert abs(sx * sx - m.var_x_minus - 2 * m.cross.real) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.floats(-1, 1), st.floats(-0.5, 0.5), st.floats(0, 30),
       st.integers(0, 10_000))
def test_random_sector_unitarity(N, delta, chi, t, seed):
    p = QuantumParams(delta, 1.0, chi, N)
    c0 = FockStateN(N, random_sector(np.random.default_rng(seed), N))
    s = fs.evolve_fock(c0, p, [t], renormalize=False)[0]
    assert abs(np.vdot(s.c, s.c).real - 1) < 1e-12
    assert abs(fs.energy_expectation(s, p) - fs.energy_expectation(c0, p)) < 1e-10 * (1 + N * N)


# --- remaining worked examples --------------------------------------------

def test_small_hamiltonian_entries():
    h = fs.build_hamiltonian(QuantumParams(1.0, 1.0, 0.0, 1))
    np.testing.assert_array_equal(h.diag, [-1.0, 1.0])
    np.testing.assert_array_equal(h.offdiag, [1.0])
    assert np.all(fs.build_hamiltonian(QuantumParams(0.0, 1.0, -1 / 9, 10)).offdiag == 0)
    assert np.all(fs.build_hamiltonian(QuantumParams(0.0, 1.0, -0.5, 3)).offdiag == 0)


def test_linear_number_state_population():
    t = np.linspace(0, 10, 101)
    out = fs.evolve_fock(FockStateN.number_state(1), QuantumParams(0.0, 1.0, 0.0, 1), t)
    np.testing.assert_allclose([abs(s.c[1]) ** 2 for s in out], np.cos(t) ** 2, atol=1e-12)


def test_trapped_evolution_identity_and_single_level():
    p = QuantumParams(0.0, 1.0, -0.5, 3)
    c0 = FockStateN(3, random_sector(np.random.default_rng(0), 3))
    assert np.array_equal(fs.trapped_phase_evolution(c0, p, 0.0).c, c0.c)
    s = fs.trapped_phase_evolution(FockStateN.number_state(3, 0), p, 2.7)
    assert abs(abs(s.c[0]) - 1) < 1e-15 and np.all(s.c[1:] == 0)


def test_spectrum_examples():
    _, lv = fs.spectrum_vs_chi(3, 0.0, 1.0, [0.0])
    dense = np.diag([np.sqrt(3), 2.0, np.sqrt(3)], 1)
    np.testing.assert_allclose(lv[0], np.linalg.eigvalsh(dense + dense.T), atol=1e-12)
    _, lv = fs.spectrum_vs_chi(1, 0.6, 1.1, [0.0])
    np.testing.assert_allclose(lv[0], [-np.hypot(0.6, 1.1), np.hypot(0.6, 1.1)], atol=1e-14)
    _, lv = fs.spectrum_vs_chi(5, 0.3, 1.0, [-0.25])
    diag = fs.build_hamiltonian(QuantumParams(0.3, 1.0, -0.25, 5)).diag
    np.testing.assert_allclose(lv[0], np.sort(diag), atol=1e-13)


def test_moment_examples():
    N = 7
    m = fs.sector_moments(FockStateN.number_state(N))
    assert (m.n_A, m.var_n_A, m.cross, m.var_x_minus) == (N, 0.0, 0j, N + 1)
    m = fs.sector_moments(FockStateN.uniform(2))
    ref = _dense_moments(FockStateN.uniform(2))
    assert abs(m.n_A - 1) < 1e-15 and abs(m.cross - ref["cross"]) < 1e-12
    assert abs(m.cross - 2 * np.sqrt(2) / 3) < 1e-14
    u1 = FockStateN.uniform(1)
    assert abs(fs.paper_fluctuations(u1)[0] ** 2 - 2) < 1e-14
    assert abs(fs.sector_moments(u1).var_x_minus - 1) < 1e-14
    assert fs.paper_fluctuations(FockStateN.number_state(N)) == (np.sqrt(N + 1), np.sqrt(N + 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.integers(0, 10_000))
def test_uncertainty_relation_in_sector(N, seed):
    m = fs.sector_moments(FockStateN(N, random_sector(np.random.default_rng(seed), N)))
    assert m.var_x_minus * m.var_p_minus >= 1 - 1e-12

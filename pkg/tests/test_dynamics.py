import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molqsim.dynamics import (IntegrationError, StateError, dissipator, evolve, liouvillian, lindblad_rhs,
                              population_recorders, steady_state, step_size_suggest, validate_density_matrix)
from molqsim.hamiltonian import LaserDrive, build_trimer_driven, excitation_number
from molqsim.scenarios import (DELTA_SWAP_GHZ, TRIMER_DELTA_GHZ, TRIMER_V13_GHZ, TRIMER_V_GHZ, V12_GHZ,
                               dimer_bare, dimer_gamma, trimer_bare_rotating, trimer_gamma)
from molqsim.states import basis_dm, dm, ket, psi_minus, w_state

T_SWAP = math.pi / (2 * V12_GHZ * 1e-3)


def _swap_setup():
    return dimer_bare(V12_GHZ, DELTA_SWAP_GHZ), dimer_gamma(), basis_dm("10")


def test_validate_density_matrix():
    validate_density_matrix(basis_dm("01"))
    with pytest.raises(StateError):
        validate_density_matrix(np.diag([0.5, 0.6, 0.0, 0.0]))
    with pytest.raises(StateError):
        validate_density_matrix(np.diag([1.2, -0.2, 0.0, 0.0]))
    with pytest.raises(StateError):
        validate_density_matrix(np.array([[0.5, 0.5], [0.1, 0.5]]))


def test_rhs_matches_liouvillian_superoperator():
    H = build_trimer_driven(700.0, 701.2, 1200.0, -120.0, LaserDrive(50.0, 700.0))
    G = trimer_gamma()
    rng = np.random.default_rng(3)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    L = liouvillian(H, G)
    vec = L @ rho.reshape(-1, order="F")
    assert np.allclose(vec.reshape(8, 8, order="F"), lindblad_rhs(H, G, rho), atol=1e-12)


def test_single_emitter_decay_oracle():
    # independent emitters: rho_11 decays as exp(-Gamma t)
    H = dimer_bare(0.0, 0.0)
    G = np.diag([0.172, 0.172])
    tr = evolve(H, G, basis_dm("10"), 200.0, 0.5)
    assert tr.population("10")[-1] == pytest.approx(math.exp(-0.172e-3 * 200.0), rel=1e-9)


def test_dissipator_trace_free():
    G = trimer_gamma()
    d = dissipator(dm(w_state()), G)
    assert abs(np.trace(d)) < 1e-15


def test_rk4_fourth_order_convergence():
    H, G, rho0 = _swap_setup()
    ref = evolve(H, G, rho0, T_SWAP, T_SWAP / 4000, method="expm").states[-1]
    errs = [np.abs(evolve(H, G, rho0, T_SWAP, dt).states[-1] - ref).max() for dt in (0.04, 0.02, 0.01)]
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(16.0, rel=0.1)


def test_step_halving_at_suggested_dt():
    H, G, rho0 = _swap_setup()
    n = math.ceil(2 * T_SWAP / step_size_suggest(H))
    dt = 2 * T_SWAP / n
    a = evolve(H, G, rho0, 2 * T_SWAP, dt, record_every=2)
    b = evolve(H, G, rho0, 2 * T_SWAP, dt / 2, record_every=4)
    assert np.allclose(a.times_ps, b.times_ps)
    pops = lambda tr: np.einsum("tii->ti", tr.states).real
    assert np.abs(pops(a) - pops(b)).max() < 1e-7


def test_trajectory_invariants_swap():
    H, G, rho0 = _swap_setup()
    tr = evolve(H, G, rho0, 10 * T_SWAP, step_size_suggest(H))
    assert tr.max_trace_drift < 1e-8
    assert np.linalg.eigvalsh(tr.states).min() >= -1e-7
    assert np.abs(tr.states - tr.states.conj().transpose(0, 2, 1)).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_purity_non_increasing_without_drive(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    H = trimer_bare_rotating(TRIMER_V_GHZ, TRIMER_V13_GHZ, TRIMER_DELTA_GHZ)
    tr = evolve(H, trimer_gamma(), dm(v / np.linalg.norm(v)), 20.0, step_size_suggest(H), record_every=1)
    purity = np.einsum("tij,tji->t", tr.states, tr.states).real
    assert np.all(np.diff(purity) <= 1e-8)


def test_excitation_number_conserved_without_loss():
    H = trimer_bare_rotating(TRIMER_V_GHZ, TRIMER_V13_GHZ, TRIMER_DELTA_GHZ)
    rho0 = dm(ket({"100": 1, "110": 1j, "111": 0.5}))
    tr = evolve(H, np.zeros((3, 3)), rho0, 10.0, step_size_suggest(H))
    n = tr.expectation(excitation_number(3))
    assert np.abs(n - n[0]).max() < 1e-10


def test_record_every_and_final_step_kept():
    H, G, rho0 = _swap_setup()
    tr = evolve(H, G, rho0, 1.0, 0.01, record_every=30, record=population_recorders(2))
    assert tr.times_ps[-1] == pytest.approx(1.0)
    assert len(tr) == 100 // 30 + 2
    assert np.allclose(tr.records["rho_10_10"], tr.population("10"))


def test_rk4_and_expm_agree():
    H, G, rho0 = _swap_setup()
    a = evolve(H, G, rho0, T_SWAP, 0.005)
    b = evolve(H, G, rho0, T_SWAP, 0.005, method="expm")
    assert np.abs(a.states - b.states).max() < 1e-8


def test_unstable_step_raises():
    H, G, rho0 = _swap_setup()
    with pytest.raises(IntegrationError):
        evolve(H, G, rho0, 50.0, 5.0)
    with pytest.raises(StateError):
        evolve(H, G, basis_dm("100"), 1.0, 0.01)


def test_steady_state_undriven_is_ground():
    H, G, _ = _swap_setup()
    rho = steady_state(H, G)
    assert np.allclose(rho, basis_dm("00"), atol=1e-9)


def test_steady_state_dark_state_needs_initial_state():
    # Gamma_12 = -Gamma: the symmetric state is dark, so the null space is two-dimensional
    H = dimer_bare(V12_GHZ, 0.0)
    G = np.array([[0.172, -0.172], [-0.172, 0.172]])
    with pytest.raises(StateError):
        steady_state(H, G)
    rho = steady_state(H, G, rho0=basis_dm("10"))
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-9
    # conserved overlap with the dark state: 1/2 of the initial excitation
    dark = dm(ket({"01": 1, "10": 1}))
    assert np.trace(dark @ rho).real == pytest.approx(0.5, abs=1e-8)


def test_steady_state_driven_is_stationary():
    H = build_trimer_driven(700.0, 701.2, 1200.0, -120.0, LaserDrive(20.0, 700.0))
    G = trimer_gamma()
    rho = steady_state(H, G, rho0=basis_dm("000"))
    assert np.abs(lindblad_rhs(H, G, rho)).max() < 1e-9


def test_bell_state_under_collective_decay():
    # Psi- decays at Gamma - Gamma12
    H = dimer_bare(0.0, 0.0)
    G = dimer_gamma()
    tr = evolve(H, G, dm(psi_minus()), 100.0, 0.5)
    rate = (G[0, 0] - G[0, 1]) * 1e-3
    exc = tr.population("01") + tr.population("10") + 2 * tr.population("11")
    assert exc[-1] == pytest.approx(math.exp(-rate * 100.0), rel=1e-9)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molqsim.hamiltonian import THZ, build_trimer_bare, rotating_frame
from molqsim.spectral import (DegenerateConfigurationError, EigenSystem, SpectralError, _coeff_pair,
                              eigensystem_numeric, eigenstate_entanglement_class, label_by_overlap,
                              preset_hamiltonian, spectrum_table, subspace_overlap, trimer_eigensystem_analytic)
from molqsim.states import pairwise_13_state, w_state


def _draw(rng):
    v = rng.uniform(100, 2000)
    v13 = rng.uniform(-300, 0)
    dm = rng.uniform(0, 17000)
    nu = 700.0
    return nu, nu + dm / THZ, v, v13


def _compare(nu, nu2, v, v13):
    ana = trimer_eigensystem_analytic(nu, nu2, v, v13)
    num = eigensystem_numeric(build_trimer_bare(nu, nu2, v, v13))
    scale = np.abs(num.energies).max()
    assert np.abs(ana.energies - num.energies).max() < 1e-6 * scale
    # degenerate levels are matched by projecting onto the numeric eigenspace
    tol = 1e-9 * scale
    for k in range(8):
        ov = subspace_overlap(ana.vector(k), num, ana.energies[k], tol)
        assert ov > 1 - 1e-8


def test_analytic_matches_numeric_200_draws():
    rng = np.random.default_rng(20240611)
    for _ in range(200):
        _compare(*_draw(rng))


@settings(max_examples=50, deadline=None)
@given(st.floats(100, 2000), st.floats(-300, 0), st.floats(0, 17000))
def test_analytic_matches_numeric_property(v, v13, dm):
    _compare(700.0, 700.0 + dm / THZ, v, v13)


@settings(max_examples=50, deadline=None)
@given(st.floats(100, 2000), st.floats(-300, 0), st.floats(0, 17000))
def test_energy_sum_is_trace_and_extremes_are_product(v, v13, dm):
    H = build_trimer_bare(700.0, 700.0 + dm / THZ, v, v13)
    es = trimer_eigensystem_analytic(700.0, 700.0 + dm / THZ, v, v13)
    trace = np.trace(H.matrix).real / THZ
    assert abs(es.energies.sum() - trace) <= 1e-8 * np.abs(es.energies).max()
    assert np.array_equal(np.abs(es.by_label("E1")[1]), np.eye(8)[0])
    assert np.array_equal(np.abs(es.by_label("E8")[1]), np.eye(8)[7])


def test_analytic_states_orthonormal():
    es = trimer_eigensystem_analytic(700.0, 701.2, 1200.0, -120.0)
    assert np.allclose(es.states.conj().T @ es.states, np.eye(8), atol=1e-12)


def test_degenerate_normalisation_raises():
    with pytest.raises(DegenerateConfigurationError):
        _coeff_pair(0.0, 0.0, 0.0)
    with pytest.raises(DegenerateConfigurationError):
        trimer_eigensystem_analytic(700.0, 700.0, 0.0, 0.0)


def test_numeric_units_by_frame():
    H = build_trimer_bare(700.0, 701.2, 1200.0, -120.0)
    assert eigensystem_numeric(H).units == "THz"
    rot = eigensystem_numeric(rotating_frame(H, 700.0))
    assert rot.units == "GHz"
    lab = eigensystem_numeric(H)
    # each level moves by -nu_L (N - 3/2); N read off the dominant basis state
    n_exc = np.array([bin(int(np.argmax(np.abs(lab.vector(k))))).count("1") for k in range(8)])
    shifted = np.sort((lab.energies - 700.0 * (n_exc - 1.5)) * THZ)
    assert np.allclose(rot.energies, shifted, atol=1e-6)


def test_eigensystem_validation():
    with pytest.raises(SpectralError):
        EigenSystem(np.array([1.0, 0.0]), np.eye(2), "GHz")
    with pytest.raises(SpectralError):
        EigenSystem(np.array([0.0, 1.0]), np.eye(3), "GHz")
    es = EigenSystem(np.array([0.0, 1.0]), np.eye(2), "GHz", ("a", "b"))
    assert es.index("b") == 1
    with pytest.raises(KeyError):
        es.index("c")
    assert np.allclose(es.projector("a"), np.diag([1.0, 0.0]))


def test_label_by_overlap_recovers_reference_labels():
    ana = trimer_eigensystem_analytic(700.0, 712.0, 1200.0, -120.0)
    num = label_by_overlap(eigensystem_numeric(preset_hamiltonian("d2")), ana)
    assert num.labels == ana.labels


def test_entanglement_classes():
    assert eigenstate_entanglement_class(np.eye(8)[0]) == "product"
    assert eigenstate_entanglement_class(pairwise_13_state()) == "pairwise"
    assert eigenstate_entanglement_class(w_state()) == "tripartite"
    with pytest.raises(SpectralError):
        eigenstate_entanglement_class(np.ones(8))


def test_spectrum_table_numeric_agrees_with_closed_form():
    for name in ("d2", "d3"):
        for row in spectrum_table(name):
            assert row["energy_numeric_thz"] == pytest.approx(row["energy_thz"], abs=1e-9)
            for b, c in row["coefficients"].items():
                assert row["coefficients_numeric"][b] == pytest.approx(c, abs=1e-9)


def test_spectrum_classes_for_small_detuning():
    classes = {r["label"]: r["class"] for r in spectrum_table("d3")}
    assert classes == {"E1": "product", "E2": "pairwise", "E3": "tripartite", "E4": "tripartite",
                       "E5": "tripartite", "E6": "tripartite", "E7": "pairwise", "E8": "product"}

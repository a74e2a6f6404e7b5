import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molqsim.geometry import (SPEED_OF_LIGHT, CollectiveParams, DipoleSite, GeometryError, MolecularArray,
                              collective_damping, collective_params, coupling_curve, dimer_fig1,
                              dipole_coupling, homogeneous_linewidth, trimer_fig1)


def _random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def _random_array(rng, n=3):
    sites = []
    for k in range(n):
        pos = rng.uniform(-3, 3, size=3) + np.array([4.0 * k, 0, 0])
        sites.append(DipoleSite(pos, rng.normal(size=3)))
    return MolecularArray(tuple(sites))


def test_orientation_is_normalised_and_zero_rejected():
    s = DipoleSite([0, 0, 0], [3.0, 4.0, 0.0])
    assert np.isclose(np.linalg.norm(s.orientation), 1.0)
    with pytest.raises(GeometryError):
        DipoleSite([0, 0, 0], [1e-8, 0, 0])


def test_invalid_inputs_rejected():
    with pytest.raises(GeometryError):
        DipoleSite([0, 0], [1, 0, 0])
    with pytest.raises(GeometryError):
        DipoleSite([0, 0, 0], [1, 0, 0], t1_ns=-1.0)
    a = DipoleSite([0, 0, 0], [1, 0, 0])
    with pytest.raises(GeometryError):
        MolecularArray((a, a))
    with pytest.raises(GeometryError):
        MolecularArray((a,), refractive_index=0.5)
    with pytest.raises(GeometryError):
        dipole_coupling(trimer_fig1(), 1, 1)
    with pytest.raises(GeometryError):
        trimer_fig1().site(4)


def test_diagonal_damping_is_inverse_t1():
    arr = trimer_fig1()
    assert collective_damping(arr, 2, 2) == pytest.approx(1 / 5.8)


def test_near_field_limit_parallel_dipoles():
    # z = n k r -> 0, dipoles parallel and perpendicular to r
    nu = 522.0
    n = 1.0
    z = 1e-3
    r_nm = z * SPEED_OF_LIGHT / (2 * math.pi * nu * 1e12 * n) * 1e9
    arr = MolecularArray((DipoleSite([0, 0, 0], [0, 0, 1], nu_thz=nu),
                          DipoleSite([r_nm, 0, 0], [0, 0, 1], nu_thz=nu)), refractive_index=n)
    gamma = 1 / 5.8
    assert collective_damping(arr, 1, 2) == pytest.approx(gamma, rel=5e-3)
    assert dipole_coupling(arr, 1, 2) == pytest.approx(0.75 * gamma / z**3, rel=5e-3)


def test_far_field_oracle_collinear():
    # dipoles along r: only the near bracket survives, -2 (cos/z^3 + sin/z^2)
    arr = MolecularArray((DipoleSite([0, 0, 0], [1, 0, 0]), DipoleSite([50.0, 0, 0], [1, 0, 0])))
    z = 1.5 * 2 * math.pi * 522e12 / SPEED_OF_LIGHT * 50e-9
    gamma = 1 / 5.8
    v = 0.75 * gamma * (-2) * (math.cos(z) / z**3 + math.sin(z) / z**2)
    g = 1.5 * gamma * (-2) * (math.cos(z) / z**2 - math.sin(z) / z**3)
    assert dipole_coupling(arr, 1, 2) == pytest.approx(v, rel=1e-12)
    assert collective_damping(arr, 1, 2) == pytest.approx(g, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gamma_matrix_bounded_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    p = collective_params(_random_array(rng))
    G = p.Gamma
    assert np.allclose(G, G.T)
    assert np.all(np.abs(G) <= np.sqrt(np.outer(np.diag(G), np.diag(G))) + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_pair_formulas_symmetric_in_indices(seed):
    arr = _random_array(np.random.default_rng(seed))
    for i, j in ((1, 2), (1, 3), (2, 3)):
        assert dipole_coupling(arr, i, j) == pytest.approx(dipole_coupling(arr, j, i), rel=1e-12)
        assert collective_damping(arr, i, j) == pytest.approx(collective_damping(arr, j, i), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rigid_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    arr = _random_array(rng)
    rot = collective_params(arr.rotated(_random_rotation(rng)))
    ref = collective_params(arr)
    assert np.allclose(rot.V, ref.V, rtol=1e-10, atol=1e-10 * np.abs(ref.V).max())
    assert np.allclose(rot.Gamma, ref.Gamma, rtol=1e-10, atol=1e-14)


def test_near_field_inverse_cube_scaling():
    curve = coupling_curve(dimer_fig1(), 0.5, 1.0, 2)
    ratio = curve["V_12"][0] / curve["V_12"][1]
    assert ratio == pytest.approx(8.0, rel=0.01)


def test_coupling_curve_shape_and_validation():
    curve = coupling_curve(trimer_fig1(), 1.0, 5.0, 9)
    assert set(curve) == {"r_nm", "V_12", "Gamma_12", "V_13", "Gamma_13", "V_23", "Gamma_23"}
    assert curve["r_nm"].shape == (9,)
    with pytest.raises(GeometryError):
        coupling_curve(trimer_fig1(), 2.0, 1.0, 5)


def test_fig1_preset_geometry():
    arr = trimer_fig1()
    mu1, mu2, mu3 = (s.orientation for s in arr.sites)
    assert np.allclose(mu1, mu3)
    assert float(mu1 @ mu2) == pytest.approx(math.cos(2 * math.pi / 3))
    assert np.linalg.norm(arr.sites[1].position_nm - arr.sites[0].position_nm) == pytest.approx(2.2)
    assert dimer_fig1().n_sites == 2


def test_collective_params_validation():
    with pytest.raises(GeometryError):
        CollectiveParams(np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]))
    p = CollectiveParams.from_values(2, 0.172, {(1, 2): 1356.0}, {(1, 2): -0.086})
    assert p.V[1, 0] == 1356.0 and p.Gamma[0, 1] == -0.086


def test_homogeneous_linewidth():
    assert homogeneous_linewidth(5.8) == pytest.approx(1 / (2 * math.pi * 5.8))
    assert homogeneous_linewidth(1.0, 2.0) == pytest.approx(1 / (2 * math.pi) + 1 / (2 * math.pi))

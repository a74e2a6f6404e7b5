"""Hot inner loops, each in a numba and a numpy flavour.

The two flavours implement identical arithmetic; ``dynamics`` and
``quantify`` pick one through :data:`molqsim._accel.USE_NUMBA`.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# ---------------------------------------------------------------------------
# Lindblad right-hand side + fixed-step RK4
# ---------------------------------------------------------------------------
#
# drho/dt = -i (Heff rho - rho Heff^dag) + sum_m g_m C_m rho C_m^T
#
# Heff = H - (i/2) sum_ij Gamma_ij s+_i s-_j, C_m real (collective lowering
# operators from the eigen-decomposition of Gamma). All rates in rad/ps.


@njit
def _rhs_numba(heff, heff_dag, jumps, rates, rho, out, tmp):
    d = rho.shape[0]
    for i in range(d):
        for j in range(d):
            acc = 0j
            for k in range(d):
                acc += heff[i, k] * rho[k, j] - rho[i, k] * heff_dag[k, j]
            out[i, j] = -1j * acc
    for m in range(jumps.shape[0]):
        g = rates[m]
        if g == 0.0:
            continue
        c = jumps[m]
        for i in range(d):
            for j in range(d):
                acc = 0j
                for k in range(d):
                    if c[i, k] != 0.0:
                        acc += c[i, k] * rho[k, j]
                tmp[i, j] = acc
        for i in range(d):
            for j in range(d):
                acc = 0j
                for k in range(d):
                    if c[j, k] != 0.0:
                        acc += tmp[i, k] * c[j, k]
                out[i, j] += g * acc


@njit
def rk4_lindblad_numba(heff, jumps, rates, rho0, dt, n_steps, every):
    d = rho0.shape[0]
    heff_dag = np.ascontiguousarray(heff.conj().T)
    n_rec = n_steps // every + 1
    if n_steps % every != 0:
        n_rec += 1
    states = np.empty((n_rec, d, d), dtype=np.complex128)
    rho = rho0.copy()
    states[0] = rho
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    stage = np.empty_like(rho)
    drift = 0.0
    r = 1
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(1, n_steps + 1):
        _rhs_numba(heff, heff_dag, jumps, rates, rho, k1, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + half * k1[i, j]
        _rhs_numba(heff, heff_dag, jumps, rates, stage, k2, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + half * k2[i, j]
        _rhs_numba(heff, heff_dag, jumps, rates, stage, k3, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + dt * k3[i, j]
        _rhs_numba(heff, heff_dag, jumps, rates, stage, k4, tmp)
        for i in range(d):
            for j in range(d):
                stage[i, j] = rho[i, j] + sixth * (
                    k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                )
        tr = 0.0
        for i in range(d):
            for j in range(d):
                rho[i, j] = 0.5 * (stage[i, j] + np.conj(stage[j, i]))
            tr += rho[i, i].real
        if abs(tr - 1.0) > drift:
            drift = abs(tr - 1.0)
        if step % every == 0 or step == n_steps:
            states[r] = rho
            r += 1
    return states, drift


def _rhs_numpy(heff, heff_dag, jumps, rates, rho):
    out = -1j * (heff @ rho - rho @ heff_dag)
    if jumps.shape[0]:
        out += np.einsum("m,mij,mkj->ik", rates, jumps @ rho, jumps, optimize=True)
    return out


def rk4_lindblad_numpy(heff, jumps, rates, rho0, dt, n_steps, every):
    d = rho0.shape[0]
    heff_dag = heff.conj().T
    n_rec = n_steps // every + 1 + (1 if n_steps % every else 0)
    states = np.empty((n_rec, d, d), dtype=np.complex128)
    rho = rho0.copy()
    states[0] = rho
    drift = 0.0
    r = 1
    for step in range(1, n_steps + 1):
        k1 = _rhs_numpy(heff, heff_dag, jumps, rates, rho)
        k2 = _rhs_numpy(heff, heff_dag, jumps, rates, rho + 0.5 * dt * k1)
        k3 = _rhs_numpy(heff, heff_dag, jumps, rates, rho + 0.5 * dt * k2)
        k4 = _rhs_numpy(heff, heff_dag, jumps, rates, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        drift = max(drift, abs(np.trace(rho).real - 1.0))
        if step % every == 0 or step == n_steps:
            states[r] = rho
            r += 1
    return states, drift


# ---------------------------------------------------------------------------
# Mermin (3,2,2) grid scan
# ---------------------------------------------------------------------------
#
# With every observable in the z-x plane, <O1 O2 O3> = sum_abc T_abc u1_a u2_b u3_c
# where T_abc = Tr(rho s_a s_b s_c), a, b, c in {z, x} and u = (cos, sin).
# Output is |Upsilon| on the full grid, axes ordered (th1, th2, th3, ph1, ph2, ph3).


@njit
def mermin_grid_numba(t, angles):
    n = angles.shape[0]
    u = np.empty((n, 2))
    for i in range(n):
        u[i, 0] = np.cos(angles[i])
        u[i, 1] = np.sin(angles[i])
    # quad[p, q, r] = <O(p) O(q) O(r)>, one setting per site
    quad = np.zeros((n, n, n))
    for p in range(n):
        for q in range(n):
            for r in range(n):
                acc = 0.0
                for a in range(2):
                    for b in range(2):
                        for c in range(2):
                            acc += t[a, b, c] * u[p, a] * u[q, b] * u[r, c]
                quad[p, q, r] = acc
    out = np.empty((n, n, n, n, n, n))
    for i1 in range(n):
        for i2 in range(n):
            for i3 in range(n):
                aaa = quad[i1, i2, i3]
                for j1 in range(n):
                    for j2 in range(n):
                        for j3 in range(n):
                            val = quad[i1, j2, j3] + quad[j1, i2, j3] + quad[j1, j2, i3] - aaa
                            out[i1, i2, i3, j1, j2, j3] = abs(val)
    return out


def mermin_grid_numpy(t, angles):
    n = angles.shape[0]
    u = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    # proj[p, q, r, s] = u_p^T (T . u_q) ... contracted on the first leg
    first = np.einsum("abc,pa->pbc", t, u)  # (n, 2, 2)
    quad = np.einsum("pbc,qb,rc->pqr", first, u, u)  # quad[first, second, third]
    out = np.empty((n,) * 6)
    for i1 in range(n):
        xa = quad[i1]  # A on site 1
        for j1 in range(n):
            xb = quad[j1]  # B on site 1
            val = (
                xa[None, None, :, :]  # A1 B2 B3 -> (j2, j3)
                + xb[:, None, None, :]  # B1 A2 B3 -> (i2, j3)
                + xb.T[None, :, :, None]  # B1 B2 A3 -> (j2, i3)
                - xa[:, :, None, None]  # A1 A2 A3 -> (i2, i3)
            )
            # val axes are (i2, i3, j2, j3)
            out[i1, :, :, j1, :, :] = np.abs(val)
    return out


if USE_NUMBA:
    rk4_lindblad = rk4_lindblad_numba
    mermin_grid = mermin_grid_numba
else:
    rk4_lindblad = rk4_lindblad_numpy
    mermin_grid = mermin_grid_numpy

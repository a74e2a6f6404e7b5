"""Lindblad dynamics with collective (cross-) damping.

Units: Hamiltonian entries and rates are quoted in GHz and used as direct
rates, 1 GHz -> 1e-3 rad/ps, so t_swap = pi / (2 V12) with V12 = 1356 GHz is
~1.16 ps. Times are in picoseconds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.linalg

from . import _kernels
from .geometry import CollectiveParams
from .hamiltonian import Hamiltonian, basis_labels, lowering

log = logging.getLogger(__name__)

GHZ_TO_RAD_PER_PS = 1e-3
DEFAULT_DT_PS = 0.01
MAX_RECORDS = 20_000

TRACE_DRIFT_LIMIT = 1e-6
NEGATIVITY_LIMIT = -1e-5


class IntegrationError(RuntimeError):
    pass


class StateError(ValueError):
    pass


def validate_density_matrix(rho, herm_tol=1e-9, trace_tol=1e-9, eig_tol=-1e-7) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    if rho.ndim != 2 or rho.shape != (d, d) or d & (d - 1) or d < 2:
        raise StateError(f"not a qubit density matrix: shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise StateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise StateError(f"trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < eig_tol:
        raise StateError("density matrix has negative eigenvalues")
    return rho


def n_qubits_of(rho) -> int:
    return int(round(math.log2(np.asarray(rho).shape[0])))


def _gamma_matrix(gamma) -> np.ndarray:
    if isinstance(gamma, CollectiveParams):
        return np.asarray(gamma.Gamma)
    G = np.asarray(gamma, dtype=float)
    if G.ndim == 0:
        G = G.reshape(1, 1)
    return G


# ---------------------------------------------------------------------------
# generator, written out term by term
# ---------------------------------------------------------------------------


def dissipator(rho, gamma) -> np.ndarray:
    """Dissipative part of drho/dt in GHz (i.e. per 1e3 ps):

    -1/2 sum_ij Gamma_ij (rho s+_i s-_j + s+_i s-_j rho - 2 s-_j rho s+_i)
    """
    rho = np.asarray(rho, dtype=np.complex128)
    G = _gamma_matrix(gamma)
    n = G.shape[0]
    if rho.shape != (2**n, 2**n):
        raise StateError(f"state of shape {rho.shape} does not match {n} damping sites")
    out = np.zeros_like(rho)
    sm = [lowering(i + 1, n) for i in range(n)]
    for i in range(n):
        for j in range(n):
            if G[i, j] == 0.0:
                continue
            pm = sm[i].T @ sm[j]
            out -= 0.5 * G[i, j] * (rho @ pm + pm @ rho - 2.0 * sm[j] @ rho @ sm[i].T)
    return out


def liouvillian(H: Hamiltonian, gamma) -> np.ndarray:
    """Superoperator (rad/ps) acting on column-stacked vec(rho)."""
    G = _gamma_matrix(gamma)
    n = H.n_qubits
    d = 2**n
    if G.shape != (n, n):
        raise StateError("damping matrix does not match the Hamiltonian")
    eye = np.eye(d)
    h = H.matrix * GHZ_TO_RAD_PER_PS
    L = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    sm = [lowering(i + 1, n) for i in range(n)]
    for i in range(n):
        for j in range(n):
            g = G[i, j] * GHZ_TO_RAD_PER_PS
            if g == 0.0:
                continue
            pm = sm[i].T @ sm[j]
            L -= 0.5 * g * (np.kron(pm.T, eye) + np.kron(eye, pm) - 2.0 * np.kron(sm[i], sm[j]))
    return L


def _kernel_operators(H: Hamiltonian, G: np.ndarray):
    """Effective Hamiltonian and collective jump channels for the RK4 kernels."""
    n = H.n_qubits
    sm = np.array([lowering(i + 1, n) for i in range(n)])
    K = np.einsum("ij,iab,jac->bc", G, sm, sm)  # sum_ij G_ij s+_i s-_j
    heff = (H.matrix - 0.5j * K) * GHZ_TO_RAD_PER_PS
    w, U = np.linalg.eigh(G)
    keep = np.abs(w) > 1e-15 * max(1.0, np.abs(w).max())
    jumps = np.einsum("jm,jab->mab", U[:, keep], sm).astype(np.complex128)
    rates = w[keep] * GHZ_TO_RAD_PER_PS
    return np.ascontiguousarray(heff), np.ascontiguousarray(jumps), np.ascontiguousarray(rates)


def lindblad_rhs(H: Hamiltonian, gamma, rho) -> np.ndarray:
    """drho/dt in rad/ps (commutator plus :func:`dissipator`)."""
    rho = np.asarray(rho, dtype=np.complex128)
    h = H.matrix * GHZ_TO_RAD_PER_PS
    return -1j * (h @ rho - rho @ h) + GHZ_TO_RAD_PER_PS * dissipator(rho, gamma)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    times_ps: np.ndarray
    states: np.ndarray
    n_qubits: int
    records: Mapping[str, np.ndarray] = field(default_factory=dict)
    time_unit_ghz: float | None = None
    dt_ps: float = 0.0
    max_trace_drift: float = 0.0

    def __post_init__(self):
        if self.times_ps.shape[0] != self.states.shape[0]:
            raise ValueError("one state per time point required")
        if np.any(np.diff(self.times_ps) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times_ps.shape[0]

    @property
    def t_dimensionless(self) -> np.ndarray:
        """t * V in the direct-rate convention (``time_unit_ghz`` * 1e-3 * t_ps)."""
        if self.time_unit_ghz is None:
            return self.times_ps.copy()
        return self.times_ps * self.time_unit_ghz * GHZ_TO_RAD_PER_PS

    def element(self, bra: str, ket: str) -> np.ndarray:
        return self.states[:, int(bra, 2), int(ket, 2)]

    def population(self, label: str) -> np.ndarray:
        return self.element(label, label).real

    def expectation(self, op) -> np.ndarray:
        return np.einsum("tij,ji->t", self.states, np.asarray(op)).real

    def apply(self, fn: Callable[[np.ndarray], float]) -> np.ndarray:
        return np.array([fn(r) for r in self.states])

    def at(self, t_ps: float) -> np.ndarray:
        """State at the recorded time closest to ``t_ps``."""
        return self.states[int(np.argmin(np.abs(self.times_ps - t_ps)))]


def element_recorder(bra: str, ket: str):
    a, b = int(bra, 2), int(ket, 2)
    return lambda rho: rho[a, b]


def population_recorders(n: int) -> dict:
    return {f"rho_{lab}_{lab}": element_recorder(lab, lab) for lab in basis_labels(n)}


def step_size_suggest(H: Hamiltonian, default: float = DEFAULT_DT_PS, steps_per_unit: float = 50.0) -> float:
    """dt <= 1 / (50 max|H_ij|) with H converted to rad/ps."""
    scale = float(np.abs(H.matrix).max()) * GHZ_TO_RAD_PER_PS
    if scale == 0.0:
        return default
    return 1.0 / (steps_per_unit * scale)


def _step_grid(t_final: float, dt: float) -> tuple[int, float]:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_final >= dt * (1 - 1e-12):
        raise ValueError("t_final must be at least one step")
    n_steps = int(math.ceil(t_final / dt - 1e-9))
    return n_steps, t_final / n_steps


def evolve(H: Hamiltonian, gamma, rho0, t_final: float, dt: float,
           record: Mapping[str, Callable] | None = None, record_every: int | None = None,
           method: str = "rk4", max_records: int = MAX_RECORDS,
           time_unit_ghz: float | None = None) -> Trajectory:
    """Integrate the master equation from ``rho0`` to ``t_final`` (ps).

    ``dt`` is shrunk, never enlarged, so an integer number of steps lands
    exactly on ``t_final``. ``method="rk4"`` is the fixed-step integrator;
    ``method="expm"`` propagates with the exact one-step map exp(L dt) and
    is meant for long, weakly driven runs and as a reference.

    States are stored every ``record_every`` steps (default keeps at most
    ``max_records``) and always at the final step. Raises
    :class:`IntegrationError` when the trace drifts by more than 1e-6 or a
    stored state has an eigenvalue below -1e-5.
    """
    rho0 = validate_density_matrix(rho0)
    G = _gamma_matrix(gamma)
    if rho0.shape != (H.dim, H.dim) or G.shape != (H.n_qubits, H.n_qubits):
        raise StateError("dimensions of H, Gamma and rho0 disagree")
    n_steps, dt_eff = _step_grid(t_final, dt)
    every = int(record_every) if record_every else max(1, math.ceil(n_steps / max_records))

    if method == "rk4":
        heff, jumps, rates = _kernel_operators(H, G)
        states, drift = _kernels.rk4_lindblad(heff, jumps, rates, np.ascontiguousarray(rho0),
                                              dt_eff, n_steps, every)
    elif method == "expm":
        states, drift = _expm_propagate(liouvillian(H, G), rho0, dt_eff, n_steps, every)
    else:
        raise ValueError(f"unknown method {method!r}")

    steps = np.arange(0, n_steps + 1, every)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    times = steps * dt_eff

    traces = np.abs(np.einsum("tii->t", states).real - 1.0)
    drift = max(drift, float(traces.max()))
    min_eig = float(np.linalg.eigvalsh(states).min())
    if drift > TRACE_DRIFT_LIMIT or min_eig < NEGATIVITY_LIMIT:
        raise IntegrationError(
            f"integration became unphysical (trace drift {drift:.3g}, min eigenvalue {min_eig:.3g}) "
            f"with dt = {dt_eff:.4g} ps; try dt <= {step_size_suggest(H):.4g} ps"
        )
    log.debug("evolve: %d steps of %.4g ps, %d records, drift %.2e", n_steps, dt_eff, len(times), drift)

    records = {}
    for name, fn in (record or {}).items():
        records[name] = np.array([fn(r) for r in states])
    return Trajectory(times, states, H.n_qubits, records, time_unit_ghz, dt_eff, drift)


def _expm_propagate(L, rho0, dt, n_steps, every):
    d = rho0.shape[0]
    P = scipy.linalg.expm(L * dt)
    n_rec = n_steps // every + 1 + (1 if n_steps % every else 0)
    states = np.empty((n_rec, d, d), dtype=np.complex128)
    v = rho0.reshape(-1, order="F")
    states[0] = rho0
    r = 1
    drift = 0.0
    for step in range(1, n_steps + 1):
        v = P @ v
        if step % every == 0 or step == n_steps:
            rho = v.reshape(d, d, order="F")
            rho = 0.5 * (rho + rho.conj().T)
            states[r] = rho
            drift = max(drift, abs(np.trace(rho).real - 1.0))
            r += 1
    return states, drift


def steady_state(H: Hamiltonian, gamma, rho0=None, tol: float = 1e-9) -> np.ndarray:
    """Stationary state of the master equation.

    Without ``rho0`` the Liouvillian must have a one-dimensional null space.
    With ``rho0`` the long-time limit of that initial state is returned, which
    also covers degenerate cases such as a perfectly dark (subradiant) state.
    """
    L = liouvillian(H, gamma)
    d = H.dim
    w, vl, vr = scipy.linalg.eig(L, left=True, right=True)
    null = np.abs(w) < tol * max(1.0, float(np.abs(w).max()))
    if not np.any(null):
        raise StateError("Liouvillian has no stationary state")
    if rho0 is None:
        if null.sum() > 1:
            raise StateError(f"stationary state is not unique ({int(null.sum())} zero modes); pass rho0")
        v = vr[:, null][:, 0]
    else:
        R, Lf = vr[:, null], vl[:, null]
        v0 = validate_density_matrix(rho0).reshape(-1, order="F")
        v = R @ np.linalg.solve(Lf.conj().T @ R, Lf.conj().T @ v0)
    rho = v.reshape(d, d, order="F")
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)

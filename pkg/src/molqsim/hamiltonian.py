"""Dense RWA Hamiltonians for dimers and trimers.

Basis: binary-ascending bitstrings, site 1 is the most significant bit, so
for a dimer the order is |00>, |01>, |10>, |11>. Matrix entries are in GHz.
Transition frequencies are given in THz (lab frame) and converted to GHz.

Two frames are used:

``lab_rwa``
    H = -1/2 sum_i nu_i sigma_z^(i) + sum_{i<j} V_ij (s+_i s-_j + h.c.)

``laser_rotating``
    Rotating at ``frame_thz`` per excitation. Each site contributes
    (nu_i - nu_L)(n_i - 1/2) on the diagonal and a drive adds
    Omega/2 sigma_x^(i) on addressed sites. With Omega = 0 and
    nu_L = mean(nu) this is the frame used for bare dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

THZ = 1000.0  # GHz per THz

LAB = "lab_rwa"
ROTATING = "laser_rotating"


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True)
class Hamiltonian:
    matrix: np.ndarray
    n_qubits: int
    frame: str = LAB
    frame_thz: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (2**self.n_qubits,) * 2:
            raise HamiltonianError(f"matrix shape {m.shape} does not match {self.n_qubits} qubits")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > 1e-10 * scale:
            raise HamiltonianError("Hamiltonian is not Hermitian")
        if self.frame not in (LAB, ROTATING):
            raise HamiltonianError(f"unknown frame {self.frame!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def basis_labels(self) -> tuple[str, ...]:
        return basis_labels(self.n_qubits)

    def element(self, bra: str, ket: str) -> complex:
        return complex(self.matrix[int(bra, 2), int(ket, 2)])


@dataclass(frozen=True)
class LaserDrive:
    """Continuous-wave drive in the RWA.

    ``addressed`` is a tuple of booleans, one per site; ``None`` means every
    site (the diffraction-limited global beam).
    """

    rabi_ghz: float
    nu_l_thz: float
    addressed: tuple | None = None

    def __post_init__(self):
        if self.rabi_ghz < 0:
            raise HamiltonianError("Rabi frequency must be non-negative")
        if self.addressed is not None:
            mask = tuple(bool(a) for a in self.addressed)
            if self.rabi_ghz > 0 and not any(mask):
                raise HamiltonianError("an active drive must address at least one site")
            object.__setattr__(self, "addressed", mask)

    def mask(self, n: int) -> tuple:
        if self.addressed is None:
            return (True,) * n
        if len(self.addressed) > n and any(self.addressed[n:]):
            raise HamiltonianError(f"drive addresses a site beyond the {n} available")
        return tuple(self.addressed[:n]) + (False,) * max(0, n - len(self.addressed))


@lru_cache(maxsize=None)
def basis_labels(n: int) -> tuple[str, ...]:
    return tuple(format(k, f"0{n}b") for k in range(2**n))


@lru_cache(maxsize=None)
def _occupations(n: int) -> np.ndarray:
    """occ[k, i] = excitation of site i+1 in basis state k."""
    k = np.arange(2**n)
    occ = ((k[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1).astype(float)
    occ.setflags(write=False)
    return occ


def lowering(site: int, n: int) -> np.ndarray:
    """sigma_- = |0><1| acting on ``site`` (1-based)."""
    if not 1 <= site <= n:
        raise HamiltonianError(f"site {site} outside 1..{n}")
    sm = np.array([[0.0, 1.0], [0.0, 0.0]])
    return np.kron(np.kron(np.eye(2 ** (site - 1)), sm), np.eye(2 ** (n - site)))


def excitation_number(n: int) -> np.ndarray:
    return np.diag(_occupations(n).sum(axis=1))


def build_hamiltonian(nu_thz, couplings_ghz, drive: LaserDrive | None = None,
                      frame_thz: float | None = None) -> Hamiltonian:
    """General N-site builder.

    Parameters
    ----------
    nu_thz : sequence of float
        Site transition frequencies.
    couplings_ghz : (N, N) array
        Symmetric V_ij; the diagonal is ignored.
    drive : LaserDrive, optional
        Forces the laser frame at ``drive.nu_l_thz``.
    frame_thz : float, optional
        Rotating-frame frequency for an undriven Hamiltonian.
    """
    nu = np.asarray(nu_thz, dtype=float)
    n = nu.size
    if np.any(nu <= 0):
        raise HamiltonianError("transition frequencies must be positive")
    V = np.asarray(couplings_ghz, dtype=float)
    if V.shape != (n, n):
        raise HamiltonianError(f"couplings must be {n}x{n}")
    occ = _occupations(n)
    if drive is not None:
        frame_thz = drive.nu_l_thz
    if frame_thz is None:
        frame, detuning = LAB, nu * THZ
    else:
        frame, detuning = ROTATING, (nu - frame_thz) * THZ
    H = np.diag(occ @ detuning - 0.5 * detuning.sum()).astype(np.complex128)
    for i in range(n):
        for j in range(i + 1, n):
            if V[i, j] != 0.0:
                hop = lowering(i + 1, n).T @ lowering(j + 1, n)
                H += V[i, j] * (hop + hop.T)
    if drive is not None and drive.rabi_ghz > 0:
        for i, on in enumerate(drive.mask(n)):
            if on:
                sm = lowering(i + 1, n)
                H += 0.5 * drive.rabi_ghz * (sm + sm.T)
    return Hamiltonian(H, n, frame, frame_thz)


def rotating_frame(H: Hamiltonian, frame_thz: float) -> Hamiltonian:
    """Shift an undriven lab-frame Hamiltonian into a frame rotating at ``frame_thz``."""
    if H.frame != LAB:
        raise HamiltonianError("only lab-frame Hamiltonians can be shifted")
    n = H.n_qubits
    shift = frame_thz * THZ * (_occupations(n).sum(axis=1) - 0.5 * n)
    return Hamiltonian(H.matrix - np.diag(shift), n, ROTATING, frame_thz)


# ---------------------------------------------------------------------------
# dimer
# ---------------------------------------------------------------------------


def build_dimer(nu1_thz: float, nu2_thz: float, v12_ghz: float) -> Hamiltonian:
    """4x4 lab-frame dimer: diag(-nu0, -D/2, D/2, nu0), D = nu1 - nu2, <01|H|10> = V12."""
    return build_hamiltonian([nu1_thz, nu2_thz], [[0.0, v12_ghz], [v12_ghz, 0.0]])


def dimer_parameters(H: Hamiltonian) -> tuple[float, float, float]:
    """Recover (nu1_thz, nu2_thz, v12_ghz) from a lab-frame dimer matrix."""
    if H.n_qubits != 2 or H.frame != LAB:
        raise HamiltonianError("expected a lab-frame dimer Hamiltonian")
    m = H.matrix.real
    nu0 = m[3, 3] / THZ
    half_delta = m[2, 2] / THZ
    return nu0 + half_delta, nu0 - half_delta, float(m[1, 2])


def build_dimer_driven(base: Hamiltonian, drive: LaserDrive) -> Hamiltonian:
    nu1, nu2, v12 = dimer_parameters(base)
    return build_hamiltonian([nu1, nu2], [[0.0, v12], [v12, 0.0]], drive=drive)


def two_photon_laser_thz(nu1_thz: float, nu2_thz: float, delta_plus_ghz: float) -> float:
    """Laser frequency giving E'(|11>) - E'(|00>) = ``delta_plus_ghz`` in the laser frame.

    That splitting equals nu1 + nu2 - 2 nu_L, so ``delta_plus_ghz = 0`` is the
    two-photon resonance |00> <-> |11>.
    """
    return 0.5 * (nu1_thz + nu2_thz) - 0.5 * delta_plus_ghz / THZ


def exciton_splitting_ghz(delta_minus_ghz: float, v12_ghz: float) -> float:
    """2 sqrt((D/2)^2 + V^2): gap between the two single-excitation eigenstates."""
    return 2.0 * np.hypot(0.5 * delta_minus_ghz, v12_ghz)


# ---------------------------------------------------------------------------
# trimer
# ---------------------------------------------------------------------------


def _trimer_couplings(v, v13, v23=None):
    v23 = v if v23 is None else v23
    return np.array([[0.0, v, v13], [v, 0.0, v23], [v13, v23, 0.0]])


def build_trimer_bare(nu_thz: float, nu2_thz: float, v_ghz: float, v13_ghz: float) -> Hamiltonian:
    """8x8 lab-frame trimer with outer sites at ``nu_thz`` and the middle one at ``nu2_thz``."""
    return build_hamiltonian([nu_thz, nu2_thz, nu_thz], _trimer_couplings(v_ghz, v13_ghz))


def build_trimer_driven(nu_thz: float, nu2_thz: float, v_ghz: float, v13_ghz: float,
                        drive: LaserDrive, v23_ghz: float | None = None) -> Hamiltonian:
    """Laser-frame trimer; diagonal detunings are delta1 = 3(nu0 - nu_L), delta2 = nu2 - nu_L,
    delta3 = nu - Delta_- - nu_L, each halved, with Omega/2 on every single-flip entry."""
    return build_hamiltonian([nu_thz, nu2_thz, nu_thz], _trimer_couplings(v_ghz, v13_ghz, v23_ghz),
                             drive=drive)


# ---------------------------------------------------------------------------
# computational flip
# ---------------------------------------------------------------------------


def flip_operator(site: int, n: int) -> np.ndarray:
    sm = lowering(site, n)
    return sm + sm.T


def flip_qubit(rho: np.ndarray, site: int) -> np.ndarray:
    """Apply sigma_x on ``site`` (1-based, site 1 leftmost)."""
    rho = np.asarray(rho)
    n = int(round(np.log2(rho.shape[0])))
    if rho.shape != (2**n, 2**n):
        raise HamiltonianError("state is not a qubit density matrix")
    X = flip_operator(site, n)
    return X @ rho @ X

"""Named kets and density matrices in the shared computational basis."""
import numpy as np

SQRT2 = np.sqrt(2.0)


def ket(amplitudes: dict) -> np.ndarray:
    """Normalised ket from ``{"010": a, ...}``."""
    n = len(next(iter(amplitudes)))
    v = np.zeros(2**n, dtype=np.complex128)
    for label, a in amplitudes.items():
        if len(label) != n:
            raise ValueError("all labels must have the same length")
        v[int(label, 2)] = a
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero ket")
    return v / norm


def dm(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


def basis_dm(label: str) -> np.ndarray:
    return dm(ket({label: 1.0}))


def psi_plus():
    return ket({"01": 1, "10": 1})


def psi_minus():
    return ket({"01": 1, "10": -1})


def phi_plus():
    return ket({"00": 1, "11": 1})


def phi_minus():
    return ket({"00": 1, "11": -1})


def w_state():
    return ket({"001": 1, "010": 1, "100": 1})


def w_like_state():
    """(|001> - |010> + |100>)/sqrt(3)."""
    return ket({"001": 1, "010": -1, "100": 1})


def pairwise_13_state():
    """|Psi+>_13 (x) |0>_2."""
    return ket({"001": 1, "100": 1})


def calligraphic_w_state(phase_pi: float = -0.489):
    """(|100> + sqrt(2) e^{i phase pi} |010> + |001>)/2."""
    return ket({"100": 1, "010": SQRT2 * np.exp(1j * np.pi * phase_pi), "001": 1})


def werner(p: float) -> np.ndarray:
    return p * dm(psi_minus()) + (1 - p) / 4 * np.eye(4)


def ground_mixture(p: float, v) -> np.ndarray:
    """(1 - p)|0..0><0..0| + p |v><v|."""
    rho = p * dm(v)
    rho[0, 0] += 1 - p
    return rho


NAMED_STATES = {
    "000": lambda: basis_dm("000"),
    "010": lambda: basis_dm("010"),
    "w": lambda: dm(w_state()),
    "w_like": lambda: dm(w_like_state()),
    "pairwise": lambda: dm(pairwise_13_state()),
    "calligraphic_w": lambda: dm(calligraphic_w_state()),
}

"""State functionals: fidelity, two-qubit entanglement, negativity, Mermin.

Sites are 1-based throughout, matching :mod:`molqsim.hamiltonian`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import _kernels

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)

EIG_CLAMP = 1e-7


class QuantifyError(ValueError):
    pass


def _n_qubits(rho) -> int:
    d = np.asarray(rho).shape[0]
    n = int(round(math.log2(d)))
    if 2**n != d or np.asarray(rho).shape != (d, d):
        raise QuantifyError(f"not a qubit operator: shape {np.asarray(rho).shape}")
    return n


def psd_sqrt(a, tol: float = EIG_CLAMP) -> np.ndarray:
    """Square root of a Hermitian PSD matrix; eigenvalues in [-tol, 0) are clamped."""
    w, U = np.linalg.eigh(a)
    if w.min() < -tol:
        raise QuantifyError(f"matrix has a negative eigenvalue {w.min():.3g}")
    w = np.clip(w, 0.0, None)
    return (U * np.sqrt(w)) @ U.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(sigma) rho sqrt(sigma)) (not squared)."""
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if rho.shape != sigma.shape:
        raise QuantifyError("states have different dimensions")
    s = psd_sqrt(sigma)
    inner = s @ rho @ s
    inner = 0.5 * (inner + inner.conj().T)
    w = np.linalg.eigvalsh(inner)
    if w.min() < -EIG_CLAMP:
        raise QuantifyError("rho has a negative eigenvalue")
    return float(min(1.0, np.sqrt(np.clip(w, 0.0, None)).sum()))


def fidelity_pure(rho, psi) -> float:
    """Same as :func:`fidelity` for a pure target: sqrt(<psi|rho|psi>)."""
    psi = np.asarray(psi, dtype=np.complex128)
    return float(np.sqrt(max(0.0, np.real(psi.conj() @ np.asarray(rho) @ psi))))


_YY = np.kron(SIGMA_Y, SIGMA_Y)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise QuantifyError("concurrence needs a two-qubit state")
    R = rho @ _YY @ rho.conj() @ _YY
    lam = np.sqrt(np.abs(np.linalg.eigvals(R).real))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, c))
    return binary_entropy(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def eof(rho) -> float:
    """Entanglement of formation (bits) of a two-qubit state."""
    return eof_from_concurrence(concurrence(rho))


@dataclass(frozen=True)
class Bipartition:
    side_a: tuple
    side_b: tuple

    def __post_init__(self):
        a = tuple(sorted(int(s) for s in self.side_a))
        b = tuple(sorted(int(s) for s in self.side_b))
        if not a or not b or set(a) & set(b):
            raise QuantifyError(f"invalid bipartition {a}|{b}")
        if sorted(a + b) != list(range(1, len(a) + len(b) + 1)):
            raise QuantifyError(f"bipartition {a}|{b} does not cover sites 1..{len(a) + len(b)}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @property
    def n_sites(self) -> int:
        return len(self.side_a) + len(self.side_b)

    @classmethod
    def parse(cls, text: str) -> "Bipartition":
        """``"1|23"`` -> Bipartition((1,), (2, 3))."""
        left, _, right = text.strip("{} ").partition("|")
        return cls(tuple(int(c) for c in left if c.isdigit()), tuple(int(c) for c in right if c.isdigit()))

    def __str__(self):
        return "{" + "".join(map(str, self.side_a)) + "|" + "".join(map(str, self.side_b)) + "}"


def single_site_cuts(n: int = 3) -> list[Bipartition]:
    return [Bipartition((i,), tuple(j for j in range(1, n + 1) if j != i)) for i in range(1, n + 1)]


def partial_transpose(rho, sites) -> np.ndarray:
    rho = np.asarray(rho)
    n = _n_qubits(rho)
    t = rho.reshape((2,) * (2 * n))
    axes = list(range(2 * n))
    for s in sites:
        if not 1 <= s <= n:
            raise QuantifyError(f"site {s} outside 1..{n}")
        axes[s - 1], axes[n + s - 1] = axes[n + s - 1], axes[s - 1]
    return t.transpose(axes).reshape(rho.shape)


def partial_trace(rho, keep) -> np.ndarray:
    """Reduced state on the 1-based ``keep`` sites (kept in ascending order)."""
    rho = np.asarray(rho)
    n = _n_qubits(rho)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise QuantifyError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > n:
        raise QuantifyError(f"keep sites must lie in 1..{n}")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in range(1, n + 1):
        if s not in keep:
            col[s - 1] = row[s - 1]
    out = "".join(row[s - 1] for s in keep) + "".join(col[s - 1] for s in keep)
    k = len(keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape((2,) * (2 * n)))
    return reduced.reshape(2**k, 2**k)


def negativity(rho, part: Bipartition | str) -> float:
    """(||rho^{T_A}||_1 - 1)/2, so a Bell pair scores 0.5."""
    if isinstance(part, str):
        part = Bipartition.parse(part)
    n = _n_qubits(rho)
    if part.n_sites != n:
        raise QuantifyError(f"bipartition {part} does not match {n} qubits")
    pt = partial_transpose(rho, part.side_a)
    w = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(max(0.0, -w[w < 0].sum()))


# ---------------------------------------------------------------------------
# Mermin (3,2,2)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MerminSetting:
    """Angles of A_i = cos(theta_i) Z + sin(theta_i) X and B_i = cos(phi_i) Z + sin(phi_i) X."""

    theta: tuple
    phi: tuple

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        phi = tuple(float(p) for p in self.phi)
        if len(theta) != 3 or len(phi) != 3:
            raise QuantifyError("a Mermin setting has three theta and three phi angles")
        if any(abs(a) > math.pi + 1e-12 for a in theta + phi):
            raise QuantifyError("Mermin angles must lie in [-pi, pi]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def angles(self) -> np.ndarray:
        return np.array(self.theta + self.phi)

    @classmethod
    def from_angles(cls, x) -> "MerminSetting":
        x = np.asarray(x, dtype=float)
        x = np.mod(x + math.pi, 2 * math.pi) - math.pi
        return cls(tuple(x[:3]), tuple(x[3:]))


def _zx_observable(angle: float) -> np.ndarray:
    return math.cos(angle) * SIGMA_Z + math.sin(angle) * SIGMA_X


def mermin_operator(s: MerminSetting) -> np.ndarray:
    """A1B2B3 + B1A2B3 + B1B2A3 - A1A2A3 as an 8x8 matrix."""
    A = [_zx_observable(t) for t in s.theta]
    B = [_zx_observable(p) for p in s.phi]

    def prod(x, y, z):
        return np.kron(np.kron(x, y), z)

    return prod(A[0], B[1], B[2]) + prod(B[0], A[1], B[2]) + prod(B[0], B[1], A[2]) - prod(A[0], A[1], A[2])


def mermin_value(rho, s: MerminSetting) -> float:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (8, 8):
        raise QuantifyError("Mermin inequality needs a three-qubit state")
    return float(abs(np.trace(rho @ mermin_operator(s)).real))


def correlation_tensor(rho) -> np.ndarray:
    """T[a, b, c] = Tr(rho s_a s_b s_c) with s_0 = Z, s_1 = X."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (8, 8):
        raise QuantifyError("correlation tensor needs a three-qubit state")
    paulis = (SIGMA_Z, SIGMA_X)
    t = np.empty((2, 2, 2))
    for a, b, c in itertools.product(range(2), repeat=3):
        op = np.kron(np.kron(paulis[a], paulis[b]), paulis[c])
        t[a, b, c] = np.trace(rho @ op).real
    return t


def mermin_from_tensor(t, x) -> float:
    u = np.stack([np.cos(x), np.sin(x)], axis=1)
    a1, a2, a3, b1, b2, b3 = u

    def c(p, q, r):
        return np.einsum("abc,a,b,c->", t, p, q, r)

    return float(abs(c(a1, b2, b3) + c(b1, a2, b3) + c(b1, b2, a3) - c(a1, a2, a3)))


def _simplex_refine(f, x0, step, tol, max_iter=20000):
    """Nelder-Mead ascent from ``x0`` with an initial simplex of edge ``step``."""
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0, x0 + step * np.eye(x0.size)])
    res = scipy.optimize.minimize(lambda y: -f(y), x0, method="Nelder-Mead",
                                  options=dict(initial_simplex=simplex, xatol=tol, fatol=1e-13,
                                               maxiter=max_iter, maxfev=max_iter))
    return res.x, -res.fun


def mermin_maximize(rho, grid_points: int = 13, top_k: int = 8, step_tol: float = 1e-5):
    """Grid scan over all six angles in [-pi, pi], then simplex refinement.

    The grid has ``grid_points`` values per angle (13**6 settings by default).
    The ``top_k`` best cells seed a Nelder-Mead ascent whose initial simplex
    has edge half the grid spacing and which contracts until the simplex is
    smaller than ``step_tol`` rad. The result is a lower
    bound on the true maximum. Ties go to the lexicographically smallest
    angle tuple, so the outcome does not depend on evaluation order.

    Returns
    -------
    value : float
    setting : MerminSetting
    """
    t = correlation_tensor(rho)
    angles = np.linspace(-math.pi, math.pi, int(grid_points))
    values = _kernels.mermin_grid(np.ascontiguousarray(t), angles).ravel()
    k = min(int(top_k), values.size)
    kth = np.partition(values, values.size - k)[values.size - k]
    cand = np.flatnonzero(values >= kth - 1e-12)
    order = np.lexsort((cand, -np.round(values[cand], 12)))
    seeds = cand[order[:k]]

    spacing = angles[1] - angles[0] if angles.size > 1 else math.pi
    best = None
    for flat in seeds:
        idx = np.unravel_index(flat, (angles.size,) * 6)
        x0 = angles[list(idx)]
        x, fx = _simplex_refine(lambda y: mermin_from_tensor(t, y), x0, 0.5 * spacing, step_tol)
        setting = MerminSetting.from_angles(x)
        key = (-round(fx, 12), setting.theta + setting.phi)
        if best is None or key < best[0]:
            best = (key, fx, setting)
    return best[1], best[2]

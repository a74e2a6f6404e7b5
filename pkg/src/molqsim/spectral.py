"""Eigensystems of the bare Hamiltonians, numeric and closed-form (trimer)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import LAB, THZ, Hamiltonian, basis_labels, build_trimer_bare
from .quantify import negativity, single_site_cuts

ENTANGLEMENT_THRESHOLD = 1e-6


class SpectralError(ValueError):
    pass


class DegenerateConfigurationError(SpectralError):
    """Closed-form normalisation vanishes; use :func:`eigensystem_numeric`."""


@dataclass(frozen=True)
class EigenSystem:
    """Ascending energies with eigenvectors stored as columns of ``states``."""

    energies: np.ndarray
    states: np.ndarray
    units: str
    labels: tuple | None = None

    def __post_init__(self):
        if self.states.shape != (self.energies.size, self.energies.size):
            raise SpectralError("one eigenvector per energy required")
        if np.any(np.diff(self.energies) < 0):
            raise SpectralError("energies must be ascending")
        if self.labels is not None and len(self.labels) != self.energies.size:
            raise SpectralError("one label per energy required")

    def __len__(self):
        return self.energies.size

    def vector(self, k: int) -> np.ndarray:
        return self.states[:, k]

    def index(self, label: str) -> int:
        if self.labels is None or label not in self.labels:
            raise KeyError(label)
        return self.labels.index(label)

    def by_label(self, label: str) -> tuple[float, np.ndarray]:
        k = self.index(label)
        return float(self.energies[k]), self.states[:, k]

    def projector(self, label: str) -> np.ndarray:
        v = self.by_label(label)[1]
        return np.outer(v, v.conj())


def _fix_phase(v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    # largest-magnitude component made real-positive; ties go to the lowest index
    mag = np.abs(v)
    k = int(np.flatnonzero(mag >= mag.max() - tol)[0])
    return v * (abs(v[k]) / v[k])


def eigensystem_numeric(H: Hamiltonian, labels: tuple | None = None) -> EigenSystem:
    """Dense Hermitian diagonalisation.

    Lab-frame energies are returned in THz, rotating-frame ones in GHz.
    """
    m = H.matrix
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > 1e-10 * scale:
        raise SpectralError("Hamiltonian is not Hermitian")
    w, U = np.linalg.eigh(m)
    U = np.column_stack([_fix_phase(U[:, k]) for k in range(w.size)])
    if H.frame == LAB:
        return EigenSystem(w / THZ, U, "THz", labels)
    return EigenSystem(w, U, "GHz", labels)


def _coeff_pair(delta: float, shift: float, v: float):
    """(2V / sqrt(2 D (D + s)), sqrt((D + s) / (2 D)))."""
    den = delta + shift
    if delta <= 0.0 or den <= 1e-12 * max(1.0, abs(delta)):
        raise DegenerateConfigurationError(
            "closed-form normalisation vanishes for this configuration; use eigensystem_numeric")
    return 2.0 * v / math.sqrt(2.0 * delta * den), math.sqrt(den / (2.0 * delta))


def trimer_eigensystem_analytic(nu_thz: float, nu2_thz: float, v_ghz: float, v13_ghz: float) -> EigenSystem:
    """Closed-form eigensystem of the bare lab-frame trimer.

    With D- = nu2 - nu and Delta(+/-) = sqrt(8 V^2 + (V13 +/- D-)^2) the
    single-excitation states are (|001> - |100>)/sqrt2 and two mixtures of
    (|001> + |100>) with |010>; the double-excitation sector mirrors them.
    Energies are in THz, ordered ascending, labelled E1..E8 in the
    conventional (formula) order.
    """
    nu = nu_thz * THZ
    nu2 = nu2_thz * THZ
    v, v13 = float(v_ghz), float(v13_ghz)
    dm = nu2 - nu
    nu0 = (2.0 * nu + nu2) / 3.0
    d_minus = math.sqrt(8.0 * v * v + (v13 - dm) ** 2)
    d_plus = math.sqrt(8.0 * v * v + (v13 + dm) ** 2)

    idx = {lab: k for k, lab in enumerate(basis_labels(3))}

    def vec(entries):
        out = np.zeros(8, dtype=np.complex128)
        for lab, c in entries.items():
            out[idx[lab]] = c
        return out

    r2 = 1.0 / math.sqrt(2.0)
    a3, b3 = _coeff_pair(d_minus, v13 - dm, v)
    a4, b4 = _coeff_pair(d_minus, -v13 + dm, v)
    a5, b5 = _coeff_pair(d_plus, v13 + dm, v)
    a6, b6 = _coeff_pair(d_plus, -v13 - dm, v)

    table = [
        ("E1", -1.5 * nu0, vec({"000": 1.0})),
        ("E2", -(nu2 / 2.0 + v13), vec({"001": -r2, "100": r2})),
        ("E3", -0.5 * (nu - v13 + d_minus), vec({"001": a3, "100": a3, "010": -b3})),
        ("E4", -0.5 * (nu - v13 - d_minus), vec({"001": a4, "100": a4, "010": b4})),
        ("E5", 0.5 * (nu + v13 - d_plus), vec({"011": a5, "110": a5, "101": -b5})),
        ("E6", 0.5 * (nu + v13 + d_plus), vec({"011": a6, "110": a6, "101": b6})),
        ("E7", nu2 / 2.0 - v13, vec({"011": -r2, "110": r2})),
        ("E8", 1.5 * nu0, vec({"111": 1.0})),
    ]
    order = sorted(range(8), key=lambda k: (table[k][1], k))
    energies = np.array([table[k][1] for k in order]) / THZ
    states = np.column_stack([table[k][2] for k in order])
    labels = tuple(table[k][0] for k in order)
    return EigenSystem(energies, states, "THz", labels)


def label_by_overlap(numeric: EigenSystem, reference: EigenSystem) -> EigenSystem:
    """Copy ``reference`` labels onto ``numeric`` by maximal overlap."""
    if reference.labels is None:
        raise SpectralError("reference has no labels")
    ov = np.abs(reference.states.conj().T @ numeric.states) ** 2
    labels = [None] * len(numeric)
    taken = set()
    for r in np.argsort(-ov.max(axis=1)):
        for k in np.argsort(-ov[r]):
            if k not in taken:
                labels[k] = reference.labels[r]
                taken.add(k)
                break
    return EigenSystem(numeric.energies, numeric.states, numeric.units, tuple(labels))


def subspace_overlap(v: np.ndarray, es: EigenSystem, energy: float, tol: float) -> float:
    """Norm of the projection of ``v`` onto eigenvectors of ``es`` within ``tol`` of ``energy``."""
    sel = np.abs(es.energies - energy) <= tol
    if not np.any(sel):
        return 0.0
    return float(np.linalg.norm(es.states[:, sel].conj().T @ v))


def eigenstate_entanglement_class(state) -> str:
    """"product", "pairwise" or "tripartite" from the three single-site cuts."""
    v = np.asarray(state, dtype=np.complex128).reshape(-1)
    if v.size != 8:
        raise SpectralError("expected an 8-component (three-qubit) vector")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise SpectralError("state is not normalised")
    rho = np.outer(v, v.conj())
    entangled = sum(negativity(rho, cut) > ENTANGLEMENT_THRESHOLD for cut in single_site_cuts(3))
    if entangled == 0:
        return "product"
    if entangled == 3:
        return "tripartite"
    return "pairwise"


# Parameter sets of the two tabulated trimer spectra. The second table is
# reproduced with nu2 = nu + 1.2 THz (D- = 1200 GHz); 701 THz is its rounding.
SPECTRUM_PRESETS = {
    "d2": dict(nu_thz=700.0, nu2_thz=712.0, v_ghz=1200.0, v13_ghz=-120.0),
    "d3": dict(nu_thz=700.0, nu2_thz=701.2, v_ghz=1200.0, v13_ghz=-120.0),
}


def preset_hamiltonian(name: str) -> Hamiltonian:
    p = SPECTRUM_PRESETS[name]
    return build_trimer_bare(p["nu_thz"], p["nu2_thz"], p["v_ghz"], p["v13_ghz"])


def spectrum_table(name: str) -> list[dict]:
    """Rows (label, energy_thz, numeric energy, coefficients, class) for a preset."""
    p = SPECTRUM_PRESETS[name]
    ana = trimer_eigensystem_analytic(**p)
    num = label_by_overlap(eigensystem_numeric(preset_hamiltonian(name)), ana)
    rows = []
    for lab in sorted(ana.labels, key=lambda s: int(s[1:])):
        e_a, v_a = ana.by_label(lab)
        e_n, v_n = num.by_label(lab)
        # align the numeric vector's global sign with the closed form
        phase = np.vdot(v_n, v_a)
        v_n = v_n * (phase / abs(phase) if abs(phase) > 0 else 1.0)
        rows.append({
            "label": lab,
            "energy_thz": e_a,
            "energy_numeric_thz": e_n,
            "coefficients": {b: float(v_a[k].real) for k, b in enumerate(basis_labels(3)) if abs(v_a[k]) > 1e-12},
            "coefficients_numeric": {b: float(v_n[k].real) for k, b in enumerate(basis_labels(3)) if abs(v_n[k]) > 1e-12},
            "class": eigenstate_entanglement_class(v_n),
        })
    return rows

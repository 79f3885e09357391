"""Lumped four-node circuit -> normal modes -> cross-Kerr mode parameters.

All stored energies and frequencies are ordinary frequencies in Hz (energy/h).
Capacitances are in farads. The one conversion between the Hz-valued
inductive Laplacian and inverse henries lives in ``LAPLACIAN_TO_INV_HENRY``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.constants import e, h, hbar

from .errors import (AsymmetryWarning, DegenerateSpectrum, NonPositiveDefinite,
                     ValidationError)

MODES = ("A", "B", "C")
NODES = (1, 2, 3, 4)
RING = ((1, 2), (2, 3), (3, 4), (1, 4))
PAIRS = tuple(combinations(NODES, 2))
CROSS_PAIRS = (("A", "B"), ("B", "C"), ("C", "A"))

#: reduced flux quantum hbar/2e, in webers
PHI0 = hbar / (2 * e)
#: multiplies a Laplacian of Josephson energies in Hz to give inverse inductance in 1/H
LAPLACIAN_TO_INV_HENRY = h / PHI0**2

FEMTO = 1e-15


def _pair(i, j):
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class CircuitSpec:
    """Pairwise/ground capacitances (F) and ring-junction energies (Hz)."""

    pairwise_capacitance: dict
    ground_capacitance: dict
    josephson_energy: dict

    def __post_init__(self):
        pw = {_pair(*k): float(v) for k, v in self.pairwise_capacitance.items()}
        for k in pw:
            if k not in PAIRS:
                raise ValidationError(f"pairwise capacitance key {k} is not a node pair")
        pw = {k: pw.get(k, 0.0) for k in PAIRS}
        gr = {int(k): float(v) for k, v in self.ground_capacitance.items()}
        if set(gr) != set(NODES):
            raise ValidationError("ground capacitance needed for each of nodes 1..4")
        ej = {_pair(*k): float(v) for k, v in self.josephson_energy.items()}
        extra = set(ej) - set(RING)
        if extra and any(ej[k] != 0 for k in extra):
            raise ValidationError(f"junctions only on ring pairs {RING}, got {sorted(extra)}")
        ej = {k: ej.get(k, 0.0) for k in RING}
        if any(v < 0 for v in pw.values()):
            raise ValidationError("capacitances must be non-negative")
        if any(v <= 0 for v in gr.values()):
            raise ValidationError("ground capacitances must be strictly positive")
        if any(v < 0 for v in ej.values()):
            raise ValidationError("Josephson energies must be non-negative")
        object.__setattr__(self, "pairwise_capacitance", pw)
        object.__setattr__(self, "ground_capacitance", gr)
        object.__setattr__(self, "josephson_energy", ej)

    @classmethod
    def from_femtofarads(cls, pairwise, ground, ej_hz):
        """Build from capacitances in fF; ``ej_hz`` is a scalar or a per-ring-pair dict."""
        if np.isscalar(ej_hz):
            ej_hz = {p: float(ej_hz) for p in RING}
        return cls({k: v * FEMTO for k, v in pairwise.items()},
                   {k: v * FEMTO for k, v in ground.items()}, dict(ej_hz))

    def scaled(self, capacitance=1.0, josephson=1.0):
        return CircuitSpec({k: v * capacitance for k, v in self.pairwise_capacitance.items()},
                           {k: v * capacitance for k, v in self.ground_capacitance.items()},
                           {k: v * josephson for k, v in self.josephson_energy.items()})


@dataclass(frozen=True)
class MaxwellMatrices:
    C: np.ndarray
    EL: np.ndarray


@dataclass(frozen=True)
class NormalModes:
    frequencies: np.ndarray
    mode_vectors: np.ndarray

    @property
    def dynamical(self):
        """Indices of the three nonzero modes, ascending in frequency."""
        return np.argsort(self.frequencies)[1:]


@dataclass(frozen=True)
class ModeParams:
    """Coefficients of the diagonal cross-Kerr Hamiltonian, all in Hz.

    ``omega`` is the mode frequency parameter, so the bare 0->1 transition of
    mode mu (others empty) sits at ``omega[mu] - self_kerr[mu]``.
    ``cross_kerr`` is ordered (AB, BC, CA).
    """

    omega: tuple
    self_kerr: tuple
    cross_kerr: tuple
    charging: tuple = (float("nan"),) * 3
    josephson: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("omega", "self_kerr", "cross_kerr", "charging"):
            val = tuple(float(x) for x in getattr(self, name))
            if len(val) != 3:
                raise ValidationError(f"{name} needs three entries")
            object.__setattr__(self, name, val)

    def cross(self, mu, nu):
        """Cross-Kerr J_mu,nu for mode labels or indices."""
        i = MODES.index(mu) if isinstance(mu, str) else int(mu)
        j = MODES.index(nu) if isinstance(nu, str) else int(nu)
        if i == j:
            raise ValueError("cross-Kerr needs two distinct modes")
        return float(self.cross_matrix()[i, j])

    def cross_matrix(self):
        K = np.zeros((3, 3))
        for k, (a, b) in enumerate(CROSS_PAIRS):
            i, j = MODES.index(a), MODES.index(b)
            K[i, j] = K[j, i] = self.cross_kerr[k]
        return K

    @property
    def base_transitions(self):
        """0->1 frequency of each mode with the spectators empty."""
        return tuple(w - j for w, j in zip(self.omega, self.self_kerr))

    @classmethod
    def from_measured(cls, f01, anharmonicity, dispersive_shift, **kw):
        """From 0->1 frequencies, anharmonicities 2J_mu and splittings 2J_mu,nu (Hz, positive)."""
        J = [a / 2 for a in anharmonicity]
        return cls(omega=[f + j for f, j in zip(f01, J)], self_kerr=J,
                   cross_kerr=[s / 2 for s in dispersive_shift], **kw)

    def with_offsets(self, offsets):
        """Shift the mode frequency parameters by ``offsets`` (Hz)."""
        return ModeParams(tuple(np.add(self.omega, offsets)), self.self_kerr, self.cross_kerr,
                          self.charging, self.josephson, dict(self.meta))

    def to_json(self):
        """Flat JSON document.

        ``omega_ghz`` holds the observable mode frequencies (0->1 with spectators
        empty); ``omega_param_ghz`` holds the Hamiltonian coefficients omega_mu.
        """
        return {
            "omega_ghz": dict(zip(MODES, (w / 1e9 for w in self.base_transitions))),
            "omega_param_ghz": dict(zip(MODES, (w / 1e9 for w in self.omega))),
            "self_kerr_mhz": dict(zip(MODES, (j / 1e6 for j in self.self_kerr))),
            "cross_kerr_mhz": {a + b: j / 1e6 for (a, b), j in zip(CROSS_PAIRS, self.cross_kerr)},
            "ec_mhz": dict(zip(MODES, (c / 1e6 for c in self.charging))),
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        ec = doc.get("ec_mhz")
        J = [doc["self_kerr_mhz"][m] * 1e6 for m in MODES]
        if "omega_param_ghz" in doc:
            omega = [doc["omega_param_ghz"][m] * 1e9 for m in MODES]
        else:
            omega = [doc["omega_ghz"][m] * 1e9 + j for m, j in zip(MODES, J)]
        return cls(
            omega=omega,
            self_kerr=J,
            cross_kerr=[doc["cross_kerr_mhz"][a + b] * 1e6 for a, b in CROSS_PAIRS],
            charging=[(ec[m] if ec and ec[m] is not None else float("nan")) * 1e6 for m in MODES],
        )


def build_maxwell(spec: CircuitSpec) -> MaxwellMatrices:
    """Capacitance matrix (F) and Josephson Laplacian (Hz) of the four-node circuit."""
    C = np.zeros((4, 4))
    EL = np.zeros((4, 4))
    for (i, j), c in spec.pairwise_capacitance.items():
        C[i - 1, j - 1] = C[j - 1, i - 1] = -c
    for (i, j), ej in spec.josephson_energy.items():
        EL[i - 1, j - 1] = EL[j - 1, i - 1] = -ej
    for k in NODES:
        C[k - 1, k - 1] = spec.ground_capacitance[k] - (C[k - 1].sum() - C[k - 1, k - 1])
        EL[k - 1, k - 1] = 0.0
        EL[k - 1, k - 1] = -EL[k - 1].sum()
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefinite("capacitance matrix is not positive definite") from exc
    return MaxwellMatrices(C, EL)


def normal_modes(m: MaxwellMatrices) -> NormalModes:
    """Simultaneously diagonalize C and E_L via the symmetric form C^-1/2 E_L C^-1/2.

    Returns frequencies in Hz (ascending; the first is the gauge zero mode)
    and M with M^T C M = 1.
    """
    c_eval, c_evec = np.linalg.eigh(m.C)
    if np.any(c_eval <= 0):
        raise NonPositiveDefinite("capacitance matrix is not positive definite")
    c_inv_sqrt = (c_evec / np.sqrt(c_eval)) @ c_evec.T
    psi = c_inv_sqrt @ (m.EL * LAPLACIAN_TO_INV_HENRY) @ c_inv_sqrt
    psi = 0.5 * (psi + psi.T)
    w2, A = np.linalg.eigh(psi)
    # round-off can leave the gauge eigenvalue slightly negative
    w2 = np.where(np.abs(w2) < 1e-9 * np.abs(w2).max(), 0.0, w2)
    if np.any(w2 < 0):
        raise NonPositiveDefinite("inductive Laplacian is not positive semidefinite")
    freqs = np.sqrt(w2) / (2 * np.pi)
    M = c_inv_sqrt @ A
    nz = np.sort(freqs[1:])
    if np.any(np.diff(nz) <= 1e-6 * nz[1:]):
        warnings.warn("degenerate nonzero normal-mode frequencies", DegenerateSpectrum, stacklevel=2)
    return NormalModes(freqs, M)


def effective_charging_energies(spec: CircuitSpec):
    """Closed-form charging energies (E_CA, E_CB, E_CC) in Hz for the near-symmetric trimon.

    The neighbour capacitance C_C is taken as the mean of the four ring-adjacent
    pairwise capacitances.
    """
    pw, g = spec.pairwise_capacitance, spec.ground_capacitance
    for a, b in ((1, 3), (2, 4)):
        if abs(g[a] - g[b]) > 0.1 * 0.5 * (g[a] + g[b]):
            warnings.warn(f"ground capacitances of nodes {a} and {b} differ by more than 10%",
                          AsymmetryWarning, stacklevel=2)
    cA, cB = pw[(1, 3)], pw[(2, 4)]
    cC = float(np.mean([pw[p] for p in RING]))
    c11, c22 = g[1], g[2]
    ecA = e**2 / (2 * (cC + cA) + c11)
    ecB = e**2 / (2 * (cC + cB) + c22)
    ecC = e**2 / (4 * cC + c11 + c22 + np.sqrt(16 * cC**2 + (c11 - c22) ** 2))
    return ecA / h, ecB / h, ecC / h


def _common_josephson(spec):
    vals = np.array(list(spec.josephson_energy.values()))
    return float(vals.mean())


def mode_params(spec: CircuitSpec) -> ModeParams:
    """Closed-form weak-anharmonicity mode parameters for the near-symmetric trimon.

    Uses the mean junction energy when the four junctions differ.  See
    :func:`quantize_modes` for the numerically exact spectrum of the same circuit.
    """
    ecA, ecB, ecC = effective_charging_energies(spec)
    ej = _common_josephson(spec)
    J = (ecA / 8, ecB / 8, ecC / 2)
    jAB = np.sqrt(ecA * ecB) / 4
    jBC = np.sqrt(ecC * ecB) / 2
    jCA = np.sqrt(ecA * ecC) / 2
    beta = (J[0] + jAB + jCA, J[1] + jAB + jBC, J[2] + jBC + jCA)
    omega = (np.sqrt(8 * ej * ecA) - beta[0],
             np.sqrt(8 * ej * ecB) - beta[1],
             np.sqrt(32 * ej * ecC) - beta[2])
    return ModeParams(omega, J, (jAB, jBC, jCA), (ecA, ecB, ecC), ej,
                      meta={"method": "closed-form"})


def junction_phase_participation(spec: CircuitSpec, modes: NormalModes | None = None):
    """Zero-point phase across each ring junction for each dynamical mode, shape (4, 3)."""
    if modes is None:
        modes = normal_modes(build_maxwell(spec))
    idx = modes.dynamical
    w = 2 * np.pi * modes.frequencies[idx]
    M = modes.mode_vectors[:, idx]
    zpf = np.sqrt(hbar / (2 * w))
    out = np.empty((len(RING), 3))
    for j, (a, b) in enumerate(RING):
        out[j] = (M[a - 1] - M[b - 1]) * zpf / PHI0
    return out


def quantize_modes(spec: CircuitSpec, levels: int = 8, return_spectrum: bool = False):
    """Mode parameters from exact diagonalization of the junction cosines in the normal-mode basis.

    The harmonic part comes from :func:`normal_modes`; every junction contributes
    ``-E_J (cos phi + phi^2/2 - 1)`` with ``phi`` expanded in the ladder
    operators of the three dynamical modes, truncated at ``levels`` per mode.
    The resulting spectrum is mapped onto the cross-Kerr form through the
    energies of |1_mu>, |2_mu> and |1_mu 1_nu>.
    """
    if levels < 3:
        raise ValidationError("need at least 3 levels per mode to read off self-Kerr")
    modes = normal_modes(build_maxwell(spec))
    phi = junction_phase_participation(spec, modes)
    f = modes.frequencies[modes.dynamical]
    a = np.diag(np.sqrt(np.arange(1, levels)), 1)
    eye = np.eye(levels)

    def embed(op, k):
        ops = [eye, eye, eye]
        ops[k] = op
        return np.kron(np.kron(ops[0], ops[1]), ops[2])

    x = [embed(a + a.T, k) for k in range(3)]
    H = np.diag(sum(f[k] * embed(np.diag(np.arange(levels, dtype=float)), k).diagonal()
                    for k in range(3)))
    dim = levels**3
    for j, pair in enumerate(RING):
        ej = spec.josephson_energy[pair]
        if ej == 0:
            continue
        p = sum(phi[j, k] * x[k] for k in range(3))
        ev, V = np.linalg.eigh(p)
        cos_p = (V * np.cos(ev)) @ V.T
        H -= ej * (cos_p + 0.5 * p @ p - np.eye(dim))
    E, V = np.linalg.eigh(H)

    def energy(n):
        k = (n[0] * levels + n[1]) * levels + n[2]
        return E[np.argmax(np.abs(V[k]) ** 2)]

    e0 = energy((0, 0, 0))
    unit = np.eye(3, dtype=int)
    e1 = [energy(tuple(unit[k])) - e0 for k in range(3)]
    e2 = [energy(tuple(2 * unit[k])) - e0 for k in range(3)]
    J = [-(e2[k] - 2 * e1[k]) / 2 for k in range(3)]
    cross = []
    for a_, b_ in CROSS_PAIRS:
        i, k = MODES.index(a_), MODES.index(b_)
        e11 = energy(tuple(unit[i] + unit[k])) - e0
        cross.append(-(e11 - e1[i] - e1[k]) / 2)
    omega = [e1[k] + J[k] for k in range(3)]
    params = ModeParams(omega, J, cross, effective_charging_energies_quiet(spec),
                        _common_josephson(spec),
                        meta={"method": "quantized", "levels": levels,
                              "harmonic_hz": tuple(float(x) for x in f)})
    if return_spectrum:
        return params, E - E[0]
    return params


def effective_charging_energies_quiet(spec):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymmetryWarning)
        return effective_charging_energies(spec)


def conditional_frequencies(p: ModeParams) -> dict:
    """The twelve spectator-conditioned 0->1 transition frequencies (Hz).

    Keys follow the driven-mode-letter convention, e.g. ``"1B0"`` is mode B
    with A in |1> and C in |0>.  Values are energy differences of the diagonal
    cross-Kerr Hamiltonian.
    """
    from .hilbert import SpaceSpec, energies, transition_frequency, TRANSITIONS, transition_states

    space = SpaceSpec(2)
    diag = energies(p, space)
    return {lab: transition_frequency(diag, *transition_states(lab), space=space)
            for lab in TRANSITIONS}


def load_circuit_config(cfg) -> CircuitSpec:
    """CircuitSpec from a mapping using the ``capacitance.*`` / ``junction.*`` schema (fF, GHz)."""
    from .config import get_path

    pw = get_path(cfg, "capacitance.pairwise")
    gr = get_path(cfg, "capacitance.ground")
    ej = get_path(cfg, "junction.ej_ghz")

    def pair_key(k):
        s = str(k).replace("_", "").replace("-", "")
        if len(s) != 2 or not s.isdigit():
            raise ValidationError(f"bad node pair key {k!r}")
        return _pair(int(s[0]), int(s[1]))

    pairwise = {pair_key(k): float(v) for k, v in pw.items()}
    ground = {int(k): float(v) for k, v in gr.items()}
    if isinstance(ej, dict):
        ej_hz = {pair_key(k): float(v) * 1e9 for k, v in ej.items()}
    else:
        ej_hz = float(ej) * 1e9
    return CircuitSpec.from_femtofarads(pairwise, ground, ej_hz)

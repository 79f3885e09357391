"""Two-qubit state and process tomography with confusion-matrix and reference-run SPAM correction.

Density matrices live on |nA nB> (first label on the first qubit).  Process
matrices use the unnormalised Pauli products ordered II, IX, IY, IZ, XI, ...,
ZZ, with E(rho) = sum_mn chi_mn P_m rho P_n, so a trace-preserving map has
trace(chi) = 1.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import sqrtm
from scipy.optimize import least_squares

from .errors import (InconsistentGrid, NonPSDInput, OptimizerStall, SingularConfusion,
                     ValidationError)
from .measurement import basis_rotation

_P1 = {"I": np.eye(2, dtype=complex), "X": np.array([[0, 1], [1, 0]], dtype=complex),
       "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0]).astype(complex)}
PAULI_LABELS = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2))
PAULIS = np.array([np.kron(_P1[l[0]], _P1[l[1]]) for l in PAULI_LABELS])
BASES = tuple(a + b for a, b in itertools.product("XYZ", repeat=2))
PSD_TOL = 1e-6


def _rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


#: single-qubit preparation / pre-measurement rotations
PREP_ROTATIONS = {"I": np.eye(2, dtype=complex), "Rx(pi)": _rx(np.pi),
                  "Rx(pi/2)": _rx(np.pi / 2), "Rx(-pi/2)": _rx(-np.pi / 2),
                  "Ry(pi/2)": _ry(np.pi / 2), "Ry(-pi/2)": _ry(-np.pi / 2)}


def two_qubit_settings():
    """(label, 4x4 rotation) for all 36 products of the single-qubit rotations."""
    out = []
    for a, b in itertools.product(PREP_ROTATIONS, repeat=2):
        out.append((f"{a},{b}", np.kron(PREP_ROTATIONS[a], PREP_ROTATIONS[b])))
    return out


@dataclass
class DensityEstimate:
    rho: np.ndarray
    log: dict = field(default_factory=dict)


@dataclass
class ChiMatrix:
    chi: np.ndarray
    spam_corrected: bool = False
    raw: np.ndarray | None = None
    min_eigenvalue: float = 0.0

    def to_json(self):
        return {"labels": list(PAULI_LABELS), "spam_corrected": self.spam_corrected,
                "min_eigenvalue": self.min_eigenvalue,
                "chi": [[[float(z.real), float(z.imag)] for z in row] for row in self.chi]}

    @classmethod
    def from_json(cls, d):
        chi = np.array([[complex(*z) for z in row] for row in d["chi"]])
        return cls(chi, bool(d.get("spam_corrected", False)),
                   min_eigenvalue=float(d.get("min_eigenvalue", 0.0)))


# -- SPAM correction and state tomography ------------------------------------------

def spam_correct_probs(probs, confusion):
    """Invert the confusion matrix, clip to [0, 1] and renormalise.

    Returns (corrected probabilities, total clipped magnitude).
    """
    C = np.asarray(confusion, dtype=float)
    if np.linalg.cond(C) >= 1e6:
        raise SingularConfusion(f"confusion matrix condition number {np.linalg.cond(C):.3g}")
    p = np.linalg.solve(C, np.asarray(probs, dtype=float))
    q = np.clip(p, 0.0, 1.0)
    clip = float(np.abs(p - q).sum())
    return q / q.sum(), clip


def measurement_operators(bases=BASES):
    """Projectors (basis, outcome) for local Pauli-basis measurements."""
    ops = []
    for b in bases:
        U = basis_rotation(b)
        for k in range(4):
            e = np.zeros(4)
            e[k] = 1
            ops.append(U.conj().T @ np.outer(e, e) @ U)
    return np.array(ops)


def _t_to_rho(x):
    T = np.zeros((4, 4), dtype=complex)
    T[np.diag_indices(4)] = x[:4]
    il = np.tril_indices(4, -1)
    T[il] = x[4:10] + 1j * x[10:16]
    R = T.conj().T @ T
    return R / np.real(np.trace(R))


def qst_mle(data: dict, confusion=None, shots=None, tol=1e-10, restarts=3, seed=0):
    """Maximum-likelihood-style least-squares state estimate over the nine local Pauli bases.

    ``data`` maps a basis string ("XX" ... "ZZ") to outcome probabilities or
    counts over 00, 01, 10, 11.  With ``confusion`` each vector is
    SPAM-corrected first.  The 16 real parameters of a lower-triangular T
    define rho = T^dag T / tr(T^dag T); the fit starts from rho = I/4.
    """
    missing = [b for b in BASES if b not in data]
    if missing:
        raise ValidationError(f"missing measurement bases {missing}")
    probs = []
    clipped = 0.0
    for b in BASES:
        v = np.asarray(data[b], dtype=float)
        v = v / v.sum()
        if confusion is not None:
            v, c = spam_correct_probs(v, confusion)
            clipped += c
        probs.append(v)
    p = np.concatenate(probs)
    M = measurement_operators()

    def resid(x):
        rho = _t_to_rho(x)
        return np.real(np.einsum("kij,ji->k", M, rho)) - p

    x0 = np.concatenate([np.full(4, 0.5), np.zeros(12)])
    rng = np.random.default_rng(seed)
    floor = None if shots is None else np.sqrt(np.sum(p * (1 - p)) / shots)
    best = None
    for attempt in range(restarts + 1):
        fit = least_squares(resid, x0, method="lm", xtol=tol, ftol=tol, gtol=tol, max_nfev=20000)
        norm = float(np.linalg.norm(fit.fun))
        if best is None or norm < best[1]:
            best = (fit, norm)
        if floor is None or norm <= 10 * floor:
            break
        x0 = rng.normal(0, 0.5, 16)
        x0[:4] = np.abs(x0[:4]) + 0.1
    fit, norm = best
    if floor is not None and norm > 10 * floor:
        raise OptimizerStall(f"residual {norm:.3g} above 10x shot-noise floor {floor:.3g}")
    rho = _t_to_rho(fit.x)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityEstimate(rho, {"nfev": int(fit.nfev), "residual_norm": norm,
                                 "clipped": clipped, "restarts": attempt})


def simulate_qst_data(rho, model, seed=0):
    """Sampled counts in the nine bases for a readout model (see measurement.measure_counts)."""
    from .measurement import measure_counts

    return {b: measure_counts(rho, b, model, seed=(seed, k)) for k, b in enumerate(BASES)}


# -- fidelities ---------------------------------------------------------------------

def _psd_check(A, name):
    w = np.linalg.eigvalsh(0.5 * (A + A.conj().T))
    if w.min() < -PSD_TOL * max(1.0, abs(w).max()):
        raise NonPSDInput(f"{name} has eigenvalue {w.min():.3g}")


def _sqrt_psd(A):
    w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; vectors are taken as pure states."""
    def dm(x):
        x = np.asarray(x, dtype=complex)
        return np.outer(x, x.conj()) if x.ndim == 1 else x

    rho, sigma = dm(rho), dm(sigma)
    s = _sqrt_psd(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    return float(min(1.0, np.sum(np.sqrt(np.clip(w, 0, None))) ** 2))


def process_fidelity(chiA, chiB) -> float:
    """(tr sqrt(sqrt(chiA) chiB sqrt(chiA)))^2 with trace-normalised inputs."""
    A = np.asarray(chiA, dtype=complex)
    B = np.asarray(chiB, dtype=complex)
    _psd_check(A, "chiA")
    _psd_check(B, "chiB")
    A = A / np.real(np.trace(A))
    B = B / np.real(np.trace(B))
    return state_fidelity(A, B)


def gate_fidelity(chiG, chi_ideal, d=4) -> float:
    """(d F_P + 1) / (d + 1)."""
    return (d * process_fidelity(chi_ideal, chiG) + 1) / (d + 1)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.shape != (4, 4):
        raise ValidationError("concurrence needs a 4x4 density matrix")
    yy = np.kron(_P1["Y"], _P1["Y"])
    R = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.real(np.linalg.eigvals(R)))[::-1], 0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


BELL_STATES = {
    "Phi+": np.array([1, 0, 0, 1]) / np.sqrt(2), "Phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "Psi+": np.array([0, 1, 1, 0]) / np.sqrt(2), "Psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


# -- process matrices --------------------------------------------------------------

def chi_from_unitary(U) -> np.ndarray:
    c = np.array([np.trace(P.conj().T @ U) / 4 for P in PAULIS])
    return np.outer(c, c.conj())


def superop_from_chi(chi) -> np.ndarray:
    """Row-major superoperator (vec(A rho B) = (A kron B^T) vec(rho)) of a chi matrix."""
    S = np.zeros((16, 16), dtype=complex)
    for m in range(16):
        for n in range(16):
            if chi[m, n] != 0:
                S += chi[m, n] * np.kron(PAULIS[m], PAULIS[n].conj())
    return S


def chi_from_superop(S) -> np.ndarray:
    """Inverse of superop_from_chi by projection onto the Pauli-pair basis."""
    B = np.array([np.kron(PAULIS[m], PAULIS[n].conj()).reshape(-1)
                  for m in range(16) for n in range(16)]).T
    x = np.linalg.solve(B.conj().T @ B, B.conj().T @ np.asarray(S).reshape(-1))
    return x.reshape(16, 16)


def apply_superop(S, rho):
    return (S @ rho.reshape(-1)).reshape(4, 4)


def _design(preps, meas):
    """A[(i, j), (m, n)] = tr(M_j P_m rho_i P_n) for linear inversion."""
    rows = []
    for rho in preps:
        PR = np.einsum("mab,bc->mac", PAULIS, rho)
        for M in meas:
            # tr(M P_m rho P_n) = sum (M P_m rho)_{ab} (P_n)_{ba}
            MPR = np.einsum("ab,mbc->mac", M, PR)
            rows.append(np.einsum("mab,nba->mn", MPR, PAULIS).reshape(-1))
    return np.array(rows)


def _ground_projector():
    E = np.zeros((4, 4), dtype=complex)
    E[0, 0] = 1
    return E


def ideal_spam():
    """Ideal preparations R|00><00|R^dag and measurement effects R^dag|00><00|R."""
    E = _ground_projector()
    sets = two_qubit_settings()
    preps = [R @ E @ R.conj().T for _, R in sets]
    meas = [R.conj().T @ E @ R for _, R in sets]
    return preps, meas


def _invert(P, preps, meas):
    A = _design(preps, meas)
    x, *_ = np.linalg.lstsq(A, np.asarray(P, dtype=float).reshape(-1).astype(complex),
                            rcond=None)
    chi = x.reshape(16, 16)
    return 0.5 * (chi + chi.conj().T)


def _chol_params(chi):
    L = np.linalg.cholesky(chi + 1e-4 * np.eye(16))
    T = L.conj().T
    il = np.tril_indices(16, -1)
    Tl = T.conj().T
    return np.concatenate([np.real(np.diag(Tl)), np.real(Tl[il]), np.imag(Tl[il])])


def _params_chi(x):
    T = np.zeros((16, 16), dtype=complex)
    T[np.diag_indices(16)] = x[:16]
    il = np.tril_indices(16, -1)
    T[il] = x[16:136] + 1j * x[136:256]
    R = T @ T.conj().T
    return R / np.real(np.trace(R))


def _fit_psd(P, preps, meas, chi0, tol=1e-10):
    """Least-squares chi constrained to PSD with unit trace, started from ``chi0``."""
    A = _design(preps, meas)
    p = np.asarray(P, dtype=float).reshape(-1)

    def resid(x):
        return np.real(A @ _params_chi(x).reshape(-1)) - p

    fit = least_squares(resid, _chol_params(chi0), method="lm", xtol=tol, ftol=tol,
                        max_nfev=20000)
    return _params_chi(fit.x)


def project_psd(chi):
    """Nearest PSD chi with unit trace (eigenvalue clipping)."""
    w, V = np.linalg.eigh(0.5 * (chi + chi.conj().T))
    w = np.clip(w, 0, None)
    out = (V * w) @ V.conj().T
    return out / np.real(np.trace(out))


def _half_superop(S):
    R = sqrtm(S)
    return np.asarray(R, dtype=complex)


def qpt(gate_runs, reference_runs=None, settings=None, reference_settings=None) -> ChiMatrix:
    """Process matrix from P(00) over 36 preparations x 36 measurement rotations.

    The returned chi is a positive, unit-trace least-squares fit; the plain
    linear inversion is kept in ``raw`` with its smallest eigenvalue.

    Without ``reference_runs`` the ideal SPAM operators are inverted directly.
    With them, the identity experiment gives an error superoperator whose
    square root is applied to every preparation and, in the Heisenberg
    picture, to every measurement effect; the gate data are then re-inverted.
    """
    G = np.asarray(gate_runs, dtype=float)
    if G.shape != (36, 36):
        raise InconsistentGrid(f"expected 36 x 36 gate data, got {G.shape}")
    if reference_runs is not None:
        R = np.asarray(reference_runs, dtype=float)
        if R.shape != G.shape or (settings is not None and reference_settings is not None
                                  and list(settings) != list(reference_settings)):
            raise InconsistentGrid("gate and reference experiments use different settings")
    preps, meas = ideal_spam()
    raw = _invert(G, preps, meas)
    if reference_runs is None:
        chi = _fit_psd(G, preps, meas, project_psd(raw))
        return ChiMatrix(chi, False, raw, float(np.linalg.eigvalsh(raw).min()))
    chi_I = _fit_psd(R, preps, meas, project_psd(_invert(R, preps, meas)))
    H = _half_superop(superop_from_chi(chi_I))
    preps2 = [apply_superop(H, r) for r in preps]
    # dual map on effects: tr(M H(rho)) = tr(X rho) with vec(X^T) = H^T vec(M^T)
    meas2 = [(H.T @ M.T.reshape(-1)).reshape(4, 4).T for M in meas]
    corrected = _invert(G, preps2, meas2)
    chi = _fit_psd(G, preps2, meas2, project_psd(corrected))
    return ChiMatrix(chi, True, corrected, float(np.linalg.eigvalsh(corrected).min()))


def simulate_qpt_data(channel, confusion=None, shots=None, seed=0, prep_error=None):
    """P(00) over the 36 x 36 grid for a 16x16 superoperator ``channel``.

    ``confusion`` (4x4) corrupts the readout; ``prep_error`` (16x16
    superoperator) acts after every preparation.  With ``shots`` the
    probabilities are binomially sampled.
    """
    sets = two_qubit_settings()
    E = _ground_projector()
    C = np.eye(4) if confusion is None else np.asarray(confusion)
    rng = np.random.default_rng(seed)
    out = np.zeros((36, 36))
    for i, (_, Rp) in enumerate(sets):
        rho = Rp @ E @ Rp.conj().T
        if prep_error is not None:
            rho = apply_superop(prep_error, rho)
        rho = apply_superop(channel, rho)
        for j, (_, Rm) in enumerate(sets):
            p = np.clip(np.real(np.diag(Rm @ rho @ Rm.conj().T)), 0, None)
            p00 = float(C[0] @ (p / p.sum()))
            out[i, j] = p00 if shots is None else rng.binomial(int(shots), p00) / shots
    return out


def chi_to_json(chi: ChiMatrix, path=None):
    doc = chi.to_json()
    if path is not None:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    return doc

"""Assignment-level readout: confusion matrices, sampled counts, two-round and traced readout.

Outcomes of two-qubit readout are ordered 00, 01, 10, 11 (first digit on the
first measured mode).  Errors are modelled as a column-stochastic confusion
matrix acting on Born probabilities; nothing below the assignment level
(resonator response, IQ blobs) is simulated.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientShots, ValidationError
from .hilbert import MODES

OUTCOMES = ("00", "01", "10", "11")
_P = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]], dtype=complex),
      "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0]).astype(complex)}
#: pre-rotation taking each Pauli eigenbasis onto the computational basis
_BASIS_ROT = {"Z": np.eye(2, dtype=complex),
              "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
              "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2)}


@dataclass(frozen=True)
class ReadoutModel:
    """Misassignment probabilities per wrong outcome, split by excitation number.

    ``within``: chance of each wrong outcome with the same excitation number
    (01 <-> 10); ``cross``: chance of each wrong outcome with a different one.
    ``shots`` per setting; round-1 middle-region outcomes are discarded.
    """

    within: float = 0.05
    cross: float = 0.02
    shots: int = 40000
    discard_policy: str = "discard"

    def __post_init__(self):
        if not (0 <= self.within <= 1 and 0 <= self.cross <= 1):
            raise ValidationError("assignment probabilities must lie in [0, 1]")
        if int(self.shots) < 1:
            raise ValidationError("shots must be at least 1")
        if self.discard_policy not in ("discard", "keep"):
            raise ValidationError("discard_policy is 'discard' or 'keep'")
        if np.any(self.confusion() < -1e-12):
            raise ValidationError("misassignment probabilities exceed 1 in total")

    @classmethod
    def ideal(cls, shots=40000):
        return cls(0.0, 0.0, shots)

    @classmethod
    def symmetric(cls, error, shots=40000):
        """Total error ``error`` spread evenly over the three wrong outcomes."""
        return cls(error / 3, error / 3, shots)

    def confusion(self) -> np.ndarray:
        """Exact 4x4 confusion matrix, entry [i, j] = P(assign i | prepared j)."""
        exc = np.array([o.count("1") for o in OUTCOMES])
        C = np.where(exc[:, None] == exc[None, :], self.within, self.cross).astype(float)
        np.fill_diagonal(C, 0.0)
        np.fill_diagonal(C, 1 - C.sum(axis=0))
        return C

    @classmethod
    def from_config(cls, cfg: dict):
        r = cfg.get("readout", {}) if "readout" in cfg else cfg
        if "symmetric_error" in r:
            return cls.symmetric(float(r["symmetric_error"]), int(r.get("shots", 40000)))
        return cls(float(r.get("within", 0.05)), float(r.get("cross", 0.02)),
                   int(r.get("shots", 40000)), r.get("discard_policy", "discard"))


def spam_fidelity(C) -> float:
    """Mean probability of correct assignment (mean diagonal)."""
    return float(np.mean(np.diag(C)))


def _density(state, dim=None):
    x = np.asarray(state, dtype=complex)
    rho = np.outer(x, x.conj()) if x.ndim == 1 else x
    if dim is not None and rho.shape != (dim, dim):
        raise ValidationError(f"expected a {dim}-dimensional state, got shape {x.shape}")
    return rho


def basis_rotation(basis: str) -> np.ndarray:
    """Two-qubit pre-rotation for a local Pauli basis such as "XZ"."""
    if len(basis) != 2 or any(b not in _BASIS_ROT for b in basis):
        raise ValidationError(f"bad measurement basis {basis!r}")
    return np.kron(_BASIS_ROT[basis[0]], _BASIS_ROT[basis[1]])


def born_probabilities(state, basis_change=None) -> np.ndarray:
    """Computational-basis probabilities of a two-qubit state after an optional rotation.

    ``basis_change`` is a 4x4 unitary or a local Pauli basis string.
    """
    rho = _density(state, 4)
    if basis_change is not None:
        U = basis_rotation(basis_change) if isinstance(basis_change, str) else \
            np.asarray(basis_change, dtype=complex)
        rho = U @ rho @ U.conj().T
    p = np.clip(np.real(np.diag(rho)), 0, None)
    return p / p.sum()


def measure_counts(state, basis_change=None, model: ReadoutModel = ReadoutModel(), seed=0,
                   shots=None) -> np.ndarray:
    """Sampled counts over 00, 01, 10, 11 of Born probabilities pushed through the confusion."""
    p = model.confusion() @ born_probabilities(state, basis_change)
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(shots or model.shots), p / p.sum())


def build_confusion(model: ReadoutModel = ReadoutModel(), seed=0) -> np.ndarray:
    """Empirical confusion matrix from sampling each prepared basis state."""
    C = np.zeros((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = 1
        counts = measure_counts(e, None, model, seed=(seed, j))
        C[:, j] = counts / counts.sum()
    return C


def two_round_readout(state, model: ReadoutModel = ReadoutModel(), seed=0, shots=None):
    """Population estimate from two readout rounds that only resolve the 00 and 11 regions.

    Round 1 measures directly and keeps 00 and 11; round 2 first applies pi
    pulses on both conditional B transitions (00 <-> 01, 10 <-> 11) so that
    the 01 and 10 populations land in the 00 and 11 regions.  The combined
    estimate is renormalised and its raw sum is reported.
    """
    shots = int(shots or model.shots)
    rho = _density(state, 4)
    rng = np.random.default_rng(seed)
    C = model.confusion()
    swap_b = np.kron(np.eye(2), _P["X"])
    est = np.zeros(4)
    kept = []
    for rnd, U in enumerate((np.eye(4), swap_b)):
        p = C @ born_probabilities(U @ rho @ U.conj().T)
        n = rng.multinomial(shots, p / p.sum())
        kept.append(int(n[0] + n[3]))
        if rnd == 0:
            est[0], est[3] = n[0] / shots, n[3] / shots
        else:
            est[1], est[2] = n[0] / shots, n[3] / shots
    # a round may legitimately keep nothing (e.g. |01> in round 1); the other round assigns it
    if sum(kept) < 100:
        raise InsufficientShots(f"only {sum(kept)} shots kept after discarding the middle region")
    total = float(est.sum())
    return {"probabilities": est / total, "raw": est, "raw_sum": total,
            "normalisation_deviation": abs(total - 1), "kept": kept}


def traced_single_qubit_readout(state, target_mode="B", seed=0, shots=40000, error=0.0):
    """Marginal {P0, P1} of one mode of an 8-dim state from one excitation-parity readout.

    Pi pulses on the target transitions with both spectators in 0 and both in 1
    send target-0 states to odd total excitation and target-1 states to even;
    the parity read is flipped with probability ``error``.
    """
    rho = _density(state, 8)
    mu = MODES.index(target_mode) if isinstance(target_mode, str) else int(target_mode)
    p = np.clip(np.real(np.diag(rho)), 0, None)
    p = p / p.sum()
    p_odd = 0.0
    for i in range(8):
        bits = [(i >> (2 - k)) & 1 for k in range(3)]
        others = [bits[k] for k in range(3) if k != mu]
        if others[0] == others[1]:
            bits[mu] ^= 1
        if sum(bits) % 2:
            p_odd += p[i]
    p_odd = (1 - error) * p_odd + error * (1 - p_odd)
    rng = np.random.default_rng(seed)
    n0 = rng.binomial(int(shots), min(max(p_odd, 0.0), 1.0))
    return {"P0": n0 / shots, "P1": 1 - n0 / shots}


def write_counts_csv(path, rows):
    """rows: iterable of (setting, counts array)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["setting"] + list(OUTCOMES))
        for setting, counts in rows:
            w.writerow([setting] + [int(c) for c in counts])


def write_confusion_csv(path, C):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["assigned\\prepared"] + list(OUTCOMES))
        for o, row in zip(OUTCOMES, C):
            w.writerow([o] + [f"{x:.10f}" for x in row])

"""Truncated Fock space of the three trimon modes and the diagonal cross-Kerr Hamiltonian.

Basis ordering is the tensor product A (x) B (x) C with mode A slowest, so the
state "nA nB nC" sits at index (nA*dB + nB)*dC + nC.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .errors import UnknownTransition, ValidationError

MODES = ("A", "B", "C")

#: the twelve spectator-conditioned 0->1 transitions
TRANSITIONS = ("A00", "A01", "A10", "A11",
               "0B0", "0B1", "1B0", "1B1",
               "00C", "01C", "10C", "11C")


@dataclass(frozen=True)
class SpaceSpec:
    levels_per_mode: tuple = (2, 2, 2)

    def __post_init__(self):
        lv = self.levels_per_mode
        if np.isscalar(lv):
            lv = (int(lv),) * 3
        lv = tuple(int(x) for x in lv)
        if len(lv) != 3 or any(not 2 <= x <= 4 for x in lv):
            raise ValidationError("levels_per_mode must be 2..4 for each of three modes")
        object.__setattr__(self, "levels_per_mode", lv)

    @property
    def dim(self):
        return int(np.prod(self.levels_per_mode))

    @cached_property
    def occupations(self):
        """Array (dim, 3) of Fock occupations in basis order."""
        return np.array(list(product(*(range(d) for d in self.levels_per_mode))), dtype=int)

    def labels(self):
        return ["".join(map(str, n)) for n in self.occupations]

    def index(self, label) -> int:
        n = parse_state(label, self)
        dA, dB, dC = self.levels_per_mode
        return (n[0] * dB + n[1]) * dC + n[2]

    def qubit_indices(self):
        """Indices of the eight states with every occupation in {0, 1}."""
        return np.flatnonzero((self.occupations <= 1).all(axis=1))


def as_space(space) -> SpaceSpec:
    if isinstance(space, SpaceSpec):
        return space
    if space is None:
        return SpaceSpec()
    return SpaceSpec(space)


def parse_state(label, space=None):
    """Occupation tuple from a label such as "010" or a sequence of ints."""
    space = as_space(space)
    if isinstance(label, str):
        s = label.strip().strip("|>").replace(" ", "")
        if len(s) != 3 or not s.isdigit():
            raise ValidationError(f"bad state label {label!r}")
        n = tuple(int(c) for c in s)
    else:
        n = tuple(int(x) for x in label)
        if len(n) != 3:
            raise ValidationError(f"bad state {label!r}")
    if any(not 0 <= k < d for k, d in zip(n, space.levels_per_mode)):
        raise ValidationError(f"state {label!r} outside the truncated space")
    return n


def _embed(op, mode, space):
    k = MODES.index(mode) if isinstance(mode, str) else int(mode)
    out = np.ones((1, 1))
    for j, d in enumerate(space.levels_per_mode):
        out = np.kron(out, op(d) if j == k else np.eye(d))
    return out


def lowering_op(space, mode) -> np.ndarray:
    space = as_space(space)
    return _embed(lambda d: np.diag(np.sqrt(np.arange(1, d)), 1), mode, space).astype(complex)


def number_op(space, mode) -> np.ndarray:
    space = as_space(space)
    return _embed(lambda d: np.diag(np.arange(d, dtype=float)), mode, space).astype(complex)


def energies(p, space=None) -> np.ndarray:
    """Diagonal of the cross-Kerr Hamiltonian in Hz, basis order."""
    space = as_space(space)
    n = space.occupations.astype(float)
    w, J = np.asarray(p.omega), np.asarray(p.self_kerr)
    E = n @ w - (n**2) @ J
    jab, jbc, jca = p.cross_kerr
    E -= 2 * (jab * n[:, 0] * n[:, 1] + jbc * n[:, 1] * n[:, 2] + jca * n[:, 2] * n[:, 0])
    return E


def static_hamiltonian(p, space=None) -> np.ndarray:
    return np.diag(energies(p, space)).astype(complex)


def _diag(H):
    H = np.asarray(H)
    return H if H.ndim == 1 else np.real(np.diag(H))


def transition_frequency(H, from_state, to_state, space=None) -> float:
    """E(to) - E(from) read off a diagonal Hamiltonian (matrix or its diagonal)."""
    E = _diag(H)
    if space is None:
        d = round(len(E) ** (1 / 3))
        space = SpaceSpec(d)
    space = as_space(space)
    if space.dim != len(E):
        raise ValidationError("Hamiltonian dimension does not match the space")
    return float(E[space.index(to_state)] - E[space.index(from_state)])


def transition_states(label):
    """(lower, upper) state labels of a conditional transition such as "1B0"."""
    if label not in TRANSITIONS:
        raise UnknownTransition(label)
    k = next(i for i, c in enumerate(label) if c in MODES)
    lo = label[:k] + "0" + label[k + 1:]
    hi = label[:k] + "1" + label[k + 1:]
    return lo, hi


def transition_mode(label) -> int:
    if label not in TRANSITIONS:
        raise UnknownTransition(label)
    return next(i for i, c in enumerate(label) if c in MODES)


def transition_label(lo, hi):
    """Conditional transition label joining two qubit-subspace states one excitation apart."""
    a, b = parse_state(lo), parse_state(hi)
    diff = [i for i in range(3) if a[i] != b[i]]
    if len(diff) != 1 or max(a + b) > 1:
        raise UnknownTransition(f"{lo}<->{hi}")
    k = diff[0]
    s = list(map(str, a))
    s[k] = MODES[k]
    return "".join(s)


def basis_state(label, space=None) -> np.ndarray:
    space = as_space(space)
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.index(label)] = 1.0
    return psi


def check_state(x, atol=1e-9):
    """Validate a pure state or density matrix; returns it as a complex array."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        if abs(np.linalg.norm(x) - 1) > atol:
            raise ValidationError("state vector is not normalized")
    elif x.ndim == 2 and x.shape[0] == x.shape[1]:
        if not np.allclose(x, x.conj().T, atol=atol):
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(x) - 1) > atol:
            raise ValidationError("density matrix trace is not 1")
        if np.linalg.eigvalsh(0.5 * (x + x.conj().T)).min() < -1e-8:
            raise ValidationError("density matrix has a negative eigenvalue")
    else:
        raise ValidationError("state must be a vector or a square matrix")
    return x


def to_json(a) -> str:
    a = np.asarray(a, dtype=complex)
    return json.dumps(np.stack([a.real, a.imag], axis=-1).tolist())


def from_json(s) -> np.ndarray:
    arr = np.asarray(json.loads(s) if isinstance(s, str) else s, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]

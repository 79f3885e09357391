"""Single-subspace randomized benchmarking with conditional rotations as Clifford generators."""
from __future__ import annotations

import numpy as np
from scipy.optimize import curve_fit

from ..dynamics import (DrivenSystem, EvolutionConfig, NoiseChannels, restrict_superop,
                        unitary_superop)
from ..errors import FitFailure, ValidationError
from ..hilbert import MODES, SpaceSpec, transition_mode, transition_states
from ..pulses import diagonal_unitary_of
from .compile import compile_gate, rotation
from .spec import GateSpec

#: generator name -> (theta, phi) of the conditional rotation
GENERATORS = {
    "X": (np.pi, 0.0), "Y": (np.pi, np.pi / 2),
    "X/2": (np.pi / 2, 0.0), "-X/2": (np.pi / 2, np.pi),
    "Y/2": (np.pi / 2, np.pi / 2), "-Y/2": (np.pi / 2, -np.pi / 2),
}
RB_DURATION = 40e-9
RB_CONFIG = EvolutionConfig(step_s=0.2e-9, check_convergence=False)


def _canon(U):
    """Representative of U modulo global phase (first sizeable entry made real positive)."""
    flat = U.reshape(-1)
    k = np.flatnonzero(np.abs(flat) > 1e-6)[0]
    return U * np.exp(-1j * np.angle(flat[k]))


def _key(U):
    return tuple(np.round(_canon(U), 6).reshape(-1).view(float))


def clifford_group():
    """The 24 single-qubit Cliffords as (unitary, generator word) by breadth-first search.

    Words list generator names in application order; each is a shortest word.
    """
    gens = {g: rotation(*GENERATORS[g]) for g in GENERATORS}
    start = np.eye(2, dtype=complex)
    seen = {_key(start): (start, ())}
    frontier = [(start, ())]
    while frontier:
        nxt = []
        for U, word in frontier:
            for g, G in gens.items():
                V = G @ U
                k = _key(V)
                if k not in seen:
                    seen[k] = (V, word + (g,))
                    nxt.append((V, word + (g,)))
        frontier = nxt
    out = sorted(seen.values(), key=lambda x: (len(x[1]), x[1]))
    if len(out) != 24:
        raise RuntimeError("Clifford enumeration failed")
    return out


def _find(cliffords, U):
    k = _key(U)
    for i, (C, _) in enumerate(cliffords):
        if _key(C) == k:
            return i
    raise RuntimeError("product left the Clifford group")


def subspace_gate(transition: str, theta, phi, duration=RB_DURATION) -> GateSpec:
    """CCR gate on one conditional transition, e.g. "0B0"."""
    mu = transition_mode(transition)
    spect = [m for m in MODES if m != MODES[mu]]
    lo, _ = transition_states(transition)
    cond = {m: int(lo[MODES.index(m)]) for m in spect}
    return GateSpec("CCR", MODES[mu], cond, theta, phi, duration)


def generator_superops(transition, params, noise: NoiseChannels | None = None, cal=None,
                       space=None, couplings=(1.0, 1.0, 1.0), config=RB_CONFIG,
                       duration=RB_DURATION):
    """Frame-corrected 2-level-block superoperators (4x4) of the six generators.

    ``cal`` maps generator name to a CalibrationRecord (None: nominal area rule).
    Without noise the block map is the projected unitary.
    """
    from .calibration import fit_space

    lo, hi = transition_states(transition)
    out = {}
    for g, (th, ph) in GENERATORS.items():
        gate = subspace_gate(transition, th, ph, duration)
        sp = fit_space(gate) if space is None else SpaceSpec(space) if isinstance(space, int) \
            else space
        sch = compile_gate(gate, params, (cal or {}).get(g), couplings)
        sys = DrivenSystem.from_params(params, sp, couplings)
        D = diagonal_unitary_of(sch.final_ledger(), sp)
        idx = [sp.index(lo), sp.index(hi)]
        if noise is None or not noise.is_dissipative:
            U = D @ sys.unitary(sch, config)
            out[g] = unitary_superop(U[np.ix_(idx, idx)])
        else:
            S = unitary_superop(D) @ sys.superop(sch, noise, config)
            out[g] = restrict_superop(S, idx, sp.dim)
    return out


def ideal_superops():
    return {g: unitary_superop(rotation(*GENERATORS[g])) for g in GENERATORS}


def depolarizing(eps, d=2):
    """Superoperator of rho -> (1 - eps) rho + eps I/d."""
    Id = np.eye(d).reshape(-1)
    return (1 - eps) * np.eye(d * d) + eps / d * np.outer(Id, Id)


def survival(superops, lengths, n_random, seed, clifford_noise=None):
    """Ground-state survival (n_random x len(lengths)) of random Clifford sequences.

    Each sequence of m random Cliffords is closed by the inverting Clifford.
    ``clifford_noise`` (4x4) is applied after every Clifford, recovery included.
    """
    cl = clifford_group()
    S_cl = []
    for _, word in cl:
        S = np.eye(4, dtype=complex)
        for g in word:
            S = superops[g] @ S
        if clifford_noise is not None:
            S = clifford_noise @ S
        S_cl.append(S)
    rng = np.random.default_rng(seed)
    rho0 = np.array([1, 0, 0, 0], dtype=complex)
    out = np.empty((n_random, len(lengths)))
    for r in range(n_random):
        for j, m in enumerate(lengths):
            seq = rng.integers(0, 24, m)
            U = np.eye(2, dtype=complex)
            v = rho0
            for i in seq:
                U = cl[i][0] @ U
                v = S_cl[i] @ v
            inv = _find(cl, U.conj().T)
            v = S_cl[inv] @ v
            out[r, j] = float(np.real(v[0]))
    return out


def _model(m, A, p, B):
    return A * p ** m + B


def fit_decay(lengths, mean, sem=None):
    """Fit A p^m + B; returns (p, A, B).  Raises FitFailure for non-decaying data."""
    m = np.asarray(lengths, dtype=float)
    y = np.asarray(mean, dtype=float)
    if np.all(np.abs(y - y[0]) < 1e-9) and y[0] > 1 - 1e-6:
        return 1.0, 1.0, 0.0
    noise = 0.0 if sem is None else 3 * float(np.max(sem))
    if np.any(np.diff(y) > noise + 1e-3):
        raise FitFailure("survival is not monotonically decaying beyond noise")
    try:
        (A, p, B), _ = curve_fit(_model, m, y, p0=(0.5, 0.99, 0.5),
                                 bounds=([0, 0, 0], [1.0, 1.0, 1.0]), maxfev=20000)
    except RuntimeError as exc:
        raise FitFailure(str(exc)) from exc
    return float(p), float(A), float(B)


def run_rb(superops, lengths=(1, 10, 25, 50, 100, 200, 400), n_random=30, seed=0,
           clifford_noise=None):
    """RB decay fit from generator superoperators.

    Returns p, the average fidelity per Clifford 1 - (1 - p)/2, the per-generator
    value assuming the mean word length of the group, and the raw survival table.
    """
    if not lengths or min(lengths) < 1:
        raise ValidationError("sequence lengths must be positive")
    surv = survival(superops, lengths, n_random, seed, clifford_noise)
    mean = surv.mean(axis=0)
    sem = surv.std(axis=0) / np.sqrt(n_random)
    p, A, B = fit_decay(lengths, mean, sem)
    F = 1 - (1 - p) / 2
    per = np.mean([len(w) for _, w in clifford_group()])
    return {"p": p, "A": A, "B": B, "fidelity": F,
            "fidelity_per_generator": 1 - (1 - F) / per,
            "lengths": list(lengths), "survival_mean": mean.tolist(),
            "survival_sem": sem.tolist()}


def calibrate_generators(transition, params, couplings=(1.0, 1.0, 1.0), duration=RB_DURATION,
                         config=RB_CONFIG):
    """Numerically calibrated records for the six generators on one conditional transition."""
    from .calibration import fit_space, numeric_calibrate

    out = {}
    for g, (th, ph) in GENERATORS.items():
        gate = subspace_gate(transition, th, ph, duration)
        out[g] = numeric_calibrate(gate, params, couplings=couplings,
                                   final_space=fit_space(gate), config=config)
    return out

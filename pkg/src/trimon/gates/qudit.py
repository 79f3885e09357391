"""Qudit shift gates on subsets of the eight computational states and their DD sequences.

X_d cycles |s_0> -> |s_1> -> ... -> |s_{d-1}> -> |s_0> through d - 1
conditional pi pulses.  A closing virtual diagonal removes the -i phases
picked up by each pulse, so the ideal composition is an exact permutation.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from ..circuit import conditional_frequencies
from ..dynamics import (DrivenSystem, EvolutionConfig, NoiseChannels, dissipator,
                        collapse_operators, unitary_superop)
from ..errors import InvalidOrdering, UnknownTransition, ValidationError
from ..hilbert import TRANSITIONS, parse_state, transition_label, transition_states
from ..pulses import Schedule, diagonal_unitary_of
from .compile import SP2, compile_gate, ideal_unitary, stark_correct, virtual_diagonal
from .rb import subspace_gate

#: ordered bases used for the reference qudit experiments
REFERENCE_ORDERINGS = {
    3: ("000", "100", "010"),
    4: ("000", "100", "110", "010"),
    6: ("100", "000", "001", "011", "010", "110"),
    8: ("000", "001", "011", "010", "110", "100", "101", "111"),
}
#: their X_d compilations, transitions in application order
REFERENCE_COMPILATIONS = {
    3: ("A00", "0B0"),
    4: ("A10", "1B0", "A00"),
    6: ("A10", "01C", "0B1", "00C", "A00"),
    8: ("1B1", "10C", "1B0", "A10", "01C", "0B1", "00C"),
}
QUDIT_DURATION = 60e-9
#: pulse length when a nearly degenerate transition acts inside the qudit states
SLOW_DURATION = 180e-9
NEAR_COLLISION_HZ = 50e6
DD_CONFIG = EvolutionConfig(step_s=0.5e-9, check_convergence=False)


def _labels(ordering):
    out = []
    for s in ordering:
        n = parse_state(s)
        if len(n) != 3 or max(n) > 1:
            raise InvalidOrdering(f"{s!r} is not a computational state")
        out.append("".join(map(str, n)))
    if len(set(out)) != len(out):
        raise InvalidOrdering("ordering repeats a state")
    return tuple(out)


def _excitations(state):
    return sum(int(c) for c in state)


def shift_transitions(ordering):
    """Transitions (application order) whose pi pulses compose to the cyclic shift.

    A Hamiltonian path through single-transition neighbours is compiled from the
    end backwards; an ordering whose states are all neighbours of the first one
    is compiled as a star of pulses through that state.
    """
    states = _labels(ordering)
    d = len(states)
    if not 2 <= d <= 8:
        raise InvalidOrdering("qudit dimension must lie in 2..8")
    for dd, ref in REFERENCE_ORDERINGS.items():
        if states == ref:
            return REFERENCE_COMPILATIONS[dd]
    try:
        return tuple(transition_label(*sorted((states[k], states[k + 1]), key=_excitations))
                     for k in range(d - 2, -1, -1))
    except UnknownTransition:
        pass
    try:
        return tuple(transition_label(*sorted((states[0], states[k]), key=_excitations))
                     for k in range(1, d))
    except UnknownTransition:
        raise InvalidOrdering(f"consecutive states of {states} are not single-transition "
                              "neighbours") from None


def shift_permutation(ordering) -> np.ndarray:
    """8x8 permutation |s_k> -> |s_(k+1) mod d>, identity on the other states."""
    states = _labels(ordering)
    P = np.eye(8)
    for k, s in enumerate(states):
        i, j = SP2.index(s), SP2.index(states[(k + 1) % len(states)])
        P[:, i] = 0
        P[j, i] = 1
    return P


def pulse_duration(transition, states, params, base=QUDIT_DURATION, slow=SLOW_DURATION):
    """Base duration unless a transition within NEAR_COLLISION_HZ couples two qudit states."""
    cf = conditional_frequencies(params)
    for other in TRANSITIONS:
        if other != transition and abs(cf[other] - cf[transition]) < NEAR_COLLISION_HZ:
            if set(transition_states(other)) <= set(states):
                return slow
    return base


def qudit_x(d=None, ordering=None, params=None, duration=QUDIT_DURATION) -> list:
    """GateSpec list for X_d: d - 1 conditional pi pulses and a closing virtual diagonal.

    ``ordering`` defaults to the reference ordering for ``d``.  With
    ``params`` given, pulses on nearly degenerate transitions are lengthened.
    """
    if ordering is None:
        if d not in REFERENCE_ORDERINGS:
            raise ValidationError(f"no reference ordering for d = {d}; pass one explicitly")
        ordering = REFERENCE_ORDERINGS[d]
    states = _labels(ordering)
    if d is not None and d != len(states):
        raise InvalidOrdering(f"ordering has {len(states)} states, expected {d}")
    gates = []
    for tr in shift_transitions(states):
        T = duration if params is None else pulse_duration(tr, states, params, duration)
        gates.append(subspace_gate(tr, np.pi, 0.0, T))
    U = compose(gates)
    P = shift_permutation(states)
    # U = diag(c) P: remove the phase on every destination state
    chi = -np.angle(np.diag(U @ P.T))
    gates.append(virtual_diagonal(chi))
    return gates


def compose(gates) -> np.ndarray:
    """Ideal 8x8 unitary of a gate list applied left to right."""
    U = np.eye(8, dtype=complex)
    for g in gates:
        U = ideal_unitary(g) @ U
    return U


def calibrate_shift(gates, params, couplings=(1.0, 1.0, 1.0)):
    """Stark-frame corrected records for the pulses of an X_d gate list."""
    return [stark_correct(g, params, None, SP2, DD_CONFIG, couplings)
            if g.kind == "CCR" else None for g in gates]


def _xd_duration(gates):
    return sum(g.duration for g in gates if g.kind == "CCR")


def dd_schedule(d=None, n=1, ordering=None, params=None, total_time=None, cal=None,
                couplings=(1.0, 1.0, 1.0)) -> Schedule:
    """n x dX_d sequence, X_d gates evenly spaced over ``total_time`` (back to back if None).

    Idle gaps are tau / 2, tau, ..., tau, tau / 2 around the n d shift gates.
    """
    if params is None:
        raise ValidationError("dd_schedule needs mode parameters to place the tones")
    gates = qudit_x(d, ordering, params)
    d = len(gates)
    cal = calibrate_shift(gates, params, couplings) if cal is None else cal
    K = n * d
    t_x = _xd_duration(gates)
    tau = 0.0 if total_time is None else (total_time - K * t_x) / K
    if tau < 0:
        raise ValidationError(f"total time shorter than the {K * t_x * 1e9:.0f} ns of pulses")
    sch = Schedule((), (), 0.0)
    t = tau / 2
    for _ in range(K):
        for g, c in zip(gates, cal):
            s = compile_gate(g, params, c, couplings, start=t)
            sch = Schedule(sch.tones + s.tones, sch.frame_updates + s.frame_updates,
                           max(sch.total_duration_s, s.total_duration_s))
            t += g.duration if g.kind == "CCR" else 0.0
        t += tau
    end = t - tau / 2
    return Schedule(sch.tones, sch.frame_updates, end)


# -- quasi-static noise ensembles ------------------------------------------------

def superposition(states) -> np.ndarray:
    psi = np.zeros(8, dtype=complex)
    for s in states:
        psi[SP2.index(s)] = 1
    return psi / np.linalg.norm(psi)


def free_coherence(states, sigma, t):
    """Ensemble fidelity of the equal superposition under Gaussian per-mode offsets (analytic).

    With every state phase linear in the mode offsets, the average of
    exp(-2 pi i t (n_s - n_r) . delta) is exp(-(2 pi t sigma)^2 |n_s - n_r|^2 / 2).
    """
    occ = np.array([parse_state(s) for s in states], dtype=float)
    d2 = ((occ[:, None] - occ[None]) ** 2).sum(-1)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([np.exp(-0.5 * (2 * np.pi * x * sigma) ** 2 * d2).mean() for x in t])


def sigma_for_decay(states, t_e=5e-6):
    """Per-mode sigma (Hz) at which the normalised free coherence reaches 1/e at t_e."""
    d = len(states)

    def f(sig):
        c = (free_coherence(states, sig, t_e)[0] - 1 / d) / (1 - 1 / d)
        return c - np.exp(-1)

    return brentq(f, 1e2, 1e7)


def _dissipative_idle(noise, dt):
    Ls = collapse_operators(noise, SP2)
    LD = sum((dissipator(L) for L in Ls), np.zeros((64, 64), dtype=complex))
    return expm(LD * dt)


def dd_ensemble(d=None, n=1, times=(), sigma=0.0, noise: NoiseChannels | None = None,
                params=None, ordering=None, samples=64, seed=0, couplings=(1.0, 1.0, 1.0),
                free=False):
    """Mean fidelity to the initial equal superposition vs total time.

    Each sample draws static per-mode offsets N(0, sigma); T1/T2 from ``noise``
    act throughout (half before and half after each pulse).  Pulse propagators
    are simulated once per sample and reused at every position in the
    sequence.  ``free=True`` gives free evolution over the same times.
    Returns (times, mean fidelity, standard error).
    """
    gates = qudit_x(d, ordering, params)
    states = _labels(ordering or REFERENCE_ORDERINGS[len(gates)])
    cal = calibrate_shift(gates, params, couplings)
    K = n * len(states)
    t_x = _xd_duration(gates)
    psi0 = superposition(states)
    rho0 = np.outer(psi0, psi0.conj()).reshape(-1)
    occ = SP2.occupations
    rng = np.random.default_rng(seed)
    diss = noise is not None and noise.is_dissipative
    cache = {}

    def idle_diss(dt):
        if not diss or dt <= 0:
            return None
        key = round(dt * 1e15)
        if key not in cache:
            cache[key] = _dissipative_idle(noise, dt)
        return cache[key]

    def apply(S, v):
        return v if S is None else S @ v

    out = np.zeros((samples, len(times)))
    for r in range(samples):
        off = rng.normal(0.0, sigma, 3) if sigma > 0 else np.zeros(3)
        delta = occ @ off
        if not free:
            sys = DrivenSystem.from_params(params, SP2, couplings, off)
            pulse = []
            for g, c in zip(gates, cal):
                sch = compile_gate(g, params, c, couplings)
                if g.kind == "CCR":
                    U = diagonal_unitary_of(sch.final_ledger(), SP2) @ sys.unitary(sch, DD_CONFIG)
                else:
                    U = diagonal_unitary_of(sch.final_ledger(), SP2)
                pulse.append((unitary_superop(U), g.duration if g.kind == "CCR" else 0.0))
        for j, T in enumerate(times):
            v = rho0.copy()
            if free:
                v = unitary_superop(np.diag(np.exp(-2j * np.pi * delta * T))) @ v
                v = apply(idle_diss(T), v)
            else:
                tau = (T - K * t_x) / K
                if tau < -1e-15:
                    out[r, j] = np.nan
                    continue
                Uh = unitary_superop(np.diag(np.exp(-2j * np.pi * delta * tau / 2)))
                for k in range(K):
                    v = apply(idle_diss(tau / 2), Uh @ v)
                    for S, dur in pulse:
                        v = apply(idle_diss(dur / 2), v)
                        v = S @ v
                        v = apply(idle_diss(dur / 2), v)
                    v = apply(idle_diss(tau / 2), Uh @ v)
            rho = v.reshape(8, 8)
            out[r, j] = float(np.real(psi0.conj() @ rho @ psi0))
    mean = np.nanmean(out, axis=0) if samples else out
    sem = np.nanstd(out, axis=0) / np.sqrt(max(samples, 1))
    return np.asarray(times, dtype=float), mean, sem


def decay_time(times, fid, d):
    """1/e time of the normalised coherence (F - 1/d) / (1 - 1/d).

    Uses the first crossing when the data reach 1/e, otherwise a fit of
    ln C = -t / tau through the origin.
    """
    t = np.asarray(times, dtype=float)
    C = (np.asarray(fid) - 1 / d) / (1 - 1 / d)
    ok = np.isfinite(C)
    t, C = t[ok], C[ok]
    below = np.flatnonzero(C < np.exp(-1))
    if len(below):
        k = below[0]
        if k == 0:
            return float(t[0])
        # interpolate ln C between the bracketing points
        l0, l1 = np.log(max(C[k - 1], 1e-12)), np.log(max(C[k], 1e-12))
        return float(t[k - 1] + (-1 - l0) * (t[k] - t[k - 1]) / (l1 - l0))
    sel = C > 0.05
    y = -np.log(C[sel])
    if not np.any(y > 0):
        return float("inf")
    return float((t[sel] @ t[sel]) / (t[sel] @ y))

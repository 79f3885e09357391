"""Gate -> Schedule compilation, ideal targets and numeric Stark-frame correction."""
from __future__ import annotations

import warnings

import numpy as np

from ..circuit import conditional_frequencies
from ..dynamics import DrivenSystem, EvolutionConfig, average_gate_fidelity, gate_unitary
from ..errors import FrequencyCollision, ValidationError
from ..hilbert import MODES, TRANSITIONS, SpaceSpec, transition_mode, transition_states
from ..pulses import (Envelope, FrameUpdate, Schedule, Tone, ledger_from_state_phases,
                      state_phases)
from .raman import RAMAN_BLOCKS, RAMAN_PATHS, raman_amplitude, raman_phases
from .spec import CalibrationRecord, GateSpec

SP2 = SpaceSpec(2)
AB_STATES = ("000", "010", "100", "110")
#: default simulation space for gates: three levels per mode to expose leakage
GATE_SPACE = SpaceSpec(3)
GATE_CONFIG = EvolutionConfig(check_convergence=False)


class RamanWarning(UserWarning):
    """Raman detuning is not large compared with the drive amplitudes."""


def rotation(theta, phi):
    """exp(-i theta/2 (cos phi X + sin phi Y)) on a (lower, upper) pair."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]])


def embed_block(B, lo, hi, dim=8, space=SP2):
    U = np.eye(dim, dtype=complex)
    i, j = space.index(lo), space.index(hi)
    U[np.ix_([i, j], [i, j])] = B
    return U


def ideal_unitary(gate: GateSpec) -> np.ndarray:
    """Target 8x8 unitary on the computational states."""
    if gate.kind in ("CCR", "CR", "R"):
        U = np.eye(8, dtype=complex)
        for lab in gate.transitions:
            U = embed_block(rotation(gate.theta, gate.phi), *transition_states(lab)) @ U
        return U
    if gate.kind in RAMAN_BLOCKS:
        lo, hi = RAMAN_BLOCKS[gate.kind]
        return embed_block(rotation(-gate.theta, gate.phi), lo, hi)
    if gate.kind == "VirtualDiagonal":
        return np.diag(np.exp(1j * np.asarray(gate.phases)))
    raise ValidationError(f"no single-block target for {gate.kind}")


def _nominal_tones(gate, params, couplings):
    """(transition, frequency, amplitude, phase) before calibration."""
    cf = conditional_frequencies(params)
    env = Envelope(gate.shape, 1.0, gate.duration, gate.drag)
    if gate.kind in ("CCR", "CR", "R"):
        out = []
        for lab in gate.transitions:
            lam = couplings[transition_mode(lab)]
            amp = abs(gate.theta) / (2 * np.pi * lam * env.area())
            phase = gate.phi + (np.pi if gate.theta < 0 else 0.0)
            out.append((lab, cf[lab], amp, phase))
        return out
    if gate.kind in RAMAN_PATHS:
        l1, l2, sgn = RAMAN_PATHS[gate.kind]
        d = gate.raman_detuning
        lam = (couplings[transition_mode(l1)], couplings[transition_mode(l2)])
        amp = raman_amplitude(gate.theta, d, gate.duration, gate.shape, lam)
        p1, p2 = raman_phases(gate.kind, gate.phi, d)
        return [(l1, cf[l1] + d, amp, p1), (l2, cf[l2] + sgn * d, amp, p2)]
    raise ValidationError(f"{gate.kind} has no tones")


def check_collisions(tones, params, targeted=(), min_sep=1e6):
    """Raise FrequencyCollision if tones sit within min_sep of each other or of an idle transition."""
    cf = conditional_frequencies(params)
    freqs = [t.frequency for t in tones]
    for i in range(len(freqs)):
        for j in range(i + 1, len(freqs)):
            if abs(freqs[i] - freqs[j]) < min_sep:
                raise FrequencyCollision(
                    f"tones at {freqs[i] / 1e9:.6f} and {freqs[j] / 1e9:.6f} GHz are too close")
    for f in freqs:
        for lab, w in cf.items():
            if lab not in targeted and abs(f - w) < min_sep:
                raise FrequencyCollision(
                    f"tone at {f / 1e9:.6f} GHz within {min_sep / 1e6:g} MHz of idle {lab}")


def virtual_diagonal(phases) -> GateSpec:
    """VirtualDiagonal gate from 8 state phases, or the names "CZ" (on A, B) and "CCZ"."""
    if isinstance(phases, str):
        chi = np.zeros(8)
        for i, lab in enumerate(SP2.labels()):
            if phases.upper() == "CZ" and lab[:2] == "11":
                chi[i] = np.pi
            elif phases.upper() == "CCZ" and lab == "111":
                chi[i] = np.pi
        phases = chi
    return GateSpec("VirtualDiagonal", phases=tuple(phases))


def compile_gate(gate: GateSpec, params, cal: CalibrationRecord | None = None,
                 couplings=(1.0, 1.0, 1.0), start=0.0, min_separation=1e6) -> Schedule:
    """Schedule for one gate starting at ``start`` (s)."""
    if gate.kind == "VirtualDiagonal":
        chi = np.asarray(gate.phases, dtype=float)
        if chi.shape != (8,):
            raise ValidationError("VirtualDiagonal needs 8 state phases")
        led = ledger_from_state_phases(chi - chi[0])
        ups = tuple(FrameUpdate(start, lab, led[lab]) for lab in TRANSITIONS if led[lab])
        return Schedule((), ups, start)
    if gate.kind in ("QuditX", "DDSequence"):
        raise ValidationError(f"{gate.kind} compiles to several gates; see trimon.gates.qudit")
    plan = _nominal_tones(gate, params, couplings)
    if cal is not None and len(cal.amplitudes) != len(plan):
        raise ValidationError("calibration record does not match the gate's tones")
    tones = []
    for k, (lab, f, amp, ph) in enumerate(plan):
        det = 0.0
        if cal is not None:
            amp, det, ph = cal.amplitudes[k], cal.detunings[k], ph + cal.phase_offsets[k]
            # a calibration detuning is a frequency offset during this pulse only: its
            # extra carrier phase is referenced to the pulse centre so it does not
            # accumulate from one gate to the next
            ph += 2 * np.pi * det * (start + gate.duration / 2)
        env = Envelope(gate.shape, amp, gate.duration, gate.drag)
        tones.append(Tone(f, ph, env, start_s=start, detuning_hz=det, transition=lab))
    targeted = tuple(p[0] for p in plan)
    check_collisions(tones, params, targeted if gate.kind in ("CCR", "CR", "R") else (),
                     min_separation)
    if gate.kind in RAMAN_PATHS:
        amp = max(t.envelope.amplitude for t in tones)
        if abs(gate.raman_detuning) < 3 * amp:
            warnings.warn(f"Raman detuning {gate.raman_detuning / 1e6:.1f} MHz is less than 3x the "
                          f"drive amplitude {amp / 1e6:.1f} MHz", RamanWarning, stacklevel=2)
    end = start + gate.duration
    ups = ()
    if cal is not None:
        ups = tuple(FrameUpdate(end, lab, ph) for lab, ph in cal.frame_updates.items() if ph)
    return Schedule(tuple(tones), ups, end)


def nominal_calibration(gate, params, couplings=(1.0, 1.0, 1.0)) -> CalibrationRecord:
    plan = _nominal_tones(gate, params, couplings)
    return CalibrationRecord([p[2] for p in plan], [0.0] * len(plan))


def stark_frame_updates(V, U_ideal) -> dict:
    """Ledger increments making diag(V U_ideal^dag) phase-free on every computational state."""
    chi = -np.angle(np.diag(V @ U_ideal.conj().T))
    led = ledger_from_state_phases(chi - chi[0])
    return {lab: led[lab] for lab in TRANSITIONS}


def combine_updates(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = float(np.angle(np.exp(1j * (out.get(k, 0.0) + v))))
    return out


def simulate_gate(gate: GateSpec, params, cal=None, space=GATE_SPACE, config=GATE_CONFIG,
                  couplings=(1.0, 1.0, 1.0), offsets=None, states=None):
    """Frame-corrected projected map (8x8, or on ``states``) and leakage of the compiled gate."""
    sch = compile_gate(gate, params, cal, couplings)
    sys = DrivenSystem.from_params(params, space, couplings, offsets)
    U = sys.unitary(sch, config)
    return gate_unitary(U, sch.final_ledger(), space, states)


def stark_correct(gate, params, cal=None, space=GATE_SPACE, config=GATE_CONFIG,
                  couplings=(1.0, 1.0, 1.0)) -> CalibrationRecord:
    """Add the numerically extracted Stark-frame updates to a calibration record."""
    cal = cal or nominal_calibration(gate, params, couplings)
    V, _ = simulate_gate(gate, params, cal, space, config, couplings)
    ups = combine_updates(cal.frame_updates, stark_frame_updates(V, ideal_unitary(gate)))
    return CalibrationRecord(cal.amplitudes, cal.detunings, ups, cal.phase_offsets,
                             cal.residual, list(cal.history))


def gate_report(gate, params, cal, space=GATE_SPACE, config=GATE_CONFIG,
                couplings=(1.0, 1.0, 1.0), states=None):
    """Fidelity, leakage and spectator population deviation of a calibrated gate."""
    V, leak = simulate_gate(gate, params, cal, space, config, couplings)
    U = ideal_unitary(gate)
    if states is not None:
        idx = [SP2.index(s) for s in states]
        Vs, Us = V[np.ix_(idx, idx)], U[np.ix_(idx, idx)]
        leak = float(max(0.0, 1 - np.linalg.svd(Vs, compute_uv=False).min() ** 2))
    else:
        idx, Vs, Us = list(range(8)), V, U
    touched = set()
    for lab in gate.transitions:
        touched.update(SP2.index(s) for s in transition_states(lab))
    if gate.kind in RAMAN_BLOCKS:
        touched.update(SP2.index(s) for s in RAMAN_BLOCKS[gate.kind])
    spect = [i for i in idx if i not in touched]
    dev = max((1 - abs(V[i, i]) ** 2 for i in spect), default=0.0)
    return {"fidelity": average_gate_fidelity(Vs, Us), "leakage": leak,
            "spectator_deviation": float(dev), "unitary": V}


def gate_superop(gate, params, cal=None, noise=None, states=AB_STATES, space=None,
                 config=GATE_CONFIG, couplings=(1.0, 1.0, 1.0)):
    """Frame-corrected superoperator of a compiled gate restricted to ``states``.

    Returns (S, U_target) with S acting on row-major vectorised density
    matrices over ``states`` and U_target the matching block of the ideal gate.
    """
    from ..dynamics import restrict_superop, unitary_superop
    from ..pulses import diagonal_unitary_of

    space = GATE_SPACE if space is None else space
    sch = compile_gate(gate, params, cal, couplings)
    sys = DrivenSystem.from_params(params, space, couplings)
    D = diagonal_unitary_of(sch.final_ledger(), space)
    if noise is None or not noise.is_dissipative:
        S = unitary_superop(D @ sys.unitary(sch, config))
    else:
        S = unitary_superop(D) @ sys.superop(sch, noise, config)
    idx = [space.index(s) for s in states]
    sidx = [SP2.index(s) for s in states]
    return restrict_superop(S, idx, space.dim), ideal_unitary(gate)[np.ix_(sidx, sidx)]

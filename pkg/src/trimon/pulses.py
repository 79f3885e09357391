"""Shaped multi-tone drives, the charge-drive Hamiltonian and per-transition virtual frames.

Phase convention: a tone with carrier f and effective phase phi contributes
``Re[s(t) exp(i(2 pi f t - phi))]`` to the drive, which in the rotating frame
rotates its resonant transition about cos(phi) X + sin(phi) Y.
The effective phase is the tone phase minus the frame-ledger phase of the
tone's target transition at the tone start.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InconsistentLedger, UnknownTransition, ValidationError
from .hilbert import TRANSITIONS, SpaceSpec, as_space, lowering_op, transition_states

TWO_PI = 2 * np.pi
FLAT_TOP_RAMP = 10e-9
_TIME_EPS = 1e-15


@dataclass(frozen=True)
class Envelope:
    shape: str = "cosine"
    amplitude: float = 0.0
    duration: float = 60e-9
    drag: float = 0.0
    ramp: float = FLAT_TOP_RAMP

    def __post_init__(self):
        if self.shape not in ("cosine", "flat_top"):
            raise ValidationError(f"unknown envelope shape {self.shape!r}")
        if not self.duration > 0:
            raise ValidationError("envelope duration must be positive")
        if self.amplitude < 0:
            raise ValidationError("envelope amplitude must be non-negative")

    @property
    def ramp_time(self):
        return min(self.ramp, self.duration / 2)

    def area(self):
        """Integral of the real envelope over its support (amplitude * seconds)."""
        if self.shape == "cosine":
            return self.amplitude * self.duration / 2
        return self.amplitude * (self.duration - self.ramp_time)

    def scaled(self, k):
        return replace(self, amplitude=self.amplitude * k)


def sample(env: Envelope, t):
    """Complex envelope at times ``t`` (s, relative to the envelope start), in Hz."""
    t = np.asarray(t, dtype=float)
    A, tau = env.amplitude, env.duration
    inside = (t >= 0) & (t <= tau)
    if env.shape == "cosine":
        x = TWO_PI * t / tau
        re = 0.5 * A * (1 - np.cos(x))
        im = env.drag * 0.5 * A * np.sin(x)
    else:
        r = env.ramp_time
        up = np.clip(t / r, 0, 1)
        down = np.clip((tau - t) / r, 0, 1)
        edge = np.minimum(up, down)
        re = 0.5 * A * (1 - np.cos(np.pi * edge))
        slope = np.where(t < r, 1.0, np.where(t > tau - r, -1.0, 0.0))
        im = env.drag * 0.5 * A * np.sin(np.pi * edge) * slope
    return np.where(inside, re + 1j * im, 0.0)


@dataclass(frozen=True)
class Tone:
    carrier_hz: float
    phase_rad: float
    envelope: Envelope
    start_s: float = 0.0
    detuning_hz: float = 0.0
    transition: str | None = None

    def __post_init__(self):
        if not self.carrier_hz + self.detuning_hz > 0:
            raise ValidationError("tone frequency must be positive")
        if self.transition is not None and self.transition not in TRANSITIONS:
            raise UnknownTransition(self.transition)

    @property
    def frequency(self):
        return self.carrier_hz + self.detuning_hz

    @property
    def end_s(self):
        return self.start_s + self.envelope.duration

    def shifted(self, dt):
        return replace(self, start_s=self.start_s + dt)


@dataclass(frozen=True)
class FrameUpdate:
    time_s: float
    transition: str
    phase_rad: float

    def __post_init__(self):
        if self.transition not in TRANSITIONS:
            raise UnknownTransition(self.transition)


class FrameLedger:
    """Accumulated virtual phase (mod 2 pi) on each of the twelve conditional transitions."""

    __slots__ = ("_phases",)

    def __init__(self, phases=None):
        self._phases = dict.fromkeys(TRANSITIONS, 0.0)
        for k, v in (phases or {}).items():
            if k not in TRANSITIONS:
                raise UnknownTransition(k)
            self._phases[k] = float(np.mod(v, TWO_PI))

    def __getitem__(self, label):
        if label not in self._phases:
            raise UnknownTransition(label)
        return self._phases[label]

    def as_dict(self):
        return dict(self._phases)

    def __eq__(self, other):
        if not isinstance(other, FrameLedger):
            return NotImplemented
        d = np.array([self._phases[k] - other._phases[k] for k in TRANSITIONS])
        return bool(np.all(np.abs(np.angle(np.exp(1j * d))) < 1e-12))

    def __repr__(self):
        nz = {k: round(v, 6) for k, v in self._phases.items() if v}
        return f"FrameLedger({nz})"


def apply_virtual_z(ledger: FrameLedger, transition_label: str, angle: float) -> FrameLedger:
    if transition_label not in TRANSITIONS:
        raise UnknownTransition(transition_label)
    d = ledger.as_dict()
    d[transition_label] += angle
    return FrameLedger(d)


def ledger_from_state_phases(chi) -> FrameLedger:
    """Ledger whose transition phases are differences of the 8 state phases ``chi`` (basis order)."""
    space = SpaceSpec(2)
    chi = np.asarray(chi, dtype=float)
    out = {}
    for lab in TRANSITIONS:
        lo, hi = transition_states(lab)
        out[lab] = chi[space.index(hi)] - chi[space.index(lo)]
    return FrameLedger(out)


def state_phases(ledger: FrameLedger, atol=1e-9):
    """Phases chi of the 8 computational states (chi_000 = 0) with chi_hi - chi_lo = ledger."""
    space = SpaceSpec(2)
    chi = np.full(8, np.nan)
    chi[0] = 0.0
    edges = [(space.index(lo), space.index(hi), ledger[lab])
             for lab in TRANSITIONS for lo, hi in [transition_states(lab)]]
    # spanning tree by repeated relaxation over the cube edges
    changed = True
    while changed:
        changed = False
        for lo, hi, th in edges:
            if np.isnan(chi[hi]) and not np.isnan(chi[lo]):
                chi[hi] = chi[lo] + th
                changed = True
            elif np.isnan(chi[lo]) and not np.isnan(chi[hi]):
                chi[lo] = chi[hi] - th
                changed = True
    for lo, hi, th in edges:
        err = np.angle(np.exp(1j * (chi[hi] - chi[lo] - th)))
        if abs(err) > atol:
            raise InconsistentLedger(f"cycle phase mismatch {err:.3g} rad on edge {lo}->{hi}")
    return chi


def diagonal_unitary_of(ledger: FrameLedger, space=None) -> np.ndarray:
    """Diagonal unitary diag(exp(i chi_s)) implied by the ledger.

    On a larger truncated space, non-computational states get phase 1.
    """
    chi = state_phases(ledger)
    space = as_space(space or SpaceSpec(2))
    d = np.ones(space.dim, dtype=complex)
    d[space.qubit_indices()] = np.exp(1j * chi)
    return np.diag(d)


@dataclass(frozen=True)
class Schedule:
    tones: tuple = ()
    frame_updates: tuple = ()
    total_duration_s: float | None = None

    def __post_init__(self):
        tones = tuple(self.tones)
        fu = tuple(sorted(self.frame_updates, key=lambda u: u.time_s))
        end = max([t.end_s for t in tones] + [u.time_s for u in fu] + [0.0])
        T = end if self.total_duration_s is None else float(self.total_duration_s)
        if T < end - _TIME_EPS:
            raise ValidationError("total duration shorter than schedule content")
        object.__setattr__(self, "tones", tones)
        object.__setattr__(self, "frame_updates", fu)
        object.__setattr__(self, "total_duration_s", T)

    @property
    def duration(self):
        return self.total_duration_s

    def ledger_at(self, t, initial: FrameLedger | None = None) -> FrameLedger:
        """Ledger including every update with time <= t."""
        d = (initial or FrameLedger()).as_dict()
        for u in self.frame_updates:
            if u.time_s <= t + _TIME_EPS:
                d[u.transition] += u.phase_rad
        return FrameLedger(d)

    def final_ledger(self, initial=None) -> FrameLedger:
        return self.ledger_at(np.inf, initial)

    def effective_phase(self, tone: Tone, initial=None) -> float:
        if tone.transition is None:
            return tone.phase_rad
        return tone.phase_rad - self.ledger_at(tone.start_s, initial)[tone.transition]

    def shifted(self, dt):
        return Schedule(tuple(t.shifted(dt) for t in self.tones),
                        tuple(replace(u, time_s=u.time_s + dt) for u in self.frame_updates),
                        self.total_duration_s + dt)

    def then(self, other: "Schedule") -> "Schedule":
        o = other.shifted(self.total_duration_s)
        return Schedule(self.tones + o.tones, self.frame_updates + o.frame_updates,
                        o.total_duration_s)

    def with_frame_updates(self, updates, at=None):
        t = self.total_duration_s if at is None else at
        new = tuple(FrameUpdate(t, lab, ph) for lab, ph in updates)
        return Schedule(self.tones, self.frame_updates + new, self.total_duration_s)

    def active_tones(self, t):
        return [k for k in self.tones if k.start_s <= t <= k.end_s]

    def to_json(self) -> dict:
        return {
            "total_duration_ns": self.total_duration_s * 1e9,
            "tones": [{
                "carrier_ghz": k.carrier_hz / 1e9,
                "detuning_mhz": k.detuning_hz / 1e6,
                "phase_rad": k.phase_rad,
                "start_ns": k.start_s * 1e9,
                "duration_ns": k.envelope.duration * 1e9,
                "amplitude_mhz": k.envelope.amplitude / 1e6,
                "shape": k.envelope.shape,
                "drag": k.envelope.drag,
                "transition": k.transition,
            } for k in self.tones],
            "frame_updates": [{"t_ns": u.time_s * 1e9, "transition": u.transition,
                               "phase_rad": u.phase_rad} for u in self.frame_updates],
        }

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        tones = [Tone(carrier_hz=d["carrier_ghz"] * 1e9, phase_rad=d.get("phase_rad", 0.0),
                      envelope=Envelope(d.get("shape", "cosine"), d["amplitude_mhz"] * 1e6,
                                        d["duration_ns"] * 1e-9, d.get("drag", 0.0)),
                      start_s=d.get("start_ns", 0.0) * 1e-9,
                      detuning_hz=d.get("detuning_mhz", 0.0) * 1e6,
                      transition=d.get("transition"))
                 for d in doc.get("tones", [])]
        fu = [FrameUpdate(d["t_ns"] * 1e-9, d["transition"], d["phase_rad"])
              for d in doc.get("frame_updates", [])]
        T = doc.get("total_duration_ns")
        return cls(tones, fu, None if T is None else T * 1e-9)


def drive_operator(space, couplings=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Shared charge-drive operator sum_mu lambda_mu (a_mu + a_mu^dag)."""
    space = as_space(space)
    X = np.zeros((space.dim, space.dim), dtype=complex)
    for mu, lam in enumerate(couplings):
        if lam:
            a = lowering_op(space, mu)
            X += lam * (a + a.conj().T)
    return X


def drive_field(schedule: Schedule, t, initial_ledger=None):
    """Scalar real drive field sum_k Re[s_k e^{i(2 pi f_k t - phi_k)}] at times t (Hz)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in schedule.tones:
        phi = schedule.effective_phase(k, initial_ledger)
        s = sample(k.envelope, t - k.start_s)
        out += np.real(s * np.exp(1j * (TWO_PI * k.frequency * t - phi)))
    return out


def drive_hamiltonian(schedule: Schedule, t: float, couplings=(1.0, 1.0, 1.0),
                      space=None, initial_ledger=None) -> np.ndarray:
    return float(drive_field(schedule, t, initial_ledger)) * drive_operator(space, couplings)


def cosine_amplitude_for(theta, duration, coupling=1.0):
    """Peak amplitude of a cosine envelope rotating a transition with matrix element ``coupling`` by theta."""
    return theta / (np.pi * duration * coupling)

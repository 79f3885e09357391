"""Gate descriptions and calibration records."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..hilbert import MODES, TRANSITIONS

KINDS = ("CCR", "CR", "R", "RamanISwap", "RamanBSwap", "VirtualDiagonal", "QuditX", "DDSequence")

DEFAULT_DURATION = {"CCR": 60e-9, "CR": 60e-9, "R": 60e-9,
                    "RamanISwap": 120e-9, "RamanBSwap": 120e-9}


def parse_condition(cond, target):
    """Spectator assignment as a dict {mode: 0/1}; free spectators are omitted.

    Strings list the two spectators in A, B, C order separated by "_", with
    "x" (or "-") for a free spectator, e.g. "0_0", "1_x".
    """
    spect = [m for m in MODES if m != target]
    if cond is None:
        return {}
    if isinstance(cond, dict):
        out = {str(k): int(v) for k, v in cond.items() if v is not None}
    else:
        parts = str(cond).replace(",", "_").split("_")
        if len(parts) != 2:
            raise ValidationError(f"condition {cond!r} must name both spectators, e.g. '0_x'")
        out = {m: int(p) for m, p in zip(spect, parts) if p not in ("x", "-", "*", "")}
    if any(m not in spect or v not in (0, 1) for m, v in out.items()):
        raise ValidationError(f"bad condition {cond!r} for target {target}")
    return out


@dataclass(frozen=True)
class GateSpec:
    kind: str
    target: str = "B"
    condition: dict = field(default_factory=dict)
    theta: float = np.pi / 2
    phi: float = 0.0
    duration: float | None = None
    raman_detuning: float = 0.0
    shape: str = "cosine"
    drag: float = 0.0
    #: state phases (8 values, basis order) for VirtualDiagonal
    phases: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.target not in MODES:
            raise ValidationError(f"unknown target mode {self.target!r}")
        cond = parse_condition(self.condition, self.target)
        object.__setattr__(self, "condition", cond)
        need = {"CCR": 2, "CR": 1, "R": 0}.get(self.kind)
        if need is not None and len(cond) != need:
            raise ValidationError(f"{self.kind} needs {need} fixed spectator(s), got {cond}")
        if self.duration is None and self.kind in DEFAULT_DURATION:
            object.__setattr__(self, "duration", DEFAULT_DURATION[self.kind])
        if self.kind in ("RamanISwap", "RamanBSwap") and self.raman_detuning == 0:
            from ..errors import ZeroDetuning
            raise ZeroDetuning("Raman gates need a nonzero detuning")
        object.__setattr__(self, "phases", tuple(float(x) for x in self.phases))

    @property
    def transitions(self):
        """Conditional transitions addressed by a CCR/CR/R gate."""
        if self.kind not in ("CCR", "CR", "R"):
            return ()
        k = MODES.index(self.target)
        out = []
        for a in (0, 1):
            for b in (0, 1):
                spect = [m for m in MODES if m != self.target]
                vals = dict(zip(spect, (a, b)))
                if any(vals[m] != v for m, v in self.condition.items()):
                    continue
                lab = [str(vals.get(m, 0)) for m in MODES]
                lab[k] = self.target
                out.append("".join(lab))
        return tuple(sorted(out, key=TRANSITIONS.index))

    def signature(self) -> str:
        cond = "_".join(str(self.condition.get(m, "x")) for m in MODES if m != self.target)
        return (f"{self.kind}:{self.target}:{cond}:theta={self.theta:.6f}:phi={self.phi:.6f}"
                f":dur={(self.duration or 0) * 1e9:.3f}ns:delta={self.raman_detuning / 1e6:.3f}MHz"
                f":{self.shape}:drag={self.drag:g}")

    def with_(self, **kw):
        return replace(self, **kw)

    @classmethod
    def from_config(cls, g: dict):
        """GateSpec from the ``gate.*`` config block."""
        kind = g["kind"]
        kw = dict(kind=kind, target=g.get("target", "B"), condition=g.get("condition"),
                  theta=float(g.get("theta_pi_units", 0.5)) * np.pi,
                  phi=float(g.get("phi_pi_units", 0.0)) * np.pi,
                  raman_detuning=float(g.get("raman_detuning_mhz", 0.0)) * 1e6,
                  shape=g.get("shape", "cosine"), drag=float(g.get("drag", 0.0)))
        if "duration_ns" in g:
            kw["duration"] = float(g["duration_ns"]) / 1e9
        if kind in ("RamanISwap", "RamanBSwap"):
            kw["target"] = "B"
            kw["condition"] = None
        if kind not in ("CCR", "CR", "R"):
            kw["condition"] = None
        return cls(**kw)


@dataclass
class CalibrationRecord:
    """Per-tone amplitudes/detunings (Hz), tone phase offsets (rad) and post-gate frame updates."""

    amplitudes: list
    detunings: list
    frame_updates: dict = field(default_factory=dict)
    phase_offsets: list = field(default_factory=list)
    residual: float = float("nan")
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.amplitudes = [float(x) for x in self.amplitudes]
        self.detunings = [float(x) for x in self.detunings]
        if len(self.amplitudes) != len(self.detunings):
            raise ValidationError("one amplitude and one detuning per tone")
        if len(self.phase_offsets) == 0:
            self.phase_offsets = [0.0] * len(self.amplitudes)
        self.phase_offsets = [float(x) for x in self.phase_offsets]
        for k in self.frame_updates:
            if k not in TRANSITIONS:
                raise ValidationError(f"unknown transition {k!r} in frame updates")

    def to_json(self):
        d = asdict(self)
        d["history"] = [float(x) for x in self.history]
        return d

    @classmethod
    def from_json(cls, d):
        return cls(**d)


class CalibrationStore:
    """JSON file of calibration records keyed by gate signature."""

    def __init__(self, path):
        self.path = Path(path)
        self._data = json.loads(self.path.read_text()) if self.path.exists() else {}

    def get(self, gate: GateSpec):
        d = self._data.get(gate.signature())
        return None if d is None else CalibrationRecord.from_json(d)

    def put(self, gate: GateSpec, rec: CalibrationRecord):
        self._data[gate.signature()] = rec.to_json()
        self.path.write_text(json.dumps(self._data, indent=2, sort_keys=True))

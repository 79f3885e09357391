"""Two-qubit Hamiltonian synthesis on modes A and B (C idle in |0>) from conditional tones.

A tone on one conditional transition acts as a projector-controlled rotation,
so sums and differences of the two tones addressing a mode give I x P and Z x P
terms.  Diagonal terms are software frame updates, and the four XX/XY/YX/YY
products come from the excitation-conserving and double-excitation Raman pairs.
"""
from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np
from scipy.linalg import logm
from scipy.optimize import minimize, minimize_scalar

from ..circuit import conditional_frequencies
from ..dynamics import DrivenSystem, EvolutionConfig, gate_unitary
from ..errors import ValidationError
from ..hilbert import SpaceSpec
from ..pulses import Envelope, FrameUpdate, Schedule, Tone, ledger_from_state_phases
from .compile import AB_STATES
from .raman import RAMAN_PATHS, raman_amplitude, raman_phases

_P1 = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
       "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0])}
PAULI_LABELS = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2))
#: combinations realised by a single Raman pair
RAMAN_TERMS = {"XX+YY": {"XX": 1, "YY": 1}, "XX-YY": {"XX": 1, "YY": -1},
               "XY-YX": {"XY": 1, "YX": -1}, "XY+YX": {"XY": 1, "YX": 1}}
SYNTH_DURATION = 200e-9
SYNTH_DETUNING = 32e6
SYNTH_CONFIG = EvolutionConfig(step_s=0.2e-9, check_convergence=False)
SYNTH_SPACE = SpaceSpec((3, 3, 2))


def pauli(label) -> np.ndarray:
    """Two-qubit Pauli product, first letter on A (basis |nA nB>)."""
    return np.kron(_P1[label[0]], _P1[label[1]])


def term_coefficients(term) -> dict:
    """Pauli coefficients of a term name: one of the 16 products or a Raman combination."""
    if term in PAULI_LABELS:
        return {term: 1.0}
    if term in RAMAN_TERMS:
        return {k: float(v) for k, v in RAMAN_TERMS[term].items()}
    raise ValidationError(f"unknown Pauli term {term!r}")


def pauli_decomposition(H) -> dict:
    """Real coefficients c_P with H = sum c_P P on the 4-dim AB block."""
    return {lab: float(np.real(np.trace(pauli(lab) @ H)) / 4) for lab in PAULI_LABELS}


def target_fraction(coeffs: dict, target: dict) -> float:
    """Squared overlap of the traceless coefficient vector with the target direction."""
    labs = PAULI_LABELS[1:]
    c = np.array([coeffs.get(k, 0.0) for k in labs])
    t = np.array([target.get(k, 0.0) for k in labs], dtype=float)
    n = np.linalg.norm(c)
    if n == 0:
        return 0.0
    return float((c @ t) ** 2 / (n**2 * (t @ t)))


def _env(amp, duration, shape):
    return Envelope(shape, amp, duration)


def _conditional_tones(coeffs, params, duration, shape, couplings):
    """Tones for terms of the form P x (X|Y) and (X|Y) x P with P in {I, Z}."""
    cf = conditional_frequencies(params)
    area = _env(1.0, duration, shape).area()
    # per conditional transition: (x, y) coefficients of its block generator
    block = {}
    for lab, c in coeffs.items():
        if lab[0] in "XY" and lab[1] in "IZ":
            mode, axis, other = "A", lab[0], lab[1]
            pair = ("A00", "A10")
        elif lab[1] in "XY" and lab[0] in "IZ":
            mode, axis, other = "B", lab[1], lab[0]
            pair = ("0B0", "1B0")
        else:
            continue
        for sgn, tr in zip((1, -1 if other == "Z" else 1), pair):
            x, y = block.get(tr, (0.0, 0.0))
            block[tr] = (x + sgn * c, y) if axis == "X" else (x, y + sgn * c)
    tones = []
    for tr, (x, y) in block.items():
        mag = np.hypot(x, y)
        if mag == 0:
            continue
        lam = couplings[0 if tr[0] == "A" else 1]
        # block Hamiltonian (s/2)(cos phi X + sin phi Y): time-averaged s/2 = |c|
        amp = 2 * mag * duration / (area * lam)
        tones.append(Tone(cf[tr], float(np.arctan2(y, x)), _env(amp, duration, shape),
                          transition=tr))
    return tones


def _raman_tones(coeffs, params, duration, shape, delta, couplings):
    """Tones for the XX/XY/YX/YY content through one or both Raman pairs."""
    h = {k: coeffs.get(k, 0.0) for k in ("XX", "XY", "YX", "YY")}
    # block generators: iSWAP X = (XX+YY)/2, Y = -(XY-YX)/2; bSWAP X = (XX-YY)/2, Y = (XY+YX)/2
    blocks = {"RamanISwap": (h["XX"] + h["YY"], h["YX"] - h["XY"]),
              "RamanBSwap": (h["XX"] - h["YY"], h["XY"] + h["YX"])}
    cf = conditional_frequencies(params)
    plan = {}
    for kind, (cx, cy) in blocks.items():
        mag = np.hypot(cx, cy)
        if mag < 1e-12 * max(1.0, max(abs(v) for v in h.values())):
            continue
        # exp(+i theta/2 (cos phi X + sin phi Y)) = exp(-2 pi i T (cx X + cy Y))
        theta = 4 * np.pi * duration * mag
        phi = float(np.arctan2(-cy, -cx))
        l1, l2, _ = RAMAN_PATHS[kind]
        lam = (couplings[0 if l1[0] == "A" else 1], couplings[0 if l2[0] == "A" else 1])
        amp = raman_amplitude(theta, delta, duration, shape, lam)
        plan[kind] = (amp, raman_phases(kind, phi, delta))
    if not plan:
        return []
    if len(plan) == 1:
        (kind, (amp, (p1, p2))), = plan.items()
        l1, l2, sgn = RAMAN_PATHS[kind]
        return [Tone(cf[l1] + delta, p1, _env(amp, duration, shape), transition=l1),
                Tone(cf[l2] + sgn * delta, p2, _env(amp, duration, shape), transition=l2)]
    # both pairs share the 0B0 + delta tone: phase 0 on it, the others keep the
    # phase difference (iSWAP) and phase sum (bSWAP) each pair needs
    ai, (_, pi2) = plan["RamanISwap"]
    ab, (_, pb2) = plan["RamanBSwap"]
    mid = np.sqrt(ai * ab)
    return [Tone(cf["A00"] + delta, -pi2, _env(ai**2 / mid, duration, shape), transition="A00"),
            Tone(cf["0B0"] + delta, 0.0, _env(mid, duration, shape), transition="0B0"),
            Tone(cf["A10"] - delta, pb2, _env(ab**2 / mid, duration, shape), transition="A10")]


def _diagonal_phases(coeffs, duration):
    """State phases (8, basis order) of exp(-2 pi i T H_diag), C = 1 copying C = 0."""
    Hd = sum((c * pauli(k) for k, c in coeffs.items() if set(k) <= {"I", "Z"}),
             np.zeros((4, 4)))
    chi4 = -2 * np.pi * duration * np.real(np.diag(Hd))
    chi = np.repeat(chi4, 2)
    return chi - chi[0]


def _frame(chi, at):
    led = ledger_from_state_phases(chi)
    return tuple(FrameUpdate(at, lab, v) for lab, v in led.as_dict().items() if v)


def synthesize_pauli_term(term, strength, params, duration=SYNTH_DURATION, shape="cosine",
                          raman_detuning=SYNTH_DETUNING, couplings=(1.0, 1.0, 1.0),
                          tone_detunings=None) -> Schedule:
    """Schedule whose time-averaged effective Hamiltonian is strength * term (Hz) on A, B.

    ``term`` is a Pauli product such as "ZX" (first letter on A) or a dict of
    coefficients; C stays in |0>.  II gives an empty schedule.
    ``tone_detunings`` maps a tone's transition label to an extra detuning (Hz),
    used to put Raman pairs back on their Stark-shifted two-photon resonance.
    """
    coeffs = term_coefficients(term) if isinstance(term, str) else dict(term)
    bad = [k for k in coeffs if k not in PAULI_LABELS]
    if bad:
        raise ValidationError(f"unknown Pauli labels {bad}")
    coeffs = {k: strength * v for k, v in coeffs.items() if k != "II" and v}
    if not coeffs:
        return Schedule((), (), 0.0)
    tones = _conditional_tones(coeffs, params, duration, shape, couplings)
    tones += _raman_tones(coeffs, params, duration, shape, raman_detuning, couplings)
    if tone_detunings:
        tones = [replace(t, detuning_hz=tone_detunings.get(t.transition, 0.0)) for t in tones]
    ups = _frame(_diagonal_phases(coeffs, duration), duration)
    return Schedule(tuple(tones), ups, duration)


def effective_hamiltonian(schedule, params, space=SYNTH_SPACE, config=SYNTH_CONFIG,
                          couplings=(1.0, 1.0, 1.0), stark_correct=True, iterations=3):
    """Time-averaged Hamiltonian (Hz) on the AB block from the log of the simulated propagator.

    With ``stark_correct`` the drive-induced diagonal phases outside the
    schedule's own diagonal content are removed by extra frame updates,
    iterated because the log does not split exactly.  Returns (H, schedule).
    """
    T = schedule.total_duration_s
    if T == 0:
        return np.zeros((4, 4), dtype=complex), schedule
    sys = DrivenSystem.from_params(params, space, couplings)
    U = sys.unitary(schedule, config) if schedule.tones else np.eye(sys.dim, dtype=complex)
    want_diag = _requested_diagonal(schedule, T)

    def heff(sch):
        V, _ = gate_unitary(U, sch.final_ledger(), space, AB_STATES)
        # centre the eigenphases before the log so that none sits on the branch cut
        V = V * np.exp(-1j * np.angle(np.linalg.eigvals(V).sum()))
        H = 1j * logm(V) / (2 * np.pi * T)
        return H - np.trace(H) / 4 * np.eye(4)

    H = heff(schedule)
    if stark_correct and schedule.tones:
        for _ in range(iterations):
            c = pauli_decomposition(H)
            extra = {k: c[k] - want_diag.get(k, 0.0) for k in ("ZI", "IZ", "ZZ")}
            chi = _diagonal_phases({k: -v for k, v in extra.items()}, T)
            schedule = Schedule(schedule.tones, schedule.frame_updates + _frame(chi, T), T)
            H = heff(schedule)
    return 0.5 * (H + H.conj().T), schedule


def _requested_diagonal(schedule, T):
    """Diagonal Pauli content encoded by the schedule's own frame updates."""
    from ..pulses import state_phases

    chi = state_phases(schedule.final_ledger())
    chi4 = np.array([chi[0], chi[2], chi[4], chi[6]])
    Hd = np.diag(-chi4 / (2 * np.pi * T))
    c = pauli_decomposition(Hd)
    return {k: c[k] for k in ("ZI", "IZ", "ZZ")}


def raman_resonance_detunings(term, strength, params, window=2e6, **kw):
    """Extra detunings on the A-mode Raman tones restoring the two-photon resonances.

    Drive-induced Stark shifts move the resonance of each pair; the shift is
    found by maximising the target fraction of the simulated effective
    Hamiltonian, one tone at a time.  When both pairs run together the search
    starts from the single-pair values in a narrower window.  Returns {} when
    no Raman pair is used.
    """
    target = term_coefficients(term) if isinstance(term, str) else dict(term)
    sch = synthesize_pauli_term(term, strength, params, **kw)
    cf = conditional_frequencies(params)
    knobs = [t.transition for t in sch.tones
             if t.transition in ("A00", "A10") and t.frequency != cf[t.transition]]
    det = {}
    fast = EvolutionConfig(step_s=0.5e-9, check_convergence=False)

    def loss_of(trial):
        H, _ = effective_hamiltonian(synthesize_pauli_term(term, strength, params,
                                                           tone_detunings=trial, **kw),
                                     params, config=fast)
        return 1 - target_fraction(pauli_decomposition(H), target)

    if len(knobs) == 2:
        h = {k: target.get(k, 0.0) for k in ("XX", "XY", "YX", "YY")}
        # each pair alone at the block strength it carries in the combination
        mags = {"XX+YY": np.hypot(h["XX"] + h["YY"], h["YX"] - h["XY"]) / 2,
                "XX-YY": np.hypot(h["XX"] - h["YY"], h["XY"] + h["YX"]) / 2}
        for pair, m in mags.items():
            det.update(raman_resonance_detunings(pair, strength * m, params, window, **kw))
        x0 = np.array([det[k] for k in knobs]) / 1e6
        step = window / 8e6
        res = minimize(lambda x: loss_of(dict(zip(knobs, 1e6 * x))), x0, method="Nelder-Mead",
                       options={"initial_simplex": [x0, x0 + [step, 0], x0 + [0, step]],
                                "xatol": 1e-3, "fatol": 1e-7, "maxfev": 80})
        return {k: float(1e6 * v) for k, v in zip(knobs, res.x)}
    for lab in knobs:
        grid = np.linspace(-window, window, 9)
        best = grid[int(np.argmin([loss_of({lab: x}) for x in grid]))]
        h = window / 4
        det[lab] = float(minimize_scalar(lambda x: loss_of({lab: x}), bounds=(best - h, best + h),
                                         method="bounded", options={"xatol": 1e3}).x)
    return det


def coverage(params, strength=0.5e6, **kw):
    """Target fraction of every traceless Pauli product and the rank of the generated set.

    Returns ({term: fraction}, rank, {term: coefficient dict}).
    """
    frac, gen = {}, {}
    for lab in PAULI_LABELS[1:]:
        det = raman_resonance_detunings(lab, strength, params, **kw)
        sch = synthesize_pauli_term(lab, strength, params, tone_detunings=det, **kw)
        H, _ = effective_hamiltonian(sch, params)
        c = pauli_decomposition(H)
        gen[lab] = c
        frac[lab] = target_fraction(c, {lab: 1.0})
    M = np.array([[gen[a][b] for b in PAULI_LABELS[1:]] for a in PAULI_LABELS[1:]])
    rank = int(np.linalg.matrix_rank(M, tol=1e-3 * np.abs(M).max()))
    return frac, rank, gen

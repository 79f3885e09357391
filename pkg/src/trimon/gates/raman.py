"""Two-tone Raman processes through a virtually populated intermediate state."""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from ..errors import ZeroDetuning
from ..pulses import Envelope, sample

#: (first tone transition, second tone transition, sign of the second tone's detuning)
RAMAN_PATHS = {
    "RamanISwap": ("A00", "0B0", +1),
    "RamanBSwap": ("0B0", "A10", -1),
}
#: two-level blocks (lower, upper) of the ideal partial swaps
RAMAN_BLOCKS = {"RamanISwap": ("010", "100"), "RamanBSwap": ("000", "110")}


def raman_effective_rate(omega1, omega2, delta):
    """Effective two-photon Rabi rate Omega1 Omega2 / (2 Delta) (Hz)."""
    if delta == 0:
        raise ZeroDetuning("Raman detuning must be nonzero")
    return omega1 * omega2 / (2 * delta)


def raman_stark_shift(omega, delta):
    """Dispersive shift Omega^2 / (4 Delta) of a transition driven off-resonantly (Hz)."""
    if delta == 0:
        raise ZeroDetuning("Raman detuning must be nonzero")
    return omega**2 / (4 * delta)


def exact_lambda_rate(omega, delta):
    """Swap rate of a symmetric three-level Raman system beyond perturbation theory (Hz)."""
    return (np.sqrt(delta**2 + 2 * omega**2) - abs(delta)) / 2 * np.sign(delta)


def envelope_overlap(shape, duration, ramp=10e-9):
    """Integral of the squared unit-amplitude envelope (s)."""
    if shape == "cosine":
        return 3 * duration / 8
    env = Envelope(shape, 1.0, duration, ramp=ramp)
    val, _ = quad(lambda t: sample(env, t).real ** 2, 0, duration,
                  points=[env.ramp_time, duration - env.ramp_time])
    return val


def raman_amplitude(theta, delta, duration, shape="cosine", couplings=(1.0, 1.0)):
    """Equal peak amplitudes giving a partial-swap angle theta from the perturbative rate."""
    if delta == 0:
        raise ZeroDetuning("Raman detuning must be nonzero")
    lam = couplings[0] * couplings[1]
    return np.sqrt(abs(theta * delta) / (np.pi * lam * envelope_overlap(shape, duration)))


def raman_phases(kind, phi, delta):
    """Tone phases (phi1, phi2) realising exp(+i theta/2 (cos phi X + sin phi Y)) on the block."""
    if kind == "RamanISwap":
        return 0.0, (-phi if delta > 0 else -phi - np.pi)
    return 0.0, (phi + np.pi if delta > 0 else phi)


#: virtually populated intermediate state of each Raman process
RAMAN_INTERMEDIATE = {"RamanISwap": "000", "RamanBSwap": "010"}


def measure_raman_rate(kind, params, delta, theta=np.pi / 2, duration=None, hold=600e-9,
                       ramp=10e-9, space=None, step=0.2e-9, samples=80):
    """Fitted two-photon swap rate of the compiled tone pair held on as flat-top pulses.

    The tones of the compiled gate keep their amplitudes but are stretched to
    ``hold`` with ``ramp`` edges; the block population is fitted to
    a sin^2(pi f t + c) + b.  Returns (fitted f, Omega1 Omega2 / (2 Delta)).
    """
    from scipy.optimize import curve_fit

    from ..dynamics import DrivenSystem, EvolutionConfig, trajectory
    from ..hilbert import SpaceSpec, basis_state
    from ..pulses import Schedule, Tone
    from .compile import compile_gate
    from .spec import GateSpec

    space = SpaceSpec((3, 3, 2)) if space is None else space
    kw = {} if duration is None else {"duration": duration}
    sch = compile_gate(GateSpec(kind, theta=theta, raman_detuning=delta, **kw), params)
    tones = tuple(Tone(t.carrier_hz, t.phase_rad, Envelope("flat_top", t.envelope.amplitude, hold,
                                                           ramp=ramp), transition=t.transition)
                  for t in sch.tones)
    lo, hi = RAMAN_BLOCKS[kind]
    sys = DrivenSystem.from_params(params, space)
    times = np.linspace(2 * ramp, hold - 2 * ramp, samples)
    pops = trajectory(sys, Schedule(tones), basis_state(hi, space), times,
                      EvolutionConfig(step_s=step, check_convergence=False))
    P = pops[:, space.index(lo)]
    amps = [t.envelope.amplitude for t in sch.tones]
    pred = abs(raman_effective_rate(amps[0], amps[1], delta))

    def model(t, f, a, b, c):
        return a * np.sin(np.pi * f * t + c) ** 2 + b

    (f, *_), _ = curve_fit(model, times, P, p0=[pred * 0.85, 1.0, 0.0, 0.0])
    return float(abs(f)), float(pred)

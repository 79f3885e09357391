"""The trimon as one qudit: cyclic shifts and dynamical decoupling.

Run: python tutorials/06_qudit_decoupling.py   (a few seconds)
"""
import numpy as np

from trimon import presets
from trimon.gates.qudit import (REFERENCE_ORDERINGS, _labels, compose, dd_ensemble, decay_time,
                                qudit_x, sigma_for_decay)

p = presets.device_params()

# A d-level shift X_d is a chain of pi pulses along neighbouring transitions.
for d in (3, 4, 6, 8):
    gates = qudit_x(d, params=p)
    U = compose(gates)
    err = np.abs(np.linalg.matrix_power(U, d) - np.eye(8)).max()
    print(f"d={d}: ordering {REFERENCE_ORDERINGS[d]}, {len(gates)} gates, |X^d - I| = {err:.1e}")

# Quasi-static frequency noise dephases an equal superposition of the three
# states.  Pick the spread so free evolution loses coherence in about 5 us.
states = _labels(REFERENCE_ORDERINGS[3])
sigma = sigma_for_decay(states, 5e-6)
print(f"quasi-static spread {sigma / 1e3:.1f} kHz")

times = np.array([1, 2, 4, 8, 16, 32]) * 1e-6
noise = presets.device_noise()
for name, n, free in (("free", 1, True), ("1 x 3X", 1, False), ("2 x 3X", 2, False)):
    t, f, _ = dd_ensemble(3, n, times, sigma, noise, p, samples=16, free=free)
    print(f"{name:7s} 1/e time {decay_time(t, f, 3) * 1e6:6.2f} us  fidelities {np.round(f, 3)}")
# Cycling through all three states refocuses static offsets; what remains is T1/T2.

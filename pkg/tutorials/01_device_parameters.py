"""From a capacitance network to the cross-Kerr spectrum of the three modes.

Run: python tutorials/01_device_parameters.py
"""
import warnings

import numpy as np

from trimon import presets
from trimon.circuit import build_maxwell, conditional_frequencies, mode_params, normal_modes, \
    quantize_modes
from trimon.errors import AsymmetryWarning

# The design layout: four islands in a ring of four junctions.
spec = presets.design_circuit()
m = build_maxwell(spec)
print("capacitance matrix (fF):")
print(np.round(m.C * 1e15, 1))

# Normal modes of the linearised circuit.  One mode has zero frequency (the
# global charge offset); the other three become modes A, B and C.
modes = normal_modes(m)
print("normal-mode frequencies (GHz):", np.round(np.asarray(modes.frequencies) / 1e9, 4))

# Two routes to the Kerr coefficients: closed-form charging energies, and an
# exact diagonalisation of the quartic expansion in a truncated Fock space.
# The design's ground capacitances are unequal, which the closed form flags.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", AsymmetryWarning)
    closed = mode_params(spec)
    quant = quantize_modes(spec)
for name, p in (("closed form", closed), ("quantised", quant)):
    print(f"{name:12s} f01 =", ", ".join(f"{f / 1e9:.4f}" for f in p.base_transitions), "GHz")

# The measured device is described by its 0->1 frequencies, anharmonicities
# and dispersive shifts.  Each mode has four spectator-conditioned transitions.
p = presets.device_params()
cf = conditional_frequencies(p)
for lab in sorted(cf, key=cf.get):
    print(f"  {lab}: {cf[lab] / 1e9:.4f} GHz")

# Flipping a spectator moves a transition by exactly twice the cross-Kerr term.
print("0B0 - 1B0 =", (cf["0B0"] - cf["1B0"]) / 1e6, "MHz;  2 J_AB =", 2 * p.cross("A", "B") / 1e6)

# Note the near-collision of 1B1 with A00, which matters for unconditional gates on B.
print("A00 - 1B1 =", round((cf["A00"] - cf["1B1"]) / 1e6, 1), "MHz")

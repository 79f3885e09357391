"""Deterministic benchmarking to tune a gate, randomized benchmarking to grade it.

Run: python tutorials/05_benchmarking.py   (about 1 min)
"""
import warnings

import numpy as np

from trimon import presets
from trimon.gates.calibration import calibrate_db, db_trace
from trimon.gates.compile import nominal_calibration
from trimon.gates.rb import (calibrate_generators, depolarizing, generator_superops,
                             ideal_superops, run_rb)
from trimon.gates.spec import CalibrationRecord, GateSpec

warnings.simplefilter("ignore")
p = presets.device_params()
gate = GateSpec("CCR", "B", {"A": 0, "C": 0}, np.pi / 2)

# Start from a pulse that is 2% too strong and 200 kHz off resonance.  Repeated
# YY blocks amplify the amplitude error; X Xbar blocks amplify the detuning.
nom = nominal_calibration(gate, p)
bad = CalibrationRecord([nom.amplitudes[0] * 1.02], [200e3])
for seq in ("YY", "XXbar"):
    m, f = db_trace(gate, p, bad, seq, blocks=20)
    print(f"{seq:5s} trace before: min fidelity {f.min():.3f}")
rec = calibrate_db(gate, p, bad)
print(f"after DB: amplitude x{rec.amplitudes[0] / nom.amplitudes[0]:.5f}, "
      f"detuning {rec.detunings[0] / 1e3:.1f} kHz, residual {rec.residual:.1e}")
# The optimum detuning is not zero: it compensates the drive's own Stark shift.

# RB on one conditional transition.  With a known depolarizing error eps per
# Clifford, the recovered fidelity is 1 - eps / 2.
res = run_rb(ideal_superops(), n_random=10, seed=0, clifford_noise=depolarizing(0.01))
print(f"depolarizing RB: F = {res['fidelity']:.5f} (expected {1 - 0.005:.5f})")

# With simulated 40 ns generators under T1 and T2 of the device.
cal = calibrate_generators("0B0", p)
res = run_rb(generator_superops("0B0", p, presets.device_noise(), cal))
print(f"device RB: F per Clifford {res['fidelity']:.5f}, "
      f"per generator {res['fidelity_per_generator']:.5f}")

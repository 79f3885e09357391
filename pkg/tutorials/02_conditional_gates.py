"""Single-tone conditional rotations and their simultaneous-tone combinations.

Run: python tutorials/02_conditional_gates.py   (about 1 min)
"""
import warnings

import numpy as np

from trimon import presets
from trimon.gates.calibration import fit_space, numeric_calibrate
from trimon.gates.compile import compile_gate, gate_report, nominal_calibration
from trimon.gates.spec import GateSpec

warnings.simplefilter("ignore")
p = presets.device_params()

# A pi/2 rotation of B conditioned on A = C = 0 is one 60 ns cosine tone at the
# 0B0 frequency.  Its amplitude stays far below the 200 MHz spectator splittings.
ccx = GateSpec("CCR", "B", {"A": 0, "C": 0}, np.pi / 2)
sch = compile_gate(ccx, p)
for t in sch.tones:
    print(f"tone {t.transition}: {t.frequency / 1e9:.4f} GHz, peak {t.envelope.amplitude / 1e6:.2f} MHz")

# The nominal pulse area is already close; AC Stark shifts are then absorbed
# into virtual frame updates and a small numeric fit.
space = fit_space(ccx)
nom = gate_report(ccx, p, nominal_calibration(ccx, p), space)
rec = numeric_calibrate(ccx, p, final_space=space)
rep = gate_report(ccx, p, rec, space)
print(f"ccX_pi/2 fidelity: nominal {nom['fidelity']:.6f}, calibrated {rep['fidelity']:.6f}")
print("frame updates (rad):", {k: round(v, 4) for k, v in rec.frame_updates.items()})

# Dropping a condition adds tones: CR on B with C = 0 drives 0B0 and 1B0
# together, and the unconditional R drives all four B transitions.
for g in (GateSpec("CR", "B", {"C": 0}, np.pi / 2), GateSpec("R", "C", {}, np.pi / 2),
          GateSpec("R", "B", {}, np.pi / 2)):
    rec = numeric_calibrate(g, p, final_space=fit_space(g))
    rep = gate_report(g, p, rec, fit_space(g))
    print(f"{g.kind} on {g.target}: {len(compile_gate(g, p).tones)} tones, "
          f"fidelity {rep['fidelity']:.5f}, leakage {rep['leakage']:.1e}")

# R on B is limited by the 1B1 tone sitting 16 MHz from the A00 transition;
# a longer pulse narrows its spectrum and recovers the fidelity.
g = GateSpec("R", "B", {}, np.pi / 2, duration=120e-9)
rec = numeric_calibrate(g, p, final_space=fit_space(g))
print(f"R on B at 120 ns: fidelity {gate_report(g, p, rec, fit_space(g))['fidelity']:.5f}")

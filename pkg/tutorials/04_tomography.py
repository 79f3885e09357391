"""State and process tomography with readout errors.

Run: python tutorials/04_tomography.py   (about 15 s)
"""
import numpy as np

from trimon import presets
from trimon.gates.calibration import fit_space, numeric_calibrate
from trimon.gates.compile import gate_superop
from trimon.gates.spec import GateSpec
from trimon.measurement import ReadoutModel, build_confusion, spam_fidelity
from trimon.tomography import (BELL_STATES, chi_from_superop, chi_from_unitary, concurrence,
                               gate_fidelity, qpt, qst_mle, simulate_qpt_data,
                               simulate_qst_data, state_fidelity)

# Readout misassigns 5% of shots, spread over the three wrong outcomes.  The
# confusion matrix is itself estimated from sampled basis-state preparations.
model = ReadoutModel.symmetric(0.05, shots=40000)
C = build_confusion(model, seed=1)
print("assignment fidelity:", round(spam_fidelity(C), 4))

# Nine Pauli bases per state, corrected for readout and fitted to a physical
# density matrix by maximum likelihood.
for k, (name, psi) in enumerate(BELL_STATES.items()):
    data = simulate_qst_data(np.outer(psi, psi.conj()), model, seed=k)
    est = qst_mle(data, C, shots=model.shots)
    print(f"{name}: fidelity {state_fidelity(est.rho, psi):.4f}, "
          f"concurrence {concurrence(est.rho):.4f}")

# Process tomography of a calibrated ccX_pi/2 with T1 and T2 on the A, B block.
gate = GateSpec("CCR", "B", {"A": 0, "C": 0}, np.pi / 2)
cal = numeric_calibrate(gate, presets.device_params(), final_space=fit_space(gate))
S, U = gate_superop(gate, presets.device_params(), cal, presets.device_noise(),
                    space=fit_space(gate))
ideal = chi_from_unitary(U)
print("injected gate fidelity:", round(gate_fidelity(chi_from_superop(S), ideal), 5))

# 36 preparations x 36 measurements.  An identity reference run characterises
# preparation and measurement errors, which are split evenly and removed.
G = simulate_qpt_data(S, model.confusion(), model.shots, seed=2)
R = simulate_qpt_data(np.eye(16), model.confusion(), model.shots, seed=3)
raw, fit = qpt(G), qpt(G, R)
print("recovered gate fidelity: uncorrected", round(gate_fidelity(raw.chi, ideal), 5),
      " corrected", round(gate_fidelity(fit.chi, ideal), 5))

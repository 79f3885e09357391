"""Engineering two-qubit Pauli Hamiltonians from shaped multi-tone drives.

Run: python tutorials/07_hamiltonian_synthesis.py   (about 30 s; the full
coverage() over all 15 terms takes about a minute)
"""
import warnings

from trimon import presets
from trimon.gates.synthesis import (effective_hamiltonian, pauli_decomposition,
                                    raman_resonance_detunings, synthesize_pauli_term,
                                    target_fraction)

warnings.simplefilter("ignore")
p = presets.device_params()

# Local terms come from pairs of conditional tones with matched or opposite
# phases; ZZ-type terms come from virtual frame updates; XX and YY-type terms
# need Raman pairs.  The effective Hamiltonian of one drive period is extracted
# from its propagator and expanded in Pauli products.
for term in ("IX", "ZY", "ZZ", "XX", "YX"):
    det = raman_resonance_detunings(term, 0.5e6, p)
    sch = synthesize_pauli_term(term, 0.5e6, p, tone_detunings=det)
    H, sch = effective_hamiltonian(sch, p)
    c = pauli_decomposition(H)
    top = sorted(c.items(), key=lambda kv: -abs(kv[1]))[:3]
    print(f"{term}: {len(sch.tones)} tones, target fraction {target_fraction(c, {term: 1.0}):.4f}, "
          "largest terms", {k: round(v / 1e3, 1) for k, v in top}, "kHz")

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trimon import presets
from trimon.errors import ValidationError
from trimon.gates.synthesis import (PAULI_LABELS, effective_hamiltonian, pauli,
                                    pauli_decomposition, raman_resonance_detunings,
                                    synthesize_pauli_term, target_fraction, term_coefficients)

P = presets.device_params()


def test_identity_and_diagonal_terms():
    assert synthesize_pauli_term("II", 1e6, P).tones == ()
    for term in ("ZI", "IZ", "ZZ"):
        sch = synthesize_pauli_term(term, 1e6, P)
        assert sch.tones == () and len(sch.frame_updates) > 0


@given(st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_pauli_decomposition_round_trip(c):
    H = sum(x * pauli(l) for x, l in zip(c, PAULI_LABELS))
    d = pauli_decomposition(H)
    assert np.allclose([d[l] for l in PAULI_LABELS], c)


def test_target_fraction():
    assert target_fraction({"XX": 1.0, "YY": 1.0}, {"XX": 1, "YY": 1}) == pytest.approx(1)
    assert target_fraction({"XX": 1.0}, {"XX": 1, "YY": 1}) == pytest.approx(0.5)
    assert target_fraction({}, {"XX": 1}) == 0.0
    with pytest.raises(ValidationError):
        term_coefficients("XQ")


@pytest.mark.parametrize("term", ["IX", "ZY", "XZ"])
def test_conditional_tone_terms(term):
    H, _ = effective_hamiltonian(synthesize_pauli_term(term, 0.5e6, P), P)
    assert target_fraction(pauli_decomposition(H), {term: 1}) > 0.95


def test_diagonal_term_exact():
    H, _ = effective_hamiltonian(synthesize_pauli_term("ZZ", 0.5e6, P), P)
    c = pauli_decomposition(H)
    assert c["ZZ"] == pytest.approx(0.5e6, rel=1e-6)


def test_iswap_raman_pair():
    det = raman_resonance_detunings("XX+YY", 0.5e6, P)
    sch = synthesize_pauli_term("XX+YY", 0.5e6, P, tone_detunings=det)
    assert sorted(t.transition for t in sch.tones) == ["0B0", "A00"]
    H, _ = effective_hamiltonian(sch, P)
    assert target_fraction(pauli_decomposition(H), term_coefficients("XX+YY")) > 0.95

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimon.dynamics import unitary_superop
from trimon.errors import (InconsistentGrid, NonPSDInput, SingularConfusion, ValidationError)
from trimon.gates.rb import depolarizing
from trimon.measurement import ReadoutModel, born_probabilities
from trimon.tomography import (BASES, BELL_STATES, PAULI_LABELS, ChiMatrix, chi_from_superop,
                               chi_from_unitary, concurrence, gate_fidelity, process_fidelity,
                               qpt, qst_mle, simulate_qpt_data, simulate_qst_data,
                               spam_correct_probs, state_fidelity, superop_from_chi)

CZ = np.diag([1, 1, 1, -1]).astype(complex)


def exact_data(rho):
    return {b: born_probabilities(rho, b) for b in BASES}


def random_state(seed, rank=4):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def test_spam_correction_identity_and_inverse():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    q, clip = spam_correct_probs(p, np.eye(4))
    assert q == pytest.approx(p) and clip == 0
    C = ReadoutModel().confusion()
    q, clip = spam_correct_probs(C @ p, C)
    assert q == pytest.approx(p, abs=1e-12)


def test_spam_correction_clips_and_raises():
    C = ReadoutModel.symmetric(0.05).confusion()
    q, clip = spam_correct_probs([1.0, 0, 0, 0], C)
    assert clip > 0 and np.all(q >= 0) and q.sum() == pytest.approx(1)
    with pytest.raises(SingularConfusion):
        spam_correct_probs([0.25] * 4, np.full((4, 4), 0.25))


def test_spam_correction_on_sampled_bell_statistics():
    model = ReadoutModel.symmetric(0.05)
    data = simulate_qst_data(np.outer(BELL_STATES["Phi+"], BELL_STATES["Phi+"]), model, seed=3)
    q, _ = spam_correct_probs(data["ZZ"] / data["ZZ"].sum(), model.confusion())
    assert 0.5 * np.abs(q - [0.5, 0, 0, 0.5]).sum() < 0.01


def test_qst_exact_bell_and_mixed():
    psi = BELL_STATES["Phi+"]
    est = qst_mle(exact_data(np.outer(psi, psi.conj())))
    assert state_fidelity(est.rho, psi) > 0.9999
    est = qst_mle(exact_data(np.eye(4) / 4))
    assert np.abs(est.rho - np.eye(4) / 4).max() < 1e-6


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10_000))
def test_qst_recovers_full_rank_states(seed):
    rho = random_state(seed)
    est = qst_mle(exact_data(rho))
    assert np.abs(est.rho - rho).max() < 1e-5
    assert np.all(np.linalg.eigvalsh(est.rho) > -1e-12)


def test_qst_missing_basis():
    with pytest.raises(ValidationError):
        qst_mle({"ZZ": [1, 0, 0, 0]})


def test_sampled_bell_qst_with_spam_correction():
    model = ReadoutModel.symmetric(0.05)
    fids = []
    for k, (name, psi) in enumerate(BELL_STATES.items()):
        data = simulate_qst_data(np.outer(psi, psi.conj()), model, seed=10 + k)
        est = qst_mle(data, model.confusion(), shots=model.shots)
        fids.append(state_fidelity(est.rho, psi))
    assert np.mean(fids) >= 0.995


def test_fidelity_and_concurrence_oracles():
    psi = BELL_STATES["Psi-"]
    assert concurrence(psi) == pytest.approx(1)
    assert concurrence(np.eye(4) / 4) == pytest.approx(0, abs=1e-12)
    assert concurrence(np.kron([1, 0], [0, 1])) == pytest.approx(0, abs=1e-12)
    assert state_fidelity(psi, psi) == pytest.approx(1)
    assert state_fidelity(np.eye(4) / 4, psi) == pytest.approx(0.25)


@given(st.floats(0, 1))
def test_werner_concurrence(p):
    phi = BELL_STATES["Phi+"]
    rho = p * np.outer(phi, phi) + (1 - p) * np.eye(4) / 4
    assert concurrence(rho) == pytest.approx(max(0, (3 * p - 1) / 2), abs=1e-7)


def test_process_and_gate_fidelity_oracles():
    chi_I = chi_from_unitary(np.eye(4))
    depol = np.eye(16) / 16
    assert process_fidelity(chi_I, depol) == pytest.approx(1 / 16)
    assert gate_fidelity(depol, chi_I) == pytest.approx(0.25)
    chi = chi_from_unitary(CZ)
    assert process_fidelity(chi, chi) == pytest.approx(1)
    assert gate_fidelity(chi, chi) == pytest.approx(1)
    # F_P = 0.99 -> F_G = 0.992
    mix = 0.99 * chi_I + 0.01 * chi_from_unitary(np.kron(np.diag([1, -1]), np.eye(2)))
    assert gate_fidelity(mix, chi_I) == pytest.approx(0.992)


def test_non_psd_input():
    bad = chi_from_unitary(np.eye(4)) - 1e-3 * np.eye(16)
    with pytest.raises(NonPSDInput):
        process_fidelity(chi_from_unitary(np.eye(4)), bad)
    tiny = chi_from_unitary(np.eye(4)) - 1e-8 * np.eye(16)
    assert process_fidelity(chi_from_unitary(np.eye(4)), tiny) == pytest.approx(1, abs=1e-6)


def test_chi_conventions():
    assert PAULI_LABELS[:5] == ("II", "IX", "IY", "IZ", "XI") and PAULI_LABELS[-1] == "ZZ"
    chi = chi_from_unitary(CZ)
    # CZ = (II + IZ + ZI - ZZ) / 2
    c = np.zeros(16)
    c[[0, 3, 12]] = 0.5
    c[15] = -0.5
    assert np.allclose(chi, np.outer(c, c))
    assert np.allclose(superop_from_chi(chi), unitary_superop(CZ))


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_chi_superop_round_trip(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    chi = A @ A.conj().T
    assert np.allclose(chi_from_superop(superop_from_chi(chi)), chi)


def test_qpt_ideal_identity_and_cz():
    chi = qpt(simulate_qpt_data(np.eye(16))).chi
    expected = np.zeros((16, 16))
    expected[0, 0] = 1
    assert np.abs(chi - expected).max() < 1e-6
    chi = qpt(simulate_qpt_data(unitary_superop(CZ))).chi
    assert np.abs(chi - chi_from_unitary(CZ)).max() < 1e-6


def test_qpt_reference_correction_exact_spam():
    C = ReadoutModel.symmetric(0.05).confusion()
    ch = depolarizing(0.003, 4) @ unitary_superop(CZ)
    target = chi_from_unitary(CZ)
    injected = gate_fidelity(chi_from_superop(ch), target)
    G = simulate_qpt_data(ch, C, prep_error=depolarizing(0.01, 4))
    R = simulate_qpt_data(np.eye(16), C, prep_error=depolarizing(0.01, 4))
    assert gate_fidelity(qpt(G).chi, target) < injected - 0.02
    res = qpt(G, R)
    assert res.spam_corrected
    assert gate_fidelity(res.chi, target) == pytest.approx(injected, abs=1e-4)


def test_qpt_inconsistent_grid():
    G = simulate_qpt_data(np.eye(16))
    with pytest.raises(InconsistentGrid):
        qpt(G, G[:35])
    with pytest.raises(InconsistentGrid):
        qpt(G[:, :30])
    with pytest.raises(InconsistentGrid):
        qpt(G, G, settings=["a"], reference_settings=["b"])


def test_chi_json_round_trip():
    chi = ChiMatrix(chi_from_unitary(CZ), True)
    back = ChiMatrix.from_json(chi.to_json())
    assert np.allclose(back.chi, chi.chi) and back.spam_corrected

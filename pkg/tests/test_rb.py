import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimon.errors import FitFailure, ValidationError
from trimon.gates.compile import rotation
from trimon.gates.rb import (GENERATORS, clifford_group, depolarizing, fit_decay, ideal_superops,
                             run_rb, subspace_gate, survival)

CLIFFORDS = clifford_group()


def _same_up_to_phase(A, B):
    k = np.argmax(np.abs(B))
    ph = A.flat[k] / B.flat[k]
    return abs(abs(ph) - 1) < 1e-9 and np.allclose(A, ph * B)


def test_clifford_group_size_and_words():
    assert len(CLIFFORDS) == 24
    assert CLIFFORDS[0][1] == ()
    for U, word in CLIFFORDS:
        V = np.eye(2, dtype=complex)
        for g in word:
            V = rotation(*GENERATORS[g]) @ V
        assert _same_up_to_phase(V, U)
    assert max(len(w) for _, w in CLIFFORDS) <= 3


@settings(max_examples=30)
@given(st.integers(0, 23), st.integers(0, 23))
def test_clifford_closure(i, j):
    U = CLIFFORDS[i][0] @ CLIFFORDS[j][0]
    assert any(_same_up_to_phase(U, C) for C, _ in CLIFFORDS)


def test_pauli_conjugation_stays_pauli():
    X = np.array([[0, 1], [1, 0]])
    for C, _ in CLIFFORDS:
        M = C @ X @ C.conj().T
        assert np.isclose(np.max(np.abs(M)), 1) and np.count_nonzero(np.abs(M) > 1e-9) == 2


def test_noiseless_rb_gives_unit_decay():
    res = run_rb(ideal_superops(), lengths=(1, 5, 20), n_random=4, seed=1)
    assert res["p"] == pytest.approx(1.0, abs=1e-6)
    assert res["fidelity"] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("eps", [0.002, 0.01])
def test_depolarizing_rb(eps):
    res = run_rb(ideal_superops(), n_random=10, seed=3, clifford_noise=depolarizing(eps))
    assert 1 - res["fidelity"] == pytest.approx(eps / 2, rel=0.05)


def test_rb_is_deterministic_given_seed():
    a = survival(ideal_superops(), (1, 4), 3, seed=9, clifford_noise=depolarizing(0.05))
    b = survival(ideal_superops(), (1, 4), 3, seed=9, clifford_noise=depolarizing(0.05))
    assert np.array_equal(a, b)


def test_fit_failure_on_rising_data():
    with pytest.raises(FitFailure):
        fit_decay([1, 2, 3, 4], [0.6, 0.7, 0.8, 0.9], [0.001] * 4)
    with pytest.raises(ValidationError):
        run_rb(ideal_superops(), lengths=(0, 1))


def test_fit_decay_oracle():
    m = np.array([1, 10, 50, 100, 200])
    p, A, B = fit_decay(m, 0.5 * 0.99**m + 0.5)
    assert p == pytest.approx(0.99, abs=1e-6) and A == pytest.approx(0.5, abs=1e-4)


@given(st.floats(0, 1))
def test_depolarizing_superop_trace_preserving(eps):
    S = depolarizing(eps)
    rho = np.array([[0.7, 0.2], [0.2, 0.3]])
    out = (S @ rho.reshape(-1)).reshape(2, 2)
    assert np.trace(out) == pytest.approx(1)


def test_subspace_gate_condition():
    g = subspace_gate("1B0", np.pi, 0.0)
    assert g.condition == {"A": 1, "C": 0} and g.transitions == ("1B0",)
    assert g.duration == pytest.approx(40e-9)

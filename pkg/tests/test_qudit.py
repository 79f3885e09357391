import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimon import presets
from trimon.errors import InvalidOrdering, ValidationError
from trimon.gates.compile import SP2
from trimon.gates.qudit import (SLOW_DURATION, REFERENCE_COMPILATIONS, REFERENCE_ORDERINGS, compose,
                                dd_ensemble, dd_schedule, decay_time, free_coherence, qudit_x,
                                shift_permutation, shift_transitions, sigma_for_decay)

P = presets.device_params()


def test_d3_compilation():
    gates = qudit_x(3)
    assert [g.transitions for g in gates[:-1]] == [("A00",), ("0B0",)]
    assert gates[-1].kind == "VirtualDiagonal"


@pytest.mark.parametrize("d", [3, 4, 6, 8])
def test_xd_power_is_identity(d):
    U = compose(qudit_x(d))
    assert np.allclose(U, shift_permutation(REFERENCE_ORDERINGS[d]))
    assert np.allclose(np.linalg.matrix_power(U, d), np.eye(8), atol=1e-12)
    assert shift_transitions(REFERENCE_ORDERINGS[d]) == REFERENCE_COMPILATIONS[d]


@settings(max_examples=25, deadline=None)
@given(st.permutations(list(range(8))), st.integers(2, 8))
def test_path_orderings_compose_to_shift(perm, d):
    states = [SP2.labels()[k] for k in perm[:d]]
    try:
        gates = qudit_x(ordering=states)
    except InvalidOrdering:
        return
    U = compose(gates)
    assert np.allclose(U, shift_permutation(states))
    assert np.allclose(np.linalg.matrix_power(U, d), np.eye(8), atol=1e-12)


def test_invalid_orderings():
    with pytest.raises(InvalidOrdering):
        shift_transitions(("000", "110", "011"))
    with pytest.raises(InvalidOrdering):
        shift_transitions(("000", "000"))
    with pytest.raises(InvalidOrdering):
        qudit_x(4, ordering=("000", "100", "110"))
    with pytest.raises(ValidationError):
        qudit_x(5)


def test_near_collision_pulses_lengthened():
    gates = qudit_x(8, params=P)
    durations = {g.transitions[0]: g.duration for g in gates if g.kind == "CCR"}
    assert durations["1B1"] == SLOW_DURATION
    assert durations["0B1"] == pytest.approx(60e-9)


def test_dd_schedule_layout():
    sch = dd_schedule(3, 2, params=P, total_time=2e-6)
    assert sch.total_duration_s == pytest.approx(2e-6)
    assert len(sch.tones) == 2 * 3 * 2
    starts = sorted(t.start_s for t in sch.tones)
    assert starts[0] > 0
    with pytest.raises(ValidationError):
        dd_schedule(3, 2, params=P, total_time=100e-9)


def test_free_coherence_sigma():
    states = REFERENCE_ORDERINGS[3]
    sig = sigma_for_decay(states, 5e-6)
    c = (free_coherence(states, sig, 5e-6)[0] - 1 / 3) / (2 / 3)
    assert c == pytest.approx(np.exp(-1), rel=1e-6)
    assert free_coherence(states, 0.0, [1e-6, 1e-3]) == pytest.approx([1, 1])


def test_noiseless_dd_is_flat():
    t, f, _ = dd_ensemble(3, 1, [1e-6, 3e-6], 0.0, None, P, samples=1)
    assert f == pytest.approx([1, 1], abs=1e-3)


def test_dd_beats_free_evolution_d4():
    times = [4e-6, 8e-6]
    _, free, _ = dd_ensemble(4, 1, times, 50e3, None, P, samples=12, seed=1, free=True)
    _, dd, _ = dd_ensemble(4, 1, times, 50e3, None, P, samples=12, seed=1)
    assert np.all(dd > free)


def test_decay_time_oracle():
    t = np.linspace(0, 10e-6, 41)
    d = 3
    f = 1 / d + (1 - 1 / d) * np.exp(-t / 4e-6)
    assert decay_time(t, f, d) == pytest.approx(4e-6, rel=0.02)

import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trimon import presets
from trimon.circuit import conditional_frequencies
from trimon.errors import FrequencyCollision, ValidationError, ZeroDetuning
from trimon.gates.compile import (AB_STATES, SP2, RamanWarning, check_collisions, compile_gate,
                                  gate_report, gate_superop, ideal_unitary, nominal_calibration,
                                  rotation, stark_correct, virtual_diagonal)
from trimon.gates.raman import (RAMAN_INTERMEDIATE, exact_lambda_rate, measure_raman_rate,
                                raman_effective_rate, raman_stark_shift)
from trimon.gates.spec import CalibrationRecord, CalibrationStore, GateSpec, parse_condition
from trimon.hilbert import TRANSITIONS
from trimon.pulses import Envelope, Tone

P = presets.device_params()
CF = conditional_frequencies(P)
CCX = GateSpec("CCR", "B", {"A": 0, "C": 0}, np.pi / 2)


def test_ccr_compiles_to_one_tone():
    sch = compile_gate(CCX, P)
    assert len(sch.tones) == 1
    t = sch.tones[0]
    assert t.transition == "0B0" and t.frequency == pytest.approx(CF["0B0"])
    assert t.envelope.duration == pytest.approx(60e-9)
    # amplitude well below the 200 MHz scale of the spectator splittings
    assert t.envelope.amplitude < 10e6


def test_cr_and_r_tone_counts():
    cr = compile_gate(GateSpec("CR", "B", {"C": 0}), P)
    assert sorted(t.transition for t in cr.tones) == ["0B0", "1B0"]
    r = compile_gate(GateSpec("R", "C", {}), P)
    assert sorted(t.transition for t in r.tones) == ["00C", "01C", "10C", "11C"]
    assert len({t.start_s for t in r.tones}) == 1


def test_virtual_cz_has_no_tones():
    sch = compile_gate(virtual_diagonal("CZ"), P)
    assert sch.tones == () and len(sch.frame_updates) > 0
    U = ideal_unitary(virtual_diagonal("CZ"))
    assert np.allclose(np.diag(U), [1, 1, 1, 1, 1, 1, -1, -1])


def test_raman_iswap_tones():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RamanWarning)
        sch = compile_gate(GateSpec("RamanISwap", theta=np.pi / 2, raman_detuning=32e6), P)
    f = {t.transition: t.frequency for t in sch.tones}
    assert f["A00"] - CF["A00"] == pytest.approx(32e6)
    assert f["0B0"] - CF["0B0"] == pytest.approx(32e6)
    # the difference frequency matches the |10> <-> |01> splitting
    assert f["0B0"] - f["A00"] == pytest.approx(CF["0B0"] - CF["A00"])


def test_raman_bswap_sum_frequency():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RamanWarning)
        sch = compile_gate(GateSpec("RamanBSwap", theta=np.pi / 2, raman_detuning=30e6), P)
    f = sorted(t.frequency for t in sch.tones)
    assert sum(f) == pytest.approx(CF["0B0"] + CF["A10"])


def test_raman_warning_and_zero_detuning():
    with pytest.warns(RamanWarning):
        compile_gate(GateSpec("RamanISwap", theta=np.pi / 2, raman_detuning=32e6), P)
    with pytest.raises(ZeroDetuning):
        GateSpec("RamanISwap", theta=np.pi / 2)
    with pytest.raises(ZeroDetuning):
        raman_effective_rate(1e6, 1e6, 0)


def test_raman_rate_formulas():
    assert raman_effective_rate(8e6, 8e6, 32e6) == pytest.approx(1e6)
    assert raman_effective_rate(8e6, 8e6, -32e6) == pytest.approx(-1e6)
    assert raman_stark_shift(8e6, 32e6) == pytest.approx(0.5e6)
    # the exact Lambda-system rate approaches the perturbative one for weak drives
    assert exact_lambda_rate(0.1e6, 32e6) == pytest.approx(
        raman_effective_rate(0.1e6, 0.1e6, 32e6), rel=1e-4)


def test_collision_detection():
    env = Envelope("cosine", 5e6, 60e-9)
    tones = [Tone(5.0e9, 0, env), Tone(5.0005e9, 0, env)]
    with pytest.raises(FrequencyCollision):
        check_collisions(tones, P)
    with pytest.raises(FrequencyCollision):
        check_collisions([Tone(CF["1B1"] + 0.2e6, 0, env)], P)
    check_collisions([Tone(CF["0B0"], 0, env)], P, targeted=("0B0",))


@given(st.floats(-2 * np.pi, 2 * np.pi), st.floats(-np.pi, np.pi))
def test_rotation_is_unitary_and_composes(theta, phi):
    R = rotation(theta, phi)
    assert np.allclose(R @ R.conj().T, np.eye(2))
    assert np.allclose(rotation(-theta, phi) @ R, np.eye(2))
    assert np.allclose(rotation(theta, phi + np.pi), rotation(-theta, phi))


def test_ideal_unitary_blocks():
    U = ideal_unitary(CCX)
    off = np.ones(8, dtype=bool)
    off[[SP2.index("000"), SP2.index("010")]] = False
    assert np.allclose(U[np.ix_(off, off)], np.eye(6))
    U = ideal_unitary(GateSpec("R", "A", {}, np.pi))
    # an unconditional pi pulse on A flips A for every spectator state
    assert np.allclose(np.abs(U[SP2.index("100"), SP2.index("000")]), 1)
    assert np.allclose(np.abs(U[SP2.index("111"), SP2.index("011")]), 1)


def test_stark_corrected_ccx_fidelity():
    cal = stark_correct(CCX, P)
    rep = gate_report(CCX, P, cal)
    assert rep["fidelity"] > 0.999
    assert rep["spectator_deviation"] < 1e-3


def test_gate_superop_noiseless_is_unitary_block():
    cal = stark_correct(CCX, P)
    S, U = gate_superop(CCX, P, cal)
    assert S.shape == (16, 16) and U.shape == (4, 4)
    assert np.allclose(U, ideal_unitary(CCX)[np.ix_([0, 2, 4, 6], [0, 2, 4, 6])])
    assert AB_STATES == ("000", "010", "100", "110")


def test_gate_spec_parsing_and_signature():
    assert parse_condition("0_x", "B") == {"A": 0}
    assert parse_condition({"A": 1, "C": None}, "B") == {"A": 1}
    with pytest.raises(ValidationError):
        parse_condition("0", "B")
    with pytest.raises(ValidationError):
        GateSpec("CCR", "B", "0_x")
    with pytest.raises(ValidationError):
        GateSpec("Toffoli")
    g = GateSpec.from_config({"kind": "CCR", "target": "B", "condition": "0_0",
                              "theta_pi_units": 0.5, "duration_ns": 60})
    assert g == CCX
    assert CCX.transitions == ("0B0",)
    assert GateSpec("R", "B", {}).transitions == ("0B0", "0B1", "1B0", "1B1")
    assert CCX.signature() != CCX.with_(phi=0.1).signature()


def test_calibration_store_round_trip(tmp_path):
    store = CalibrationStore(tmp_path / "cal.json")
    rec = CalibrationRecord([1e6], [2e3], {"0B0": 0.1}, [0.2], 1e-5, [0.5])
    store.put(CCX, rec)
    again = CalibrationStore(tmp_path / "cal.json").get(CCX)
    assert again.amplitudes == rec.amplitudes and again.frame_updates == rec.frame_updates
    assert json.loads((tmp_path / "cal.json").read_text())
    assert store.get(CCX.with_(theta=np.pi)) is None
    with pytest.raises(ValidationError):
        CalibrationRecord([1.0], [])
    with pytest.raises(ValidationError):
        CalibrationRecord([1.0], [0.0], {"B00": 0.1})


def test_nominal_calibration_matches_tones():
    for g in (CCX, GateSpec("CR", "A", {"B": 1}), GateSpec("R", "B", {})):
        rec = nominal_calibration(g, P)
        assert len(rec.amplitudes) == len(compile_gate(g, P).tones)


def test_raman_intermediate_labels():
    assert set(RAMAN_INTERMEDIATE) == {"RamanISwap", "RamanBSwap"}
    assert all(s in AB_STATES for s in RAMAN_INTERMEDIATE.values())
    assert set(TRANSITIONS) >= {"A00", "0B0", "A10"}


def test_raman_rate_fit_order_of_magnitude():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RamanWarning)
        f, pred = measure_raman_rate("RamanISwap", P, 32e6, hold=300e-9, step=0.4e-9, samples=40)
    # strong drives (Omega / Delta ~ 0.6) make the exact rate slower than the perturbative one
    assert 0.6 * pred < f < pred

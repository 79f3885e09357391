import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trimon import presets
from trimon.circuit import conditional_frequencies
from trimon.dynamics import (DrivenSystem, EvolutionConfig, NoiseChannels, average_gate_fidelity,
                             gate_unitary, propagate_lindblad, propagate_unitary, restrict_superop,
                             sample_quasi_static, superop_average_fidelity, unitary_superop)
from trimon.errors import NegativeDephasing, StepTooCoarse, ValidationError
from trimon.hilbert import SpaceSpec, static_hamiltonian
from trimon.pulses import (Envelope, FrameLedger, Schedule, Tone, apply_virtual_z,
                           cosine_amplitude_for)

P = presets.device_params()
CF = conditional_frequencies(P)
SP2, SP3 = SpaceSpec(2), SpaceSpec(3)
FAST = EvolutionConfig(check_convergence=False)


def rot(theta, phi):
    n = np.cos(phi) * np.array([[0, 1], [1, 0]]) + np.sin(phi) * np.array([[0, -1j], [1j, 0]])
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * n


def pulse(label, theta=np.pi / 2, phi=0.0, tau=60e-9, start=0.0):
    env = Envelope("cosine", cosine_amplitude_for(theta, tau), tau)
    return Tone(CF[label], phi, env, start_s=start, transition=label)


def block(U, a, b, sp=SP2):
    i, j = sp.index(a), sp.index(b)
    return U[np.ix_([i, j], [i, j])]


def test_empty_schedule_identity():
    U = propagate_unitary(static_hamiltonian(P), Schedule((), (), 50e-9))
    assert np.allclose(U, np.eye(8))


@pytest.mark.parametrize("phi", [0.0, np.pi / 2, 1.0])
def test_phase_sets_rotation_axis(phi):
    U = DrivenSystem.from_params(P).unitary(Schedule((pulse("0B0", np.pi / 2, phi),)))
    B = block(U, "000", "010")
    ov = abs(np.trace(rot(np.pi / 2, phi).conj().T @ B)) / 2
    assert ov > 0.999


def test_pi_pulse_population_transfer():
    U = DrivenSystem.from_params(P).unitary(Schedule((pulse("A00", np.pi),)))
    assert abs(U[SP2.index("100"), SP2.index("000")]) ** 2 >= 0.999


def test_two_tone_unconditional_flip():
    sch = Schedule((pulse("0B0", np.pi), pulse("1B0", np.pi)))
    U = DrivenSystem.from_params(P).unitary(sch)
    assert abs(U[SP2.index("010"), SP2.index("000")]) ** 2 > 0.995
    assert abs(U[SP2.index("110"), SP2.index("100")]) ** 2 > 0.995


def test_unitarity_and_composition():
    sys = DrivenSystem.from_params(P, SP3)
    sch = Schedule((pulse("0B0"), pulse("A00", np.pi, 0.3, start=20e-9)))
    U = sys.unitary(sch)
    assert np.abs(U.conj().T @ U - np.eye(27)).max() < 1e-8
    for split in (13.7e-9, 40e-9, 71e-9):
        U1 = sys.unitary(sch, t0=0.0, t1=split)
        U2 = sys.unitary(sch, t0=split, t1=sch.duration)
        assert np.abs(U2 @ U1 - U).max() < 1e-7


def test_methods_agree():
    sys = DrivenSystem.from_params(P, SP2)
    sch = Schedule((pulse("0B0", np.pi / 2, 0.4, tau=30e-9),))
    U = sys.unitary(sch)
    Urk = sys.unitary(sch, EvolutionConfig(method="rk"))
    assert np.abs(U - Urk).max() < 1e-6
    Ulab = sys.unitary(sch, EvolutionConfig(frame="lab", step_s=2e-12))
    target = rot(np.pi / 2, 0.4)
    fi = average_gate_fidelity(block(U, "000", "010"), target)
    fl = average_gate_fidelity(block(Ulab, "000", "010"), target)
    assert abs(fi - fl) < 1e-6


def test_rwa_cross_validation():
    sys = DrivenSystem.from_params(P, SP2)
    sch = Schedule((pulse("0B0"),))
    U = sys.unitary(sch)
    Ur = sys.unitary(sch, EvolutionConfig(rwa=True, step_s=1e-9))
    assert np.abs(U - Ur).max() < 1e-2
    assert average_gate_fidelity(Ur, U) > 0.9999


def errors_vs_reference(steps):
    sys = DrivenSystem.from_params(P, SP2)
    sch = Schedule((pulse("0B0", np.pi, 0.2, tau=20e-9), pulse("A00", np.pi / 2, tau=20e-9)))

    def run(h):
        return sys.unitary(sch, EvolutionConfig(step_s=h, check_convergence=False))

    ref = run(steps[-1] / 4)
    return [np.abs(run(h) - ref).max() for h in steps]


def test_step_halving_order():
    e = errors_vs_reference([0.8e-9, 0.4e-9])
    order = np.log2(e[0] / e[1])
    assert order > 1.8


def test_step_too_coarse():
    sys = DrivenSystem.from_params(P, SP2)
    sch = Schedule((pulse("0B0", np.pi, tau=20e-9),))
    with pytest.raises(StepTooCoarse):
        sys.unitary(sch, EvolutionConfig(step_s=5e-9, tolerance=1e-9, max_refinements=1))


def test_lindblad_t1_decay_law():
    noise = NoiseChannels(T1=(54e-6, None, None))
    rho0 = np.zeros((8, 8), complex)
    rho0[SP2.index("100"), SP2.index("100")] = 1
    sys = DrivenSystem.from_params(P)
    for t in (1e-6, 20e-6, 100e-6):
        rho = sys.superop(Schedule((), (), t), noise, rho=rho0)
        assert rho[SP2.index("100"), SP2.index("100")].real == pytest.approx(np.exp(-t / 54e-6),
                                                                           rel=1e-9)


def test_lindblad_noiseless_matches_unitary():
    H0 = static_hamiltonian(P)
    sch = Schedule((pulse("0B0", np.pi / 2, 0.7),))
    psi = np.ones(8) / np.sqrt(8)
    rho = propagate_lindblad(H0, sch, NoiseChannels(), rho0=np.outer(psi, psi.conj()))
    U = propagate_unitary(H0, sch)
    assert np.abs(rho - U @ np.outer(psi, psi.conj()) @ U.conj().T).max() < 1e-6


def test_lindblad_trace_and_hermiticity_long_run():
    noise = presets.device_noise()
    sys = DrivenSystem.from_params(P)
    sch = Schedule((pulse("0B0"), pulse("A00", start=70e-9)), (), 100e-6)
    psi = np.ones(8) / np.sqrt(8)
    rho = sys.superop(sch, noise, rho=np.outer(psi, psi))
    assert abs(np.trace(rho) - 1) < 1e-7
    assert np.abs(rho - rho.conj().T).max() < 1e-9


def test_pure_dephasing_monotone():
    noise = NoiseChannels(T1=(None,) * 3, T2=(20e-6, 30e-6, 40e-6))
    sys = DrivenSystem.from_params(P)
    psi = np.ones(8) / np.sqrt(8)
    rho = np.outer(psi, psi).astype(complex)
    last = np.abs(rho)
    for _ in range(5):
        rho = sys.superop(Schedule((), (), 5e-6), noise, rho=rho)
        assert np.allclose(np.diag(rho).real, 1 / 8)
        off = np.abs(rho) - np.diag(np.diag(np.abs(rho)))
        assert np.all(off <= last - np.diag(np.diag(last)) + 1e-15)
        last = np.abs(rho)


def test_t1_gate_error_budget():
    noise = NoiseChannels(T1=(54e-6, None, None))
    sys = DrivenSystem.from_params(P)
    sch = Schedule((pulse("A00"),))
    U = sys.unitary(sch)
    S = sys.superop(sch, noise)
    idx = [SP2.index("000"), SP2.index("100")]
    S2 = restrict_superop(S, idx, 8)
    U2 = U[np.ix_(idx, idx)]
    infid = 1 - superop_average_fidelity(S2, U2)
    budget = 60e-9 / (2 * 54e-6)
    assert budget / 2 <= infid <= 2 * budget


def test_negative_dephasing_rejected():
    with pytest.raises(NegativeDephasing):
        NoiseChannels(T1=(10e-6, None, None), T2=(25e-6, None, None))
    with pytest.raises(ValidationError):
        EvolutionConfig(tolerance=1e-3)


def test_quasi_static_sampling():
    assert np.all(sample_quasi_static(NoiseChannels(), 3) == 0)
    n = NoiseChannels(quasi_static_sigma=(50e3, 80e3, 0.0))
    assert np.array_equal(sample_quasi_static(n, 11), sample_quasi_static(n, 11))
    draws = np.array([sample_quasi_static(n, s) for s in range(2000)])
    assert np.allclose(draws[:, :2].std(axis=0), [50e3, 80e3], rtol=0.05)


def test_gate_unitary_identity_and_frame():
    V, leak = gate_unitary(np.eye(27), FrameLedger(), SP3)
    assert np.allclose(V, np.eye(8)) and leak < 1e-12
    led = FrameLedger()
    for lab in ("A10", "A11", "1B0", "1B1"):
        led = apply_virtual_z(led, lab, np.pi)
    V, _ = gate_unitary(np.eye(8), led)
    assert V[SP2.index("110"), SP2.index("110")] == pytest.approx(-1)


def test_virtual_z_conjugates_following_pulse():
    # Z(pi/2) on the 0B0 frame followed by an X pulse acts like a Y-type rotation
    sch = Schedule((pulse("0B0", np.pi / 2, 0.0, start=0.0),))
    sch = Schedule((), ()).with_frame_updates(
        [(lab, np.pi / 2) for lab in ("0B0", "0B1", "1B0", "1B1")]).then(sch)
    U = DrivenSystem.from_params(P).unitary(sch)
    V, _ = gate_unitary(U, sch.final_ledger())
    z = np.diag([1, np.exp(1j * np.pi / 2)])
    expect = rot(np.pi / 2, 0.0) @ z
    B = V[np.ix_([SP2.index("000"), SP2.index("010")], [SP2.index("000"), SP2.index("010")])]
    assert abs(np.trace(expect.conj().T @ B)) / 2 > 0.999


def test_strong_undetuned_drive_leaks():
    sys = DrivenSystem.from_params(P, SP3)
    env = Envelope("cosine", 150e6, 10e-9)
    U = sys.unitary(Schedule((Tone(CF["0B0"], 0.0, env),)), FAST)
    _, leak = gate_unitary(U, None, SP3)
    assert leak > 1e-3

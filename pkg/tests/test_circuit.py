import warnings

import mpmath as mp
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from trimon import presets
from trimon.circuit import (CROSS_PAIRS, LAPLACIAN_TO_INV_HENRY, CircuitSpec, ModeParams,
                            build_maxwell, conditional_frequencies, effective_charging_energies,
                            load_circuit_config, mode_params, normal_modes, quantize_modes)
from trimon.config import bundled, load_config
from trimon.errors import AsymmetryWarning, DegenerateSpectrum, NonPositiveDefinite, ValidationError

FF = 1e-15


def symmetric_spec(cg=40.0, cn=20.0, cd=4.0, ej=8e9):
    pw = {(1, 2): cn, (2, 3): cn, (3, 4): cn, (1, 4): cn, (1, 3): cd, (2, 4): cd}
    return CircuitSpec.from_femtofarads(pw, {1: cg, 2: cg, 3: cg, 4: cg}, ej)


def test_design_capacitance_matrix():
    m = build_maxwell(presets.design_circuit())
    assert m.C[0, 0] == pytest.approx((46 + 21 + 4 + 21) * FF)
    assert m.C[0, 1] == pytest.approx(-21 * FF)
    assert np.allclose(m.EL.sum(axis=1), 0)
    np.linalg.cholesky(m.C)


def test_diagonal_only_capacitance():
    spec = CircuitSpec({}, {k: 30 * FF for k in range(1, 5)}, {p: 1e9 for p in [(1, 2)]})
    m = build_maxwell(spec)
    assert np.allclose(m.C, 30 * FF * np.eye(4))


caps = st.floats(0.0, 60.0)


@given(st.lists(caps, min_size=6, max_size=6), st.lists(st.floats(1.0, 80.0), min_size=4, max_size=4))
def test_capacitance_row_sums(pw, gr):
    pairs = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
    spec = CircuitSpec.from_femtofarads(dict(zip(pairs, pw)), dict(zip(range(1, 5), gr)), 5e9)
    C = build_maxwell(spec).C
    for k in range(1, 5):
        touching = sum(v for p, v in zip(pairs, pw) if k in p)
        assert C[k - 1, k - 1] == pytest.approx((touching + gr[k - 1]) * FF)


def test_invalid_specs():
    with pytest.raises(ValidationError):
        CircuitSpec.from_femtofarads({(1, 2): -1.0}, {k: 1.0 for k in range(1, 5)}, 1e9)
    with pytest.raises(ValidationError):
        CircuitSpec.from_femtofarads({}, {1: 1.0, 2: 1.0, 3: 0.0, 4: 1.0}, 1e9)
    with pytest.raises(ValidationError):
        CircuitSpec.from_femtofarads({}, {k: 1.0 for k in range(1, 5)}, {(1, 3): 1e9})


def test_non_positive_definite_detected():
    from trimon.circuit import MaxwellMatrices
    C = -np.eye(4)
    with pytest.raises(NonPositiveDefinite):
        normal_modes(MaxwellMatrices(C, np.zeros((4, 4))))


def test_normal_modes_invariants_design():
    m = build_maxwell(presets.design_circuit())
    nm = normal_modes(m)
    f = nm.frequencies
    assert abs(f[0]) < 1e-6 * f.max()
    assert np.all(np.diff(f) > 0)
    M = nm.mode_vectors
    assert np.allclose(M.T @ m.C @ M, np.eye(4), atol=1e-10)
    K = M.T @ (m.EL * LAPLACIAN_TO_INV_HENRY) @ M
    assert np.abs(K - np.diag(np.diag(K))).max() < 1e-10 * np.abs(K).max()
    # near 4.7 / 5.2 / 6.0 GHz before the nonlinear corrections
    assert 4.6e9 < f[1] < 5.3e9 and 5.2e9 < f[2] < 5.9e9 and 5.9e9 < f[3] < 7.0e9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_normal_modes_match_generalized_eigensolver(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(4, 4))
    C = (B @ B.T + 4 * np.eye(4)) * FF
    w = rng.uniform(0.5, 2.0, size=6) * 1e9
    EL = np.zeros((4, 4))
    for (i, j), wij in zip([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], w):
        EL[i, j] = EL[j, i] = -wij
    EL -= np.diag(EL.sum(axis=1))
    from trimon.circuit import MaxwellMatrices
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSpectrum)
        nm = normal_modes(MaxwellMatrices(C, EL))
    lam = sla.eigh(EL * LAPLACIAN_TO_INV_HENRY, C, eigvals_only=True)
    ref = np.sqrt(np.clip(lam, 0, None)) / (2 * np.pi)
    assert np.allclose(nm.frequencies, ref, rtol=1e-8, atol=1e-6 * ref.max())


def test_symmetric_square_is_degenerate():
    with pytest.warns(DegenerateSpectrum):
        nm = normal_modes(build_maxwell(symmetric_spec()))
    f = nm.frequencies
    assert f[1] == pytest.approx(f[2], rel=1e-9)


def ec_oracle(spec):
    """Printed charging-energy expressions in arbitrary precision."""
    mp.mp.dps = 40
    e = mp.mpf("1.602176634e-19")
    h = mp.mpf("6.62607015e-34")
    pw, g = spec.pairwise_capacitance, spec.ground_capacitance
    cA, cB = mp.mpf(pw[(1, 3)]), mp.mpf(pw[(2, 4)])
    cC = sum(mp.mpf(pw[p]) for p in [(1, 2), (2, 3), (3, 4), (1, 4)]) / 4
    c11, c22 = mp.mpf(g[1]), mp.mpf(g[2])
    ea = e**2 / (2 * (cC + cA) + c11) / h
    eb = e**2 / (2 * (cC + cB) + c22) / h
    ec = e**2 / (4 * cC + c11 + c22 + mp.sqrt(16 * cC**2 + (c11 - c22) ** 2)) / h
    return [float(x) for x in (ea, eb, ec)]


def test_charging_energies_design_fixture():
    spec = presets.design_circuit()
    with pytest.warns(AsymmetryWarning):
        ec = effective_charging_energies(spec)
    assert np.allclose(ec, ec_oracle(spec), rtol=1e-12)
    # frozen regression values, MHz
    assert np.allclose(np.array(ec) / 1e6, [403.546, 496.673, 157.796], atol=1e-3)


def test_charging_energies_symmetric_and_limit():
    spec = symmetric_spec()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ea, eb, _ = effective_charging_energies(spec)
    assert ea == pytest.approx(eb)
    lim = symmetric_spec(cn=0.0, cd=0.0)
    from scipy.constants import e, h
    _, _, ec = effective_charging_energies(lim)
    assert ec == pytest.approx(e**2 / (2 * 40 * FF) / h)


def test_mode_params_printed_formulas():
    spec = symmetric_spec()
    p = mode_params(spec)
    assert p.self_kerr[0] == pytest.approx(p.self_kerr[1])
    jab, jbc, jca = p.cross_kerr
    assert jca == pytest.approx(jbc)
    ea, eb, ecc = p.charging
    assert p.self_kerr[2] == pytest.approx(ecc / 2)
    assert jab == pytest.approx(np.sqrt(ea * eb) / 4)
    assert all(j > 0 for j in p.self_kerr + p.cross_kerr)


def test_mode_params_capacitance_scaling():
    spec = symmetric_spec(cd=3.0)
    p1, p2 = mode_params(spec), mode_params(spec.scaled(capacitance=2.0))
    assert np.allclose(np.array(p2.charging), np.array(p1.charging) / 2)
    assert np.allclose(np.array(p2.self_kerr), np.array(p1.self_kerr) / 2)
    assert np.allclose(np.array(p2.cross_kerr), np.array(p1.cross_kerr) / 2)
    ej = p1.josephson
    w_a = np.sqrt(8 * ej * p2.charging[0]) - (p2.self_kerr[0] + p2.cross_kerr[0] + p2.cross_kerr[2])
    assert p2.omega[0] == pytest.approx(w_a)


def test_common_energy_scaling_scales_kerr():
    spec = presets.design_circuit()
    p1 = quantize_modes(spec, levels=5)
    p2 = quantize_modes(spec.scaled(capacitance=0.5, josephson=2.0), levels=5)
    assert np.allclose(np.array(p2.self_kerr), 2 * np.array(p1.self_kerr), rtol=1e-8)
    assert np.allclose(np.array(p2.cross_kerr), 2 * np.array(p1.cross_kerr), rtol=1e-8)


def test_quantized_design_frequencies():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymmetryWarning)
        p = quantize_modes(presets.design_circuit())
    assert np.allclose(p.base_transitions, presets.DESIGN_MODE_FREQUENCIES, rtol=1e-3)
    assert all(j > 0 for j in p.self_kerr + p.cross_kerr)


def test_quantized_truncation_converged():
    spec = presets.design_circuit()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymmetryWarning)
        a, b = quantize_modes(spec, levels=7), quantize_modes(spec, levels=8)
    assert np.allclose(a.base_transitions, b.base_transitions, rtol=2e-5)


def test_conditional_frequencies_measured_splitting():
    cf = conditional_frequencies(presets.device_params())
    assert len(cf) == 12
    assert cf["0B0"] - cf["1B0"] == pytest.approx(211e6, abs=1e-3)
    assert cf["A00"] == pytest.approx(4.709e9)


def test_conditional_frequencies_decoupled():
    p = ModeParams((5e9, 6e9, 7e9), (0.1e9, 0.1e9, 0.1e9), (0.0, 0.0, 0.0))
    cf = conditional_frequencies(p)
    for m in "ABC":
        vals = [v for k, v in cf.items() if m in k]
        assert np.ptp(vals) == 0


params = st.builds(
    ModeParams,
    st.tuples(*[st.floats(3e9, 8e9)] * 3),
    st.tuples(*[st.floats(1e6, 2e8)] * 3),
    st.tuples(*[st.floats(0, 2e8)] * 3),
)


def brute_energy(p, n):
    E = sum(p.omega[k] * n[k] - p.self_kerr[k] * n[k] ** 2 for k in range(3))
    for (a, b), j in zip(CROSS_PAIRS, p.cross_kerr):
        E -= 2 * j * n["ABC".index(a)] * n["ABC".index(b)]
    return E


@given(params)
def test_conditional_frequencies_oracle_and_splittings(p):
    cf = conditional_frequencies(p)
    for lab, f in cf.items():
        k = next(i for i, c in enumerate(lab) if c in "ABC")
        lo = [0 if c in "ABC" else int(c) for c in lab]
        hi = list(lo)
        hi[k] = 1
        assert f == pytest.approx(brute_energy(p, hi) - brute_energy(p, lo), rel=1e-12, abs=1e-3)
    K = p.cross_matrix()
    for m, lab0, lab1, spec_mode in [("B", "0B0", "1B0", 0), ("B", "0B0", "0B1", 2),
                                     ("A", "A00", "A10", 1), ("A", "A00", "A01", 2),
                                     ("C", "00C", "10C", 0), ("C", "00C", "01C", 1)]:
        target = "ABC".index(m)
        assert cf[lab0] - cf[lab1] == pytest.approx(2 * K[target, spec_mode], abs=1e-3)


def test_mode_params_json_roundtrip():
    p = presets.device_params()
    q = ModeParams.from_json(p.to_json())
    assert np.allclose(q.omega, p.omega) and np.allclose(q.cross_kerr, p.cross_kerr)
    doc = p.to_json()
    assert doc["omega_ghz"]["A"] == pytest.approx(4.709)
    assert set(doc) >= {"omega_ghz", "self_kerr_mhz", "cross_kerr_mhz", "ec_mhz"}


def test_config_loader_matches_preset():
    cfg = load_config(bundled("derive_params.toml"))
    spec = load_circuit_config(cfg)
    ref = presets.design_circuit()
    for k, v in ref.pairwise_capacitance.items():
        assert spec.pairwise_capacitance[k] == pytest.approx(v)
    assert spec.josephson_energy == pytest.approx(ref.josephson_energy)

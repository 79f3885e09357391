"""Command-line front door: ``trimon <experiment> --config FILE --out DIR``.

Every run validates its config, writes ``manifest.json`` (status "running")
before doing any work and finalises it with timings and the output list.
Exit codes: 0 success, 2 validation error, 3 numerical failure.

Config schema (TOML with dotted keys, or JSON with the same nesting):

  experiment = "<subcommand>"   seed = <int>
  [device]    preset = "measured" | f01_ghz, anharmonicity_mhz, dispersive_shift_mhz
              | params_json = "<derive-params output>"
  [noise]     t1_us, t2_us, sigma_khz           (three entries each, A B C)
  [readout]   within, cross, shots  | symmetric_error, shots
  [gate]      kind, target, condition, theta_pi_units, phi_pi_units, duration_ns,
              raman_detuning_mhz, shape
  [[tones]]   transition, frequency_ghz, amplitude_mhz, phase_pi_units, start_ns,
              duration_ns, shape
  plus one section per experiment: [derive], [simulate], [calibrate], [rb],
  [qst], [qpt], [dd], [synth] (see the bundled examples in trimon/data).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import bundled, bundled_configs, get_path, load_config
from .errors import FrequencyCollision, NumericalError, TrimonError, ValidationError

log = logging.getLogger("trimon")

EXPERIMENTS = ("derive-params", "spectrum", "simulate", "calibrate", "rb", "qst", "qpt", "dd",
               "pauli-synth")
DEFAULT_CONFIG = {e: e.replace("-", "_") + ".toml" for e in EXPERIMENTS}
REQUIRED = {"derive-params": ("capacitance.pairwise", "capacitance.ground", "junction.ej_ghz"),
            "simulate": (), "calibrate": ("gate",), "rb": ("rb",), "qst": (), "qpt": ("gate",),
            "dd": ("dd",), "pauli-synth": ("synth",), "spectrum": ()}


# -- config helpers ---------------------------------------------------------------

def device_from_config(cfg, base=None):
    from .circuit import ModeParams
    from .presets import device_params

    dev = cfg.get("device", {})
    if "params_json" in dev:
        p = Path(dev["params_json"])
        if not p.is_absolute() and base is not None:
            p = Path(base).parent / p
        return ModeParams.from_json(p.read_text())
    if "f01_ghz" in dev:
        return ModeParams.from_measured([f * 1e9 for f in dev["f01_ghz"]],
                                        [a * 1e6 for a in dev["anharmonicity_mhz"]],
                                        [s * 1e6 for s in dev["dispersive_shift_mhz"]])
    preset = dev.get("preset", "measured")
    if preset != "measured":
        raise ValidationError(f"device.preset: unknown preset {preset!r}")
    return device_params()


def noise_from_config(cfg):
    from .dynamics import NoiseChannels

    n = cfg.get("noise")
    if n is None:
        return None
    us = lambda v: None if v is None else v * 1e-6  # noqa: E731
    return NoiseChannels(T1=[us(x) for x in n.get("t1_us", [None] * 3)],
                         T2=[us(x) for x in n.get("t2_us", [None] * 3)],
                         quasi_static_sigma=[s * 1e3 for s in n.get("sigma_khz", [0, 0, 0])])


def gate_from_config(cfg):
    from .gates.spec import GateSpec

    return GateSpec.from_config(get_path(cfg, "gate"))


def tones_from_config(cfg, params):
    from .circuit import conditional_frequencies
    from .pulses import Envelope, Schedule, Tone

    cf = conditional_frequencies(params)
    tones = []
    for k, t in enumerate(cfg.get("tones", [])):
        lab = t.get("transition")
        if "frequency_ghz" in t:
            f = float(t["frequency_ghz"]) * 1e9
        elif lab is not None:
            f = cf[lab]
        else:
            raise ValidationError(f"tones[{k}]: give a transition or frequency_ghz")
        env = Envelope(t.get("shape", "cosine"), float(t.get("amplitude_mhz", 5.0)) * 1e6,
                       float(t.get("duration_ns", 60.0)) * 1e-9)
        tones.append(Tone(f, float(t.get("phase_pi_units", 0.0)) * np.pi, env,
                          float(t.get("start_ns", 0.0)) * 1e-9, transition=lab))
    return Schedule(tuple(tones))


def readout_from_config(cfg):
    from .measurement import ReadoutModel

    return ReadoutModel.from_config(cfg) if "readout" in cfg else ReadoutModel()


def _dump(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))
    return Path(path)


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


# -- experiments ------------------------------------------------------------------

def run_derive_params(cfg, out, seed, path):
    from .circuit import load_circuit_config, mode_params, quantize_modes

    spec = load_circuit_config(cfg)
    method = get_path(cfg, "derive.method", "quantized")
    if method == "quantized":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = quantize_modes(spec, int(get_path(cfg, "derive.levels", 8)))
    elif method == "closed-form":
        p = mode_params(spec)
    else:
        raise ValidationError(f"derive.method: unknown method {method!r}")
    doc = p.to_json()
    doc["method"] = method
    return [_dump(out / "params.json", doc)]


def run_spectrum(cfg, out, seed, path):
    from .circuit import conditional_frequencies
    from .hilbert import MODES

    p = device_from_config(cfg, path)
    cf = conditional_frequencies(p)
    rows = ["transition,frequency_ghz"] + [f"{k},{v / 1e9:.9f}" for k, v in cf.items()]
    csv_path = out / "transitions.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    split = {}
    for m in MODES:
        for s in MODES:
            if s == m:
                continue
            lab0 = "".join(m if x == m else "0" for x in MODES)
            lab1 = "".join(m if x == m else ("1" if x == s else "0") for x in MODES)
            split[f"{m}|{s}"] = (cf[lab0] - cf[lab1]) / 1e6
    doc = {"transitions_ghz": {k: v / 1e9 for k, v in cf.items()}, "splittings_mhz": split,
           "params": p.to_json()}
    return [csv_path, _dump(out / "spectrum.json", doc)]


def run_simulate(cfg, out, seed, path):
    from .dynamics import (DrivenSystem, EvolutionConfig, sample_quasi_static, trajectory,
                           write_trajectory_csv)
    from .gates.compile import compile_gate, gate_report
    from .hilbert import SpaceSpec, basis_state

    p = device_from_config(cfg, path)
    sim = cfg.get("simulate", {})
    space = SpaceSpec(int(sim.get("levels", 3)))
    conf = EvolutionConfig(step_s=float(sim.get("step_ns", 0.1)) * 1e-9, check_convergence=False)
    outputs = []
    gate = None
    if "gate" in cfg:
        gate = gate_from_config(cfg)
        sch = compile_gate(gate, p)
    else:
        sch = tones_from_config(cfg, p)
    noise = noise_from_config(cfg)
    offsets = sample_quasi_static(noise, seed) if noise is not None else None
    sys_ = DrivenSystem.from_params(p, space, offsets=offsets)
    psi0 = basis_state(sim.get("initial", "000"), space)
    times = np.linspace(0, sch.total_duration_s, int(sim.get("samples", 61)))
    pops = trajectory(sys_, sch, psi0, times, conf, noise)
    tp = out / "trajectory.csv"
    write_trajectory_csv(tp, times, pops, space.labels())
    outputs.append(tp)
    U = sys_.unitary(sch, conf)
    psi = U @ psi0
    doc = {"labels": list(space.labels()), "final_state": [_c(z) for z in psi],
           "schedule": sch.to_json()}
    if gate is not None:
        rep = gate_report(gate, p, None, space, conf)
        doc["gate"] = {k: v for k, v in rep.items() if k != "unitary"}
    outputs.append(_dump(out / "final_state.json", doc))
    return outputs


def run_calibrate(cfg, out, seed, path):
    from .gates.calibration import calibrate_db, fit_space, numeric_calibrate
    from .gates.compile import AB_STATES, gate_report, nominal_calibration
    from .gates.spec import CalibrationRecord, CalibrationStore

    p = device_from_config(cfg, path)
    gate = gate_from_config(cfg)
    c = cfg.get("calibrate", {})
    method = c.get("method", "numeric")
    states = AB_STATES if c.get("states") == "AB" else None
    if method == "numeric":
        rec = numeric_calibrate(gate, p, states=states, final_space=fit_space(gate))
    elif method == "db":
        nom = nominal_calibration(gate, p)
        start = CalibrationRecord([nom.amplitudes[0] * (1 + float(c.get("amplitude_error", 0)))],
                                  [float(c.get("detuning_error_khz", 0)) * 1e3])
        rec = calibrate_db(gate, p, start)
    else:
        raise ValidationError(f"calibrate.method: unknown method {method!r}")
    store = out / "calibration.json"
    if store.exists():
        store.unlink()
    CalibrationStore(store).put(gate, rec)
    rep = gate_report(gate, p, rec, fit_space(gate), states=states)
    doc = {"gate": gate.signature(), "method": method, "residual": rec.residual,
           "fidelity": rep["fidelity"], "leakage": rep["leakage"],
           "spectator_deviation": rep["spectator_deviation"]}
    return [store, _dump(out / "report.json", doc)]


def run_rb(cfg, out, seed, path):
    from .gates.rb import (calibrate_generators, depolarizing, generator_superops,
                           ideal_superops, run_rb)

    r = get_path(cfg, "rb")
    lengths = tuple(int(x) for x in r.get("lengths", (1, 10, 25, 50, 100, 200, 400)))
    n_random = int(r.get("n_random", 30))
    eps = r.get("depolarizing")
    if eps is not None:
        res = run_rb(ideal_superops(), lengths, n_random, seed, depolarizing(float(eps)))
        res["expected_fidelity"] = 1 - float(eps) / 2
    else:
        p = device_from_config(cfg, path)
        tr = r.get("transition", "0B0")
        cal = calibrate_generators(tr, p)
        ops = generator_superops(tr, p, noise_from_config(cfg), cal)
        res = run_rb(ops, lengths, n_random, seed)
        res["transition"] = tr
    rows = ["length,survival_mean,survival_sem"] + [
        f"{m},{a:.10f},{b:.10f}" for m, a, b in zip(res["lengths"], res["survival_mean"],
                                                     res["survival_sem"])]
    sp = out / "survival.csv"
    sp.write_text("\n".join(rows) + "\n")
    return [sp, _dump(out / "rb.json", res)]


def run_qst(cfg, out, seed, path):
    from .measurement import build_confusion, write_confusion_csv, write_counts_csv
    from .tomography import (BASES, BELL_STATES, concurrence, qst_mle, simulate_qst_data,
                             state_fidelity)

    q = cfg.get("qst", {})
    model = readout_from_config(cfg)
    C = build_confusion(model, seed) if q.get("empirical_confusion", True) else model.confusion()
    cp = out / "confusion.csv"
    write_confusion_csv(cp, C)
    outputs = [cp]
    res = {}
    for k, name in enumerate(q.get("states", list(BELL_STATES))):
        if name not in BELL_STATES:
            raise ValidationError(f"qst.states: unknown state {name!r}")
        psi = BELL_STATES[name]
        data = simulate_qst_data(np.outer(psi, psi.conj()), model, seed=(seed, k))
        fn = out / f"counts_{name.replace('+', 'p').replace('-', 'm')}.csv"
        write_counts_csv(fn, [(b, data[b]) for b in BASES])
        outputs.append(fn)
        est = qst_mle(data, C, shots=model.shots)
        res[name] = {"fidelity": state_fidelity(est.rho, psi), "concurrence": concurrence(est.rho),
                     "rho": [[_c(z) for z in row] for row in est.rho],
                     "residual_norm": est.log["residual_norm"]}
    outputs.append(_dump(out / "qst.json", res))
    return outputs


def run_qpt(cfg, out, seed, path):
    from .gates.calibration import fit_space, numeric_calibrate
    from .gates.compile import gate_superop
    from .tomography import (chi_from_superop, chi_from_unitary, chi_to_json, gate_fidelity, qpt,
                             simulate_qpt_data)

    p = device_from_config(cfg, path)
    gate = gate_from_config(cfg)
    q = cfg.get("qpt", {})
    model = readout_from_config(cfg)
    C = model.confusion()
    cal = numeric_calibrate(gate, p, final_space=fit_space(gate))
    S, U = gate_superop(gate, p, cal, noise_from_config(cfg), space=fit_space(gate))
    ideal = chi_from_unitary(U)
    injected = gate_fidelity(chi_from_superop(S), ideal)
    shots = int(q.get("shots", model.shots))
    G = simulate_qpt_data(S, C, shots, seed=(seed, 0))
    R = simulate_qpt_data(np.eye(16), C, shots, seed=(seed, 1))
    raw = qpt(G)
    chi = qpt(G, R)
    cp = out / "chi.json"
    chi_to_json(chi, cp)
    doc = {"gate": gate.signature(), "injected_gate_fidelity": injected,
           "gate_fidelity": gate_fidelity(chi.chi, ideal),
           "gate_fidelity_uncorrected": gate_fidelity(raw.chi, ideal),
           "raw_min_eigenvalue": chi.min_eigenvalue, "shots": shots}
    return [cp, _dump(out / "qpt.json", doc)]


def run_dd(cfg, out, seed, path):
    from .gates.qudit import (REFERENCE_ORDERINGS, _labels, decay_time, dd_ensemble,
                              sigma_for_decay)

    p = device_from_config(cfg, path)
    d_cfg = get_path(cfg, "dd")
    d = int(d_cfg.get("d", 3))
    ordering = d_cfg.get("ordering") or REFERENCE_ORDERINGS[d]
    times = np.asarray(d_cfg.get("times_us", [1, 2, 4, 8, 16]), dtype=float) * 1e-6
    if "sigma_khz" in d_cfg:
        sigma = float(d_cfg["sigma_khz"]) * 1e3
    else:
        sigma = sigma_for_decay(_labels(ordering), float(d_cfg.get("free_decay_us", 5)) * 1e-6)
    noise = noise_from_config(cfg)
    samples = int(d_cfg.get("samples", 32))
    rows = ["sequence,time_us,fidelity,sem"]
    res = {"d": d, "ordering": list(ordering), "sigma_hz": sigma, "decay_time_us": {}}
    runs = [("free", 0, True)] + [(f"{n}x{d}X", n, False) for n in d_cfg.get("n", [1, 2])]
    for name, n, free in runs:
        t, f, e = dd_ensemble(d, max(n, 1), times, sigma, noise, p, ordering, samples, seed,
                              free=free)
        for ti, fi, ei in zip(t, f, e):
            rows.append(f"{name},{ti * 1e6:.6f},{fi:.10f},{ei:.10f}")
        try:
            res["decay_time_us"][name] = decay_time(t, f, d) * 1e6
        except NumericalError:
            res["decay_time_us"][name] = None
    cp = out / "dd.csv"
    cp.write_text("\n".join(rows) + "\n")
    return [cp, _dump(out / "dd.json", res)]


def run_pauli_synth(cfg, out, seed, path):
    from .gates.synthesis import (PAULI_LABELS, effective_hamiltonian, pauli_decomposition,
                                  raman_resonance_detunings, synthesize_pauli_term,
                                  target_fraction)

    p = device_from_config(cfg, path)
    s = get_path(cfg, "synth")
    strength = float(s.get("strength_mhz", 0.5)) * 1e6
    res = {}
    for term in s.get("terms", list(PAULI_LABELS)):
        if term not in PAULI_LABELS:
            raise ValidationError(f"synth.terms: unknown Pauli product {term!r}")
        if term == "II":
            res[term] = {"fraction": 1.0, "schedule": {"tones": []}}
            continue
        det = raman_resonance_detunings(term, strength, p)
        sch = synthesize_pauli_term(term, strength, p, tone_detunings=det)
        H, sch = effective_hamiltonian(sch, p)
        c = pauli_decomposition(H)
        res[term] = {"fraction": target_fraction(c, {term: 1.0}),
                     "coefficients_mhz": {k: v / 1e6 for k, v in c.items()},
                     "schedule": sch.to_json()}
    return [_dump(out / "synth.json", res)]


RUNNERS = {"derive-params": run_derive_params, "spectrum": run_spectrum,
           "simulate": run_simulate, "calibrate": run_calibrate, "rb": run_rb, "qst": run_qst,
           "qpt": run_qpt, "dd": run_dd, "pauli-synth": run_pauli_synth}


# -- validation -------------------------------------------------------------------

def _finding(kind, key, message, severity="error"):
    return {"kind": kind, "key": key, "message": message, "severity": severity}


def validate(path, experiment=None) -> list:
    """Schema, cross-reference and physical-sanity findings for a config (nothing is run)."""
    from .gates.compile import RamanWarning, compile_gate

    findings = []
    try:
        cfg = load_config(path)
    except (OSError, ValidationError) as exc:
        return [_finding("ParseError", "", str(exc))]
    kind = cfg.get("experiment", experiment)
    if kind not in EXPERIMENTS:
        findings.append(_finding("Schema", "experiment", f"unknown experiment {kind!r}"))
        return findings
    if experiment is not None and kind != experiment:
        findings.append(_finding("Schema", "experiment",
                                 f"config is for {kind!r}, not {experiment!r}"))
    if not isinstance(cfg.get("seed", 0), int):
        findings.append(_finding("Schema", "seed", "seed must be an integer"))
    for key in REQUIRED[kind]:
        try:
            get_path(cfg, key)
        except ValidationError:
            findings.append(_finding("MissingSection", key, f"{kind} needs {key!r}"))
    n = cfg.get("noise", {})
    t1, t2 = n.get("t1_us", [None] * 3), n.get("t2_us", [None] * 3)
    for mu, (a, b) in enumerate(zip(t1, t2)):
        if a is not None and a <= 0 or b is not None and b <= 0:
            findings.append(_finding("Schema", f"noise[{mu}]", "coherence times must be positive"))
        elif a is not None and b is not None and b > 2 * a:
            findings.append(_finding("NegativeDephasing", f"noise.t2_us[{mu}]",
                                     f"T2 = {b} us exceeds the physical bound 2 T1 = {2 * a} us"))
    if any(s < 0 for s in n.get("sigma_khz", [])):
        findings.append(_finding("Schema", "noise.sigma_khz", "sigma must be non-negative"))
    try:
        params = device_from_config(cfg, path)
    except (TrimonError, KeyError, OSError, TypeError) as exc:
        findings.append(_finding("Schema", "device", str(exc)))
        return findings
    if "readout" in cfg:
        try:
            readout_from_config(cfg)
        except (TrimonError, TypeError, ValueError) as exc:
            findings.append(_finding("Schema", "readout", str(exc)))
    try:
        sch = tones_from_config(cfg, params)
        freqs = [t.frequency for t in sch.tones]
        for i in range(len(freqs)):
            for j in range(i + 1, len(freqs)):
                if abs(freqs[i] - freqs[j]) < 1e6:
                    findings.append(_finding(
                        "FrequencyCollision", f"tones[{i}],tones[{j}]",
                        f"tones {abs(freqs[i] - freqs[j]) / 1e6:.3g} MHz apart (minimum 1 MHz)"))
    except (TrimonError, KeyError, TypeError, ValueError) as exc:
        findings.append(_finding("Schema", "tones", str(exc)))
    if "gate" in cfg:
        try:
            gate = gate_from_config(cfg)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                compile_gate(gate, params)
            for w in caught:
                if issubclass(w.category, RamanWarning):
                    findings.append(_finding("RamanDetuning", "gate.raman_detuning_mhz",
                                             str(w.message), "warning"))
        except FrequencyCollision as exc:
            findings.append(_finding("FrequencyCollision", "gate", str(exc)))
        except (TrimonError, KeyError, TypeError, ValueError) as exc:
            findings.append(_finding("Schema", "gate", str(exc)))
    return findings


# -- driver -----------------------------------------------------------------------

def _config_hash(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _set_threads(n):
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def run(experiment, config=None, out="trimon_out", seed=None, threads=None) -> int:
    """Run one experiment; returns the process exit code."""
    from .dynamics import write_manifest

    path = Path(config) if config else bundled(DEFAULT_CONFIG[experiment])
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.json"
    fields = {"experiment": experiment, "config": str(path), "version": __version__,
              "threads": threads, "status": "running", "outputs": []}
    try:
        fields["config_hash"] = _config_hash(path)
    except OSError as exc:
        fields.update(status="validation-error", error=str(exc))
        write_manifest(manifest, **fields)
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    findings = [f for f in validate(path, experiment) if f["severity"] == "error"]
    cfg = load_config(path) if not findings or findings[0]["kind"] != "ParseError" else {}
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    fields["seeds"] = {"seed": seed}
    write_manifest(manifest, **fields)
    if findings:
        fields.update(status="validation-error", findings=findings)
        write_manifest(manifest, **fields)
        for f in findings:
            print(f"error: {path}: {f['key']}: {f['message']}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        outputs = RUNNERS[experiment](cfg, out, seed, path)
    except ValidationError as exc:
        fields.update(status="validation-error", error=f"{path}: {exc}",
                      timings={"total_s": time.perf_counter() - t0})
        write_manifest(manifest, **fields)
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        fields.update(status="numerical-error", error=f"{path}: {exc}",
                      timings={"total_s": time.perf_counter() - t0})
        write_manifest(manifest, **fields)
        print(f"numerical failure: {path}: {exc}", file=sys.stderr)
        return 3
    fields.update(status="ok", outputs=[str(p) for p in outputs],
                  timings={"total_s": time.perf_counter() - t0})
    write_manifest(manifest, **fields)
    log.info("%s finished in %.2f s", experiment, fields["timings"]["total_s"])
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="trimon", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("validate",):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML or JSON experiment config "
                                         "(default: the bundled example)")
        sp.add_argument("--out", default="trimon_out", help="output directory")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--threads", type=int, help="cap on BLAS threads")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("TRIMON_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    _set_threads(args.threads)
    if args.command == "validate":
        paths = [Path(args.config)] if args.config else bundled_configs()
        report = {str(p): validate(p) for p in paths}
        for p, fs in report.items():
            print(f"{p}: {len(fs)} finding(s)")
            for f in fs:
                print(f"  [{f['severity']}] {f['kind']} at {f['key']}: {f['message']}")
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _dump(Path(args.out) / "validate.json", report)
        return 0
    return run(args.command, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())

"""Time evolution of the driven three-mode system.

Propagators are returned in the interaction picture of the static diagonal
Hamiltonian H0 (the rotating frame of every transition), with t = 0 at the
schedule start.  The default integrator works directly in that frame: a
second-order Magnus step whose integrals against the fast carrier and frame
phases e^{2 pi i (E_a - E_b) t} are done exactly, so the 0.1 ns default step
need not resolve the carriers.  Exponentiating the Hermitian step generator
keeps propagators unitary to round-off without a rotating-wave approximation.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .errors import NegativeDephasing, StepTooCoarse, ValidationError
from .hilbert import SpaceSpec, as_space, energies, lowering_op, number_op
from .pulses import Schedule, drive_field, drive_operator, sample

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class EvolutionConfig:
    step_s: float = 0.1e-9
    method: str = "magnus"
    tolerance: float = 1e-5
    frame: str = "interaction"
    rwa: bool = False
    check_convergence: bool = True
    max_refinements: int = 6
    couplings: tuple = (1.0, 1.0, 1.0)
    dissipator_step_s: float = 1e-9

    def __post_init__(self):
        if not self.step_s > 0:
            raise ValidationError("step must be positive")
        if not 0 < self.tolerance <= 1e-4:
            raise ValidationError("tolerance must lie in (0, 1e-4]")
        if self.method not in ("magnus", "strang", "rk"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.frame not in ("interaction", "lab"):
            raise ValidationError(f"unknown frame {self.frame!r}")
        if self.frame == "lab" and self.method == "magnus":
            object.__setattr__(self, "method", "strang")


@dataclass(frozen=True)
class NoiseChannels:
    """Per-mode T1, Hahn-echo T2 (s) and quasi-static frequency spread (Hz).

    ``None`` or ``inf`` disables a channel.
    """

    T1: tuple = (None, None, None)
    T2: tuple = (None, None, None)
    quasi_static_sigma: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        def clean(v):
            return tuple(np.inf if x is None else float(x) for x in v)

        T1, T2 = clean(self.T1), clean(self.T2)
        sig = tuple(float(x) for x in self.quasi_static_sigma)
        for mu in range(3):
            if T1[mu] <= 0 or T2[mu] <= 0:
                raise ValidationError("coherence times must be positive")
            if sig[mu] < 0:
                raise ValidationError("quasi-static sigma must be non-negative")
            if np.isfinite(T2[mu]) and T2[mu] > 2 * T1[mu] * (1 + 1e-12):
                raise NegativeDephasing(
                    f"mode {'ABC'[mu]}: T2 = {T2[mu]:.3g} s exceeds 2*T1 = {2 * T1[mu]:.3g} s")
        object.__setattr__(self, "T1", T1)
        object.__setattr__(self, "T2", T2)
        object.__setattr__(self, "quasi_static_sigma", sig)

    def rates(self):
        """Relaxation rate 1/T1 and pure-dephasing rate 1/T2 - 1/(2 T1) per mode (1/s)."""
        g1 = np.array([1 / t for t in self.T1])
        g2 = np.array([1 / t for t in self.T2])
        return g1, np.maximum(g2 - g1 / 2, 0.0)

    @property
    def is_dissipative(self):
        g1, gp = self.rates()
        return bool(np.any(g1 > 0) or np.any(gp > 0))


def collapse_operators(noise: NoiseChannels, space) -> list:
    space = as_space(space)
    g1, gp = noise.rates()
    ops = []
    for mu in range(3):
        if g1[mu] > 0:
            ops.append(np.sqrt(g1[mu]) * lowering_op(space, mu))
        if gp[mu] > 0:
            ops.append(np.sqrt(2 * gp[mu]) * number_op(space, mu))
    return ops


def sample_quasi_static(noise: NoiseChannels, seed) -> np.ndarray:
    """Per-mode frequency offsets (Hz) for one trajectory."""
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0, 3) * np.asarray(noise.quasi_static_sigma)


# superoperators use row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho)

def unitary_superop(U):
    return np.kron(U, U.conj())


def dissipator(L):
    d = L.shape[0]
    I = np.eye(d)
    LdL = L.conj().T @ L
    return np.kron(L, L.conj()) - 0.5 * np.kron(LdL, I) - 0.5 * np.kron(I, LdL.T)


def hamiltonian_superop(H):
    d = H.shape[0]
    I = np.eye(d)
    return -1j * TWO_PI * (np.kron(H, I) - np.kron(I, H.T))


def apply_superop(S, rho):
    d = rho.shape[0]
    return (S @ rho.reshape(-1)).reshape(d, d)


def restrict_superop(S, indices, d):
    """Restrict a superoperator on d x d matrices to the block spanned by ``indices``."""
    idx = np.asarray(indices)
    flat = (idx[:, None] * d + idx[None, :]).reshape(-1)
    return S[np.ix_(flat, flat)]


def average_gate_fidelity(V, U_ideal) -> float:
    """Average gate fidelity of a (possibly non-unitary) projected map V against U_ideal."""
    d = U_ideal.shape[0]
    M = U_ideal.conj().T @ V
    return float((np.real(np.trace(M @ M.conj().T)) + abs(np.trace(M)) ** 2) / (d * (d + 1)))


def superop_average_fidelity(S, U_ideal) -> float:
    """Average gate fidelity of a superoperator S against unitary U_ideal."""
    d = U_ideal.shape[0]
    Fe = np.real(np.trace(unitary_superop(U_ideal).conj().T @ S)) / d**2
    return float((d * Fe + 1) / (d + 1))


def _chain(arr):
    """Time-ordered product arr[-1] @ ... @ arr[0] by pairwise reduction."""
    arr = np.asarray(arr)
    if len(arr) == 0:
        raise ValueError("empty product")
    while len(arr) > 1:
        tail = None
        if len(arr) % 2:
            tail, arr = arr[-1:], arr[:-1]
        arr = arr[1::2] @ arr[0::2]
        if tail is not None:
            arr = np.concatenate([arr, tail])
    return arr[0]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _antisym_double_integral(alpha, beta, h):
    """J(alpha, beta) - J(beta, alpha) with J the ordered double integral over one step.

    J(alpha, beta) = int_{-h/2}^{h/2} du1 e^{2 pi i alpha u1} int_{-h/2}^{u1} du2 e^{2 pi i beta u2}.
    The inner integral is closed-form; the outer one uses Gauss-Legendre nodes,
    which is exact to round-off for the at most few oscillations per step seen here.
    """
    u = 0.5 * h * _GL_X
    w = 0.5 * h * _GL_W
    L = u + h / 2

    def J(x, y):
        inner = L[None] * np.exp(1j * np.pi * y[:, None] * (u[None] - h / 2)) * np.sinc(
            y[:, None] * L[None])
        return (np.exp(2j * np.pi * x[:, None] * u[None]) * inner) @ w

    return J(alpha, beta) - J(beta, alpha)


def _expm_herm(Hbar):
    """exp(-2 pi i Hbar) for a stack of Hermitian matrices (Hbar in cycles)."""
    X = -1j * TWO_PI * Hbar
    norm = np.abs(X).sum(axis=-1).max() if len(X) else 0.0
    if norm < 0.05:
        # Horner-form Taylor series; truncation far below round-off at these norms
        order = 2
        while norm ** (order + 1) / np.prod(np.arange(1, order + 2)) > 1e-18:
            order += 1
        eye = np.eye(X.shape[-1])
        U = eye + X / order
        for k in range(order - 1, 0, -1):
            U = eye + (X @ U) / k
        return U
    w, V = np.linalg.eigh(Hbar)
    return (V * np.exp(-1j * TWO_PI * w)[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)


class DrivenSystem:
    """Diagonal H0 (frame), drive operator and optional static diagonal detuning."""

    def __init__(self, H0, couplings=(1.0, 1.0, 1.0), delta=None, space=None):
        E = np.real(np.diag(H0)) if np.ndim(H0) == 2 else np.asarray(H0, dtype=float)
        if space is None:
            space = SpaceSpec(round(len(E) ** (1 / 3)))
        self.space = as_space(space)
        if self.space.dim != len(E):
            raise ValidationError("H0 dimension does not match the space")
        self.E = E
        self.X = drive_operator(self.space, couplings)
        self.delta = np.zeros(len(E)) if delta is None else np.asarray(delta, dtype=float)
        ia, ib = np.nonzero(self.X)
        self._ia, self._ib = ia, ib
        self._xv = self.X[ia, ib]
        self._nu = E[ia] - E[ib]

    @classmethod
    def from_params(cls, params, space=None, couplings=(1.0, 1.0, 1.0), offsets=None):
        """System for ModeParams; ``offsets`` (Hz per mode) enter as a static detuning."""
        space = as_space(space)
        delta = None
        if offsets is not None:
            delta = space.occupations @ np.asarray(offsets, dtype=float)
        return cls(energies(params, space), couplings, delta, space)

    @property
    def dim(self):
        return len(self.E)

    def frame(self, t):
        """Diagonal of F(t) = exp(2 pi i H0 t)."""
        return np.exp(1j * TWO_PI * self.E * t)

    # -- unitary pieces -------------------------------------------------
    def _tone_data(self, schedule):
        return [(k, schedule.effective_phase(k)) for k in schedule.tones]

    def _components(self, tones, tm, h, rwa):
        """Fourier components of the interaction-frame drive on the current steps.

        Returns rows, cols, frequencies g (Hz), midpoint coefficients (n, ncomp)
        in Hz, so that H_rc(t) ~ sum coef exp(2 pi i g (t - t_m)) inside a step,
        and the exact first-order step integrals (n, ncomp) with the envelope
        resolved by Gauss-Legendre nodes.
        """
        nu = self._nu
        u = 0.5 * h * _GL_X
        w = 0.5 * h * _GL_W
        rows, cols, freqs, coefs, ints = [], [], [], [], []
        for tone, phi in tones:
            s = sample(tone.envelope, tm - tone.start_s)
            sn = sample(tone.envelope, (tm - tone.start_s)[:, None] + u[None]) * w[None]
            ph = np.exp(-1j * phi)
            f = tone.frequency
            for g, c, cn, keep in ((nu + f, 0.5 * s * ph, 0.5 * sn * ph, nu < 0),
                                   (nu - f, 0.5 * np.conj(s * ph), 0.5 * np.conj(sn * ph), nu > 0)):
                sel = keep if rwa else np.ones_like(nu, dtype=bool)
                if not sel.any():
                    continue
                gs = g[sel]
                rot = self._xv[sel][None] * np.exp(1j * TWO_PI * gs[None] * tm[:, None])
                rows.append(self._ia[sel])
                cols.append(self._ib[sel])
                freqs.append(gs)
                coefs.append(c[:, None] * rot)
                ints.append((cn @ np.exp(1j * TWO_PI * u[:, None] * gs[None])) * rot)
        nzd = np.flatnonzero(self.delta)
        if len(nzd):
            rows.append(nzd)
            cols.append(nzd)
            freqs.append(np.zeros(len(nzd)))
            dd = np.broadcast_to(self.delta[nzd], (len(tm), len(nzd)))
            coefs.append(dd)
            ints.append(dd * h)
        if not rows:
            z = np.zeros((len(tm), 0))
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0), z, z
        return (np.concatenate(rows), np.concatenate(cols), np.concatenate(freqs),
                np.concatenate(coefs, axis=1), np.concatenate(ints, axis=1))

    def _generators(self, tones, a, b, n, rwa):
        """Second-order Magnus generators (Hermitian, in cycles) for n equal steps on [a, b].

        The first-order term integrates envelope, carrier and frame phases over
        the step; the commutator term freezes the envelope at the step midpoint.
        """
        h = (b - a) / n
        tm = a + (np.arange(n) + 0.5) * h
        d = self.dim
        rows, cols, g, coef, w1 = self._components(tones, tm, h, rwa)
        out = np.zeros((n, d * d), dtype=complex)
        if len(g) == 0:
            return out.reshape(n, d, d)
        flat = rows * d + cols
        np.add.at(out.T, flat, w1.T)
        # second order: pairs (p on r->b, q on b->c) sharing the middle index
        order = np.argsort(rows, kind="stable")
        starts = np.searchsorted(rows[order], np.arange(d + 1))
        P, Q = [], []
        for p in range(len(g)):
            b_ = cols[p]
            q = order[starts[b_]:starts[b_ + 1]]
            P.append(np.full(len(q), p))
            Q.append(q)
        P, Q = np.concatenate(P), np.concatenate(Q)
        D = _antisym_double_integral(g[P], g[Q], h)
        keep = np.abs(D) > 0
        P, Q, D = P[keep], Q[keep], D[keep]
        # H2 = (-2 pi i / 2) * sum coef_p coef_q D_pq at (row_p, col_q), in cycles
        w2 = (-1j * np.pi) * coef[:, P] * coef[:, Q] * D[None]
        np.add.at(out.T, rows[P] * d + cols[Q], w2.T)
        H = out.reshape(n, d, d)
        return 0.5 * (H + np.swapaxes(H.conj(), -1, -2))

    def _breakpoints(self, schedule, t0, t1):
        pts = {t0, t1}
        for k in schedule.tones:
            for t in (k.start_s, k.end_s):
                if t0 < t < t1:
                    pts.add(t)
        return sorted(pts)

    def _segments(self, schedule, t0, t1):
        """Split [t0, t1] into (a, b, active_tones) pieces between tone edges."""
        tones = self._tone_data(schedule)
        pts = self._breakpoints(schedule, t0, t1)
        out = []
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a <= 0:
                continue
            act = [(k, p) for k, p in tones if k.start_s < b and k.end_s > a]
            out.append((a, b, act))
        return out

    def _idle(self, a, b):
        return np.diag(np.exp(-1j * TWO_PI * self.delta * (b - a)))

    def _magnus_piece(self, tones, a, b, step, rwa):
        n = max(1, int(np.ceil((b - a) / step - 1e-9)))
        return _chain(_expm_herm(self._generators(tones, a, b, n, rwa)))

    def _strang_piece(self, tones, schedule, a, b, step):
        n = max(1, int(np.ceil((b - a) / step - 1e-9)))
        h = (b - a) / n
        tm = a + (np.arange(n) + 0.5) * h
        sub = Schedule(tuple(k for k, _ in tones), schedule.frame_updates,
                       schedule.total_duration_s)
        fld = drive_field(sub, tm)
        x, W = np.linalg.eigh(self.X)
        Ed = self.E + self.delta
        half = np.exp(-1j * np.pi * Ed * h)
        kick = (W[None] * np.exp(-1j * TWO_PI * fld[:, None] * x[None] * h)[:, None, :]) @ W.conj().T
        steps = half[None, :, None] * kick * half[None, None, :]
        U_lab = _chain(steps)
        return (self.frame(b)[:, None] * U_lab) * self.frame(a).conj()[None, :]

    def _rk_piece(self, tones, a, b, tol):
        ia, ib, xv, nu = self._ia, self._ib, self._xv, self._nu
        d = self.dim

        def rhs(t, y):
            fld = 0.0
            for k, phi in tones:
                s = sample(k.envelope, t - k.start_s)
                fld += np.real(s * np.exp(1j * (TWO_PI * k.frequency * t - phi)))
            H = np.zeros((d, d), dtype=complex)
            H[ia, ib] = fld * xv * np.exp(1j * TWO_PI * nu * t)
            H[np.arange(d), np.arange(d)] += self.delta
            return (-1j * TWO_PI * H @ y.reshape(d, d)).reshape(-1)

        max_step = 0.25 / max(abs(k.frequency) + np.abs(nu).max() for k, _ in tones)
        sol = solve_ivp(rhs, (a, b), np.eye(d, dtype=complex).reshape(-1), method="DOP853",
                        rtol=tol, atol=tol * 1e-2, max_step=max_step)
        return sol.y[:, -1].reshape(d, d)

    def _piece(self, tones, schedule, a, b, config: EvolutionConfig, step=None):
        if not tones:
            return self._idle(a, b)
        step = config.step_s if step is None else step
        if config.method == "magnus":
            return self._magnus_piece(tones, a, b, step, config.rwa)
        if config.method == "strang":
            return self._strang_piece(tones, schedule, a, b, step)
        return self._rk_piece(tones, a, b, min(config.tolerance, 1e-9))

    def unitary(self, schedule: Schedule, config: EvolutionConfig = EvolutionConfig(),
                t0=0.0, t1=None):
        """Interaction-frame propagator U(t1, t0)."""
        t1 = schedule.total_duration_s if t1 is None else t1
        segs = self._segments(schedule, t0, t1)
        if not segs:
            return np.eye(self.dim, dtype=complex)

        def run(step):
            return _chain([self._piece(act, schedule, a, b, config, step)
                           for a, b, act in segs])

        step = config.step_s
        U = run(step)
        if not (config.check_convergence and config.method == "magnus"
                and any(act for _, _, act in segs)):
            return U
        for _ in range(config.max_refinements):
            U2 = run(step / 2)
            if np.abs(U2 - U).max() <= config.tolerance:
                return U2
            step /= 2
            U = U2
        raise StepTooCoarse(
            f"propagator not converged to {config.tolerance:g} at step {step:.3g} s")

    # -- open-system pieces --------------------------------------------
    def _lindblad_parts(self, noise):
        Ls = collapse_operators(noise, self.space)
        d = self.dim
        LD = sum((dissipator(L) for L in Ls), np.zeros((d * d, d * d), dtype=complex))
        return LD

    def _frame_phase(self, t):
        f = self.frame(t)
        return np.kron(f, f.conj())

    def superop(self, schedule: Schedule, noise: NoiseChannels,
                config: EvolutionConfig = EvolutionConfig(), t0=0.0, t1=None, rho=None):
        """Interaction-frame superoperator over [t0, t1], or its action on ``rho`` if given."""
        t1 = schedule.total_duration_s if t1 is None else t1
        d = self.dim
        LD = self._lindblad_parts(noise)
        LH = hamiltonian_superop(np.diag(self.E + self.delta))
        state = (np.eye(d * d, dtype=complex) if rho is None
                 else np.asarray(rho, dtype=complex).reshape(-1, 1))
        cache = {}

        def half_dissipator(h):
            key = round(h * 1e18)
            if key not in cache:
                cache[key] = sla.expm(LD * h / 2)
            return cache[key]

        for a, b, act in self._segments(schedule, t0, t1):
            if not act:
                S = sla.expm((LH + LD) * (b - a))
                state = self._frame_phase(b)[:, None] * (S @ (self._frame_phase(a).conj()[:, None]
                                                              * state))
                continue
            nchunk = max(1, int(np.ceil((b - a) / config.dissipator_step_s - 1e-9)))
            hc = (b - a) / nchunk
            SD = half_dissipator(hc)
            for c in range(nchunk):
                ta, tb = a + c * hc, a + (c + 1) * hc
                U = self._piece(act, schedule, ta, tb, config)
                state = self._frame_phase(ta)[:, None] * (
                    SD @ (self._frame_phase(ta).conj()[:, None] * state))
                R = state.reshape(d, d, -1)
                R = np.einsum("ij,jkm,lk->ilm", U, R, U.conj(), optimize=True)
                state = R.reshape(d * d, -1)
                state = self._frame_phase(tb)[:, None] * (
                    SD @ (self._frame_phase(tb).conj()[:, None] * state))
        if rho is None:
            return state
        return state.reshape(d, d)


def propagate_unitary(H0, schedule: Schedule, config: EvolutionConfig = EvolutionConfig(),
                      delta=None):
    """Interaction-frame propagator of ``schedule`` driving diagonal ``H0``."""
    sys = DrivenSystem(H0, config.couplings, delta)
    return sys.unitary(schedule, config)


def to_lab_frame(U_I, H0, T):
    """Lab-frame propagator exp(-2 pi i H0 T) U_I."""
    E = np.real(np.diag(H0)) if np.ndim(H0) == 2 else np.asarray(H0)
    return np.exp(-1j * TWO_PI * E * T)[:, None] * U_I


def propagate_lindblad(H0, schedule: Schedule, noise: NoiseChannels,
                       config: EvolutionConfig = EvolutionConfig(), rho0=None, delta=None):
    """Interaction-frame density matrix at the end of ``schedule``."""
    sys = DrivenSystem(H0, config.couplings, delta)
    if rho0 is None:
        rho0 = np.zeros((sys.dim, sys.dim), dtype=complex)
        rho0[0, 0] = 1.0
    return sys.superop(schedule, noise, config, rho=rho0)


def gate_unitary(U, ledger=None, space=None, states=None):
    """Project a propagator onto computational states and undo the virtual frame.

    Returns (V, leakage) where V is the frame-corrected projected block and
    leakage = 1 - sigma_min(V)^2.  ``states`` selects a subset of labels
    (e.g. the four states with C = 0); default is all eight.
    """
    from .pulses import diagonal_unitary_of

    d = U.shape[0]
    space = as_space(space) if space is not None else SpaceSpec(round(d ** (1 / 3)))
    if ledger is not None:
        U = diagonal_unitary_of(ledger, space) @ U
    if states is None:
        idx = space.qubit_indices()
    else:
        idx = np.array([space.index(s) for s in states])
    V = U[np.ix_(idx, idx)]
    smin = np.linalg.svd(V, compute_uv=False).min()
    return V, float(max(0.0, 1 - smin**2))


def trajectory(system: DrivenSystem, schedule: Schedule, psi0, times,
               config: EvolutionConfig = EvolutionConfig(), noise: NoiseChannels | None = None):
    """Populations of every basis state at the requested times (interaction frame)."""
    times = np.asarray(times, dtype=float)
    pops = np.empty((len(times), system.dim))
    psi0 = np.asarray(psi0, dtype=complex)
    mixed = noise is not None and noise.is_dissipative
    state = np.outer(psi0, psi0.conj()) if (mixed and psi0.ndim == 1) else psi0
    t_prev = 0.0
    for i, t in enumerate(times):
        if t > t_prev:
            if mixed:
                state = system.superop(schedule, noise, config, t_prev, t, rho=state)
            else:
                state = system.unitary(schedule, config, t_prev, t) @ state
        pops[i] = np.real(np.diag(state)) if state.ndim == 2 else np.abs(state) ** 2
        t_prev = t
    return pops


def write_trajectory_csv(path, times, pops, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_ns"] + [f"P_{s}" for s in labels])
        for t, row in zip(times, pops):
            w.writerow([f"{t * 1e9:.6f}"] + [f"{p:.10f}" for p in row])


def write_manifest(path, **fields):
    Path(path).write_text(json.dumps(fields, indent=2, sort_keys=True, default=str))

"""Open-system evolution of pulse schedules and the Uhlmann fidelity.

Two master-equation models are available:

``simplified``
    Resonant (rotating-wave) drive couplings of each segment, bare cavity and
    mechanical ladders in the dissipators. The drive frame leaves all three
    dissipators unchanged, so each segment has a constant Liouvillian.
``full``
    Complete drive operator ``a^dag exp(eta(b^dag - b))`` including every
    off-resonant term, with polaron-dressed ladders in the dissipators. In the
    common rotating frame both the drive and the dressed ladders pick up
    explicit ``exp(i n omega_m t)`` factors, so only Runge-Kutta is used.

All evolution is in the frame of ``omega_m b^dag b + omega n_photon`` (with
``delta`` kept on the ``|e'>`` diagonal), anchored at the start of the
schedule, so segments chain without any boundary bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import eigh, expm
from scipy.sparse.linalg import expm_multiply

from .couplings import SystemParams, displacement_element
from .errors import IntegrationError, ShapeError, ValidationError
from .fockspace import (
    G,
    SpaceShape,
    basis_ket,
    composite_ladders,
    default_cutoff,
    ket_to_dm,
    partial_trace_photon,
    polaron_dress,
)
from .leakage import segment_hamiltonian
from .propagators import PulseSchedule
from .synthesis import TargetState

RTOL = 1e-10
ATOL = 1e-12
TRACE_TOL = 1e-6
PSD_TOL = 1e-8
DENSE_MAX_DIM = 30

MODELS = ("simplified", "full")


@dataclass(frozen=True)
class NoiseParams:
    """Decay rates (rad/s) and thermal phonon number of the baths."""

    gamma_c: float = 0.0
    gamma_m: float = 0.0
    nbar_m: float = 0.0

    def __post_init__(self):
        for name in ("gamma_c", "gamma_m", "nbar_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_params(cls, params: SystemParams) -> "NoiseParams":
        return cls(params.gamma_c, params.gamma_m, params.nbar_m)

    @property
    def is_closed(self) -> bool:
        return self.gamma_c == 0 and self.gamma_m == 0


@dataclass
class ProtocolResult:
    rho_final: np.ndarray
    rho_phonon: np.ndarray
    fidelity: float
    trace_drift: float
    min_eigenvalue: float
    shape: SpaceShape
    projected_fidelity: float = float("nan")


def _commutator(h, rho):
    return h @ rho - rho @ h


def _lindblad_rhs(rho, h, noise: NoiseParams, a, b):
    """Master-equation right-hand side, Hermitian-symmetrized.

    The thermal line ``gamma_m nbar (b rho b^dag + b^dag rho b - b^dag b rho
    - rho b b^dag)`` is written as printed; symmetrizing turns it into the
    standard ``D[b]``/``D[b^dag]`` form on the truncated space.
    """
    out = -1j * _commutator(h, rho)
    if noise.gamma_c:
        ad = a.conj().T
        ada = ad @ a
        out += 0.5 * noise.gamma_c * (2 * a @ rho @ ad - ada @ rho - rho @ ada)
    if noise.gamma_m:
        bd = b.conj().T
        bdb = bd @ b
        out += 0.5 * noise.gamma_m * (2 * b @ rho @ bd - bdb @ rho - rho @ bdb)
        if noise.nbar_m:
            bbd = b @ bd
            out += noise.gamma_m * noise.nbar_m * (
                b @ rho @ bd + bd @ rho @ b - bdb @ rho - rho @ bbd
            )
    return 0.5 * (out + out.conj().T)


def lindblad_rhs_simplified(rho, hamiltonian, noise: NoiseParams, photon_lowering, phonon_lowering):
    """``d rho/dt`` with bare ladders ``a = |g><e| + sqrt(2)|e><e'|`` and ``b``."""
    return _lindblad_rhs(rho, hamiltonian, noise, photon_lowering, phonon_lowering)


def lindblad_rhs_full(rho, hamiltonian_eff, noise: NoiseParams, a_dressed, b_dressed):
    """``d rho/dt`` with polaron-dressed ladders in every dissipator."""
    return _lindblad_rhs(rho, hamiltonian_eff, noise, a_dressed, b_dressed)


def liouvillian(h, noise: NoiseParams, a, b, sparse: bool = False):
    """Superoperator ``L`` with ``vec(d rho/dt) = L vec(rho)`` (row-major vec).

    Built from the standard ``D[c]`` form with collapse operators
    ``sqrt(gamma_c) a``, ``sqrt(gamma_m (nbar+1)) b`` and
    ``sqrt(gamma_m nbar) b^dag``, which equals the symmetrized right-hand side.
    """
    lib = sp if sparse else np
    d = h.shape[0]
    eye = sp.identity(d, format="csr") if sparse else np.eye(d)
    conv = sp.csr_matrix if sparse else np.asarray

    def left(x):
        return lib.kron(x, eye)

    def right(x):
        return lib.kron(eye, x.T)

    def dissipator(c, rate):
        c = conv(c)
        cdc = c.conj().T @ c
        return rate * (lib.kron(c, c.conj()) - 0.5 * left(cdc) - 0.5 * right(cdc))

    h = conv(h)
    sup = -1j * (left(h) - right(h))
    if noise.gamma_c:
        sup = sup + dissipator(a, noise.gamma_c)
    if noise.gamma_m:
        sup = sup + dissipator(b, noise.gamma_m * (noise.nbar_m + 1))
        if noise.nbar_m:
            sup = sup + dissipator(b.conj().T, noise.gamma_m * noise.nbar_m)
    return sup.tocsr() if sparse else sup


def integrate_density(rhs, rho0: np.ndarray, t0: float, t1: float, max_step: float = np.inf) -> np.ndarray:
    """Adaptive Runge-Kutta (DOP853) integration of ``d rho/dt = rhs(t, rho)``."""
    if t1 == t0:
        return rho0.copy()
    d = rho0.shape[0]

    def f(t, y):
        return rhs(t, y.reshape(d, d)).ravel()

    sol = solve_ivp(f, (t0, t1), rho0.ravel(), method="DOP853", rtol=RTOL, atol=ATOL, max_step=max_step)
    if not sol.success:
        raise IntegrationError(f"master-equation integration failed: {sol.message}")
    rho = sol.y[:, -1].reshape(d, d)
    return 0.5 * (rho + rho.conj().T)


# -- Uhlmann fidelity ---------------------------------------------------------


def _check_state(rho: np.ndarray, name: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise ValidationError(f"{name} is not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < -PSD_TOL:
        raise ValidationError(f"{name} has eigenvalue {w[0]:.3e} below -{PSD_TOL:g}")
    return rho


def psd_sqrt(rho: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues are clipped at zero and the
    trace restored before taking roots."""
    w, v = eigh(0.5 * (rho + rho.conj().T))
    trace = w.sum()
    w = np.clip(w, 0.0, None)
    if w.sum() > 0 and trace > 0:
        w *= trace / w.sum()
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(rho_target: np.ndarray, rho_reduced: np.ndarray) -> float:
    """``[Tr sqrt(sqrt(rho_r) rho_t sqrt(rho_r))]^2``."""
    rho_t = _check_state(rho_target, "rho_target")
    rho_r = _check_state(rho_reduced, "rho_reduced")
    if rho_t.shape != rho_r.shape:
        raise ShapeError(f"state shapes differ: {rho_t.shape} vs {rho_r.shape}")
    s = psd_sqrt(rho_r)
    m = s @ rho_t @ s
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    # eigenvalues below the numerical rank threshold are rounding noise whose
    # square roots would otherwise add ~1e-8 per entry
    w[w < m.shape[0] * np.finfo(float).eps * max(w[-1], 0.0)] = 0.0
    return float(np.sum(np.sqrt(w)) ** 2)


# -- protocol runner -----------------------------------------------------------


def protocol_cutoff(schedule: PulseSchedule, nbar_m: float = 0.0) -> int:
    """Default phonon cutoff: six spare levels plus room for thermal heating."""
    return default_cutoff(schedule.max_phonon()) + int(math.ceil(nbar_m))


class _FullModel:
    """Time-dependent Hamiltonian and dressed ladders in the common frame."""

    def __init__(self, shape: SpaceShape, params: SystemParams, delta: float, couplings: str = "exact"):
        self.shape = shape
        self.params = params
        m = shape.phonon_numbers()
        p = shape.photon_numbers()
        self.dm = (m[:, None] - m[None, :]).astype(float)
        self.dp = (p[:, None] - p[None, :]).astype(float)
        cutoff = shape.phonon_cutoff
        disp = np.array(
            [[displacement_element(params.eta, i, j) for j in range(cutoff)] for i in range(cutoff)]
        )
        raise_photon = np.diag(np.sqrt(np.arange(1, shape.photon_levels)), k=-1)
        self.raising = np.kron(raise_photon, disp).astype(complex)
        self.static = np.zeros((shape.dim, shape.dim), dtype=complex)
        if shape.photon_levels == 3:
            self.static[2 * cutoff:, 2 * cutoff:] = delta * np.eye(cutoff)
        a, b = composite_ladders(shape)
        self.a_dressed, self.b_dressed = polaron_dress(a, b, params.eta)

    def hamiltonian(self, t: float, phonon_shift: int, phase: float) -> np.ndarray:
        freq = (phonon_shift * self.dp + self.dm) * self.params.omega_m
        drive = self.params.Omega * np.exp(-1j * phase) * self.raising * np.exp(1j * freq * t)
        return self.static + drive + drive.conj().T

    def ladders(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        rot = np.exp(1j * self.dm * self.params.omega_m * t)
        return self.a_dressed * rot, self.b_dressed * rot


def run_protocol(
    schedule: PulseSchedule,
    noise: NoiseParams | None = None,
    model: str = "simplified",
    delta: float | None = None,
    cutoff: int | None = None,
    method: str = "auto",
    target=None,
) -> ProtocolResult:
    """Master-equation evolution of ``|0,g><0,g|`` through the schedule.

    ``noise`` defaults to the rates stored in ``schedule.params``; ``delta``
    defaults to the anharmonicity ``-2 g^2/omega_m``. ``method`` picks the
    propagation route for the simplified model: ``expm`` (dense Liouvillian
    exponential per segment), ``sparse`` (action of the exponential of the
    sparse Liouvillian on ``vec(rho)``), ``rk`` (adaptive Runge-Kutta) or
    ``auto`` (dense up to composite dimension 30, sparse above). Runge-Kutta steps are capped at ``0.05/|delta|``
    so the ``|e'>`` precession is always resolved.

    ``projected_fidelity`` is ``<target,g| rho |target,g>``, the population
    left in the target with the cavity empty; it is a diagnostic only.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    params = schedule.params
    noise = noise or NoiseParams.from_params(params)
    delta = params.delta if delta is None else delta
    cutoff = cutoff or protocol_cutoff(schedule, noise.nbar_m)
    shape = SpaceShape(3, cutoff)
    if target is None:
        if schedule.target is None:
            raise ValueError("schedule carries no target; pass one explicitly")
        target = TargetState(schedule.target)
    elif not isinstance(target, TargetState):
        target = TargetState.from_amplitudes(target)
    if target.N >= cutoff:
        raise ShapeError(f"target needs Fock state {target.N} but cutoff is {cutoff}")

    rho = ket_to_dm(basis_ket(shape, 0, G))
    max_step = 0.05 / abs(delta) if delta else np.inf
    min_eig = 0.0
    if model == "simplified":
        a, b = composite_ladders(shape)
        if method == "auto":
            method = "expm" if shape.dim <= DENSE_MAX_DIM else "sparse"
        for seg in schedule:
            h = segment_hamiltonian(seg, shape, params, delta, schedule.couplings)
            if seg.duration == 0:
                continue
            if method == "expm":
                prop = expm(liouvillian(h, noise, a, b) * seg.duration)
                rho = (prop @ rho.ravel()).reshape(shape.dim, shape.dim)
                rho = 0.5 * (rho + rho.conj().T)
            elif method == "sparse":
                gen = liouvillian(h, noise, a, b, sparse=True) * seg.duration
                rho = expm_multiply(gen, rho.ravel()).reshape(shape.dim, shape.dim)
                rho = 0.5 * (rho + rho.conj().T)
            elif method == "rk":
                rho = integrate_density(
                    lambda _t, r, h=h: lindblad_rhs_simplified(r, h, noise, a, b),
                    rho,
                    0.0,
                    seg.duration,
                    max_step,
                )
            else:
                raise ValueError(f"unknown method {method!r}")
            min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))
    else:
        full = _FullModel(shape, params, delta)
        t = 0.0
        for seg in schedule:
            if seg.duration == 0:
                continue

            def rhs(tt, r, seg=seg):
                h = full.hamiltonian(tt, seg.phonon_shift, seg.phase)
                a_t, b_t = full.ladders(tt)
                return lindblad_rhs_full(r, h, noise, a_t, b_t)

            rho = integrate_density(rhs, rho, t, t + seg.duration, max_step)
            t += seg.duration
            min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))

    trace_drift = abs(np.trace(rho).real - 1.0)
    if trace_drift > TRACE_TOL:
        raise IntegrationError(f"trace drifted by {trace_drift:.3e} (limit {TRACE_TOL:g})")
    rho_phonon = partial_trace_photon(rho, shape)
    fidelity = uhlmann_fidelity(target.phonon_dm(cutoff), rho_phonon)
    ket = np.zeros(shape.dim, dtype=complex)
    ket[: target.N + 1] = target.array
    projected = float(np.vdot(ket, rho @ ket).real)
    return ProtocolResult(rho, rho_phonon, fidelity, trace_drift, min_eig, shape, projected)

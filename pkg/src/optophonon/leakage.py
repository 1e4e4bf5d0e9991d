"""Leakage into the second excited cavity level ``|e'>``.

The three-level generators below are written in the frame rotating with
``omega_m b^dag b + omega |e><e| + 2 omega |e'><e'|``. In that frame a drive
resonant with a carrier or sideband transition is time independent, only the
anharmonicity ``delta`` survives on the ``|e'>`` diagonal, and each segment
is a constant Hamiltonian. The blocks for ``m <= 2`` reproduce the printed
carrier and red-sideband matrices entry for entry; larger cutoffs continue
the same ``sqrt(m+1)`` pattern.

Closed-form approximations (valid for ``|delta| >> |A|, |B|``) and the
resulting fidelity factors live here as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .couplings import SystemParams, displacement_element
from .errors import IntegrationError, ShapeError
from .fockspace import EP, G, SpaceShape, basis_ket, default_cutoff
from .propagators import PulseSchedule, PulseSegment
from .synthesis import TargetState, reverse_synthesize, superposition_02

RTOL = 1e-10
ATOL = 1e-12


def drive_hamiltonian(
    shape: SpaceShape,
    Omega: float,
    eta: float,
    delta: float,
    phonon_shift: int,
    phase: float = 0.0,
    couplings: str = "exact",
) -> np.ndarray:
    """Rotating-frame Hamiltonian (hbar = 1) of one resonant drive segment.

    ``phonon_shift`` is ``(omega - omega_d)/omega_m``: ``+k`` for the order-k
    red sideband, ``0`` for the carrier, ``-k`` for blue. Photon raising
    ``|m', p> -> |m, p+1>`` with ``m' = m + phonon_shift`` carries
    ``Omega e^{-i phase} sqrt(p+1) <m|exp(eta(b^dag - b))|m'>``.
    """
    if couplings == "lamb-dicke" and abs(phonon_shift) > 1:
        raise ValueError("Lamb-Dicke couplings only support carrier and first sidebands")
    p_levels, cutoff = shape.photon_levels, shape.phonon_cutoff
    h = np.zeros((shape.dim, shape.dim), dtype=complex)
    drive = Omega * complex(math.cos(phase), -math.sin(phase))
    for m in range(cutoff):
        m_src = m + phonon_shift
        if not 0 <= m_src < cutoff:
            continue
        element = displacement_element(eta, m, m_src, couplings)
        for p in range(p_levels - 1):
            i, j = shape.index(m, p + 1), shape.index(m_src, p)
            h[i, j] = drive * math.sqrt(p + 1) * element
            h[j, i] = np.conj(h[i, j])
    if p_levels == 3:
        for m in range(cutoff):
            h[shape.index(m, EP), shape.index(m, EP)] = delta
    return h


def segment_hamiltonian(
    segment: PulseSegment,
    shape: SpaceShape,
    params: SystemParams,
    delta: float | None = None,
    couplings: str = "exact",
) -> np.ndarray:
    delta = params.delta if delta is None else delta
    return drive_hamiltonian(
        shape, params.Omega, params.eta, delta, segment.phonon_shift, segment.phase, couplings
    )


def evolve(h: np.ndarray, psi: np.ndarray, t: float, method: str = "rk") -> np.ndarray:
    """``exp(-i H t) psi`` by adaptive Runge-Kutta (``rk``) or matrix exponential."""
    psi = np.asarray(psi, dtype=complex)
    if h.shape != (psi.size, psi.size):
        raise ShapeError(f"generator {h.shape} does not act on a ket of size {psi.size}")
    if t == 0:
        return psi.copy()
    if method == "expm":
        return expm(-1j * h * t) @ psi
    if method != "rk":
        raise ValueError(f"unknown method {method!r}")
    gen = -1j * h
    sol = solve_ivp(
        lambda _t, y: gen @ y,
        (0.0, t),
        psi,
        method="DOP853",
        rtol=RTOL,
        atol=ATOL,
    )
    if not sol.success:
        raise IntegrationError(f"state integration failed: {sol.message}")
    return sol.y[:, -1]


def _three_level_shape(state: np.ndarray) -> SpaceShape:
    if state.ndim != 1 or state.size % 3:
        raise ShapeError(f"expected a three-level composite ket, got shape {state.shape}")
    return SpaceShape(3, state.size // 3)


def carrier_ode_step(
    state: np.ndarray,
    Omega: float,
    delta: float,
    phase: float,
    dt: float,
    eta: float = 0.0,
    couplings: str = "lamb-dicke",
    method: str = "rk",
) -> np.ndarray:
    """Advance the three-level amplitudes under a carrier drive for ``dt``."""
    state = np.asarray(state, dtype=complex)
    shape = _three_level_shape(state)
    h = drive_hamiltonian(shape, Omega, eta, delta, 0, phase, couplings)
    return evolve(h, state, dt, method)


def red_ode_step(
    state: np.ndarray,
    Omega: float,
    eta: float,
    delta: float,
    phase: float,
    dt: float,
    couplings: str = "lamb-dicke",
    method: str = "rk",
) -> np.ndarray:
    """Advance under the first red sideband; ``|0,g>`` stays stationary."""
    state = np.asarray(state, dtype=complex)
    shape = _three_level_shape(state)
    h = drive_hamiltonian(shape, Omega, eta, delta, 1, phase, couplings)
    return evolve(h, state, dt, method)


def run_schedule_closed(
    schedule: PulseSchedule,
    delta: float | None = None,
    cutoff: int | None = None,
    method: str = "expm",
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Three-level ket after the whole schedule, starting from ``|0,g>``."""
    cutoff = cutoff or default_cutoff(schedule.max_phonon())
    shape = SpaceShape(3, cutoff)
    psi = basis_ket(shape, 0, G) if initial is None else np.asarray(initial, dtype=complex)
    for seg in schedule:
        h = segment_hamiltonian(seg, shape, schedule.params, delta, schedule.couplings)
        psi = evolve(h, psi, seg.duration, method)
    return psi


def overlap_fidelity(psi: np.ndarray, target: TargetState, shape: SpaceShape) -> float:
    """``|<target, g|psi>|^2`` for a composite ket of the given shape."""
    c = target.array
    amps = psi[shape.index(0, G): shape.index(0, G) + c.size]
    return float(abs(np.vdot(c, amps)) ** 2)


# -- closed-form approximations ---------------------------------------------


@dataclass(frozen=True)
class BlockSolution:
    """Eigenfrequencies and mode weights of the ``G, E, E'`` block."""

    omega_1: float
    omega_2: float
    omega_3: float
    c_1: complex
    c_2: complex
    c_3: complex
    Omega_R: float
    A: float
    B: float


def block_solution(A: float, B: float, delta: float, initial: str = "ground") -> BlockSolution:
    """Large-``delta`` eigenfrequencies and the approximate mode weights."""
    Omega_R = 2 * abs(A) * (1 - B ** 2 / (2 * delta ** 2) + B ** 4 / (8 * A ** 2 * delta ** 2))
    w1 = Omega_R / 2 - B ** 2 / (2 * delta)
    w2 = -Omega_R / 2 - B ** 2 / (2 * delta)
    w3 = delta * (1 + B ** 2 / delta ** 2)
    if initial == "ground":
        c1 = 0.5 + B ** 2 / (4 * abs(A) * delta)
        c2 = 0.5 - B ** 2 / (4 * abs(A) * delta)
        c3 = 0.0
    elif initial == "excited":
        c1 = A / (2 * abs(A)) * (1 - B ** 2 / delta ** 2)
        c2 = -c1
        c3 = A * B ** 2 / delta ** 3
    else:
        raise ValueError(f"initial must be 'ground' or 'excited', got {initial!r}")
    return BlockSolution(w1, w2, w3, c1, c2, c3, Omega_R, A, B)


def analytic_three_level(
    A: float, B: float, delta: float, t: float, initial: str = "ground"
) -> tuple[complex, complex, complex]:
    """Approximate ``(c_G, c_E, c_E')`` of the three-level block at time ``t``.

    ``initial="ground"`` starts in ``G``; ``"excited"`` starts in ``E``.
    Warns outside ``|delta| >= 5 max(|A|, |B|)``.
    """
    if abs(delta) < 5 * max(abs(A), abs(B)):
        warnings.warn(
            f"analytic leakage solution used outside its regime (|delta|={abs(delta):g}, "
            f"max(|A|,|B|)={max(abs(A), abs(B)):g})",
            RuntimeWarning,
            stacklevel=2,
        )
    if A == 0:
        if initial == "ground":
            return 1.0 + 0j, 0j, 0j
        return 0j, complex(math.cos(B * t)), complex(-1j * math.sin(B * t))
    sgn = A / abs(A)
    Omega_R = block_solution(A, B, delta, initial).Omega_R
    s, c = math.sin(Omega_R * t / 2), math.cos(Omega_R * t / 2)
    if initial == "ground":
        c_g = c - 1j * B ** 2 / (2 * abs(A) * delta) * s
        c_e = -1j * sgn * (1 - B ** 2 / (2 * delta ** 2) - B ** 4 / (8 * A ** 2 * delta ** 2)) * s
        c_ep = 1j * sgn * B / delta * s
        return complex(c_g), complex(c_e), complex(c_ep)
    if initial == "excited":
        fast = (delta + 3 * B ** 2 / (2 * delta)) * t
        c_g = -1j * sgn * (1 - B ** 2 / delta ** 2) * s
        c_e = (1 - 3 * B ** 2 / (2 * delta ** 2) + B ** 4 / (8 * A ** 2 * delta ** 2)) * c
        c_ep = B / delta * (math.cos(fast) - c) - 1j * B / delta * math.sin(fast)
        return complex(c_g), complex(c_e), complex(c_ep)
    raise ValueError(f"initial must be 'ground' or 'excited', got {initial!r}")


def two_level_block(
    A: float, B: float, t: float, initial: tuple[complex, complex]
) -> tuple[complex, complex]:
    """Exact solution of ``i d/dt (s, x) = [[0, A], [A, B]] (s, x)``."""
    s0, x0 = complex(initial[0]), complex(initial[1])
    omega_r = math.sqrt(4 * A ** 2 + B ** 2)
    if omega_r == 0:
        return s0, x0
    sn, cs = math.sin(omega_r * t / 2), math.cos(omega_r * t / 2)
    envelope = complex(math.cos(B * t / 2), -math.sin(B * t / 2))
    s = (s0 * (cs + 1j * B / omega_r * sn) - 1j * 2 * A / omega_r * x0 * sn) * envelope
    x = (x0 * (cs - 1j * B / omega_r * sn) - 1j * 2 * A / omega_r * s0 * sn) * envelope
    return s, x


@dataclass(frozen=True)
class LeakageFactors:
    f_ce: float
    f_rg: float
    f_cg: float

    @property
    def F1(self) -> float:
        return abs(self.f_rg * self.f_ce ** 2) ** 2

    @property
    def F2(self) -> float:
        return 0.25 * abs(self.f_cg * self.f_ce + self.f_rg * self.f_ce ** 2) ** 2


def leakage_factors(Omega: float, eta: float, delta: float) -> LeakageFactors:
    if delta == 0:
        raise ZeroDivisionError("leakage factors need a non-zero anharmonicity")
    r = (Omega / delta) ** 2
    rl = (eta * Omega / delta) ** 2
    carrier_sine = math.sin(math.pi / 2 * (1 - r / 2))
    f_ce = (1 - 1.5 * r) * carrier_sine
    f_rg = (1 - 2 * rl) * math.sin(math.pi / 2 * (1 - 0.75 * rl))
    f_cg = (1 - 2 * r) * carrier_sine
    return LeakageFactors(f_ce, f_rg, f_cg)


def carrier_fidelity(Omega: float, delta: float) -> float:
    """Population of ``|e>`` after a nominal carrier pi/2 pulse."""
    return leakage_factors(Omega, 0.0, delta).f_ce ** 2


def fidelity_F1_analytic(Omega: float, eta: float, delta: float) -> float:
    return leakage_factors(Omega, eta, delta).F1


def fidelity_F2_analytic(Omega: float, eta: float, delta: float) -> float:
    return leakage_factors(Omega, eta, delta).F2


# -- numerical protocol fidelities -------------------------------------------

PROTOCOL_TARGETS = ("fock2", "superposition02")


def protocol_target(name: str) -> TargetState:
    if name == "fock2":
        return TargetState.fock(2)
    if name == "superposition02":
        return superposition_02()
    raise ValueError(f"unknown protocol target {name!r}; expected one of {PROTOCOL_TARGETS}")


def fock2_schedule(params: SystemParams) -> PulseSchedule:
    """carrier, red, carrier, red with the nominal Lamb-Dicke pulse lengths."""
    Omega, eta = params.Omega, params.eta
    segments = (
        PulseSegment.carrier(math.pi / (2 * Omega)),
        PulseSegment.red(1, math.pi / (2 * eta * Omega)),
        PulseSegment.carrier(math.pi / (2 * Omega)),
        PulseSegment.red(1, math.pi / (2 * math.sqrt(2) * eta * Omega)),
    )
    return PulseSchedule(segments, params, "lamb-dicke", TargetState.fock(2).coefficients)


def protocol_schedule(target: str, params: SystemParams, couplings: str = "lamb-dicke") -> PulseSchedule:
    if target == "fock2" and couplings == "lamb-dicke":
        return fock2_schedule(params)
    return reverse_synthesize(protocol_target(target), params, couplings)


def protocol_fidelity_numeric(
    target: str,
    Omega: float,
    eta: float,
    delta: float,
    couplings: str = "lamb-dicke",
    method: str = "expm",
    cutoff: int | None = None,
) -> float:
    """Closed three-level fidelity of the four-pulse preparation of ``target``.

    ``target`` is ``"fock2"`` for ``|2>`` or ``"superposition02"`` for
    ``(|0> - |2>)/sqrt(2)``. Pulse lengths are solved for the two-level
    model, so any shortfall from 1 is leakage into ``|e'>``.
    """
    if delta == 0:
        raise ValueError("delta must be non-zero")
    params = SystemParams.from_ratios(eta, abs(delta) / Omega, Omega=Omega)
    schedule = protocol_schedule(target, params, couplings)
    cutoff = cutoff or default_cutoff(2)
    psi = run_schedule_closed(schedule, delta=delta, cutoff=cutoff, method=method)
    norm_drift = abs(np.vdot(psi, psi).real - 1.0)
    if norm_drift > 1e-9:
        raise IntegrationError(f"norm drifted by {norm_drift:.2e} during the protocol")
    return overlap_fidelity(psi, protocol_target(target), SpaceShape(3, cutoff))

"""Closed-form carrier / sideband propagators in the two-level photon picture.

All propagators live in the interaction frame of ``omega_m b^dag b + omega |e><e|``
where a resonant drive is time independent, so segments compose by plain
matrix products. Blocks that would couple past the phonon cutoff are left as
the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .couplings import SystemParams, sideband_rabi
from .errors import ShapeError
from .fockspace import E, G, SpaceShape, basis_ket

SEGMENT_KINDS = ("carrier", "red", "blue")


@dataclass(frozen=True)
class PulseSegment:
    """One constant drive: ``kind`` fixes the detuning, ``k`` the sideband order."""

    kind: str
    k: int
    duration: float
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if self.kind == "carrier" and self.k != 0:
            raise ValueError("carrier segments have k = 0")
        if self.kind != "carrier" and self.k < 1:
            raise ValueError(f"{self.kind} sideband needs k >= 1, got {self.k}")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration}")

    @property
    def phonon_shift(self) -> int:
        """``(omega - omega_d) / omega_m``: +k red, 0 carrier, -k blue."""
        return {"carrier": 0, "red": self.k, "blue": -self.k}[self.kind]

    @classmethod
    def carrier(cls, duration: float, phase: float = 0.0) -> "PulseSegment":
        return cls("carrier", 0, duration, phase)

    @classmethod
    def red(cls, k: int, duration: float, phase: float = 0.0) -> "PulseSegment":
        return cls("red", k, duration, phase)

    @classmethod
    def blue(cls, k: int, duration: float, phase: float = 0.0) -> "PulseSegment":
        return cls("blue", k, duration, phase)


@dataclass(frozen=True)
class PulseSchedule:
    """Time-ordered drive segments plus the parameters they were solved for.

    ``couplings`` records the Rabi-frequency model used to solve durations so
    that every downstream simulation applies the same one. ``target`` holds the
    phonon amplitudes the schedule is meant to prepare, if known.
    """

    segments: tuple[PulseSegment, ...]
    params: SystemParams
    couplings: str = "exact"
    target: tuple[complex, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.target is not None:
            object.__setattr__(self, "target", tuple(complex(c) for c in self.target))

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def max_phonon(self) -> int:
        """Upper bound on the phonon number reachable from ``|0,g>``."""
        reach = sum(s.k for s in self.segments)
        if self.target is not None:
            reach = max(reach, len(self.target) - 1)
        return reach


def _phase_factor(phase: float) -> complex:
    return complex(math.cos(phase), math.sin(phase))


def carrier_propagator(
    params: SystemParams, t: float, phase: float, cutoff: int, couplings: str = "exact"
) -> np.ndarray:
    """``|n,g> <-> |n,e>`` rotation at ``Omega_{n,0}`` for every ``n``."""
    shape = SpaceShape(2, cutoff)
    u = np.zeros((shape.dim, shape.dim), dtype=complex)
    ep = _phase_factor(phase)
    for n in range(cutoff):
        w = sideband_rabi(params.Omega, params.eta, n, 0, couplings)
        c, s = math.cos(w * t), math.sin(w * t)
        ig, ie = shape.index(n, G), shape.index(n, E)
        u[ig, ig] = c
        u[ie, ig] = -1j * ep.conjugate() * s
        u[ie, ie] = c
        u[ig, ie] = -1j * ep * s
    return u


def red_propagator(
    params: SystemParams, k: int, t: float, phase: float, cutoff: int, couplings: str = "exact"
) -> np.ndarray:
    """``|n,e> <-> |n+k,g>`` at ``Omega_{n,k}``; ``|n,g>`` with ``n < k`` untouched."""
    if k < 1:
        raise ValueError(f"sideband order must be >= 1, got {k}")
    if cutoff < k + 1:
        raise ShapeError(f"cutoff {cutoff} too small for red sideband k={k}")
    shape = SpaceShape(2, cutoff)
    u = np.eye(shape.dim, dtype=complex)
    ep = _phase_factor(phase)
    sign = (-1) ** k
    for n in range(cutoff - k):
        w = sideband_rabi(params.Omega, params.eta, n, k, couplings)
        c, s = math.cos(w * t), math.sin(w * t)
        ie, ig = shape.index(n, E), shape.index(n + k, G)
        u[ie, ie] = c
        u[ig, ie] = -1j * sign * ep * s
        u[ig, ig] = c
        u[ie, ig] = -1j * sign * ep.conjugate() * s
    return u


def blue_propagator(
    params: SystemParams, k: int, t: float, phase: float, cutoff: int, couplings: str = "exact"
) -> np.ndarray:
    """``|n,g> <-> |n+k,e>`` at ``Omega_{n,k}``; ``|n,e>`` with ``n < k`` untouched."""
    if k < 1:
        raise ValueError(f"sideband order must be >= 1, got {k}")
    if cutoff < k + 1:
        raise ShapeError(f"cutoff {cutoff} too small for blue sideband k={k}")
    shape = SpaceShape(2, cutoff)
    u = np.eye(shape.dim, dtype=complex)
    ep = _phase_factor(phase)
    for n in range(cutoff - k):
        w = sideband_rabi(params.Omega, params.eta, n, k, couplings)
        c, s = math.cos(w * t), math.sin(w * t)
        ig, ie = shape.index(n, G), shape.index(n + k, E)
        u[ig, ig] = c
        u[ie, ig] = -1j * ep.conjugate() * s
        u[ie, ie] = c
        u[ig, ie] = -1j * ep * s
    return u


def segment_propagator(
    segment: PulseSegment, params: SystemParams, cutoff: int, couplings: str = "exact"
) -> np.ndarray:
    if segment.kind == "carrier":
        return carrier_propagator(params, segment.duration, segment.phase, cutoff, couplings)
    if segment.kind == "red":
        return red_propagator(params, segment.k, segment.duration, segment.phase, cutoff, couplings)
    return blue_propagator(params, segment.k, segment.duration, segment.phase, cutoff, couplings)


def schedule_cutoff(schedule: PulseSchedule, extra: int = 0) -> int:
    return max(schedule.max_phonon(), extra) + 6


def apply_schedule(
    schedule: PulseSchedule | Sequence[PulseSegment],
    initial: np.ndarray,
    params: SystemParams | None = None,
    couplings: str | None = None,
) -> np.ndarray:
    """Propagate a two-level ket through the segments in time order.

    The cutoff is read off ``initial`` (dimension ``2 * cutoff``).
    """
    if isinstance(schedule, PulseSchedule):
        segments: Iterable[PulseSegment] = schedule.segments
        params = params or schedule.params
        couplings = couplings or schedule.couplings
    else:
        segments = schedule
        if params is None:
            raise ValueError("params required when passing bare segments")
        couplings = couplings or "exact"
    psi = np.asarray(initial, dtype=complex)
    if psi.ndim != 1 or psi.size % 2:
        raise ShapeError(f"expected a two-level composite ket, got shape {psi.shape}")
    cutoff = psi.size // 2
    for seg in segments:
        psi = segment_propagator(seg, params, cutoff, couplings) @ psi
    return psi


def ground_ket(cutoff: int) -> np.ndarray:
    return basis_ket(SpaceShape(2, cutoff), 0, G)

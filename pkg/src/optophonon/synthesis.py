"""Pulse-schedule synthesis for phonon superpositions.

Two constructions map ``|0,g>`` to ``sum_k c_k |k,g>``:

* :func:`forward_synthesize` - one carrier pulse followed by red sidebands of
  increasing order ``k = 1..N``, each read off the target amplitude ``c_k``.
* :func:`reverse_synthesize` - ``N`` carrier / first-red-sideband pairs found
  by evolving the target backwards and zeroing the highest excitation at
  every step (Law-Eberly style elimination).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .couplings import SystemParams, sideband_rabi
from .errors import (
    ConfigError,
    ConvergenceError,
    InfeasibleTargetError,
    SynthesisError,
    VanishingRabiError,
)
from .fockspace import E, G, SpaceShape, default_cutoff
from .propagators import (
    PulseSchedule,
    PulseSegment,
    apply_schedule,
    carrier_propagator,
    ground_ket,
    red_propagator,
)

NORM_TOL = 1e-9
ZERO_AMP = 1e-14
TWO_PI = 2.0 * math.pi


def _wrap_phase(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    return 0.0 if phi >= TWO_PI else phi


@dataclass(frozen=True)
class TargetState:
    """Normalized phonon amplitudes ``c_0..c_N`` with the global phase fixed.

    The first non-zero amplitude is made real and non-negative; trailing
    zeros are dropped so ``N`` is the highest populated Fock state.
    """

    coefficients: tuple[complex, ...]

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False, tol: float = NORM_TOL) -> "TargetState":
        c = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ConfigError("target needs a non-empty 1-D amplitude list")
        if not np.all(np.isfinite(c)):
            raise ConfigError("target amplitudes must be finite")
        norm = float(np.linalg.norm(c))
        if norm == 0:
            raise ConfigError("target has zero norm")
        if abs(norm - 1.0) > tol and not normalize:
            raise ConfigError(f"target norm is {norm:.12g}, not 1 (use normalization to rescale)")
        c = c / norm
        nonzero = np.flatnonzero(np.abs(c) > ZERO_AMP)
        c = c[: nonzero[-1] + 1].copy()
        c[np.abs(c) <= ZERO_AMP] = 0.0
        first = c[nonzero[0]]
        c *= abs(first) / first
        c[nonzero[0]] = abs(first)
        c /= np.linalg.norm(c)
        return cls(tuple(complex(x) for x in c))

    @classmethod
    def fock(cls, n: int) -> "TargetState":
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1.0
        return cls.from_amplitudes(c)

    @property
    def N(self) -> int:
        return len(self.coefficients) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def ket(self, cutoff: int) -> np.ndarray:
        """``|target> (x) |g>`` in the two-level composite space."""
        psi = np.zeros(2 * cutoff, dtype=complex)
        psi[: self.N + 1] = self.array
        return psi

    def phonon_dm(self, cutoff: int) -> np.ndarray:
        c = np.zeros(cutoff, dtype=complex)
        c[: self.N + 1] = self.array
        return np.outer(c, c.conj())


def superposition_02() -> TargetState:
    """``(|0> - |2>)/sqrt(2)``."""
    return TargetState.from_amplitudes([1.0, 0.0, -1.0], normalize=True)


def _coerce_target(target) -> TargetState:
    if isinstance(target, TargetState):
        return target
    return TargetState.from_amplitudes(target)


def _checked_rabi(params: SystemParams, n: int, k: int, couplings: str) -> float:
    w = sideband_rabi(params.Omega, params.eta, n, k, couplings)
    if abs(w) < 1e-15 * params.Omega:
        raise VanishingRabiError(
            f"Rabi frequency Omega_{{{n},{k}}} vanishes at eta={params.eta:g} "
            f"({couplings} couplings); order-{k} sideband cannot be driven"
        )
    return w


def forward_synthesize(target, params: SystemParams, couplings: str = "exact") -> PulseSchedule:
    """Carrier pulse followed by red sidebands ``k = 1..N`` on ``|0,e>``.

    After the carrier, ``|0,e>`` holds the amplitude still to be distributed;
    the order-``k`` red sideband moves the share ``|c_k|`` of it into
    ``|k,g>``, and the last one (a full pi/2 rotation) empties it. Phases are
    chosen so every prepared amplitude carries the target's argument, with the
    carrier phase fixed to zero.
    """
    target = _coerce_target(target)
    N = target.N
    c = target.array
    if N == 0:
        return PulseSchedule((), params, couplings, target.coefficients)

    w0 = _checked_rabi(params, 0, 0, couplings)
    rabis = [_checked_rabi(params, 0, k, couplings) for k in range(1, N + 1)]

    theta0 = math.acos(min(abs(c[0]), 1.0))
    thetas = []
    remaining = math.sin(theta0)
    for k in range(1, N):
        if remaining <= ZERO_AMP:
            theta = 0.0
        else:
            ratio = abs(c[k]) / remaining
            if ratio > 1.0 + NORM_TOL:
                raise InfeasibleTargetError(
                    f"|c_{k}| = {abs(c[k]):.3e} exceeds the remaining amplitude {remaining:.3e}"
                )
            theta = math.asin(min(ratio, 1.0))
        thetas.append(theta)
        remaining *= math.cos(theta)
    thetas.append(math.pi / 2)
    if abs(remaining - abs(c[N])) > NORM_TOL:
        raise SynthesisError(
            f"forward residual mismatch: implied |c_N| = {remaining:.15g}, requested {abs(c[N]):.15g}"
        )

    t0 = theta0 / abs(w0)
    durations = [theta / abs(w) for theta, w in zip(thetas, rabis)]

    # amplitudes produced with all phases zero; sideband phases then rotate
    # each one onto the target's argument
    carried = math.sin(w0 * t0)
    phases = []
    for k in range(1, N + 1):
        wk, tk = rabis[k - 1], durations[k - 1]
        produced = (-1) ** (k - 1) * carried * math.sin(wk * tk)
        carried *= math.cos(wk * tk)
        if abs(produced) <= ZERO_AMP or abs(c[k]) <= ZERO_AMP:
            phases.append(0.0)
        else:
            phases.append(_wrap_phase(cmath.phase(c[k]) - cmath.phase(produced)))

    segments = [PulseSegment.carrier(t0, 0.0)]
    segments += [PulseSegment.red(k, durations[k - 1], phases[k - 1]) for k in range(1, N + 1)]
    return PulseSchedule(tuple(segments), params, couplings, target.coefficients)


def _red_step(alpha: complex, beta: complex, sign: float) -> tuple[float, float]:
    """Angle and phase so the inverse red sideband zeroes ``beta = <i,g|psi>``."""
    if abs(beta) <= ZERO_AMP:
        return 0.0, 0.0
    if abs(alpha) <= ZERO_AMP:
        return math.pi / 2, 0.0
    theta = math.atan2(abs(beta), abs(alpha))
    phi = cmath.phase(-1j * sign * beta / alpha)
    return theta, _wrap_phase(phi)


def _carrier_step(mu: complex, nu: complex, sign: float) -> tuple[float, float]:
    """Angle and phase so the inverse carrier zeroes ``nu = <i-1,e|psi>``."""
    if abs(nu) <= ZERO_AMP:
        return 0.0, 0.0
    if abs(mu) <= ZERO_AMP:
        return math.pi / 2, 0.0
    theta = math.atan2(abs(nu), abs(mu))
    phi = -cmath.phase(1j * sign * nu / mu)
    return theta, _wrap_phase(phi)


def reverse_synthesize(target, params: SystemParams, couplings: str = "exact") -> PulseSchedule:
    """``N`` carrier + first-red-sideband pairs found by backward elimination.

    Starting from ``sum_k c_k |k,g>`` and walking ``i = N..1``: the inverse red
    sideband on ``|i-1,e> <-> |i,g>`` removes the ``|i,g>`` amplitude, then the
    inverse carrier removes ``|i-1,e>``. What is left after ``i = 1`` must be
    ``|0,g>`` up to a phase. Steps with nothing to eliminate are kept as
    zero-length pulses, so the schedule always has ``2N`` segments.
    """
    target = _coerce_target(target)
    N = target.N
    if N == 0:
        return PulseSchedule((), params, couplings, target.coefficients)

    cutoff = default_cutoff(N)
    shape = SpaceShape(2, cutoff)
    psi = target.ket(cutoff)
    backwards = []
    for i in range(N, 0, -1):
        w_red = _checked_rabi(params, i - 1, 1, couplings)
        alpha, beta = psi[shape.index(i - 1, E)], psi[shape.index(i, G)]
        theta, phi = _red_step(alpha, beta, math.copysign(1.0, w_red))
        t_red = theta / abs(w_red)
        u = red_propagator(params, 1, t_red, phi, cutoff, couplings)
        psi = u.conj().T @ psi
        backwards.append(PulseSegment.red(1, t_red, phi))

        w_car = _checked_rabi(params, i - 1, 0, couplings)
        mu, nu = psi[shape.index(i - 1, G)], psi[shape.index(i - 1, E)]
        theta, phi = _carrier_step(mu, nu, math.copysign(1.0, w_car))
        t_car = theta / abs(w_car)
        u = carrier_propagator(params, t_car, phi, cutoff, couplings)
        psi = u.conj().T @ psi
        backwards.append(PulseSegment.carrier(t_car, phi))

    overlap = abs(psi[shape.index(0, G)])
    if overlap < 1.0 - NORM_TOL:
        raise ConvergenceError(
            f"backward elimination ended with |<0,g|psi>| = {overlap:.12f}"
        )
    return PulseSchedule(tuple(reversed(backwards)), params, couplings, target.coefficients)


def synthesize(target, params: SystemParams, algorithm: str = "reverse", couplings: str = "exact") -> PulseSchedule:
    if algorithm == "forward":
        return forward_synthesize(target, params, couplings)
    if algorithm == "reverse":
        return reverse_synthesize(target, params, couplings)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected 'forward' or 'reverse'")


def verify_schedule(schedule: PulseSchedule, target=None) -> float:
    """``|<target, g| U_schedule |0,g>|^2`` under the closed-form propagators."""
    if target is None:
        if schedule.target is None:
            raise ValueError("schedule carries no target; pass one explicitly")
        target = TargetState(schedule.target)
    target = _coerce_target(target)
    cutoff = max(schedule.max_phonon(), target.N) + 6
    psi = apply_schedule(schedule, ground_ket(cutoff))
    return float(abs(np.vdot(target.ket(cutoff), psi)) ** 2)

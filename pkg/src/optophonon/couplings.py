"""System parameters, sideband Rabi frequencies and the projected experimental presets.

Public configuration is in cyclic frequency (Hz, ``nu = omega / 2 pi``);
everything inside :class:`SystemParams` is angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar, k as k_B

TWO_PI = 2.0 * math.pi

#: Supported coupling models. ``exact`` uses the full displacement matrix
#: elements; ``lamb-dicke`` linearizes ``exp(eta (b^dag - b))`` to first order.
COUPLING_MODELS = ("exact", "lamb-dicke")

LAMB_DICKE_THRESHOLD = 0.2


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of one optomechanical configuration, in rad/s."""

    omega_c: float
    omega_m: float
    g: float
    gamma_c: float = 0.0
    gamma_m: float = 0.0
    Omega: float = 1.0
    nbar_m: float = 0.0
    phi_d: float = 0.0

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ValueError(f"omega_m must be positive, got {self.omega_m}")
        for name in ("g", "gamma_c", "gamma_m", "nbar_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.Omega > 0:
            raise ValueError(f"Omega must be positive, got {self.Omega}")

    @property
    def eta(self) -> float:
        return self.g / self.omega_m

    @property
    def omega(self) -> float:
        """Polaron-shifted cavity frequency ``omega_c - g^2/omega_m``."""
        return self.omega_c - self.g ** 2 / self.omega_m

    @property
    def delta(self) -> float:
        """Anharmonicity ``-2 g^2 / omega_m`` (negative)."""
        return -2.0 * self.g ** 2 / self.omega_m

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @classmethod
    def from_ratios(
        cls,
        eta: float,
        delta_over_Omega: float,
        Omega: float = 1.0,
        gamma_c_over_Omega: float = 0.0,
        gamma_m_over_Omega: float = 0.0,
        nbar_m: float = 0.0,
        omega_c: float = 0.0,
    ) -> "SystemParams":
        """Parameters fixed by ``eta`` and ``|delta|/Omega``.

        ``|delta| = 2 eta^2 omega_m`` fixes ``omega_m``; then ``g = eta omega_m``.
        """
        if eta <= 0 or delta_over_Omega <= 0:
            raise ValueError("eta and |delta|/Omega must be positive")
        omega_m = abs(delta_over_Omega) * Omega / (2.0 * eta ** 2)
        return cls(
            omega_c=omega_c,
            omega_m=omega_m,
            g=eta * omega_m,
            gamma_c=gamma_c_over_Omega * Omega,
            gamma_m=gamma_m_over_Omega * Omega,
            Omega=Omega,
            nbar_m=nbar_m,
        )

    def to_hz(self) -> dict[str, float]:
        """Cyclic-frequency view used by config files and schedule headers."""
        return {
            "omega_c_hz": self.omega_c / TWO_PI,
            "omega_m_hz": self.omega_m / TWO_PI,
            "g_hz": self.g / TWO_PI,
            "gamma_c_hz": self.gamma_c / TWO_PI,
            "gamma_m_hz": self.gamma_m / TWO_PI,
            "Omega_hz": self.Omega / TWO_PI,
            "nbar_m": self.nbar_m,
            "phi_d": self.phi_d,
        }

    @classmethod
    def from_hz(cls, values: dict[str, float]) -> "SystemParams":
        return cls(
            omega_c=TWO_PI * values.get("omega_c_hz", 0.0),
            omega_m=TWO_PI * values["omega_m_hz"],
            g=TWO_PI * values["g_hz"],
            gamma_c=TWO_PI * values.get("gamma_c_hz", 0.0),
            gamma_m=TWO_PI * values.get("gamma_m_hz", 0.0),
            Omega=TWO_PI * values["Omega_hz"],
            nbar_m=values.get("nbar_m", 0.0),
            phi_d=values.get("phi_d", 0.0),
        )


def rabi_frequency(Omega: float, eta: float, n: int, k: int) -> float:
    r"""Effective Rabi frequency of the ``|n> <-> |n+k>`` sideband.

    .. math::

        \Omega_{n,k} = \Omega \eta^k e^{-\eta^2/2} \sqrt{(n+k)!/n!}
            \sum_{j=0}^{n} \frac{(-1)^j \eta^{2j} n!}{j! (j+k)! (n-j)!}

    Factorial ratios are accumulated term by term, never formed directly.
    The result can be negative; callers take the magnitude for durations.
    """
    if n < 0 or k < 0:
        raise ValueError(f"n and k must be non-negative, got n={n}, k={k}")
    # sqrt((n+k)!/n!) / k!  and the j=0 term of the sum combined
    prefactor = 1.0
    for i in range(1, k + 1):
        prefactor *= math.sqrt(n + i) / i
    x = eta * eta
    term = 1.0  # j-th term divided by 1/k!, starting at j = 0
    total = term
    for j in range(1, n + 1):
        term *= -x * (n - j + 1) / (j * (j + k))
        total += term
    return Omega * eta ** k * math.exp(-0.5 * x) * prefactor * total


def sideband_rabi(Omega: float, eta: float, n: int, k: int, couplings: str = "exact") -> float:
    """Rabi frequency under the chosen coupling model.

    ``lamb-dicke`` keeps ``1 + eta (b^dag - b)`` only: ``Omega`` for the carrier,
    ``eta Omega sqrt(n+1)`` for first sidebands and zero for higher orders.
    """
    if couplings == "exact":
        return rabi_frequency(Omega, eta, n, k)
    if couplings == "lamb-dicke":
        if k == 0:
            return Omega
        if k == 1:
            return eta * Omega * math.sqrt(n + 1)
        return 0.0
    raise ValueError(f"unknown coupling model {couplings!r}; expected one of {COUPLING_MODELS}")


def displacement_element(eta: float, m: int, n: int, couplings: str = "exact") -> float:
    """``<m| exp(eta (b^dag - b)) |n>`` (or its first-order expansion)."""
    if m >= n:
        return sideband_rabi(1.0, eta, n, m - n, couplings)
    return (-1) ** (n - m) * sideband_rabi(1.0, eta, m, n - m, couplings)


def lamb_dicke_ok(eta: float, nbar: float) -> bool:
    if eta < 0 or nbar < 0:
        raise ValueError("eta and nbar must be non-negative")
    # tiny slack so the boundary case eta*sqrt(nbar+1) == 0.2 is accepted
    return eta * math.sqrt(nbar + 1.0) <= LAMB_DICKE_THRESHOLD * (1 + 1e-12)


def thermal_occupation(omega_m: float, temperature: float) -> float:
    """Bose-Einstein occupation of the mechanical mode at ``omega_m``."""
    if temperature < 0 or omega_m <= 0:
        raise ValueError("need temperature >= 0 and omega_m > 0")
    if temperature == 0:
        return 0.0
    x = hbar * omega_m / (k_B * temperature)
    return float(1.0 / np.expm1(x))


@dataclass(frozen=True)
class TableOneRow:
    """A parameter row of the experimental summary table, in Hz as printed."""

    label: str
    omega_c_hz: float
    gamma_c_hz: float
    omega_m_hz: float
    gamma_m_hz: float
    g_hz: float
    Omega_hz: float
    eta: float
    expected_F1: float | None = None
    expected_F2: float | None = None
    note: str = ""

    def to_params(self, nbar_m: float = 0.0) -> SystemParams:
        return SystemParams(
            omega_c=TWO_PI * self.omega_c_hz,
            omega_m=TWO_PI * self.omega_m_hz,
            g=TWO_PI * self.g_hz,
            gamma_c=TWO_PI * self.gamma_c_hz,
            gamma_m=TWO_PI * self.gamma_m_hz,
            Omega=TWO_PI * self.Omega_hz,
            nbar_m=nbar_m,
        )


def table1_presets() -> list[TableOneRow]:
    """The three rows with projected (parenthesized) parameters."""
    return [
        TableOneRow(
            label="microwave-cavity",
            omega_c_hz=7.47e9,
            gamma_c_hz=1e3,
            omega_m_hz=100e6,
            gamma_m_hz=10.0,
            g_hz=10e6,
            Omega_hz=50e3,
            eta=0.1,
            expected_F1=0.7359,
            expected_F2=0.8170,
        ),
        TableOneRow(
            label="optomechanical-crystal",
            omega_c_hz=195e12,
            gamma_c_hz=0.1e6,
            omega_m_hz=10e9,
            gamma_m_hz=5e3,
            g_hz=1e9,
            Omega_hz=5e6,
            eta=0.1,
            expected_F1=0.7205,
            expected_F2=0.8108,
        ),
        TableOneRow(
            label="bec",
            omega_c_hz=385e12,
            gamma_c_hz=0.1e3,
            omega_m_hz=10e6,
            gamma_m_hz=10.0,
            g_hz=1e6,
            Omega_hz=5e3,
            eta=0.1,
            expected_F1=0.7017,
            expected_F2=0.8032,
            note="cavity linewidth taken as 0.1 kHz; a 0.1 MHz linewidth would give gamma_c/Omega = 20",
        ),
    ]

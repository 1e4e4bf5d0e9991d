"""Text formats for targets and pulse schedules.

Target spec
    Comma-separated ``k:value`` pairs. ``value`` is a Python complex literal
    (``-0.5``, ``0.3+0.4j``) or ``magnitude@phase`` with the phase in radians.
    Unlisted Fock states have zero amplitude.

Schedule file
    Header lines ``# param key = value`` holding the system parameters (Hz),
    the coupling model and the target spec, then one ``kind k duration phase``
    line per segment (seconds, radians). Floats are written with ``repr`` so a
    dump/load cycle is exact.
"""

from __future__ import annotations

import cmath
from pathlib import Path

import numpy as np

from .couplings import COUPLING_MODELS, SystemParams
from .errors import ConfigError
from .propagators import PulseSchedule, PulseSegment


def parse_target_spec(text: str) -> np.ndarray:
    """Amplitude array ``c_0..c_N`` from a ``k:value`` list (not normalized)."""
    entries: dict[int, complex] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition(":")
        if not sep:
            raise ConfigError(f"target entry {chunk!r} is not of the form k:value")
        try:
            k = int(key)
        except ValueError:
            raise ConfigError(f"Fock index {key!r} is not an integer") from None
        if k < 0:
            raise ConfigError(f"Fock index must be >= 0, got {k}")
        if k in entries:
            raise ConfigError(f"Fock index {k} listed twice")
        entries[k] = _parse_amplitude(value.strip())
    if not entries:
        raise ConfigError("empty target specification")
    amps = np.zeros(max(entries) + 1, dtype=complex)
    for k, v in entries.items():
        amps[k] = v
    return amps


def _parse_amplitude(value: str) -> complex:
    try:
        if "@" in value:
            mag, phase = value.split("@")
            return cmath.rect(float(mag), float(phase))
        return complex(value.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse amplitude {value!r}") from None


def format_target_spec(amplitudes) -> str:
    """Inverse of :func:`parse_target_spec`, listing non-zero entries only."""
    parts = []
    for k, c in enumerate(np.asarray(amplitudes, dtype=complex)):
        if c == 0:
            continue
        c = complex(c)
        if c.imag == 0:
            parts.append(f"{k}:{c.real!r}")
        else:
            parts.append(f"{k}:{c!r}".replace(" ", ""))
    return ", ".join(parts)


def dump_schedule(schedule: PulseSchedule) -> str:
    lines = [f"# param {key} = {value!r}" for key, value in schedule.params.to_hz().items()]
    lines.append(f"# param couplings = {schedule.couplings}")
    if schedule.target is not None:
        lines.append(f"# param target = {format_target_spec(schedule.target)}")
    for seg in schedule:
        lines.append(f"{seg.kind} {seg.k} {seg.duration!r} {seg.phase!r}")
    return "\n".join(lines) + "\n"


def load_schedule_text(text: str) -> PulseSchedule:
    header: dict[str, str] = {}
    segments = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("param "):
                key, sep, value = body[len("param "):].partition("=")
                if not sep:
                    raise ConfigError(f"line {lineno}: malformed parameter line")
                header[key.strip()] = value.strip()
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ConfigError(f"line {lineno}: expected 'kind k duration phase', got {line!r}")
        kind, k, duration, phase = fields
        try:
            segments.append(PulseSegment(kind, int(k), float(duration), float(phase)))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None

    couplings = header.pop("couplings", "exact")
    if couplings not in COUPLING_MODELS:
        raise ConfigError(f"unknown coupling model {couplings!r}")
    target_text = header.pop("target", None)
    try:
        params = SystemParams.from_hz({k: float(v) for k, v in header.items()})
    except KeyError as exc:
        raise ConfigError(f"schedule header lacks parameter {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"bad schedule header: {exc}") from None
    target = tuple(parse_target_spec(target_text)) if target_text else None
    return PulseSchedule(tuple(segments), params, couplings, target)


def save_schedule(schedule: PulseSchedule, path) -> None:
    Path(path).write_text(dump_schedule(schedule))


def load_schedule(path) -> PulseSchedule:
    return load_schedule_text(Path(path).read_text())

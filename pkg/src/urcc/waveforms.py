"""Closed-form coefficient waveforms.

Every waveform knows its antiderivative, its zeros and a supremum bound, so
strength integrals ``int |c(t)| dt`` are evaluated exactly by splitting at the
zeros.  Values accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError

__all__ = [
    "Waveform",
    "Constant",
    "Cosine",
    "Sine",
    "LinearRamp",
    "RampProduct",
    "waveform_from_dict",
]


class Waveform:
    """Base class; subclasses implement ``__call__``, ``antiderivative``, ``zeros``, ``abs_sup``."""

    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def antiderivative(self, t):
        raise NotImplementedError

    def zeros(self, a: float, b: float) -> list[float]:
        """Sign changes strictly inside ``(a, b)``, sorted."""
        raise NotImplementedError

    def abs_sup(self, a: float, b: float) -> float:
        """An upper bound on ``|c(t)|`` over ``[a, b]``."""
        raise NotImplementedError

    def sign_definite(self) -> int:
        """+1/-1 if the waveform never changes sign, 0 otherwise (or if unknown)."""
        return 0

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    # derived -----------------------------------------------------------------

    def integral(self, a: float, b: float) -> float:
        return float(self.antiderivative(b) - self.antiderivative(a))

    def abs_integral(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        pts = [a, *self.zeros(a, b), b]
        F = [float(self.antiderivative(p)) for p in pts]
        return math.fsum(abs(F[i + 1] - F[i]) for i in range(len(F) - 1))

    def positive_integral(self, a: float, b: float) -> float:
        """``int max(c, 0)``."""
        return max(0.5 * (self.abs_integral(a, b) + self.integral(a, b)), 0.0)

    def negative_integral(self, a: float, b: float) -> float:
        """``int max(-c, 0)``."""
        return max(0.5 * (self.abs_integral(a, b) - self.integral(a, b)), 0.0)

    def upper_bound(self, a: float, b: float) -> float:
        return self.abs_sup(a, b)


def _lattice_points(omega: float, offset: float, a: float, b: float, strict: bool) -> list[float]:
    """Points ``t`` in the interval with ``omega t = offset + k pi``."""
    if omega == 0.0:
        return []
    lo, hi = sorted((omega * a, omega * b))
    k0 = math.ceil((lo - offset) / math.pi)
    k1 = math.floor((hi - offset) / math.pi)
    out = []
    for k in range(k0, k1 + 1):
        t = (offset + k * math.pi) / omega
        if strict and (t <= a or t >= b):
            continue
        if not strict and (t < a or t > b):
            continue
        out.append(t)
    return sorted(out)


@dataclass(frozen=True)
class Constant(Waveform):
    amplitude: float
    kind = "constant"

    def __call__(self, t):
        return self.amplitude * np.ones_like(t, dtype=float) if np.ndim(t) else float(self.amplitude)

    def antiderivative(self, t):
        return self.amplitude * t

    def zeros(self, a, b):
        return []

    def abs_sup(self, a, b):
        return abs(self.amplitude)

    def sign_definite(self):
        return int(np.sign(self.amplitude))

    def to_dict(self):
        return {"kind": "constant", "amplitude": self.amplitude}


@dataclass(frozen=True)
class Cosine(Waveform):
    """``amplitude * cos(frequency * t)``."""

    amplitude: float
    frequency: float
    kind = "cosine"

    def __call__(self, t):
        return self.amplitude * np.cos(self.frequency * np.asarray(t, dtype=float))

    def antiderivative(self, t):
        if self.frequency == 0.0:
            return self.amplitude * t
        return self.amplitude * np.sin(self.frequency * t) / self.frequency

    def zeros(self, a, b):
        return _lattice_points(self.frequency, math.pi / 2, a, b, strict=True)

    def abs_sup(self, a, b):
        if self.frequency == 0.0 or _lattice_points(self.frequency, 0.0, a, b, strict=False):
            return abs(self.amplitude)
        return float(max(abs(self(a)), abs(self(b))))

    def sign_definite(self):
        return int(np.sign(self.amplitude)) if self.frequency == 0.0 else 0

    def to_dict(self):
        return {"kind": "cosine", "amplitude": self.amplitude, "frequency": self.frequency}


@dataclass(frozen=True)
class Sine(Waveform):
    """``amplitude * sin(frequency * t)``."""

    amplitude: float
    frequency: float
    kind = "sine"

    def __call__(self, t):
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float))

    def antiderivative(self, t):
        if self.frequency == 0.0:
            return 0.0 * t
        return -self.amplitude * np.cos(self.frequency * t) / self.frequency

    def zeros(self, a, b):
        return _lattice_points(self.frequency, 0.0, a, b, strict=True)

    def abs_sup(self, a, b):
        if self.frequency == 0.0:
            return 0.0
        if _lattice_points(self.frequency, math.pi / 2, a, b, strict=False):
            return abs(self.amplitude)
        return float(max(abs(self(a)), abs(self(b))))

    def to_dict(self):
        return {"kind": "sine", "amplitude": self.amplitude, "frequency": self.frequency}


@dataclass(frozen=True)
class LinearRamp(Waveform):
    """Straight line through ``(t_start, start)`` and ``(t_end, end)``."""

    start: float
    end: float
    t_start: float
    t_end: float
    kind = "linear_ramp"

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ConfigError("linear ramp needs t_end > t_start")

    @property
    def slope(self) -> float:
        return (self.end - self.start) / (self.t_end - self.t_start)

    @property
    def intercept(self) -> float:
        """Value at ``t = 0``."""
        return self.start - self.slope * self.t_start

    def __call__(self, t):
        return self.start + self.slope * (np.asarray(t, dtype=float) - self.t_start)

    def antiderivative(self, t):
        return self.intercept * t + 0.5 * self.slope * t * t

    def zeros(self, a, b):
        if self.slope == 0.0:
            return []
        t0 = -self.intercept / self.slope
        return [t0] if a < t0 < b else []

    def abs_sup(self, a, b):
        return float(max(abs(self(a)), abs(self(b))))

    def sign_definite(self):
        s0, s1 = np.sign(self.start), np.sign(self.end)
        if s0 * s1 < 0:
            return 0
        return int(s0 or s1)

    def to_dict(self):
        return {
            "kind": "linear_ramp",
            "start": self.start,
            "end": self.end,
            "t_start": self.t_start,
            "t_end": self.t_end,
        }


@dataclass(frozen=True)
class RampProduct(Waveform):
    """``ramp(t) * base(t)`` with ``base`` a constant, cosine or sine."""

    ramp: LinearRamp
    base: Waveform
    kind = "product"

    def __post_init__(self):
        if not isinstance(self.base, (Constant, Cosine, Sine)):
            raise ConfigError("product base must be constant, cosine or sine")

    def __call__(self, t):
        return self.ramp(t) * self.base(t)

    def antiderivative(self, t):
        p, q = self.ramp.intercept, self.ramp.slope
        base = self.base
        if isinstance(base, Constant):
            return base.amplitude * self.ramp.antiderivative(t)
        w, A = base.frequency, base.amplitude
        if w == 0.0:
            return (A if isinstance(base, Cosine) else 0.0) * self.ramp.antiderivative(t)
        s, c = np.sin(w * t), np.cos(w * t)
        lin = p + q * t
        if isinstance(base, Cosine):
            return A * (lin * s / w + q * c / (w * w))
        return A * (-lin * c / w + q * s / (w * w))

    def zeros(self, a, b):
        return sorted(set(self.ramp.zeros(a, b)) | set(self.base.zeros(a, b)))

    def abs_sup(self, a, b, pieces: int = 32):
        edges = np.linspace(a, b, pieces + 1)
        return float(
            max(
                self.ramp.abs_sup(lo, hi) * self.base.abs_sup(lo, hi)
                for lo, hi in zip(edges[:-1], edges[1:])
            )
        )

    def sign_definite(self):
        return self.ramp.sign_definite() * self.base.sign_definite()

    def to_dict(self):
        return {"kind": "product", "ramp": self.ramp.to_dict(), "base": self.base.to_dict()}


def waveform_from_dict(spec: dict[str, Any] | float | int) -> Waveform:
    """Build a waveform from its JSON form.  A bare number is a constant."""
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    try:
        kind = spec["kind"]
        if kind == "constant":
            return Constant(float(spec["amplitude"]))
        if kind == "cosine":
            return Cosine(float(spec["amplitude"]), float(spec["frequency"]))
        if kind == "sine":
            return Sine(float(spec["amplitude"]), float(spec["frequency"]))
        if kind == "linear_ramp":
            t0, t1 = float(spec["t_start"]), float(spec["t_end"])
            if "start" in spec or "end" in spec:
                return LinearRamp(float(spec.get("start", 0.0)), float(spec.get("end", 0.0)), t0, t1)
            amp = float(spec["amplitude"])
            if spec.get("direction", "up") == "up":
                return LinearRamp(0.0, amp, t0, t1)
            return LinearRamp(amp, 0.0, t0, t1)
        if kind in ("product", "product_of"):
            ramp = waveform_from_dict(spec["ramp"])
            if not isinstance(ramp, LinearRamp):
                raise ConfigError("product ramp must be a linear_ramp")
            return RampProduct(ramp, waveform_from_dict(spec["base"]))
    except KeyError as exc:
        raise ConfigError(f"waveform {spec!r} is missing field {exc}") from exc
    raise ConfigError(f"unknown waveform kind {spec.get('kind')!r}")

"""Time-dependent Pauli Hamiltonians, segment planning and exact time sampling.

Input terms carry signed waveforms ``c_q(t)``.  The canonical form splits each
into ``(+sigma_q, max(c_q, 0))`` and ``(-sigma_q, max(-c_q, 0))`` so that every
canonical coefficient is non-negative and the sign lives in the Pauli string.
Halves that vanish identically are dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NumericalContractError, ZeroStrengthError
from .pauli import PauliString
from .waveforms import Waveform, waveform_from_dict

__all__ = [
    "HamiltonianTerm",
    "CanonicalTerm",
    "TimeDependentHamiltonian",
    "TimeEnvelope",
    "SegmentPlan",
    "plan_segments",
    "sample_time",
    "sample_times",
    "sample_term_at_time",
    "sample_signed_terms",
    "load_hamiltonian",
    "hamiltonian_from_dict",
]

ENVELOPE_BINS = 16


@dataclass(frozen=True)
class HamiltonianTerm:
    pauli: PauliString
    coeff: Waveform

    def __post_init__(self):
        if self.pauli.phase_exp != 0:
            raise ConfigError(f"term Pauli {self.pauli} must be unsigned; put signs in the waveform")


@dataclass(frozen=True)
class CanonicalTerm:
    """A non-negative half of an input term: ``h(t) = max(sign * c_source(t), 0)``."""

    pauli: PauliString
    source: int
    sign: int


class TimeDependentHamiltonian:
    """``H(t) = sum_q c_q(t) sigma_q`` over the window ``[t_min, t_max]``."""

    def __init__(
        self,
        n: int,
        terms: Sequence[HamiltonianTerm],
        window: tuple[float, float] = (0.0, math.inf),
    ):
        terms = list(terms)
        if not terms:
            raise ConfigError("Hamiltonian needs at least one term")
        for term in terms:
            if term.pauli.n != n:
                raise ConfigError(f"term {term.pauli} does not act on {n} qubits")
        self.n = n
        self.terms = tuple(terms)
        self.window = (float(window[0]), float(window[1]))
        canonical = []
        lookup = np.full((len(terms), 2), -1, dtype=np.int64)
        for q, term in enumerate(terms):
            definite = term.coeff.sign_definite()
            for slot, sign in enumerate((1, -1)):
                if definite and definite != sign:
                    continue
                if definite == 0 and _identically_zero(term.coeff):
                    continue
                lookup[q, slot] = len(canonical)
                pauli = term.pauli if sign > 0 else -term.pauli
                canonical.append(CanonicalTerm(pauli, q, sign))
        if not canonical:
            raise ConfigError("every Hamiltonian coefficient vanishes identically")
        self.canonical = tuple(canonical)
        # canonical index of (source q, sign slot 0:+ / 1:-)
        self.canonical_lookup = lookup
        self._sources = np.array([c.source for c in canonical], dtype=np.int64)
        self._signs = np.array([c.sign for c in canonical], dtype=float)

    @property
    def P(self) -> int:
        return len(self.canonical)

    @property
    def Q(self) -> int:
        """Number of signed input terms."""
        return len(self.terms)

    def _check_window(self, t) -> None:
        lo, hi = self.window
        tmin, tmax = np.min(t), np.max(t)
        tol = 1e-12 * max(1.0, abs(lo), abs(hi) if math.isfinite(hi) else 1.0)
        if tmin < lo - tol or tmax > hi + tol:
            raise ValueError(f"time outside the evolution window {self.window}")

    def coefficients(self, t) -> np.ndarray:
        """Signed input coefficients; shape ``(Q,)`` or ``(Q, len(t))``."""
        self._check_window(t)
        return np.array([term.coeff(t) for term in self.terms], dtype=float)

    def canonical_values(self, t) -> np.ndarray:
        """``h_p(t)`` for every canonical term."""
        c = self.coefficients(t)
        signed = c[self._sources] * (self._signs if np.ndim(t) == 0 else self._signs[:, None])
        return np.maximum(signed, 0.0)

    def h_tot(self, t):
        c = self.coefficients(t)
        tot = np.abs(c).sum(axis=0)
        return float(tot) if np.ndim(t) == 0 else tot

    def strength_bound(self, a: float, b: float) -> float:
        """Upper bound on ``h_tot`` over ``[a, b]`` (sum of per-term bounds)."""
        return math.fsum(term.coeff.abs_sup(a, b) for term in self.terms)

    def lambda_p(self, a: float, b: float) -> np.ndarray:
        """Per-canonical-term integrals ``int_a^b h_p(t) dt``."""
        out = np.empty(self.P)
        for p, c in enumerate(self.canonical):
            wf = self.terms[c.source].coeff
            out[p] = wf.positive_integral(a, b) if c.sign > 0 else wf.negative_integral(a, b)
        return out

    def strength_integral(self, a: float, b: float) -> float:
        """``int_a^b h_tot(t) dt``."""
        return math.fsum(term.coeff.abs_integral(a, b) for term in self.terms)

    def Lambda(self, tau: float, t0: float | None = None) -> float:
        t0 = self.window[0] if t0 is None else t0
        return self.strength_integral(t0, tau)

    def matrix(self, t: float) -> np.ndarray:
        """Dense ``H(t)`` from the input terms (oracle use)."""
        from .pauli import to_matrix

        c = self.coefficients(t)
        return sum(ci * to_matrix(term.pauli) for ci, term in zip(c, self.terms))

    def canonical_matrix(self, t: float) -> np.ndarray:
        from .pauli import to_matrix

        h = self.canonical_values(t)
        return sum(hp * to_matrix(c.pauli) for hp, c in zip(h, self.canonical))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "terms": [{"pauli": t.pauli.letters, "coeff": t.coeff.to_dict()} for t in self.terms],
        }

    def __repr__(self) -> str:
        return f"TimeDependentHamiltonian(n={self.n}, Q={self.Q}, P={self.P})"


def _identically_zero(wf: Waveform) -> bool:
    amp = getattr(wf, "amplitude", None)
    return amp == 0.0


# -- time envelope --------------------------------------------------------------


@dataclass(frozen=True)
class TimeEnvelope:
    """Piecewise-constant dominating function for ``h_tot`` on one segment.

    Proposals are drawn from the envelope and accepted with probability
    ``h_tot(t) / bound``, which samples exactly from the density ``h_tot``.
    """

    edges: np.ndarray
    bounds: np.ndarray
    cum_weights: np.ndarray

    @classmethod
    def build(cls, H: TimeDependentHamiltonian, a: float, b: float, bins: int = ENVELOPE_BINS):
        edges = np.linspace(a, b, bins + 1)
        bounds = np.array([H.strength_bound(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
        weights = bounds * np.diff(edges)
        cum = np.cumsum(weights)
        return cls(edges, bounds, cum)

    @property
    def total(self) -> float:
        return float(self.cum_weights[-1])

    def propose(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        u = rng.random(size) * self.total
        k = np.minimum(np.searchsorted(self.cum_weights, u, side="right"), len(self.bounds) - 1)
        lo = self.edges[k]
        t = lo + rng.random(size) * (self.edges[k + 1] - lo)
        return t, self.bounds[k]


def sample_time(
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    envelope: TimeEnvelope | None = None,
) -> float:
    """Draw one time from the density ``h_tot(t) / int h_tot`` on ``segment``."""
    return float(sample_times(H, segment, rng, 1, envelope)[0])


def sample_times(
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    size: int,
    envelope: TimeEnvelope | None = None,
) -> np.ndarray:
    """Vectorised rejection sampler; see :func:`sample_time`."""
    a, b = segment
    if envelope is None:
        envelope = TimeEnvelope.build(H, a, b)
    if envelope.total <= 0.0:
        if H.strength_integral(a, b) > 0.0:
            raise NumericalContractError("strength bound is zero on a segment with positive strength")
        raise ValueError("cannot sample times on a segment with zero strength")
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        # over-propose slightly; acceptance is typically well above one half
        m = max(8, int(need * 1.5))
        t, bound = envelope.propose(rng, m)
        h = H.h_tot(t)
        if np.any(h > bound * (1.0 + 1e-12)):
            raise NumericalContractError("strength exceeded its envelope bound")
        accept = rng.random(m) * bound < h
        got = t[accept][:need]
        out[filled : filled + len(got)] = got
        filled += len(got)
    return out


def sample_term_at_time(H: TimeDependentHamiltonian, t: float, rng: np.random.Generator) -> int:
    """Canonical term index drawn with probability ``h_p(t) / h_tot(t)``."""
    h = H.canonical_values(t)
    tot = h.sum()
    if tot <= 0.0:
        raise ZeroStrengthError(f"h_tot({t}) = 0")
    cum = np.cumsum(h)
    return int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), H.P - 1))


def sample_signed_terms(H: TimeDependentHamiltonian, t: np.ndarray, rng: np.random.Generator):
    """Vectorised draw of input terms ``q`` with probability ``|c_q(t)| / h_tot(t)``.

    Returns ``(q, sign, canonical_index)`` arrays.  Drawing the signed term and
    reading off its sign is the same law as drawing a canonical term ``p``
    with probability ``h_p(t) / h_tot(t)``.
    """
    c = H.coefficients(t)  # (Q, m)
    mag = np.abs(c)
    cum = np.cumsum(mag, axis=0)
    if np.any(cum[-1] <= 0.0):
        raise ZeroStrengthError("h_tot vanished at a sampled time")
    u = rng.random(t.shape[0]) * cum[-1]
    q = np.minimum((cum <= u[None, :]).sum(axis=0), H.Q - 1)
    vals = c[q, np.arange(t.shape[0])]
    sign = np.where(vals >= 0.0, 1, -1)
    canon = H.canonical_lookup[q, np.where(sign > 0, 0, 1)]
    if np.any(canon < 0):
        raise NumericalContractError("sampled a canonical half that was dropped as identically zero")
    return q, sign, canon


# -- segment planning -------------------------------------------------------------


@dataclass(frozen=True)
class SegmentPlan:
    """Segmentation of ``[t0, tau]`` into pieces of equal integrated strength."""

    boundaries: np.ndarray
    lambda_per_segment: float
    lambda_p_table: np.ndarray
    Lambda: float
    envelopes: tuple[TimeEnvelope | None, ...] = field(repr=False, default=())

    @property
    def n_seg(self) -> int:
        return len(self.boundaries) - 1

    def segment(self, j: int) -> tuple[float, float]:
        return float(self.boundaries[j]), float(self.boundaries[j + 1])

    def segments(self) -> list[tuple[float, float]]:
        return [self.segment(j) for j in range(self.n_seg)]


def _cumulative_root(H: TimeDependentHamiltonian, a: float, b: float, target: float) -> float:
    """``t`` in ``[a, b]`` with ``int_a^t h_tot = target``."""
    f = lambda t: H.strength_integral(a, t) - target  # noqa: E731
    fb = f(b)
    if fb <= 0.0:
        return b
    return brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def plan_segments(
    H: TimeDependentHamiltonian,
    tau: float,
    lambda_target: float | None = 0.2,
    n_seg: int | None = None,
    t0: float | None = None,
) -> SegmentPlan:
    """Split ``[t0, tau]`` so every segment carries the same strength integral.

    Either ``lambda_target`` (``N_seg = ceil(Lambda / lambda_target)``) or an
    explicit ``n_seg`` fixes the segment count.
    """
    t0 = H.window[0] if t0 is None else t0
    if not tau > t0:
        raise ConfigError("evolution time must exceed the start time")
    Lam = H.Lambda(tau, t0)
    if not math.isfinite(Lam):
        raise NumericalContractError("strength integral is not finite")
    if Lam == 0.0:
        return SegmentPlan(np.array([t0, tau]), 0.0, np.zeros((1, H.P)), 0.0, (None,))
    if n_seg is None:
        if lambda_target is None or not lambda_target > 0.0:
            raise ConfigError("lambda_target must be positive")
        ratio = Lam / lambda_target
        n_seg = max(1, math.ceil(ratio - 1e-9 * max(1.0, ratio)))
    if n_seg < 1:
        raise ConfigError("n_seg must be at least 1")
    lam = Lam / n_seg
    bounds = [t0]
    for j in range(1, n_seg):
        bounds.append(_cumulative_root(H, bounds[-1], tau, lam))
    bounds.append(tau)
    bounds = np.array(bounds)
    table = np.array([H.lambda_p(bounds[j], bounds[j + 1]) for j in range(n_seg)])
    envelopes = tuple(TimeEnvelope.build(H, bounds[j], bounds[j + 1]) for j in range(n_seg))
    return SegmentPlan(bounds, lam, table, Lam, envelopes)


# -- file format --------------------------------------------------------------------


def _terms_from_list(n: int, items: list[dict[str, Any]]) -> list[HamiltonianTerm]:
    terms = []
    for item in items:
        try:
            pauli = PauliString.parse(item["pauli"])
            coeff = waveform_from_dict(item["coeff"])
        except KeyError as exc:
            raise ConfigError(f"term {item!r} is missing {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if pauli.n != n:
            raise ConfigError(f"term {item['pauli']!r} does not have {n} letters")
        if pauli.phase_exp == 2:
            pauli = -pauli
            coeff = _negate(coeff)
        elif pauli.phase_exp != 0:
            raise ConfigError(f"term {item['pauli']!r} is not Hermitian")
        terms.append(HamiltonianTerm(pauli, coeff))
    return terms


def _negate(wf: Waveform) -> Waveform:
    d = wf.to_dict()

    def flip(spec):
        if spec["kind"] == "linear_ramp":
            return {**spec, "start": -spec["start"], "end": -spec["end"]}
        if spec["kind"] == "product":
            return {**spec, "ramp": flip(spec["ramp"])}
        return {**spec, "amplitude": -spec["amplitude"]}

    return waveform_from_dict(flip(d))


def hamiltonian_from_dict(doc: dict[str, Any]) -> TimeDependentHamiltonian:
    """Build a Hamiltonian from the JSON document form.

    With an ``"adiabatic"`` schedule the document's ``initial_terms`` and
    ``final_terms`` (constant coefficients) are interpolated linearly over
    ``[0, tau]``; plain ``terms`` are added unchanged.
    """
    from .models import adiabatic_hamiltonian

    try:
        n = int(doc["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("Hamiltonian document needs an integer 'n'") from exc
    terms = _terms_from_list(n, doc.get("terms", []))
    schedule = doc.get("schedule")
    if schedule is None:
        window = tuple(doc.get("window", (0.0, math.inf)))
        return TimeDependentHamiltonian(n, terms, window)
    if schedule.get("kind") != "adiabatic":
        raise ConfigError(f"unknown schedule kind {schedule.get('kind')!r}")
    tau = float(schedule["tau"])
    initial = _constant_pairs(n, schedule.get("initial_terms", []))
    final = _constant_pairs(n, schedule.get("final_terms", []))
    return adiabatic_hamiltonian(n, initial, final, tau, extra_terms=terms)


def _constant_pairs(n: int, items: list[dict[str, Any]]) -> list[tuple[str, float]]:
    out = []
    for item in items:
        coeff = item["coeff"]
        if isinstance(coeff, dict):
            if coeff.get("kind") != "constant":
                raise ConfigError("adiabatic endpoint terms must have constant coefficients")
            coeff = coeff["amplitude"]
        if len(PauliString.parse(item["pauli"]).letters) != n:
            raise ConfigError(f"term {item['pauli']!r} does not have {n} letters")
        out.append((item["pauli"], float(coeff)))
    return out


def load_hamiltonian(path: str | Path) -> TimeDependentHamiltonian:
    with open(path) as fh:
        return hamiltonian_from_dict(json.load(fh))

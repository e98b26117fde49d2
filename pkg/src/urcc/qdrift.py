"""Continuous qDRIFT baseline: one fixed-angle Pauli rotation per segment.

Each signed input term is a single qDRIFT term.  A segment draws a time
``t`` with density ``h_tot(t) / lambda``, then a term ``q`` with probability
``|c_q(t)| / h_tot(t)``, and applies ``exp(-i lambda sgn(c_q(t)) sigma_q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compiler import SegmentOps, _pauli_coeff
from .errors import ZeroStrengthError
from .hamiltonian import SegmentPlan, TimeDependentHamiltonian, TimeEnvelope, sample_signed_terms, sample_times
from .pauli import PauliString, apply_pauli, to_matrix

__all__ = ["QdriftSample", "qdrift_sample_segment", "qdrift_compile", "qdrift_segment_batch", "qdrift_dump"]


@dataclass(frozen=True)
class QdriftSample:
    """``exp(-i angle sign sigma)`` emitted for one segment."""

    sigma: PauliString
    sign: int
    angle: float
    segment_index: int = 0

    @property
    def signed_sigma(self) -> PauliString:
        return self.sigma if self.sign > 0 else -self.sigma

    def matrix(self) -> np.ndarray:
        d = 1 << self.sigma.n
        return math.cos(self.angle) * np.eye(d) - 1j * math.sin(self.angle) * to_matrix(self.signed_sigma)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return math.cos(self.angle) * vec - 1j * math.sin(self.angle) * apply_pauli(self.signed_sigma, vec)

    def dump(self) -> str:
        return f"seg {self.segment_index} | QD rot({self.signed_sigma}, phi={self.angle!r})"


def qdrift_sample_segment(
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    lam: float | None = None,
    segment_index: int = 0,
    envelope: TimeEnvelope | None = None,
) -> QdriftSample:
    if lam is None:
        lam = H.strength_integral(*segment)
    if not lam > 0.0:
        raise ZeroStrengthError(f"segment {segment} carries no strength")
    t = sample_times(H, segment, rng, 1, envelope)
    q, sign, _ = sample_signed_terms(H, t, rng)
    return QdriftSample(H.terms[int(q[0])].pauli, int(sign[0]), float(lam), segment_index)


def qdrift_compile(plan: SegmentPlan, H: TimeDependentHamiltonian, rng: np.random.Generator) -> list[QdriftSample]:
    """One sample per segment, in time order."""
    out = []
    for j in range(plan.n_seg):
        lam = float(plan.lambda_p_table[j].sum())
        env = plan.envelopes[j] if plan.envelopes else None
        out.append(qdrift_sample_segment(H, plan.segment(j), rng, lam, j, env))
    return out


def qdrift_dump(samples: list[QdriftSample]) -> str:
    return "".join(s.dump() + "\n" for s in samples)


def qdrift_segment_batch(
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    lam: float,
    rng: np.random.Generator,
    size: int,
    envelope: TimeEnvelope | None = None,
) -> SegmentOps:
    """``size`` independent segment rotations as ``cos(lam) I - i sin(lam) sigma`` masks."""
    if not lam > 0.0:
        raise ZeroStrengthError(f"segment {segment} carries no strength")
    t = sample_times(H, segment, rng, size, envelope)
    q, sign, _ = sample_signed_terms(H, t, rng)
    x = np.array([term.pauli.x for term in H.terms], dtype=np.int64)[q]
    z = np.array([term.pauli.z for term in H.terms], dtype=np.int64)[q]
    phase = np.where(sign > 0, 0, 2)
    alpha = np.full(size, math.cos(lam), dtype=complex)
    beta = -1j * math.sin(lam) * _pauli_coeff(phase, x, z)
    return SegmentOps(x, z, alpha, beta, np.ones(size, dtype=bool), np.ones(size, dtype=np.int64))

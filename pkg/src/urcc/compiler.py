"""Unbiased random circuit compilation of time-ordered evolutions.

Each segment of the evolution is written as ``U = L + R``.  The leading part
``L = I - i sum_p lambda_p sigma_p`` becomes a mixture of Pauli rotations by
angle ``arctan(lambda)``; the remainder ``R`` holds the Dyson orders ``l >= 2``
and is sampled as a time-ordered Pauli product.  The two branches are chosen
with probabilities ``C_L / C_lor`` and ``C_R / C_lor``.

Two sampling paths share these laws: per-sample functions returning
:class:`SampledUnitary` objects (used for dumps and small checks) and
:func:`sample_segment_batch`, which draws many segment operators at once as
mask arrays for the Monte Carlo drivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .hamiltonian import (
    SegmentPlan,
    TimeDependentHamiltonian,
    TimeEnvelope,
    sample_signed_terms,
    sample_term_at_time,
    sample_times,
)
from .pauli import PauliString, apply_pauli, multiply_arrays, product_chain, to_matrix

__all__ = [
    "Rotation",
    "PauliProduct",
    "IdentityOp",
    "SampledUnitary",
    "LcuDescriptor",
    "CompiledCircuitPair",
    "SegmentOps",
    "sample_order",
    "sample_pdy",
    "sample_segment_unitary",
    "compile_pair",
    "leading_order_deviation",
    "sample_segment_batch",
    "c_lor",
]

_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


# -- sampled unitaries ------------------------------------------------------------


@dataclass(frozen=True)
class Rotation:
    """``exp(-i angle sigma)`` for a signed Hermitian Pauli ``sigma``."""

    sigma: PauliString
    angle: float
    segment_index: int = 0

    def matrix(self) -> np.ndarray:
        d = 1 << self.sigma.n
        return math.cos(self.angle) * np.eye(d) - 1j * math.sin(self.angle) * to_matrix(self.sigma)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return math.cos(self.angle) * vec - 1j * math.sin(self.angle) * apply_pauli(self.sigma, vec)

    def dump(self) -> str:
        return f"seg {self.segment_index} | L rot({self.sigma}, phi={self.angle!r})"


@dataclass(frozen=True)
class PauliProduct:
    """A phase-tracked Pauli product ``(-i sigma_1)...(-i sigma_l)``."""

    op: PauliString
    order: int
    segment_index: int = 0

    def matrix(self) -> np.ndarray:
        return to_matrix(self.op)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return apply_pauli(self.op, vec)

    def dump(self) -> str:
        return f"seg {self.segment_index} | R prod({self.op}, l={self.order})"


@dataclass(frozen=True)
class IdentityOp:
    n: int
    segment_index: int = 0

    def matrix(self) -> np.ndarray:
        return np.eye(1 << self.n, dtype=complex)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return vec

    def dump(self) -> str:
        return f"seg {self.segment_index} | I"


SampledUnitary = Union[Rotation, PauliProduct, IdentityOp]


# -- normalisation ------------------------------------------------------------------


def c_lor(lam: float) -> float:
    """Per-segment normalisation ``sqrt(1 + lam^2) + e^lam - 1 - lam``."""
    return math.sqrt(1.0 + lam * lam) + math.expm1(lam) - lam


@dataclass(frozen=True)
class LcuDescriptor:
    """Normalisation factors and branch weights of one segment."""

    lam: float
    lambda_p: np.ndarray

    @classmethod
    def from_plan(cls, plan: SegmentPlan, j: int) -> "LcuDescriptor":
        return cls(float(plan.lambda_p_table[j].sum()), plan.lambda_p_table[j])

    @property
    def C_L(self) -> float:
        return math.sqrt(1.0 + self.lam * self.lam)

    @property
    def C_R(self) -> float:
        # expm1 keeps the O(lam^2) remainder accurate for small lam
        return math.expm1(self.lam) - self.lam

    @property
    def C_lor(self) -> float:
        return self.C_L + self.C_R

    @property
    def phi(self) -> float:
        return math.atan(self.lam)

    @property
    def alpha(self) -> np.ndarray:
        """Rotation weights ``lambda_p / sin(phi)``; they sum to ``C_L``."""
        if self.lam == 0.0:
            return np.zeros_like(self.lambda_p)
        return self.lambda_p / math.sin(self.phi)

    @property
    def prob_L(self) -> float:
        return self.C_L / self.C_lor


@dataclass(frozen=True)
class CompiledCircuitPair:
    """Two independently sampled realisations of the full evolution."""

    branch_s: tuple[SampledUnitary, ...]
    branch_s_prime: tuple[SampledUnitary, ...]
    C: float

    @property
    def n_seg(self) -> int:
        return len(self.branch_s)

    def dump(self) -> str:
        lines = [f"# C = {self.C!r}", "[s]"]
        lines += [u.dump() for u in self.branch_s]
        lines.append("[s']")
        lines += [u.dump() for u in self.branch_s_prime]
        return "\n".join(lines) + "\n"


# -- per-sample samplers ------------------------------------------------------------------


def sample_order(lam: float, rng: np.random.Generator) -> int:
    """Poisson(lam) draw by sequential search of the cumulative pmf."""
    if lam < 0.0:
        raise ValueError("Poisson mean must be non-negative")
    if lam == 0.0:
        return 0
    if lam > 10.0:
        return int(rng.poisson(lam))
    u = rng.random()
    p = math.exp(-lam)
    cum = p
    l = 0
    while u > cum and p > 0.0:
        l += 1
        p *= lam / l
        cum += p
    return l


def sample_pdy(
    l: int,
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    envelope: TimeEnvelope | None = None,
) -> PauliString:
    """Time-ordered product ``(-i sigma_{p_1}) ... (-i sigma_{p_l})`` with ``t_1 >= ... >= t_l``."""
    if l < 0:
        raise ValueError("order must be non-negative")
    if l == 0:
        return PauliString.identity(H.n)
    times = np.sort(sample_times(H, segment, rng, l, envelope))[::-1]
    factors = [H.canonical[sample_term_at_time(H, float(t), rng)].pauli for t in times]
    return product_chain(factors, prefactor_exp=3)


def sample_segment_unitary(
    desc: LcuDescriptor,
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    segment_index: int = 0,
    envelope: TimeEnvelope | None = None,
) -> SampledUnitary:
    if desc.lam == 0.0:
        return IdentityOp(H.n, segment_index)
    if rng.random() < desc.prob_L:
        cum = np.cumsum(desc.lambda_p)
        p = int(min(np.searchsorted(cum, rng.random() * cum[-1], side="right"), H.P - 1))
        return Rotation(H.canonical[p].pauli, desc.phi, segment_index)
    l = sample_order(desc.lam, rng)
    while l < 2:
        l = sample_order(desc.lam, rng)
    op = sample_pdy(l, H, segment, rng, envelope)
    return PauliProduct(op, l, segment_index)


def compile_pair(plan: SegmentPlan, H: TimeDependentHamiltonian, rng: np.random.Generator) -> CompiledCircuitPair:
    """Sample both Hadamard-test branches, segment by segment in time order."""
    branches = []
    for _ in range(2):
        branch = []
        for j in range(plan.n_seg):
            desc = LcuDescriptor.from_plan(plan, j)
            env = plan.envelopes[j] if plan.envelopes else None
            branch.append(sample_segment_unitary(desc, H, plan.segment(j), rng, j, env))
        branches.append(tuple(branch))
    C = math.prod(LcuDescriptor.from_plan(plan, j).C_lor for j in range(plan.n_seg))
    return CompiledCircuitPair(branches[0], branches[1], C)


def leading_order_deviation(desc: LcuDescriptor, H: TimeDependentHamiltonian) -> float:
    """Max-norm gap between ``I - i sum lambda_p sigma_p`` and the rotation mixture."""
    d = 1 << H.n
    lhs = np.eye(d, dtype=complex)
    rhs = np.zeros((d, d), dtype=complex)
    alpha = desc.alpha
    for p, term in enumerate(H.canonical):
        sig = to_matrix(term.pauli)
        lhs = lhs - 1j * desc.lambda_p[p] * sig
        rhs = rhs + alpha[p] * (math.cos(desc.phi) * np.eye(d) - 1j * math.sin(desc.phi) * sig)
    if desc.lam == 0.0:
        rhs = np.eye(d, dtype=complex)
    return float(np.max(np.abs(lhs - rhs)))


# -- batched sampling ----------------------------------------------------------------------


@dataclass
class SegmentOps:
    """A batch of single-segment operators ``alpha * I + beta * X^x Z^z``."""

    x: np.ndarray
    z: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    branch_L: np.ndarray
    order: np.ndarray


def _pauli_coeff(phase: np.ndarray, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``i^(phase + #Y)`` so that the operator is that factor times ``X^x Z^z``."""
    return _I_POWERS[(phase + np.bitwise_count(x & z)) % 4]


def _truncated_orders(lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson draws conditioned on ``l >= 2`` by redrawing rejected values."""
    if lam > 10.0:
        out = rng.poisson(lam, size)
        bad = out < 2
        while bad.any():
            out[bad] = rng.poisson(lam, int(bad.sum()))
            bad = out < 2
        return out
    kmax = int(lam + 40.0 * math.sqrt(lam) + 40.0)
    ks = np.arange(kmax + 1)
    logpmf = -lam + ks * math.log(lam) - np.array([math.lgamma(k + 1) for k in ks])
    cum = np.cumsum(np.exp(logpmf))
    out = np.empty(size, dtype=np.int64)
    todo = np.arange(size)
    while todo.size:
        u = rng.random(todo.size)
        l = np.minimum(np.searchsorted(cum, u, side="left"), kmax)
        ok = l >= 2
        out[todo[ok]] = l[ok]
        todo = todo[~ok]
    return out


def sample_pdy_batch(
    orders: np.ndarray,
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    envelope: TimeEnvelope | None = None,
    canon_x: np.ndarray | None = None,
    canon_z: np.ndarray | None = None,
    canon_phase: np.ndarray | None = None,
):
    """Batched Dyson-product draws; returns ``(x, z, phase_exp)`` arrays."""
    r = orders.shape[0]
    x = np.zeros(r, dtype=np.int64)
    z = np.zeros(r, dtype=np.int64)
    ph = np.zeros(r, dtype=np.int64)
    total = int(orders.sum())
    if total == 0:
        return x, z, ph
    if canon_x is None:
        canon_x, canon_z, canon_phase = canonical_arrays(H)
    times = sample_times(H, segment, rng, total, envelope)
    owner = np.repeat(np.arange(r), orders)
    order = np.lexsort((-times, owner))
    times = times[order]
    _, _, canon = sample_signed_terms(H, times, rng)
    starts = np.concatenate(([0], np.cumsum(orders)[:-1]))
    pos = np.arange(total) - starts[owner]
    fx, fz = canon_x[canon], canon_z[canon]
    fph = (canon_phase[canon] + 3) % 4  # the (-i) prefactor
    for k in range(int(orders.max())):
        sel = pos == k
        who = owner[sel]
        x[who], z[who], ph[who] = multiply_arrays(x[who], z[who], ph[who], fx[sel], fz[sel], fph[sel])
    return x, z, ph


def canonical_arrays(H: TimeDependentHamiltonian):
    cx = np.array([c.pauli.x for c in H.canonical], dtype=np.int64)
    cz = np.array([c.pauli.z for c in H.canonical], dtype=np.int64)
    cph = np.array([c.pauli.phase_exp for c in H.canonical], dtype=np.int64)
    return cx, cz, cph


def sample_segment_batch(
    desc: LcuDescriptor,
    H: TimeDependentHamiltonian,
    segment: tuple[float, float],
    rng: np.random.Generator,
    size: int,
    envelope: TimeEnvelope | None = None,
    canon: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> SegmentOps:
    """Draw ``size`` independent segment operators with the same law as
    :func:`sample_segment_unitary`."""
    cx, cz, cph = canon if canon is not None else canonical_arrays(H)
    x = np.zeros(size, dtype=np.int64)
    z = np.zeros(size, dtype=np.int64)
    alpha = np.ones(size, dtype=complex)
    beta = np.zeros(size, dtype=complex)
    order = np.zeros(size, dtype=np.int64)
    if desc.lam == 0.0:
        return SegmentOps(x, z, alpha, beta, np.ones(size, dtype=bool), order)
    is_L = rng.random(size) < desc.prob_L
    nL = int(is_L.sum())
    cum = np.cumsum(desc.lambda_p)
    p = np.minimum(np.searchsorted(cum, rng.random(nL) * cum[-1], side="right"), H.P - 1)
    x[is_L], z[is_L] = cx[p], cz[p]
    alpha[is_L] = math.cos(desc.phi)
    beta[is_L] = -1j * math.sin(desc.phi) * _pauli_coeff(cph[p], cx[p], cz[p])
    order[is_L] = 1
    nR = size - nL
    if nR:
        ls = _truncated_orders(desc.lam, nR, rng)
        rx, rz, rph = sample_pdy_batch(ls, H, segment, rng, envelope, cx, cz, cph)
        is_R = ~is_L
        x[is_R], z[is_R] = rx, rz
        alpha[is_R] = 0.0
        beta[is_R] = _pauli_coeff(rph, rx, rz)
        order[is_R] = ls
    return SegmentOps(x, z, alpha, beta, is_L, order)

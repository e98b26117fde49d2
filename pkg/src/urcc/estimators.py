"""Monte Carlo estimators and their Hoeffding-type error bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pauli import PauliString, qubitwise_compatible, support

__all__ = [
    "ObservableDecomposition",
    "MeasurementGroup",
    "EstimateReport",
    "estimate",
    "hoeffding_eps",
    "group_ldf",
    "group_range",
    "allocate_shots",
    "grouped_estimate",
    "grouped_hoeffding_eps",
    "qdrift_total_error",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = 0.05
GROUP_ENUMERATION_LIMIT = 20


@dataclass(frozen=True)
class ObservableDecomposition:
    """``O = sum_k alpha_k O_k`` with distinct unsigned Hermitian Pauli strings.

    Signs carried by the strings are folded into the weights on construction.
    """

    components: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("observable needs at least one component")
        merged: dict[tuple[int, int], float] = {}
        n = self.components[0][1].n
        for alpha, p in self.components:
            if not p.is_hermitian:
                raise ValueError(f"component {p} is not Hermitian")
            if p.n != n:
                raise ValueError("components act on different qubit counts")
            key = (p.x, p.z)
            merged[key] = merged.get(key, 0.0) + float(alpha) * p.sign
        comps = tuple((a, PauliString(n, x, z)) for (x, z), a in merged.items())
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, p: PauliString, alpha: float = 1.0) -> "ObservableDecomposition":
        return cls(((alpha, p),))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, float]]) -> "ObservableDecomposition":
        return cls(tuple((float(c), PauliString.parse(s)) for s, c in pairs))

    @property
    def K(self) -> int:
        return len(self.components)

    @property
    def n(self) -> int:
        return self.components[0][1].n

    def norm_bound(self) -> float:
        """Certified ``||O|| <= sum_k |alpha_k|`` (identity components included)."""
        return math.fsum(abs(a) for a, _ in self.components)

    def identity_part(self) -> float:
        return math.fsum(a for a, p in self.components if (p.x | p.z) == 0)


@dataclass(frozen=True)
class MeasurementGroup:
    """Components measured together in the common basis ``R``."""

    members: tuple[tuple[float, PauliString], ...]
    R: PauliString
    shots: int = 0

    @property
    def l1(self) -> float:
        return math.fsum(abs(a) for a, _ in self.members)


@dataclass(frozen=True)
class EstimateReport:
    O_est: float
    M: int
    delta: float
    C: float
    eps_samp: float
    groups: tuple[MeasurementGroup, ...] = field(default=())
    ranges: tuple[float, ...] = field(default=())


def estimate(outcomes: Sequence[float] | np.ndarray, C: float) -> float:
    """``(C^2 / M) sum_m o_m`` with order-independent exact summation."""
    outcomes = np.asarray(outcomes, dtype=float).ravel()
    if outcomes.size == 0:
        raise ValueError("no outcomes to average")
    return C * C * math.fsum(outcomes) / outcomes.size


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"failure probability must lie in (0, 1), got {delta}")


def hoeffding_eps(C: float, norm_O: float, M: int, delta: float = DEFAULT_DELTA) -> float:
    """``||O|| C^2 sqrt(2 ln(2/delta) / M)``."""
    _check_delta(delta)
    if M < 1:
        raise ValueError("M must be at least 1")
    return norm_O * C * C * math.sqrt(2.0 * math.log(2.0 / delta) / M)


def _join(members: Sequence[PauliString], n: int) -> PauliString:
    x = z = 0
    for p in members:
        x |= p.x
        z |= p.z
    return PauliString(n, x, z)


def _compatible(a: PauliString, b: PauliString) -> bool:
    """Two strings share a measurement basis when their letters never conflict."""
    overlap = (a.x | a.z) & (b.x | b.z)
    return ((a.x ^ b.x) & overlap) == 0 and ((a.z ^ b.z) & overlap) == 0


def allocate_shots(weights: Sequence[float], M: int) -> list[int]:
    """Largest-remainder split of ``M`` proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    if M < 0 or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("invalid allocation request")
    exact = w / w.sum() * M
    base = np.floor(exact).astype(int)
    rem = M - int(base.sum())
    # ties resolved by index for determinism
    order = sorted(range(len(w)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:rem]:
        base[i] += 1
    return [int(b) for b in base]


def group_ldf(decomp: ObservableDecomposition, M: int = 0) -> list[MeasurementGroup]:
    """Largest-degree-first colouring of the incompatibility graph.

    Identity components carry no measurement and join the first group.
    """
    n = decomp.n
    comps = [c for c in decomp.components if (c[1].x | c[1].z) != 0]
    ident = [c for c in decomp.components if (c[1].x | c[1].z) == 0]
    if not comps:
        comps, ident = ident, []
    K = len(comps)
    adj = [[j for j in range(K) if j != i and not _compatible(comps[i][1], comps[j][1])] for i in range(K)]
    order = sorted(range(K), key=lambda i: (-len(adj[i]), i))
    colour: dict[int, int] = {}
    for v in order:
        used = {colour[u] for u in adj[v] if u in colour}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    n_groups = max(colour.values()) + 1
    buckets: list[list[tuple[float, PauliString]]] = [[] for _ in range(n_groups)]
    for i in range(K):
        buckets[colour[i]].append(comps[i])
    buckets[0] = ident + buckets[0]
    l1 = [math.fsum(abs(a) for a, _ in b) for b in buckets]
    shots = allocate_shots(l1, M) if M > 0 else [0] * n_groups
    groups = []
    for b, m in zip(buckets, shots):
        R = _join([p for _, p in b], n)
        for _, p in b:
            assert qubitwise_compatible(p, R)
        groups.append(MeasurementGroup(tuple(b), R, m))
    return groups


def group_range(g: MeasurementGroup, M: int | None = None, ancilla: bool = True) -> float:
    """Spread of ``sum_k alpha_k (M / M_g) prod_{j in supp O_k} z_j`` over all sign patterns.

    With ``ancilla`` set, every product also carries the ancilla outcome of the
    Hadamard test, so the value set is symmetrised and the spread is twice its
    largest magnitude.
    """
    supp = sorted(support(g.R))
    if len(supp) > GROUP_ENUMERATION_LIMIT:
        raise ValueError(f"group support of {len(supp)} qubits exceeds the enumeration limit")
    scale = 1.0 if M is None or g.shots == 0 else M / g.shots
    pos = {q: i for i, q in enumerate(supp)}
    masks = []
    for alpha, p in g.members:
        mask = 0
        for q in support(p):
            mask |= 1 << pos[q]
        masks.append((alpha * scale, mask))
    vals = []
    for bits in range(1 << len(supp)):
        vals.append(math.fsum(a * (1 - 2 * (bin(bits & m).count("1") & 1)) for a, m in masks))
    if ancilla:
        return 2.0 * max(abs(v) for v in vals)
    return max(vals) - min(vals)


def grouped_estimate(group_outcomes: Sequence[np.ndarray], C: float) -> float:
    """``(C^2 / M) sum_g sum_m o_{g,m}`` where each ``o_{g,m}`` is already weighted by ``M / M_g``."""
    flat = [np.asarray(o, dtype=float).ravel() for o in group_outcomes]
    M = sum(f.size for f in flat)
    if M == 0:
        raise ValueError("no outcomes to average")
    return C * C * math.fsum(itertools.chain.from_iterable(flat)) / M


def grouped_hoeffding_eps(
    groups: Sequence[MeasurementGroup], C: float, M: int, delta: float = DEFAULT_DELTA, ancilla: bool = True
) -> float:
    """``(C^2 / M) sqrt(ln(2/delta) / 2 * sum_g M_g ||R_g||_r^2)``."""
    _check_delta(delta)
    if sum(g.shots for g in groups) != M:
        raise ValueError("group shot allocation does not sum to M")
    acc = math.fsum(g.shots * group_range(g, M, ancilla) ** 2 for g in groups if g.shots > 0)
    return C * C / M * math.sqrt(0.5 * math.log(2.0 / delta) * acc)


def qdrift_total_error(M: int, delta: float, eps_alg: float, norm_O: float) -> float:
    """Smallest ``eps >= |eps_alg|`` with
    ``exp(-M (eps - eps_alg)^2 / 2||O||^2) + exp(-M (eps + eps_alg)^2 / 2||O||^2) <= delta``.
    """
    _check_delta(delta)
    if M < 1 or norm_O <= 0:
        raise ValueError("M and ||O|| must be positive")
    a = abs(eps_alg)
    s = 2.0 * norm_O * norm_O

    def rhs(eps: float) -> float:
        return math.exp(-M * (eps - a) ** 2 / s) + math.exp(-M * (eps + a) ** 2 / s)

    lo = a
    if rhs(lo) <= delta:
        return lo
    hi = a + norm_O * math.sqrt(2.0 * math.log(2.0 / delta) / M) + 1e-300
    while rhs(hi) > delta:
        hi = a + 2.0 * (hi - a)
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if rhs(mid) > delta:
            lo = mid
        else:
            hi = mid
    return hi

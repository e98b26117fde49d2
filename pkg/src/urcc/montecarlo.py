"""Trial-parallel Monte Carlo drivers for URCC and c-qDRIFT.

Trials are processed in fixed-size blocks.  Block ``b`` of stream ``s`` draws
from ``SeedSequence(seed, spawn_key=(s, b))``, so every outcome is a pure
function of ``(seed, stream, trial index)`` and the assembled outcome array
does not depend on how blocks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from .compiler import LcuDescriptor, SegmentOps, canonical_arrays, sample_segment_batch
from .estimators import MeasurementGroup, ObservableDecomposition
from .hamiltonian import SegmentPlan, TimeDependentHamiltonian
from .pauli import PauliString, apply_pauli
from .qdrift import qdrift_segment_batch
from .statevector import apply_segment_ops, rotate_to_basis, sample_bitstrings

__all__ = [
    "Problem",
    "GateTally",
    "block_rng",
    "run_trials",
    "TrialResult",
    "BLOCK_SIZE",
    "URCC_STREAM",
    "QDRIFT_STREAM",
]

BLOCK_SIZE = 4096
URCC_STREAM = 0
QDRIFT_STREAM = 1


@dataclass(frozen=True)
class Problem:
    """Everything a trial needs: Hamiltonian, segmentation, input state and observable."""

    H: TimeDependentHamiltonian
    plan: SegmentPlan
    psi: np.ndarray
    observable: ObservableDecomposition

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def C(self) -> float:
        return math.prod(LcuDescriptor.from_plan(self.plan, j).C_lor for j in range(self.plan.n_seg))


@dataclass
class GateTally:
    """Summed gate counts over a set of trials (one circuit per trial)."""

    single_qubit: int = 0
    two_qubit: int = 0
    phase_gates: int = 0
    circuits: int = 0

    def __add__(self, other: "GateTally") -> "GateTally":
        return GateTally(
            self.single_qubit + other.single_qubit,
            self.two_qubit + other.two_qubit,
            self.phase_gates + other.phase_gates,
            self.circuits + other.circuits,
        )

    def mean(self) -> tuple[float, float, float]:
        c = max(self.circuits, 1)
        return self.single_qubit / c, self.two_qubit / c, self.phase_gates / c


@dataclass
class TrialResult:
    outcomes: np.ndarray
    tally: GateTally = field(default_factory=GateTally)


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


# -- gate tallies mirroring the lowering templates ---------------------------------------------


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def urcc_segment_tally(ops: SegmentOps, control: int) -> GateTally:
    """Gate counts of the controlled lowering of each operator in ``ops``."""
    k = _popcount(ops.x | ops.z)
    L = ops.branch_L & (k > 0)
    wrap = 2 if control == 0 else 0
    one = int(np.sum(2 * k[L] + wrap))
    two = int(np.sum(2 * k[L]))
    ph = 2 * int(L.sum())
    R = ~ops.branch_L
    if R.any():
        x, z = ops.x[R], ops.z[R]
        ny = _popcount(x & z)
        nz = _popcount(z & ~x)
        weight = _popcount(x | z)
        # beta = i^(phase + #Y) for a Pauli-product operator
        quarter = np.rint(np.angle(ops.beta[R]) / (math.pi / 2)).astype(np.int64)
        phase = (quarter - ny) % 4
        nonempty = (weight > 0) | (phase != 0)
        one += int(np.sum(2 * ny + 2 * nz + (phase != 0) + wrap * nonempty))
        two += int(np.sum(weight))
    return GateTally(one, two, ph, 0)


def qdrift_segment_tally(ops: SegmentOps) -> GateTally:
    k = _popcount(ops.x | ops.z)
    return GateTally(int(np.sum(2 * k)), int(np.sum(2 * (k - 1))), int(ops.x.shape[0]), 0)


# -- per-block simulation ---------------------------------------------------------------------


def _group_of_trials(shots: Sequence[int], start: int, size: int) -> np.ndarray:
    edges = np.cumsum(shots)
    return np.searchsorted(edges, np.arange(start, start + size), side="right")


def _component_masks(comps, n: int, ancilla: bool) -> tuple[np.ndarray, np.ndarray]:
    alpha = np.array([a for a, _ in comps], dtype=float)
    masks = np.array([(p.x | p.z) | ((1 << n) if ancilla else 0) for _, p in comps], dtype=np.int64)
    return alpha, masks


def _ungrouped_shots(values: np.ndarray, alpha: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One +-1 shot of a randomly chosen component, reweighted to stay unbiased.

    ``values[:, k]`` holds the exact expectation of component ``k`` for each trial.
    """
    l1 = float(np.abs(alpha).sum())
    size = values.shape[0]
    cum = np.cumsum(np.abs(alpha))
    k = np.minimum(np.searchsorted(cum, rng.random(size) * cum[-1], side="right"), alpha.size - 1)
    e = values[np.arange(size), k]
    bit = np.where(rng.random(size) < 0.5 * (1.0 + e), 1.0, -1.0)
    return l1 * np.sign(alpha[k]) * bit


def _grouped_shots(
    full: np.ndarray,
    width: int,
    groups: Sequence[MeasurementGroup],
    labels: np.ndarray,
    M: int,
    rng: np.random.Generator,
    ancilla: bool,
) -> np.ndarray:
    """Measure each row in its group's basis and combine the member parities."""
    n = width - 1 if ancilla else width
    out = np.zeros(full.shape[0])
    for gi, g in enumerate(groups):
        rows = np.nonzero(labels == gi)[0]
        if rows.size == 0:
            continue
        letters = list(g.R.letters)
        if ancilla:
            letters = ["X"] + letters
        rotated = rotate_to_basis(full[rows], width, letters)
        idx = sample_bitstrings(rotated, rng)
        alpha, masks = _component_masks(g.members, n, ancilla)
        parity = np.bitwise_count(idx[:, None] & masks[None, :]) & 1
        mu = 1.0 - 2.0 * parity
        out[rows] = (mu * alpha[None, :]).sum(axis=1) * (M / g.shots)
    return out


def _urcc_block(problem: Problem, mode: str, seed: int, stream: int, groups, M: int, block: int) -> TrialResult:
    start = block * BLOCK_SIZE
    size = min(BLOCK_SIZE, M - start)
    rng = block_rng(seed, stream, block)
    H, plan, n = problem.H, problem.plan, problem.n
    canon = canonical_arrays(H)
    a = np.tile(problem.psi.astype(complex), (size, 1))
    b = a.copy()
    tally = GateTally(circuits=size)
    for j in range(plan.n_seg):
        desc = LcuDescriptor.from_plan(plan, j)
        env = plan.envelopes[j] if plan.envelopes else None
        ops = sample_segment_batch(desc, H, plan.segment(j), rng, size, env, canon)
        a = apply_segment_ops(a, ops, n)
        tally = tally + urcc_segment_tally(ops, 1)
        ops = sample_segment_batch(desc, H, plan.segment(j), rng, size, env, canon)
        b = apply_segment_ops(b, ops, n)
        tally = tally + urcc_segment_tally(ops, 0)
    comps = problem.observable.components
    if mode == "grouped":
        labels = _group_of_trials([g.shots for g in groups], start, size)
        full = np.concatenate([b, a], axis=1) / math.sqrt(2.0)
        return TrialResult(_grouped_shots(full, n + 1, groups, labels, M, rng, True), tally)
    values = np.stack([np.einsum("ij,ij->i", b.conj(), apply_pauli(p, a)).real for _, p in comps], axis=1)
    alpha = np.array([al for al, _ in comps])
    if mode == "exact":
        return TrialResult(values @ alpha, tally)
    return TrialResult(_ungrouped_shots(values, alpha, rng), tally)


def _qdrift_block(problem: Problem, mode: str, seed: int, stream: int, groups, M: int, block: int) -> TrialResult:
    start = block * BLOCK_SIZE
    size = min(BLOCK_SIZE, M - start)
    rng = block_rng(seed, stream, block)
    H, plan, n = problem.H, problem.plan, problem.n
    v = np.tile(problem.psi.astype(complex), (size, 1))
    tally = GateTally(circuits=size)
    for j in range(plan.n_seg):
        lam = float(plan.lambda_p_table[j].sum())
        env = plan.envelopes[j] if plan.envelopes else None
        ops = qdrift_segment_batch(H, plan.segment(j), lam, rng, size, env)
        v = apply_segment_ops(v, ops, n)
        tally = tally + qdrift_segment_tally(ops)
    comps = problem.observable.components
    if mode == "grouped":
        labels = _group_of_trials([g.shots for g in groups], start, size)
        return TrialResult(_grouped_shots(v, n, groups, labels, M, rng, False), tally)
    values = np.stack([np.einsum("ij,ij->i", v.conj(), apply_pauli(p, v)).real for _, p in comps], axis=1)
    alpha = np.array([al for al, _ in comps])
    if mode == "exact":
        return TrialResult(values @ alpha, tally)
    return TrialResult(_ungrouped_shots(values, alpha, rng), tally)


def run_trials(
    problem: Problem,
    method: str,
    M: int,
    seed: int,
    mode: str = "shot",
    groups: Sequence[MeasurementGroup] | None = None,
    stream: int | None = None,
    workers: int = 1,
) -> TrialResult:
    """Run ``M`` trials and return the per-trial outcomes ``o_m`` in trial order.

    ``mode`` is ``exact`` (expectation of each sampled circuit), ``shot`` (one
    +-1 measurement per trial) or ``grouped`` (one shot in the basis of the
    trial's measurement group; ``groups`` must allocate exactly ``M`` shots).
    URCC outcomes still need the ``C^2`` factor of the estimator.
    """
    if method not in ("urcc", "cqdrift"):
        raise ValueError(f"unknown method {method!r}")
    if mode not in ("exact", "shot", "grouped"):
        raise ValueError(f"unknown mode {mode!r}")
    if M < 1:
        raise ValueError("M must be at least 1")
    if mode == "grouped":
        if groups is None or sum(g.shots for g in groups) != M:
            raise ValueError("grouped mode needs groups whose shots sum to M")
        if any(g.shots == 0 for g in groups):
            raise ValueError("every measurement group needs at least one shot")
    if problem.psi.shape != (1 << problem.n,):
        raise ValueError("initial state does not match the Hamiltonian")
    if stream is None:
        stream = URCC_STREAM if method == "urcc" else QDRIFT_STREAM
    fn = _urcc_block if method == "urcc" else _qdrift_block
    task = partial(fn, problem, mode, seed, stream, groups, M)
    n_blocks = -(-M // BLOCK_SIZE)
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task, range(n_blocks)))
    else:
        parts = [task(b) for b in range(n_blocks)]
    tally = GateTally()
    for p in parts:
        tally = tally + p.tally
    return TrialResult(np.concatenate([p.outcomes for p in parts]), tally)

"""Dense ground-truth engines used to validate the randomized compilers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalContractError
from .hamiltonian import SegmentPlan, TimeDependentHamiltonian
from .pauli import ORACLE_QUBIT_LIMIT, PauliString, to_matrix
from .waveforms import Constant

__all__ = [
    "DensePropagator",
    "exact_propagator",
    "midpoint_propagator",
    "exact_expectation",
    "observable_matrix",
    "qdrift_channel",
    "qdrift_exact_state",
    "algorithmic_error",
    "constant_pdy_law",
    "trace_distance",
    "CHANNEL_QUBIT_LIMIT",
]

CHANNEL_QUBIT_LIMIT = 8
_CHUNK = 1 << 14


@dataclass(frozen=True)
class DensePropagator:
    matrix: np.ndarray
    interval: tuple[float, float]
    tolerance: float
    steps: int


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """``mats[-1] @ ... @ mats[0]`` by pairwise reduction (later times to the left)."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(mats.shape[1], dtype=complex)[None]], axis=0)
        mats = np.matmul(mats[1::2], mats[0::2])
    return mats[0]


def _term_stack(H: TimeDependentHamiltonian) -> np.ndarray:
    return np.array([to_matrix(t.pauli) for t in H.terms])


def midpoint_propagator(H: TimeDependentHamiltonian, a: float, b: float, steps: int, order: int = 4) -> np.ndarray:
    """Product of per-step exponentials of Hermitian generators over ``steps`` equal steps.

    ``order=2`` uses the midpoint generator ``h H(t_mid)``; ``order=4`` adds the
    two-point Gauss commutator correction of the fourth-order Magnus expansion.
    """
    if H.n > ORACLE_QUBIT_LIMIT:
        raise ValueError(f"{H.n} qubits exceeds the oracle limit")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    h = (b - a) / steps
    paulis = _term_stack(H)
    U = np.eye(1 << H.n, dtype=complex)
    for start in range(0, steps, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, steps))
        mids = a + (k + 0.5) * h
        if order == 2:
            gens = h * np.einsum("qm,qij->mij", H.coefficients(mids), paulis)
        else:
            off = math.sqrt(3.0) / 6.0 * h
            H1 = np.einsum("qm,qij->mij", H.coefficients(mids - off), paulis)
            H2 = np.einsum("qm,qij->mij", H.coefficients(mids + off), paulis)
            comm = np.matmul(H2, H1) - np.matmul(H1, H2)
            gens = 0.5 * h * (H1 + H2) - 1j * (math.sqrt(3.0) / 12.0) * h * h * comm
            gens = 0.5 * (gens + np.conj(np.swapaxes(gens, 1, 2)))
        w, V = np.linalg.eigh(gens)
        steps_U = np.matmul(V * np.exp(-1j * w)[:, None, :], np.conj(np.swapaxes(V, 1, 2)))
        U = _ordered_product(steps_U) @ U
    return U


def exact_propagator(
    H: TimeDependentHamiltonian,
    a: float,
    b: float,
    tol: float = 1e-12,
    initial_steps: int = 16,
    max_steps: int = 1 << 20,
    order: int = 4,
) -> DensePropagator:
    """Time-ordered propagator, halving the step until successive results agree to ``tol``.

    Raises:
        NumericalContractError: the step count hits ``max_steps`` first.
    """
    if tol < 1e-13:
        raise ValueError("tolerance below 1e-13 is not attainable in double precision")
    steps = initial_steps
    prev = midpoint_propagator(H, a, b, steps, order)
    while steps < max_steps:
        steps *= 2
        cur = midpoint_propagator(H, a, b, steps, order)
        diff = float(np.max(np.abs(cur - prev)))
        if diff <= tol:
            return DensePropagator(cur, (a, b), diff, steps)
        prev = cur
    raise NumericalContractError(f"propagator did not converge to {tol} within {max_steps} steps")


def observable_matrix(O) -> np.ndarray:
    """Dense matrix of a Pauli string or a list of ``(alpha, PauliString)``."""
    if isinstance(O, PauliString):
        return to_matrix(O)
    comps = getattr(O, "components", O)
    return sum(alpha * to_matrix(p) for alpha, p in comps)


def exact_expectation(psi: np.ndarray, O, U: np.ndarray | None = None) -> float:
    """``<psi| U^dag O U |psi>``."""
    state = psi if U is None else U @ psi
    val = np.vdot(state, observable_matrix(O) @ state)
    return float(val.real)


def qdrift_channel(H: TimeDependentHamiltonian, lam_p: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """One c-qDRIFT segment applied to a density matrix.

    The channel integral over ``t`` of ``sum_q |c_q(t)| U_q^sgn rho U_q^sgn^dag / lambda``
    only depends on the time integrals of the positive and negative parts of
    each coefficient, so it equals ``sum_p (lambda_p / lambda) U_p rho U_p^dag``
    over the canonical terms with ``U_p = exp(-i lambda sigma_p)``.
    """
    lam = float(np.sum(lam_p))
    if lam == 0.0:
        return rho
    d = rho.shape[0]
    out = np.zeros_like(rho)
    for p, term in enumerate(H.canonical):
        if lam_p[p] == 0.0:
            continue
        U = math.cos(lam) * np.eye(d) - 1j * math.sin(lam) * to_matrix(term.pauli)
        out += (lam_p[p] / lam) * (U @ rho @ U.conj().T)
    return out


def qdrift_exact_state(H: TimeDependentHamiltonian, plan: SegmentPlan, psi: np.ndarray) -> np.ndarray:
    """Density matrix after all c-qDRIFT segments, starting from ``|psi>``."""
    if H.n > CHANNEL_QUBIT_LIMIT:
        raise ValueError(f"{H.n} qubits exceeds the channel oracle limit")
    rho = np.outer(psi, psi.conj())
    for j in range(plan.n_seg):
        rho = qdrift_channel(H, plan.lambda_p_table[j], rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-12:
        raise NumericalContractError(f"channel trace drifted to {tr}")
    return rho


def algorithmic_error(
    H: TimeDependentHamiltonian,
    plan: SegmentPlan,
    psi: np.ndarray,
    O,
    U: np.ndarray | None = None,
) -> float:
    """Signed ``tr(O rho_qd) - <O>_exact``."""
    if U is None:
        U = exact_propagator(H, float(plan.boundaries[0]), float(plan.boundaries[-1])).matrix
    rho = qdrift_exact_state(H, plan, psi)
    qd = float(np.trace(observable_matrix(O) @ rho).real)
    return qd - exact_expectation(psi, O, U)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho - sigma)
    return 0.5 * float(np.abs(w).sum())


def constant_pdy_law(H: TimeDependentHamiltonian, l: int) -> dict[tuple[int, ...], float]:
    """Probability of each canonical index sequence of length ``l`` for a constant ``H``.

    The ordered integral of constants gives ``tau^l / l!`` for every sequence, so
    the law factorises into ``prod_k h_{p_k} / h_tot``.
    """
    if not all(isinstance(t.coeff, Constant) for t in H.terms):
        raise ValueError("constant_pdy_law needs constant coefficients")
    h = H.canonical_values(H.window[0])
    probs = h / h.sum()
    return {seq: math.prod(probs[i] for i in seq) for seq in itertools.product(range(H.P), repeat=l)}

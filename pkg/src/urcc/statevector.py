"""Dense statevector engine for the one-ancilla Hadamard-test circuit.

Bit convention: qubit 0 is the most significant bit of the basis index.  In a
Hadamard-test register qubit 0 is the ancilla and data qubit ``j`` is wire
``j + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Gate, QuantumCircuit, gate_matrix, lower_pair
from .errors import NumericalContractError
from .pauli import PauliString, apply_pauli

__all__ = [
    "StateVector",
    "basis_state",
    "initial_state",
    "prepare_hadamard_test",
    "apply",
    "expectation",
    "run_pair",
    "apply_circuit_to_matrix",
    "WIDTH_LIMIT",
]

WIDTH_LIMIT = 14
NORM_TOL = 1e-12


@dataclass
class StateVector:
    width: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.width > WIDTH_LIMIT:
            raise ValueError(f"width {self.width} exceeds the dense limit {WIDTH_LIMIT}")
        if self.amplitudes.shape != (1 << self.width,):
            raise ValueError("amplitude count does not match the width")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.width, self.amplitudes.copy())


def basis_state(label: str | int, n: int | None = None) -> np.ndarray:
    """Computational basis vector from a bit string such as ``"101"`` (qubit 0 first)."""
    if isinstance(label, str):
        if set(label) - {"0", "1"}:
            raise ValueError(f"invalid basis label {label!r}")
        n = len(label)
        index = int(label, 2) if label else 0
    else:
        if n is None:
            raise ValueError("integer labels need n")
        index = int(label)
    vec = np.zeros(1 << n, dtype=complex)
    vec[index] = 1.0
    return vec


def initial_state(spec, n: int) -> np.ndarray:
    """Data-register state from a basis label or an amplitude list."""
    if isinstance(spec, str):
        vec = basis_state(spec)
    else:
        vec = np.asarray(spec, dtype=complex).ravel()
    if vec.shape != (1 << n,):
        raise ValueError(f"state does not describe {n} qubits")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"initial state has norm {norm}, expected 1")
    return vec


def prepare_hadamard_test(psi, n: int) -> StateVector:
    """``|+> (x) |psi>`` on ``n + 1`` qubits."""
    data = initial_state(psi, n)
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    return StateVector(n + 1, np.kron(plus, data))


@lru_cache(maxsize=256)
def _cnot_perm(width: int, control: int, target: int) -> np.ndarray:
    basis = np.arange(1 << width, dtype=np.int64)
    cbit = 1 << (width - 1 - control)
    tbit = 1 << (width - 1 - target)
    return np.where(basis & cbit, basis ^ tbit, basis)


@lru_cache(maxsize=256)
def _bit_is_set(width: int, qubit: int) -> np.ndarray:
    basis = np.arange(1 << width, dtype=np.int64)
    return (basis >> (width - 1 - qubit)) & 1 == 1


def _apply_1q(amps: np.ndarray, width: int, q: int, U: np.ndarray) -> np.ndarray:
    t = amps.reshape(1 << q, 2, -1)
    return np.einsum("ij,ajb->aib", U, t).reshape(-1)


def _apply_gate(amps: np.ndarray, width: int, g: Gate) -> np.ndarray:
    if g.kind == "CNOT":
        c, t = g.qubits
        if c == t:
            raise ValueError("control equals target")
        return amps[_cnot_perm(width, c, t)]
    if g.kind == "CPH":
        c, t = g.qubits
        on = _bit_is_set(width, c)
        tb = _bit_is_set(width, t)
        phase = np.where(on, np.where(tb, np.exp(1j * g.param), np.exp(-1j * g.param)), 1.0)
        return amps * phase
    (q,) = g.qubits
    return _apply_1q(amps, width, q, gate_matrix(g))


def apply(state: StateVector, op: Gate | QuantumCircuit, check_norm: bool = True) -> StateVector:
    """Apply a gate or circuit; the norm must stay 1 to ``1e-12`` (no renormalisation)."""
    gates = op.gates if isinstance(op, QuantumCircuit) else (op,)
    if isinstance(op, QuantumCircuit) and op.width != state.width:
        raise ValueError("circuit width does not match the state")
    amps = state.amplitudes
    for g in gates:
        for q in g.qubits:
            if not 0 <= q < state.width:
                raise IndexError(f"qubit {q} out of range for width {state.width}")
        amps = _apply_gate(amps, state.width, g)
        if check_norm and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise NumericalContractError(f"norm drift after {g.text()}")
    return StateVector(state.width, amps)


def apply_circuit_to_matrix(circuit: QuantumCircuit) -> np.ndarray:
    """Dense unitary of a circuit, column by column."""
    d = 1 << circuit.width
    cols = np.eye(d, dtype=complex)
    out = np.empty((d, d), dtype=complex)
    for k in range(d):
        amps = cols[:, k]
        for g in circuit.gates:
            amps = _apply_gate(amps, circuit.width, g)
        out[:, k] = amps
    return out


def expectation(state: StateVector | np.ndarray, P: PauliString) -> float:
    """``<psi|P|psi>`` for a Hermitian Pauli string."""
    if not P.is_hermitian:
        raise ValueError(f"{P} is not Hermitian")
    amps = state.amplitudes if isinstance(state, StateVector) else state
    val = np.vdot(amps, apply_pauli(P, amps))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise NumericalContractError(f"expectation of Hermitian {P} has imaginary part {val.imag}")
    return float(val.real)


def hadamard_observable(O: PauliString) -> PauliString:
    """``X (x) O`` on the ancilla-extended register."""
    return PauliString(O.n + 1, O.x | (1 << O.n), O.z, O.phase_exp)


def run_pair(
    pair,
    psi,
    O: PauliString,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
) -> float:
    """Gate-level Hadamard test of a compiled pair.

    ``exact`` returns ``<X (x) O>`` of the final state; ``shot`` returns one
    ``+-1`` outcome drawn from the Born rule for the commuting pair ``X``, ``O``.
    """
    if not O.is_hermitian:
        raise ValueError(f"observable {O} must be Hermitian")
    n = O.n
    state = prepare_hadamard_test(psi, n)
    state = apply(state, lower_pair(pair, n))
    e = expectation(state, hadamard_observable(O))
    if mode == "exact":
        return e
    if mode == "shot":
        if rng is None:
            raise ValueError("shot mode needs an rng")
        return 1.0 if rng.random() < 0.5 * (1.0 + e) else -1.0
    raise ValueError(f"unknown mode {mode!r}")


def pair_overlap(pair, psi: np.ndarray, O: PauliString) -> float:
    """``Re <psi| u(s')^dag O u(s) |psi>`` by direct operator action.

    Equal to the exact-mode :func:`run_pair` value, without lowering to gates.
    """
    a = psi
    for u in pair.branch_s:
        a = u.apply(a)
    b = psi
    for u in pair.branch_s_prime:
        b = u.apply(b)
    return float(np.vdot(b, apply_pauli(O, a)).real)


def apply_segment_ops(states: np.ndarray, ops, n: int) -> np.ndarray:
    """Apply a batch of ``alpha I + beta X^x Z^z`` operators, one per row of ``states``."""
    basis = np.arange(1 << n, dtype=np.int64)
    src = basis[None, :] ^ ops.x[:, None]
    gathered = np.take_along_axis(states, src, axis=1)
    parity = np.bitwise_count(src & ops.z[:, None]) & 1
    sign = 1.0 - 2.0 * parity
    return ops.alpha[:, None] * states + (ops.beta[:, None] * sign) * gathered


def pauli_expectations(bra: np.ndarray, ket: np.ndarray, O: PauliString) -> np.ndarray:
    """Row-wise ``<bra|O|ket>`` for stacked states."""
    return np.einsum("ij,ij->i", bra.conj(), apply_pauli(O, ket))


def sample_bitstrings(states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One computational-basis outcome index per row (Born rule)."""
    probs = np.abs(states) ** 2
    cum = np.cumsum(probs, axis=1)
    u = rng.random(states.shape[0]) * cum[:, -1]
    idx = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(idx, states.shape[1] - 1)


def rotate_to_basis(states: np.ndarray, width: int, letters: Sequence[str]) -> np.ndarray:
    """Rotate rows so that measuring ``letters[j]`` on qubit ``j`` becomes a Z measurement."""
    out = states
    for q, c in enumerate(letters):
        if c in ("I", "Z"):
            continue
        U = gate_matrix(Gate("W", (q,), c))
        t = out.reshape(out.shape[0], 1 << q, 2, -1)
        out = np.einsum("ij,rajb->raib", U, t).reshape(out.shape[0], -1)
    return out

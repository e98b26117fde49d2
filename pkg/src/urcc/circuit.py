"""Gate-level IR: Pauli-rotation lowering, controlled Pauli products, resource counts.

When a circuit is controlled, the ancilla is qubit 0 and data qubit ``j`` sits
on wire ``j + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString, support

__all__ = [
    "Gate",
    "QuantumCircuit",
    "ResourceCount",
    "lower_rotation",
    "lower_pauli_product",
    "lower_sampled",
    "lower_pair",
    "count_resources",
    "t_count_ratio",
    "gate_matrix",
    "DEFAULT_C_RS",
]

DEFAULT_C_RS = 4

_SQ2 = 1.0 / math.sqrt(2.0)
_W = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "Y": np.array([[1, -1j], [-1j, 1]], dtype=complex) * _SQ2,
    "Z": np.eye(2, dtype=complex),
}
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2

SINGLE_QUBIT_KINDS = {"W", "PH", "PHASE", "H", "X", "PAULI"}
TWO_QUBIT_KINDS = {"CNOT", "CPH"}
PHASE_KINDS = {"PH", "CPH"}


@dataclass(frozen=True)
class Gate:
    """One gate.

    Kinds: ``W`` (basis change, ``param`` = letter), ``PH`` (``diag(e^-i t, e^i t)``),
    ``PHASE`` (``diag(1, i^k)``, Clifford), ``H``, ``X``, ``PAULI`` (``param`` =
    letter), ``CNOT`` and ``CPH`` (controlled ``PH``); two-qubit gates list
    ``(control, target)``.
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | int | str | None = None
    dagger: bool = False

    def inverse(self) -> "Gate":
        if self.kind == "W":
            return Gate("W", self.qubits, self.param, not self.dagger)
        if self.kind in ("PH", "CPH"):
            return Gate(self.kind, self.qubits, -self.param)
        if self.kind == "PHASE":
            return Gate("PHASE", self.qubits, (-self.param) % 4)
        return self

    def text(self) -> str:
        q = " ".join(str(i) for i in self.qubits)
        if self.kind == "W":
            return f"{'WDG' if self.dagger else 'W'} {self.param} {q}"
        if self.kind in ("PH", "CPH"):
            return f"{self.kind} {float(self.param)!r} {q}"
        if self.kind in ("PHASE", "PAULI"):
            return f"{self.kind} {self.param} {q}"
        return f"{self.kind} {q}"


def gate_matrix(g: Gate) -> np.ndarray:
    """2x2 matrix of a single-qubit gate."""
    if g.kind == "W":
        m = _W[g.param]
        return m.conj().T if g.dagger else m
    if g.kind == "PH":
        return np.diag([np.exp(-1j * g.param), np.exp(1j * g.param)])
    if g.kind == "PHASE":
        return np.diag([1.0, 1j ** (g.param % 4)]).astype(complex)
    if g.kind == "H":
        return _H
    if g.kind == "X":
        return _PAULI["X"]
    if g.kind == "PAULI":
        return _PAULI[g.param]
    raise ValueError(f"{g.kind} is not a single-qubit gate")


@dataclass(frozen=True)
class QuantumCircuit:
    width: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.width:
                    raise ValueError(f"gate {g.text()} outside width {self.width}")
            if g.kind in ("PH", "CPH") and not math.isfinite(g.param):
                raise ValueError("phase angle must be finite")

    def __add__(self, other: "QuantumCircuit") -> "QuantumCircuit":
        if other.width != self.width:
            raise ValueError("width mismatch")
        return QuantumCircuit(self.width, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> "QuantumCircuit":
        return QuantumCircuit(self.width, tuple(g.inverse() for g in reversed(self.gates)))

    def matrix(self) -> np.ndarray:
        from .statevector import apply_circuit_to_matrix

        return apply_circuit_to_matrix(self)

    def dump(self) -> str:
        return "".join(g.text() + "\n" for g in self.gates)

    @classmethod
    def concat(cls, width: int, parts: Iterable["QuantumCircuit"]) -> "QuantumCircuit":
        gates: list[Gate] = []
        for c in parts:
            if c.width != width:
                raise ValueError("width mismatch")
            gates.extend(c.gates)
        return cls(width, tuple(gates))


@dataclass(frozen=True)
class ResourceCount:
    single_qubit: int = 0
    two_qubit: int = 0
    phase_gates: int = 0
    t_count_estimate: int = 0

    def __add__(self, other: "ResourceCount") -> "ResourceCount":
        return ResourceCount(
            self.single_qubit + other.single_qubit,
            self.two_qubit + other.two_qubit,
            self.phase_gates + other.phase_gates,
            self.t_count_estimate + other.t_count_estimate,
        )


def _control_wrap(gates: list[Gate], control: int) -> list[Gate]:
    if control == 1:
        return gates
    if control == 0:
        return [Gate("X", (0,))] + gates + [Gate("X", (0,))]
    raise ValueError("control value must be 0 or 1")


def lower_rotation(sigma: PauliString, phi: float, control: int | None = None) -> QuantumCircuit:
    """Basis changes, CNOT ladder and phase gate(s) realising ``exp(-i phi sigma)``.

    With ``control`` set to 0 or 1 the rotation fires only for that ancilla value.
    """
    if not sigma.is_hermitian:
        raise ValueError(f"{sigma} is not Hermitian")
    supp = sorted(support(sigma))
    k = len(supp)
    if k == 0:
        raise ValueError("identity rotation is a pure phase; drop it from the Hamiltonian")
    angle = phi * sigma.sign
    off = 0 if control is None else 1
    wires = [j + off for j in supp]
    letters = [sigma.letter(j) for j in supp]
    gates = [Gate("W", (w,), c) for w, c in zip(wires, letters)]
    ladder = [Gate("CNOT", (wires[s], wires[s + 1])) for s in range(k - 1)]
    gates += ladder
    last = wires[-1]
    if control is None:
        gates.append(Gate("PH", (last,), angle))
        core = gates
    else:
        gates += [
            Gate("PH", (last,), angle / 2),
            Gate("CNOT", (0, last)),
            Gate("PH", (last,), -angle / 2),
            Gate("CNOT", (0, last)),
        ]
        core = gates
    core += list(reversed(ladder))
    core += [Gate("W", (w,), c, dagger=True) for w, c in zip(wires, letters)]
    if control is None:
        return QuantumCircuit(sigma.n, tuple(core))
    return QuantumCircuit(sigma.n + 1, tuple(_control_wrap(core, control)))


def _controlled_letter(letter: str, target: int) -> list[Gate]:
    if letter == "X":
        return [Gate("CNOT", (0, target))]
    if letter == "Y":
        return [Gate("PHASE", (target,), 3), Gate("CNOT", (0, target)), Gate("PHASE", (target,), 1)]
    return [Gate("H", (target,)), Gate("CNOT", (0, target)), Gate("H", (target,))]


def lower_pauli_product(op: PauliString, control: int = 1) -> QuantumCircuit:
    """Controlled Pauli product including its ``i^k`` phase.

    The phase becomes a relative phase between the ancilla branches, so it is
    applied to the ancilla inside the controlled block.
    """
    gates: list[Gate] = []
    for j in sorted(support(op)):
        gates += _controlled_letter(op.letter(j), j + 1)
    if op.phase_exp:
        gates.append(Gate("PHASE", (0,), op.phase_exp))
    if not gates:
        return QuantumCircuit(op.n + 1)
    return QuantumCircuit(op.n + 1, tuple(_control_wrap(gates, control)))


def lower_sampled(u, n: int, control: int) -> QuantumCircuit:
    """Lower one sampled segment operator controlled on ``control``."""
    from .compiler import IdentityOp, PauliProduct, Rotation

    if isinstance(u, Rotation):
        if u.angle == 0.0:
            return QuantumCircuit(n + 1)
        return lower_rotation(u.sigma, u.angle, control)
    if isinstance(u, PauliProduct):
        return lower_pauli_product(u.op, control)
    if isinstance(u, IdentityOp):
        return QuantumCircuit(n + 1)
    raise TypeError(f"cannot lower {u!r}")


def lower_pair(pair, n: int) -> QuantumCircuit:
    """Hadamard-test body: ``branch_s`` on ancilla 1, then ``branch_s'`` on ancilla 0."""
    parts = [lower_sampled(u, n, 1) for u in pair.branch_s]
    parts += [lower_sampled(u, n, 0) for u in pair.branch_s_prime]
    return QuantumCircuit.concat(n + 1, parts)


def count_resources(
    circuit: QuantumCircuit | Sequence[Gate], eps_ph: float = 1e-3, c_rs: float = DEFAULT_C_RS
) -> ResourceCount:
    """Gate tallies; only ``PH``/``CPH`` contribute T gates, ``ceil(c_rs log2(1/eps_ph))`` each.

    ``single_qubit`` counts Clifford single-qubit gates; phase rotations are
    tallied separately in ``phase_gates``.
    """
    if not 0.0 < eps_ph < 1.0:
        raise ValueError("eps_ph must lie in (0, 1)")
    gates = circuit.gates if isinstance(circuit, QuantumCircuit) else circuit
    one = sum(g.kind in SINGLE_QUBIT_KINDS and g.kind != "PH" for g in gates)
    two = sum(g.kind in TWO_QUBIT_KINDS for g in gates)
    ph = sum(g.kind in PHASE_KINDS for g in gates)
    per_phase = math.ceil(c_rs * math.log2(1.0 / eps_ph) - 1e-12)
    return ResourceCount(one, two, ph, ph * per_phase)


def t_count_ratio(n_seg_qd: int, n_seg_urcc: int) -> Fraction:
    """Phase-gate (hence T-count) ratio ``N_qd / (4 N_urcc)`` of c-qDRIFT to URCC."""
    if n_seg_urcc < 1:
        raise ZeroDivisionError("URCC segment count must be at least 1")
    return Fraction(n_seg_qd, 4 * n_seg_urcc)

"""Builtin Hamiltonians: the interaction-picture spin chain and adiabatic schedules."""

from __future__ import annotations

from typing import Sequence

from .hamiltonian import HamiltonianTerm, TimeDependentHamiltonian
from .pauli import PauliString
from .waveforms import Cosine, LinearRamp, Sine

__all__ = [
    "spin_model",
    "spin_static_parts",
    "adiabatic_hamiltonian",
    "adiabatic_toy",
    "ADIABATIC_TOY_INITIAL",
    "ADIABATIC_TOY_FINAL",
]

ADIABATIC_TOY_INITIAL = [("XI", -1.0), ("IX", -1.0)]
ADIABATIC_TOY_FINAL = [("ZZ", -1.0), ("ZI", -0.5)]


def _two_site(n: int, k: int, a: str, b: str) -> PauliString:
    letters = ["I"] * n
    letters[k], letters[k + 1] = a, b
    return PauliString.from_letters(letters)


def spin_model(n: int = 3, J: float = 0.1, omega: float = 1.0, tau: float | None = None) -> TimeDependentHamiltonian:
    """Nearest-neighbour XY chain in the interaction picture of a staggered Z field.

    ``H(t) = J/2 [cos(2 w t) G1 + sin(2 w t) G2]`` with
    ``G1 = sum_k X_k X_{k+1} + Y_k Y_{k+1}`` and
    ``G2 = sum_k (-1)^k (X_k Y_{k+1} - Y_k X_{k+1})``, sites counted from 1.
    """
    if n < 2:
        raise ValueError("spin chain needs at least two sites")
    half = 0.5 * J
    w = 2.0 * omega
    terms = []
    for k in range(n - 1):
        stagger = -1.0 if (k + 1) % 2 else 1.0
        terms.append(HamiltonianTerm(_two_site(n, k, "X", "X"), Cosine(half, w)))
        terms.append(HamiltonianTerm(_two_site(n, k, "Y", "Y"), Cosine(half, w)))
        terms.append(HamiltonianTerm(_two_site(n, k, "X", "Y"), Sine(stagger * half, w)))
        terms.append(HamiltonianTerm(_two_site(n, k, "Y", "X"), Sine(-stagger * half, w)))
    window = (0.0, float("inf") if tau is None else float(tau))
    return TimeDependentHamiltonian(n, terms, window)


def spin_static_parts(n: int, J: float, omega: float):
    """``(H0, H_int)`` as lists of ``(PauliString, coefficient)`` in the lab frame."""
    h0 = []
    for k in range(n):
        letters = ["I"] * n
        letters[k] = "Z"
        h0.append((PauliString.from_letters(letters), 0.5 * omega * (-1.0) ** (k + 1)))
    hint = []
    for k in range(n - 1):
        hint.append((_two_site(n, k, "X", "X"), 0.5 * J))
        hint.append((_two_site(n, k, "Y", "Y"), 0.5 * J))
    return h0, hint


def adiabatic_hamiltonian(
    n: int,
    initial: Sequence[tuple[str, float]],
    final: Sequence[tuple[str, float]],
    tau: float,
    extra_terms: Sequence[HamiltonianTerm] = (),
) -> TimeDependentHamiltonian:
    """``(1 - t/tau) H_A + (t/tau) H_B`` with one linear ramp per distinct Pauli.

    Identity components are dropped: they only add a global phase to the
    evolution and leave every expectation value unchanged.
    """
    start: dict[str, float] = {}
    end: dict[str, float] = {}
    order: list[str] = []
    for table, source in ((start, initial), (end, final)):
        for label, coeff in source:
            p = PauliString.parse(label)
            if p.n != n:
                raise ValueError(f"{label!r} does not act on {n} qubits")
            key = p.letters
            sign = p.sign
            if key not in start and key not in end:
                order.append(key)
            table[key] = table.get(key, 0.0) + sign * float(coeff)
    terms = list(extra_terms)
    for key in order:
        if set(key) == {"I"}:
            continue
        a, b = start.get(key, 0.0), end.get(key, 0.0)
        if a == 0.0 and b == 0.0:
            continue
        terms.append(HamiltonianTerm(PauliString.from_letters(key), LinearRamp(a, b, 0.0, tau)))
    return TimeDependentHamiltonian(n, terms, (0.0, tau))


def adiabatic_toy(tau: float = 50.0) -> TimeDependentHamiltonian:
    """Two-qubit interpolation from ``-X1 - X2`` to ``-Z1 Z2 - 0.5 Z1``."""
    return adiabatic_hamiltonian(2, ADIABATIC_TOY_INITIAL, ADIABATIC_TOY_FINAL, tau)

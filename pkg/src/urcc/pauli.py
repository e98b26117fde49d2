"""Phase-exact Pauli strings in a packed symplectic representation.

A :class:`PauliString` on ``n`` qubits stores two integer bit masks ``x`` and
``z`` plus an integer phase exponent.  Qubit ``j`` (position ``j`` in the text
form, counted from the left) lives in bit ``n - 1 - j`` of each mask, so the
masks line up with computational-basis indices in the most-significant-first
convention used by the statevector engine.

The represented operator is ``i**phase * L_0 (x) L_1 (x) ... (x) L_{n-1}`` with
each letter ``L_j`` in ``{I, X, Y, Z}`` and ``Y`` the usual Hermitian matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "multiply",
    "product_chain",
    "support",
    "weight",
    "qubitwise_compatible",
    "to_matrix",
    "apply_pauli",
    "multiply_arrays",
    "ORACLE_QUBIT_LIMIT",
]

ORACLE_QUBIT_LIMIT = 12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PHASE_TOKENS = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PHASE_PRINT = {0: "+", 1: "i", 2: "-", 3: "-i"}
_I_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """Immutable Pauli string ``i**phase_exp * (x) letters``.

    Args:
        n: Number of qubits.
        x: X-part bit mask (qubit ``j`` in bit ``n-1-j``).
        z: Z-part bit mask.
        phase_exp: Exponent of the global ``i`` factor, reduced mod 4.
    """

    n: int
    x: int = 0
    z: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"qubit count must be non-negative, got {self.n}")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise ValueError("mask bits outside the qubit range")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_letters(cls, letters: str | Sequence[str], phase_exp: int = 0) -> "PauliString":
        letters = [c.upper() for c in letters]
        n = len(letters)
        x = z = 0
        for j, c in enumerate(letters):
            if c not in _LETTER_BITS:
                raise ValueError(f"invalid Pauli letter {c!r}")
            bx, bz = _LETTER_BITS[c]
            bit = n - 1 - j
            x |= bx << bit
            z |= bz << bit
        return cls(n, x, z, phase_exp)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse the text form, e.g. ``"-iXYZI"`` or ``"+ZZ"`` or ``"XI"``."""
        text = text.strip()
        i = 0
        while i < len(text) and text[i] in "+-i":
            i += 1
        token, letters = text[:i], text[i:]
        if token not in _PHASE_TOKENS:
            raise ValueError(f"invalid phase token {token!r} in {text!r}")
        return cls.from_letters(letters, _PHASE_TOKENS[token])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        letters = ["I"] * n
        letters[qubit] = letter
        return cls.from_letters(letters)

    # -- views ----------------------------------------------------------------

    @property
    def letters(self) -> str:
        out = []
        for j in range(self.n):
            bit = self.n - 1 - j
            out.append(_BITS_LETTER[((self.x >> bit) & 1, (self.z >> bit) & 1)])
        return "".join(out)

    def letter(self, qubit: int) -> str:
        bit = self.n - 1 - qubit
        return _BITS_LETTER[((self.x >> bit) & 1, (self.z >> bit) & 1)]

    @property
    def is_hermitian(self) -> bool:
        return self.phase_exp in (0, 2)

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian")
        return 1 if self.phase_exp == 0 else -1

    @property
    def coefficient(self) -> complex:
        return _I_POWERS[self.phase_exp]

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def with_phase(self, phase_exp: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, phase_exp)

    def __neg__(self) -> "PauliString":
        return self.with_phase(self.phase_exp + 2)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return _PHASE_PRINT[self.phase_exp] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a @ b`` with the phase tracked as an integer."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    # Each letter is i^(x z) X^x Z^z; commuting Z^z1 past X^x2 costs (-1)^(z1 . x2).
    x = a.x ^ b.x
    z = a.z ^ b.z
    phase = (
        a.phase_exp
        + b.phase_exp
        + _popcount(a.x & a.z)
        + _popcount(b.x & b.z)
        + 2 * _popcount(a.z & b.x)
        - _popcount(x & z)
    )
    return PauliString(a.n, x, z, phase)


def product_chain(
    factors: Sequence[PauliString],
    prefactor_exp: int | Sequence[int] = 0,
    n: int | None = None,
) -> PauliString:
    """Left-to-right product of ``factors``, each scaled by ``i**prefactor_exp``.

    ``prefactor_exp`` may be a single exponent applied to every factor or one
    exponent per factor.  ``prefactor_exp=3`` gives the ``(-i sigma)`` factors of
    a Dyson term.  An empty chain yields the identity on ``n`` qubits.
    """
    if not factors:
        if n is None:
            raise ValueError("empty chain needs an explicit qubit count")
        return PauliString.identity(n)
    if isinstance(prefactor_exp, int):
        exps = [prefactor_exp] * len(factors)
    else:
        exps = list(prefactor_exp)
        if len(exps) != len(factors):
            raise ValueError("one prefactor exponent per factor required")
    if n is not None and any(f.n != n for f in factors):
        raise ValueError("dimension mismatch in chain")
    scaled = [f.with_phase(f.phase_exp + e) for f, e in zip(factors, exps)]
    return reduce(multiply, scaled)


def support(a: PauliString) -> frozenset[int]:
    """Zero-based indices of the qubits where ``a`` acts non-trivially."""
    mask = a.x | a.z
    return frozenset(j for j in range(a.n) if (mask >> (a.n - 1 - j)) & 1)


def weight(a: PauliString) -> int:
    return _popcount(a.x | a.z)


def qubitwise_compatible(q: PauliString, r: PauliString) -> bool:
    """True when every letter of ``q`` equals the letter of ``r`` or is ``I``."""
    if q.n != r.n:
        raise ValueError("dimension mismatch")
    qmask = q.x | q.z
    return ((q.x ^ r.x) & qmask) == 0 and ((q.z ^ r.z) & qmask) == 0


_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def to_matrix(a: PauliString, limit: int = ORACLE_QUBIT_LIMIT) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``a``; qubit 0 is the leftmost factor."""
    if a.n > limit:
        raise ValueError(f"{a.n} qubits exceeds the dense limit of {limit}")
    mat = np.ones((1, 1), dtype=complex)
    for c in a.letters:
        mat = np.kron(mat, _SINGLE[c])
    return a.coefficient * mat


def _action_tables(n: int, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
    basis = np.arange(1 << n, dtype=np.int64)
    src = basis ^ x
    parity = np.bitwise_count(src & z) & 1
    return src, 1 - 2 * parity.astype(np.int64)


def apply_pauli(a: PauliString, vec: np.ndarray) -> np.ndarray:
    """Return ``a @ vec`` for a state vector (or a stack of them on the last axis)."""
    src, sgn = _action_tables(a.n, a.x, a.z)
    coeff = _I_POWERS[(a.phase_exp + _popcount(a.x & a.z)) % 4]
    return coeff * sgn * vec[..., src]


def multiply_arrays(x1, z1, p1, x2, z2, p2):
    """Elementwise :func:`multiply` over integer mask/phase arrays."""
    x = x1 ^ x2
    z = z1 ^ z2
    phase = (
        p1
        + p2
        + np.bitwise_count(x1 & z1)
        + np.bitwise_count(x2 & z2)
        + 2 * np.bitwise_count(z1 & x2)
        - np.bitwise_count(x & z)
    ) % 4
    return x, z, phase.astype(np.int64)


def parse_many(items: Iterable[str]) -> list[PauliString]:
    return [PauliString.parse(s) for s in items]

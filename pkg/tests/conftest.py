import numpy as np
import pytest

from urcc.hamiltonian import HamiltonianTerm, TimeDependentHamiltonian
from urcc.pauli import PauliString
from urcc.waveforms import Constant, Cosine


def random_letters(rng, n, allow_identity=False):
    while True:
        s = "".join(rng.choice(list("IXYZ"), n))
        if allow_identity or set(s) != {"I"}:
            return s


def random_pauli(rng, n, hermitian=False, allow_identity=True):
    phase = int(rng.choice([0, 2])) if hermitian else int(rng.integers(4))
    return PauliString.from_letters(random_letters(rng, n, allow_identity), phase)


def random_td_hamiltonian(rng, n=2, n_terms=4, tau=1.0, target_lambda=0.8):
    """Cosine/constant mix with distinct Paulis, rescaled so Lambda(tau) ~ target."""
    seen = set()
    specs = []
    while len(specs) < n_terms:
        s = random_letters(rng, n)
        if s in seen:
            continue
        seen.add(s)
        if rng.random() < 0.5:
            specs.append((s, "const", rng.uniform(-1, 1), 0.0))
        else:
            specs.append((s, "cos", rng.uniform(-1, 1), rng.uniform(0.5, 4.0)))

    def build(scale):
        terms = []
        for s, kind, a, w in specs:
            wf = Constant(scale * a) if kind == "const" else Cosine(scale * a, w)
            terms.append(HamiltonianTerm(PauliString.from_letters(s), wf))
        return TimeDependentHamiltonian(n, terms, (0.0, tau))

    H = build(1.0)
    return build(target_lambda / H.Lambda(tau))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

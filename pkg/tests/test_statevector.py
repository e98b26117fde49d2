import math

import numpy as np
import pytest

from urcc.circuit import Gate, QuantumCircuit, lower_rotation
from urcc.compiler import IdentityOp, LcuDescriptor, PauliProduct, CompiledCircuitPair, Rotation, compile_pair, sample_segment_batch
from urcc.errors import NumericalContractError
from urcc.hamiltonian import plan_segments
from urcc.models import spin_model
from urcc.pauli import PauliString, apply_pauli, to_matrix
from urcc.statevector import (
    StateVector,
    apply,
    apply_segment_ops,
    basis_state,
    expectation,
    initial_state,
    pair_overlap,
    pauli_expectations,
    prepare_hadamard_test,
    rotate_to_basis,
    run_pair,
    sample_bitstrings,
)

from conftest import random_td_hamiltonian


def test_basis_and_hadamard_prep():
    psi = basis_state("101")
    assert psi[5] == 1.0 and np.count_nonzero(psi) == 1
    st = prepare_hadamard_test("101", 3)
    assert st.width == 4
    amps = np.zeros(16, dtype=complex)
    amps[5] = amps[13] = 1 / math.sqrt(2)
    assert np.allclose(st.amplitudes, amps)


def test_initial_state_validation():
    with pytest.raises(ValueError):
        initial_state([1.0, 1.0], 1)
    with pytest.raises(ValueError):
        initial_state("12", 2)
    with pytest.raises(ValueError):
        initial_state("01", 3)
    v = initial_state([1 / math.sqrt(2), 1j / math.sqrt(2)], 1)
    assert v.dtype == complex


def test_x_gate_and_index_errors():
    st = StateVector(2, basis_state("00"))
    out = apply(st, Gate("X", (1,)))
    assert np.allclose(out.amplitudes, basis_state("01"))
    with pytest.raises(IndexError):
        apply(st, Gate("X", (2,)))
    with pytest.raises(ValueError):
        StateVector(15, np.zeros(1 << 15))


def test_zz_rotation_on_zero_state():
    phi = 0.42
    st = apply(StateVector(2, basis_state("00")), lower_rotation(PauliString.parse("ZZ"), phi))
    assert np.allclose(st.amplitudes, np.exp(-1j * phi) * basis_state("00"), atol=1e-14)


def test_norm_is_preserved_over_many_gates():
    rng = np.random.default_rng(9)
    width = 4
    gates = []
    for _ in range(10_000):
        r = rng.integers(5)
        if r == 0:
            c, t = rng.choice(width, 2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
        elif r == 1:
            gates.append(Gate("PH", (int(rng.integers(width)),), float(rng.uniform(-3, 3))))
        elif r == 2:
            gates.append(Gate("W", (int(rng.integers(width)),), str(rng.choice(list("XYZ"))), bool(rng.integers(2))))
        elif r == 3:
            c, t = rng.choice(width, 2, replace=False)
            gates.append(Gate("CPH", (int(c), int(t)), float(rng.uniform(-3, 3))))
        else:
            gates.append(Gate("H", (int(rng.integers(width)),)))
    st = apply(StateVector(width, basis_state(0, width)), QuantumCircuit(width, tuple(gates)))
    assert abs(st.norm() - 1.0) <= 1e-12


def test_norm_violation_raises():
    bad = StateVector(1, np.array([2.0, 0.0], dtype=complex))
    with pytest.raises(NumericalContractError):
        apply(bad, Gate("H", (0,)))


def test_expectation_examples():
    assert expectation(basis_state("0"), PauliString.parse("Z")) == 1.0
    assert expectation(basis_state("1"), PauliString.parse("Z")) == -1.0
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    assert expectation(plus, PauliString.parse("X")) == pytest.approx(1.0)
    assert expectation(basis_state("10"), PauliString.parse("-ZI")) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expectation(plus, PauliString.parse("iX"))


def _pair(s, sp):
    return CompiledCircuitPair(tuple(s), tuple(sp), 1.0)


def test_run_pair_identity_branches():
    Z = PauliString.parse("ZII")
    pair = _pair([IdentityOp(3)], [IdentityOp(3)])
    assert run_pair(pair, "101", Z) == pytest.approx(-1.0, abs=1e-14)


def test_run_pair_relative_global_phase():
    # u(s) = -I, u(s') = I gives Re<psi|O(-psi)> = -<O>
    Z = PauliString.parse("Z")
    pair = _pair([PauliProduct(PauliString.parse("-I"), 2)], [IdentityOp(1)])
    assert run_pair(pair, "0", Z) == pytest.approx(-1.0, abs=1e-14)
    pair = _pair([PauliProduct(PauliString.parse("-iI"), 3)], [IdentityOp(1)])
    assert run_pair(pair, "0", Z) == pytest.approx(0.0, abs=1e-14)


def test_run_pair_matches_overlap(rng):
    H = random_td_hamiltonian(rng, n=2, n_terms=4, target_lambda=0.8)
    plan = plan_segments(H, 1.0, 0.2)
    O = PauliString.parse("XZ")
    psi = initial_state("01", 2)
    for _ in range(40):
        pair = compile_pair(plan, H, rng)
        assert run_pair(pair, psi, O) == pytest.approx(pair_overlap(pair, psi, O), abs=1e-12)


def test_shot_mode_agrees_with_exact():
    pair = _pair([Rotation(PauliString.parse("X"), 0.3)], [IdentityOp(1)])
    O = PauliString.parse("Z")
    e = run_pair(pair, "0", O)
    rng = np.random.default_rng(2)
    shots = np.array([run_pair(pair, "0", O, "shot", rng) for _ in range(4000)])
    assert set(np.unique(shots)) <= {-1.0, 1.0}
    assert abs(shots.mean() - e) <= 5 * math.sqrt((1 - e * e) / shots.size)
    with pytest.raises(ValueError):
        run_pair(pair, "0", O, "shot")


def test_batch_path_matches_operator_action():
    H = spin_model(3, 0.1, 1.0)
    plan = plan_segments(H, math.pi, 0.2)
    desc = LcuDescriptor.from_plan(plan, 0)
    ops = sample_segment_batch(desc, H, plan.segment(0), np.random.default_rng(3), 200)
    rng = np.random.default_rng(4)
    states = rng.normal(size=(200, 8)) + 1j * rng.normal(size=(200, 8))
    out = apply_segment_ops(states, ops, 3)
    for i in range(200):
        op = PauliString(3, int(ops.x[i]), int(ops.z[i]), 0)
        # alpha I + beta X^x Z^z, where to_matrix(op) = i^#Y X^x Z^z
        ny = bin(op.x & op.z).count("1")
        M = ops.alpha[i] * np.eye(8) + ops.beta[i] * (1j) ** (-ny) * to_matrix(op)
        assert np.allclose(out[i], M @ states[i], atol=1e-13)
    O = PauliString.parse("ZXI")
    ref = np.array([np.vdot(states[i], apply_pauli(O, out[i])) for i in range(200)])
    assert np.allclose(pauli_expectations(states, out, O), ref)


def test_sample_bitstrings_and_rotation():
    rng = np.random.default_rng(5)
    plus = np.tile(np.array([1, 1], dtype=complex) / math.sqrt(2), (20_000, 1))
    idx = sample_bitstrings(plus, rng)
    assert abs(idx.mean() - 0.5) < 0.02
    rotated = rotate_to_basis(plus, 1, ["X"])
    assert np.all(sample_bitstrings(rotated, rng) == 0)

import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from urcc.compiler import (
    IdentityOp,
    LcuDescriptor,
    PauliProduct,
    Rotation,
    c_lor,
    compile_pair,
    leading_order_deviation,
    sample_order,
    sample_pdy,
    sample_pdy_batch,
    sample_segment_batch,
    sample_segment_unitary,
)
from urcc.hamiltonian import HamiltonianTerm, TimeDependentHamiltonian, plan_segments, sample_term_at_time
from urcc.models import spin_model
from urcc.oracle import constant_pdy_law, exact_propagator
from urcc.pauli import PauliString, multiply, to_matrix
from urcc.waveforms import Constant, LinearRamp

from conftest import random_letters, random_td_hamiltonian


def const_h(pairs, n):
    terms = [HamiltonianTerm(PauliString.parse(s), Constant(c)) for s, c in pairs]
    return TimeDependentHamiltonian(n, terms, (0.0, 1.0))


def test_single_term_rotation_identity():
    # I - i sigma = sqrt(2) exp(-i pi/4 sigma)
    H = const_h([("X", 1.0)], 1)
    desc = LcuDescriptor(1.0, np.array([1.0]))
    assert desc.phi == pytest.approx(math.pi / 4)
    assert desc.alpha[0] == pytest.approx(math.sqrt(2))
    assert leading_order_deviation(desc, H) <= 1e-12


def test_leading_order_random(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        P = int(rng.integers(1, 7))
        letters = {random_letters(rng, n) for _ in range(P)}
        H = const_h([(s, 1.0) for s in letters], n)
        lp = rng.random(H.P)
        lp *= rng.uniform(0.01, 1.0) / lp.sum()
        desc = LcuDescriptor(float(lp.sum()), lp)
        assert leading_order_deviation(desc, H) <= 1e-12
        assert desc.alpha.sum() == pytest.approx(desc.C_L, rel=1e-12)


@pytest.mark.parametrize("lam", [1e-4, 0.05, 0.2, 0.5, 1.0])
def test_normalisation_factors(lam):
    desc = LcuDescriptor(lam, np.array([lam]))
    assert desc.C_L == pytest.approx(math.sqrt(1 + lam * lam), rel=1e-12)
    assert desc.C_R == pytest.approx(math.exp(lam) - 1 - lam, rel=1e-9)
    assert desc.C_lor == pytest.approx(c_lor(lam), rel=1e-15)
    assert desc.prob_L == pytest.approx(desc.C_L / desc.C_lor)
    # C_lor - 1 = lam^2 + lam^3/6 + ...
    ratio = (desc.C_lor - 1.0) / lam**2
    assert 1.0 <= ratio <= 1.14


def test_sample_order_chi_square():
    rng = np.random.default_rng(11)
    lam = 0.7
    draws = np.array([sample_order(lam, rng) for _ in range(100_000)])
    kmax = 5
    obs = np.array([np.sum(draws == k) for k in range(kmax)] + [np.sum(draws >= kmax)])
    pmf = stats.poisson.pmf(np.arange(kmax), lam)
    exp = np.append(pmf, 1 - pmf.sum()) * draws.size
    assert stats.chisquare(obs, exp).pvalue > 0.001
    assert sample_order(0.0, rng) == 0
    with pytest.raises(ValueError):
        sample_order(-1.0, rng)


def test_r_branch_orders_truncated_poisson():
    H = const_h([("X", 0.6), ("Z", 0.3)], 1)
    desc = LcuDescriptor(0.9, np.array([0.6, 0.3]))
    ops = sample_segment_batch(desc, H, (0.0, 1.0), np.random.default_rng(12), 400_000)
    ls = ops.order[~ops.branch_L]
    assert ls.min() >= 2
    kmax = 5
    obs = np.array([np.sum(ls == k) for k in range(2, kmax)] + [np.sum(ls >= kmax)])
    pmf = stats.poisson.pmf(np.arange(2, kmax), 0.9)
    tail = stats.poisson.sf(kmax - 1, 0.9)
    probs = np.append(pmf, tail)
    exp = probs / probs.sum() * ls.size
    assert stats.chisquare(obs, exp).pvalue > 0.001
    frac_L = ops.branch_L.mean()
    se = math.sqrt(desc.prob_L * (1 - desc.prob_L) / ops.order.size)
    assert abs(frac_L - desc.prob_L) <= 5 * se


def test_constant_pdy_law_chi_square():
    H = const_h([("X", 0.5), ("Z", 0.3), ("Y", -0.2)], 1)
    rng = np.random.default_rng(13)
    l = 3
    law = constant_pdy_law(H, l)
    counts = Counter()
    m = 20_000
    for _ in range(m):
        times = np.sort(rng.uniform(0, 1, l))[::-1]
        counts[tuple(sample_term_at_time(H, float(t), rng) for t in times)] += 1
    seqs = sorted(law)
    obs = np.array([counts[s] for s in seqs])
    exp = np.array([law[s] for s in seqs]) * m
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_pdy_product_is_phase_tracked():
    H = const_h([("Z", 1.0)], 1)
    rng = np.random.default_rng(0)
    assert sample_pdy(1, H, (0.0, 1.0), rng) == PauliString.parse("-iZ")
    assert sample_pdy(2, H, (0.0, 1.0), rng) == PauliString.parse("-I")
    assert sample_pdy(0, H, (0.0, 1.0), rng) == PauliString.identity(1)


def test_pdy_time_ordering_later_left():
    # X grows and Z decays, so X is likelier at the later of two times
    H = TimeDependentHamiltonian(
        1,
        [
            HamiltonianTerm(PauliString.parse("X"), LinearRamp(0.0, 1.0, 0.0, 1.0)),
            HamiltonianTerm(PauliString.parse("Z"), LinearRamp(1.0, 0.0, 0.0, 1.0)),
        ],
        (0.0, 1.0),
    )
    rng = np.random.default_rng(3)
    xz = multiply(PauliString.parse("-iX"), PauliString.parse("-iZ"))
    zx = multiply(PauliString.parse("-iZ"), PauliString.parse("-iX"))
    c = Counter(sample_pdy(2, H, (0.0, 1.0), rng) for _ in range(20_000))
    assert c[xz] > 1.5 * c[zx]


def test_batch_matches_per_sample_law():
    H = const_h([("XI", 0.4), ("IZ", -0.3), ("YY", 0.2)], 2)
    lp = H.lambda_p(0.0, 1.0)
    desc = LcuDescriptor(float(lp.sum()), lp)
    m = 40_000
    rng = np.random.default_rng(21)
    single = Counter()
    for _ in range(m):
        u = sample_segment_unitary(desc, H, (0.0, 1.0), rng)
        single[("L", str(u.sigma)) if isinstance(u, Rotation) else ("R", str(u.op))] += 1
    ops = sample_segment_batch(desc, H, (0.0, 1.0), np.random.default_rng(22), m)
    by_mask = {(c.pauli.x, c.pauli.z): str(c.pauli) for c in H.canonical}
    batch = Counter()
    for i in range(m):
        if ops.branch_L[i]:
            batch[("L", by_mask[(int(ops.x[i]), int(ops.z[i]))])] += 1
        else:
            batch[("R", _op_from_ops(ops, i, 2))] += 1
    keys = [k for k, v in single.items() if v >= 200]
    obs = np.array([[single[k] for k in keys], [batch[k] for k in keys]])
    assert stats.chi2_contingency(obs).pvalue > 0.001


def _op_from_ops(ops, i, n):
    x, z = int(ops.x[i]), int(ops.z[i])
    ny = bin(x & z).count("1")
    ph = int(round(np.angle(ops.beta[i]) / (math.pi / 2))) % 4
    # beta = i^(phase + #Y), so the stored phase exponent is ph - #Y
    return str(PauliString(n, x, z, (ph - ny) % 4))


def _segment_estimate(ops, n, C):
    """Per-sample matrices C * (alpha I + beta X^x Z^z), flattened."""
    d = 1 << n
    m = ops.x.size
    out = np.zeros((m, d, d), dtype=complex)
    cols = np.arange(d)
    for j in cols:
        rows = ops.x ^ j
        sign = 1 - 2 * (np.bitwise_count(ops.z & j) & 1).astype(np.int64)
        out[np.arange(m), rows, j] += ops.beta * sign
        out[:, j, j] += ops.alpha
    return C * out


def test_segment_lcu_unbiased(rng):
    H = random_td_hamiltonian(rng, n=2, n_terms=4, target_lambda=0.5)
    plan = plan_segments(H, 1.0, 0.25)
    assert plan.n_seg == 2
    for j in range(plan.n_seg):
        a, b = plan.segment(j)
        desc = LcuDescriptor.from_plan(plan, j)
        ops = sample_segment_batch(desc, H, (a, b), np.random.default_rng(100 + j), 200_000)
        samples = _segment_estimate(ops, 2, desc.C_lor)
        mean = samples.mean(axis=0)
        se = samples.std(axis=0) / math.sqrt(samples.shape[0])
        U = exact_propagator(H, a, b).matrix
        diff = np.abs(mean - U)
        assert np.all(diff <= 5 * se + 1e-12)


def test_full_evolution_unbiased_via_pairs(rng):
    H = random_td_hamiltonian(rng, n=2, n_terms=3, target_lambda=0.5)
    plan = plan_segments(H, 1.0, 0.25)
    U = exact_propagator(H, 0.0, 1.0).matrix
    acc = np.zeros((4, 4), dtype=complex)
    m = 4000
    r = np.random.default_rng(5)
    for _ in range(m):
        pair = compile_pair(plan, H, r)
        V = np.eye(4, dtype=complex)
        for u in pair.branch_s:
            V = u.matrix() @ V
        acc += pair.C * V
    # loose check: per-entry Monte Carlo error is about C/sqrt(m)
    assert np.max(np.abs(acc / m - U)) < 5 * pair.C / math.sqrt(m)


def test_compile_pair_structure_and_dump():
    H = spin_model(3, 0.1, 1.0)
    plan = plan_segments(H, math.pi, 0.2)
    pair = compile_pair(plan, H, np.random.default_rng(1))
    assert pair.n_seg == 4 and len(pair.branch_s_prime) == 4
    assert pair.C == pytest.approx(c_lor(0.2) ** 4, rel=1e-12)
    text = pair.dump()
    lines = text.splitlines()
    assert lines[0].startswith("# C = ")
    assert lines[1] == "[s]" and lines[6] == "[s']"
    for line in lines[2:6] + lines[7:11]:
        assert line.startswith("seg ")
        assert " | L rot(" in line or " | R prod(" in line or line.endswith("| I")
    for j, u in enumerate(pair.branch_s):
        assert u.segment_index == j


def test_zero_lambda_segment_is_identity():
    H = const_h([("Z", 1.0)], 1)
    desc = LcuDescriptor(0.0, np.array([0.0]))
    assert isinstance(sample_segment_unitary(desc, H, (0.0, 1.0), np.random.default_rng(0)), IdentityOp)
    assert desc.C_lor == 1.0


def test_pdy_batch_matches_scalar_products():
    H = const_h([("XI", 0.5), ("ZZ", 0.5)], 2)
    orders = np.array([0, 1, 2, 3, 5])
    x, z, ph = sample_pdy_batch(orders, H, (0.0, 1.0), np.random.default_rng(0))
    assert (x[0], z[0], ph[0]) == (0, 0, 0)
    for i in range(1, orders.size):
        op = PauliString(2, int(x[i]), int(z[i]), int(ph[i]))
        assert np.allclose(to_matrix(op) @ to_matrix(op).conj().T, np.eye(4))
        assert isinstance(PauliProduct(op, int(orders[i])).dump(), str)

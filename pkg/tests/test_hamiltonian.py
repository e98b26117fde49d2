import json
import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from urcc.errors import ConfigError, ZeroStrengthError
from urcc.hamiltonian import (
    HamiltonianTerm,
    TimeDependentHamiltonian,
    hamiltonian_from_dict,
    load_hamiltonian,
    plan_segments,
    sample_signed_terms,
    sample_term_at_time,
    sample_time,
    sample_times,
)
from urcc.models import adiabatic_toy, spin_model
from urcc.pauli import PauliString, to_matrix
from urcc.waveforms import Constant, Cosine, LinearRamp, RampProduct, Sine

from conftest import random_td_hamiltonian


def single(letters, wf, window=(0.0, math.inf)):
    return TimeDependentHamiltonian(len(letters), [HamiltonianTerm(PauliString.parse(letters), wf)], window)


def test_h_tot_spin_model_at_zero():
    H = spin_model(3, 0.1, 1.0)
    assert H.h_tot(0.0) == pytest.approx(0.2, abs=1e-15)
    assert H.Q == 8


def test_h_tot_constant_and_window():
    H = single("Z", Constant(1.0), (0.0, 2.0))
    assert H.h_tot(1.3) == 1.0
    with pytest.raises(ValueError):
        H.h_tot(2.5)


def test_canonical_halves_disjoint():
    H = single("X", Cosine(0.7, 2.0))
    assert H.P == 2
    t = np.linspace(0, 5, 101)
    h = H.canonical_values(t)
    assert np.all(h[0] * h[1] == 0.0)


def test_canonical_split_preserves_operator(rng):
    H = random_td_hamiltonian(rng, n=2, n_terms=5)
    for t in rng.uniform(0, 1, 100):
        assert np.max(np.abs(H.canonical_matrix(t) - H.matrix(t))) <= 1e-12


def test_sign_definite_terms_have_one_half():
    H = TimeDependentHamiltonian(1, [HamiltonianTerm(PauliString.parse("X"), Constant(-0.5))])
    assert H.P == 1
    assert H.canonical[0].pauli == PauliString.parse("-X")


def test_spin_model_lambda():
    H = spin_model(3, 0.1, 1.0)
    ref = quad(lambda t: float(H.h_tot(t)), 0, math.pi, points=[math.pi / 4, math.pi / 2, 3 * math.pi / 4],
               epsabs=0, epsrel=1e-13)[0]
    assert H.Lambda(math.pi) == pytest.approx(0.8, rel=1e-12)
    assert ref == pytest.approx(0.8, rel=1e-12)


def test_plan_constant_strength():
    H = single("Z", Constant(1.0))
    plan = plan_segments(H, math.pi, math.pi / 4)
    assert plan.n_seg == 4
    assert np.allclose(np.diff(plan.boundaries), math.pi / 4, atol=1e-12)
    assert plan_segments(H, math.pi, 10.0).n_seg == 1


def test_plan_invariants_spin():
    H = spin_model(3, 0.1, 1.0)
    plan = plan_segments(H, math.pi, 0.2)
    assert plan.n_seg == 4
    assert plan.boundaries == pytest.approx([0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi], abs=1e-12)
    for j, (a, b) in enumerate(plan.segments()):
        assert H.strength_integral(a, b) == pytest.approx(plan.lambda_per_segment, rel=1e-10)
        assert plan.lambda_p_table[j].sum() == pytest.approx(plan.lambda_per_segment, rel=1e-10)
    assert plan.lambda_per_segment * plan.n_seg == pytest.approx(plan.Lambda, rel=1e-12)


def test_plan_random_hamiltonian(rng):
    for _ in range(5):
        H = random_td_hamiltonian(rng, n=2, n_terms=4, target_lambda=1.7)
        plan = plan_segments(H, 1.0, 0.3)
        assert plan.n_seg == math.ceil(1.7 / 0.3)
        for j, (a, b) in enumerate(plan.segments()):
            assert H.strength_integral(a, b) == pytest.approx(plan.lambda_per_segment, rel=1e-10)


def test_plan_zero_strength_and_bad_target():
    H = single("Z", Sine(1.0, 0.0))
    plan = plan_segments(H, 1.0, 0.2)
    assert plan.n_seg == 1 and plan.Lambda == 0.0
    with pytest.raises(ConfigError):
        plan_segments(single("Z", Constant(1.0)), 1.0, 0.0)


def test_lambda_p_quarter_period():
    H = single("XX", Cosine(0.05, 2.0))
    lp = H.lambda_p(0.0, math.pi / 4)
    assert lp[0] == pytest.approx(0.025, rel=1e-14)
    assert lp[1] == 0.0
    assert single("Z", Constant(1.0)).lambda_p(0.0, 0.3)[0] == pytest.approx(0.3)


def test_sample_time_constant_is_uniform():
    H = single("Z", Constant(2.0))
    t = sample_times(H, (0.5, 1.5), np.random.default_rng(1), 100_000)
    assert stats.kstest(t, stats.uniform(0.5, 1.0).cdf).pvalue > 0.001


def test_sample_time_abs_sine_cdf():
    H = single("X", Sine(1.0, 2.0))
    t = sample_times(H, (0.0, math.pi / 2), np.random.default_rng(2), 100_000)
    assert stats.kstest(t, lambda s: (1 - np.cos(2 * s)) / 2).pvalue > 0.001


@pytest.mark.parametrize(
    "wf",
    [
        Constant(0.4),
        Cosine(0.9, 3.0),
        Sine(-0.6, 5.0),
        LinearRamp(1.0, -1.0, 0.0, 2.0),
        RampProduct(LinearRamp(0.2, 1.0, 0.0, 2.0), Cosine(1.0, 4.0)),
    ],
    ids=lambda w: type(w).__name__,
)
def test_sample_time_chi_square_per_kind(wf):
    H = single("Y", wf, (0.0, 2.0))
    a, b = 0.1, 1.9
    t = sample_times(H, (a, b), np.random.default_rng(3), 100_000)
    edges = np.linspace(a, b, 51)
    observed, _ = np.histogram(t, edges)
    mass = np.array([wf.abs_integral(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    expected = mass / mass.sum() * t.size
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_sample_time_scalar_and_zero_segment():
    H = single("Z", Constant(1.0))
    assert 0.0 <= sample_time(H, (0.0, 1.0), np.random.default_rng(0)) <= 1.0
    Hz = single("Z", Sine(1.0, 0.0))
    with pytest.raises(ValueError):
        sample_times(Hz, (0.0, 1.0), np.random.default_rng(0), 3)


def test_sample_term_binomial():
    H = TimeDependentHamiltonian(
        1,
        [HamiltonianTerm(PauliString.parse("X"), Constant(0.75)), HamiltonianTerm(PauliString.parse("Z"), Constant(0.25))],
    )
    rng = np.random.default_rng(4)
    draws = np.array([sample_term_at_time(H, 0.0, rng) for _ in range(20_000)])
    p = 0.75
    k = np.sum(draws == 0)
    assert abs(k - p * draws.size) <= 4 * math.sqrt(draws.size * p * (1 - p))
    _, _, canon = sample_signed_terms(H, np.zeros(100_000), rng)
    k = np.sum(canon == 0)
    assert abs(k - p * canon.size) <= 4 * math.sqrt(canon.size * p * (1 - p))


def test_sample_term_negative_half_only():
    H = single("X", Cosine(1.0, 1.0))
    t = math.pi  # cos < 0
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = sample_term_at_time(H, t, rng)
        assert H.canonical[p].pauli == PauliString.parse("-X")
    with pytest.raises(ZeroStrengthError):
        sample_term_at_time(single("X", Sine(1.0, 0.0)), 0.3, rng)


def test_json_round_trip(tmp_path):
    H = spin_model(3, 0.1, 1.0)
    path = tmp_path / "h.json"
    path.write_text(json.dumps(H.to_dict()))
    H2 = load_hamiltonian(path)
    for t in [0.0, 0.3, 1.7]:
        assert np.allclose(H2.matrix(t), H.matrix(t), atol=1e-15)


def test_json_negative_pauli_and_errors():
    H = hamiltonian_from_dict({"n": 1, "terms": [{"pauli": "-Z", "coeff": 0.5}]})
    assert np.allclose(H.matrix(0.0), -0.5 * to_matrix(PauliString.parse("Z")))
    with pytest.raises(ConfigError):
        hamiltonian_from_dict({"n": 2, "terms": [{"pauli": "Z", "coeff": 1.0}]})
    with pytest.raises(ConfigError):
        hamiltonian_from_dict({"n": 1, "terms": [{"pauli": "iZ", "coeff": 1.0}]})
    with pytest.raises(ConfigError):
        hamiltonian_from_dict({"terms": []})


def test_adiabatic_schedule_from_json():
    doc = {
        "n": 2,
        "schedule": {
            "kind": "adiabatic",
            "tau": 50.0,
            "initial_terms": [{"pauli": "XI", "coeff": -1.0}, {"pauli": "IX", "coeff": -1.0}],
            "final_terms": [{"pauli": "ZZ", "coeff": -1.0}, {"pauli": "ZI", "coeff": {"kind": "constant", "amplitude": -0.5}}],
        },
    }
    H = hamiltonian_from_dict(doc)
    ref = adiabatic_toy(50.0)
    for t in [0.0, 12.5, 50.0]:
        assert np.allclose(H.matrix(t), ref.matrix(t), atol=1e-15)
    HA = -to_matrix(PauliString.parse("XI")) - to_matrix(PauliString.parse("IX"))
    assert np.allclose(H.matrix(0.0), HA)

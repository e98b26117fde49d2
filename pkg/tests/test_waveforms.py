import math

import numpy as np
import pytest
from scipy.integrate import quad

from urcc.errors import ConfigError
from urcc.waveforms import Constant, Cosine, LinearRamp, RampProduct, Sine, waveform_from_dict

WAVEFORMS = [
    Constant(0.7),
    Constant(-0.3),
    Cosine(0.05, 2.0),
    Cosine(-1.2, 3.7),
    Sine(0.05, 2.0),
    Sine(0.4, 0.0),
    LinearRamp(1.0, -0.5, 0.0, 2.0),
    LinearRamp(0.0, 2.0, 0.0, 5.0),
    RampProduct(LinearRamp(1.0, 0.0, 0.0, 3.0), Cosine(0.8, 2.5)),
    RampProduct(LinearRamp(-1.0, 1.0, 0.0, 3.0), Sine(0.8, 1.5)),
    RampProduct(LinearRamp(0.5, 0.2, 0.0, 3.0), Constant(-2.0)),
]
INTERVALS = [(0.0, 1.0), (0.3, 2.9), (1.1, 1.4), (0.0, math.pi)]


def _quad_abs(wf, a, b):
    # split at the analytic zeros so quad sees smooth pieces
    pts = [a] + wf.zeros(a, b) + [b]
    return math.fsum(quad(lambda t: abs(float(wf(t))), lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
                     for lo, hi in zip(pts[:-1], pts[1:]))


@pytest.mark.parametrize("wf", WAVEFORMS, ids=lambda w: type(w).__name__)
@pytest.mark.parametrize("ab", INTERVALS)
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_abs_integral_matches_quadrature(wf, ab):
    a, b = ab
    ref = _quad_abs(wf, a, b)
    assert wf.abs_integral(a, b) == pytest.approx(ref, rel=1e-12, abs=1e-15)
    assert wf.positive_integral(a, b) - wf.negative_integral(a, b) == pytest.approx(
        quad(lambda t: float(wf(t)), a, b, epsabs=1e-15, epsrel=1e-12)[0], rel=1e-11, abs=1e-14
    )


@pytest.mark.parametrize("wf", WAVEFORMS, ids=lambda w: type(w).__name__)
@pytest.mark.parametrize("ab", INTERVALS)
def test_upper_bound_dominates_and_is_tight(wf, ab):
    a, b = ab
    t = np.linspace(a, b, 4001)
    sup = float(np.max(np.abs(wf(t))))
    ub = wf.abs_sup(a, b)
    assert ub >= sup - 1e-15
    assert ub <= 2.0 * sup + 1e-15


def test_cosine_zeros_are_sign_changes():
    wf = Cosine(1.0, 2.0)
    zs = wf.zeros(0.0, math.pi)
    assert zs == pytest.approx([math.pi / 4, 3 * math.pi / 4])


def test_quarter_period_integral():
    # (J/2) cos(2t) over [0, pi/4] with J = 0.1
    assert Cosine(0.05, 2.0).abs_integral(0.0, math.pi / 4) == pytest.approx(0.025, rel=1e-14)


def test_from_dict_round_trip():
    for wf in WAVEFORMS:
        assert waveform_from_dict(wf.to_dict()) == wf
    assert waveform_from_dict(0.25) == Constant(0.25)
    with pytest.raises(ConfigError):
        waveform_from_dict({"kind": "gaussian", "amplitude": 1.0})
    with pytest.raises(ConfigError):
        LinearRamp(0.0, 1.0, 1.0, 1.0)

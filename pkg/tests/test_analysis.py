import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsreadout.analysis import FitError, first_crossing, fit_decay_rate, loglog_slope


def test_synthetic_fit():
    t = np.linspace(0, 40, 401)
    fit = fit_decay_rate(t, 1 - np.exp(-0.1 * t), (5, 30))
    assert fit.rate == pytest.approx(0.1, abs=1e-9)
    assert fit.shift == pytest.approx(0.0, abs=1e-9)
    assert fit.residual < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 2), st.floats(-3, 3), st.floats(0.5, 1))
def test_fit_recovers_shift(rate, shift, plateau):
    t = np.linspace(0, 10 / rate, 500)
    r = plateau - plateau * np.exp(-rate * (t - shift))
    r[0] = 0.0
    fit = fit_decay_rate(t, r, (2 / rate, 8 / rate), plateau)
    assert fit.rate == pytest.approx(rate, rel=1e-8)
    assert fit.log_shift == pytest.approx(rate * shift, abs=1e-7)


def test_fit_errors():
    t = np.linspace(0, 10, 11)
    with pytest.raises(FitError):
        fit_decay_rate(t, 1 - np.exp(-t), (5, 20))
    with pytest.raises(FitError):
        fit_decay_rate(t, np.minimum(t / 5, 1.0), (2, 8))


def test_loglog_slope():
    t = np.geomspace(1e-3, 1e-2, 20)
    assert loglog_slope(t, 3 * t**3, (1e-3, 1e-2)) == pytest.approx(3)
    with pytest.raises(FitError):
        loglog_slope(t, -t, (1e-3, 1e-2))


def test_first_crossing():
    t = np.linspace(0, 1, 11)
    assert first_crossing(t, t, 0.55) == pytest.approx(0.55)
    assert math.isnan(first_crossing(t, t, 2))

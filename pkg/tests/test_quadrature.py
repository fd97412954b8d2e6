import math

import numpy as np
import pytest

from flattop.quadrature import (
    QuadratureError,
    QuadratureResult,
    QuadratureSettings,
    integrate,
)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSettings(rel_tol=-1.0)
    with pytest.raises(ValueError):
        QuadratureSettings(max_subdivisions=0)


def test_exponential_tail_unit_mass():
    res = integrate(lambda t: np.exp(-t), 0.0, math.inf)
    assert abs(res.value - 1.0) < QuadratureSettings().abs_tol * 100
    assert abs(res.value - 1.0) < 1e-12


def test_polynomial_exactness():
    # GK15 integrates low-degree polynomials to machine precision.
    res = integrate(lambda x: 3.0 * x ** 2, 0.0, 2.0)
    assert res.value == pytest.approx(8.0, abs=1e-13)


def test_gaussian_full_line():
    res = integrate(lambda x: np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi),
                    -math.inf, math.inf)
    assert res.value == pytest.approx(1.0, abs=1e-11)


def test_heavy_tail_mass_is_kept():
    # f ~ x^-2 for large x: truncation alone would drop visible mass.
    res = integrate(lambda x: 1.0 / (1.0 + x * x), -math.inf, math.inf, points=(0.0,))
    assert res.value == pytest.approx(math.pi, rel=1e-9)


def test_orientation_and_degenerate_interval():
    assert integrate(lambda x: x, 1.0, 1.0).value == 0.0
    fwd = integrate(lambda x: x ** 3, 0.0, 1.0).value
    rev = integrate(lambda x: x ** 3, 1.0, 0.0).value
    assert fwd == pytest.approx(-rev)


def test_interior_hint_points_help_spikes():
    # Narrow spike away from the panel midpoints.
    center = 0.7137
    res = integrate(lambda x: np.exp(-((x - center) / 1e-3) ** 2), 0.0, 1.0,
                    points=(center,))
    assert res.value == pytest.approx(1e-3 * math.sqrt(math.pi), rel=1e-8)


def test_budget_exhaustion_raises():
    settings = QuadratureSettings(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.abs(np.sin(40.0 * x)), 0.0, 10.0, settings)


def test_nonfinite_integrand_rejected():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_result_reports_error_estimate():
    res = integrate(lambda t: np.exp(-t), 0.0, math.inf)
    assert isinstance(res, QuadratureResult)
    assert res.error >= 0.0
    assert res.subdivisions >= 1
